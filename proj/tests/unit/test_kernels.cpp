// Copyright 2026 The storybias Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cmath>
#include <random>

#include "storybias/error.hpp"
#include "storybias/kernels.hpp"

using namespace storybias;
using namespace storybias::kernels;

namespace {

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) s += (x = u(rng));
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace

TEST_CASE("count_terms: serial and parallel agree") {
  std::mt19937_64 rng(7);
  std::vector<std::vector<std::string>> bags(5000);
  std::vector<GroupedTerms> items;
  for (std::size_t i = 0; i < bags.size(); ++i) {
    const auto len = rng() % 6;
    for (std::size_t k = 0; k < len; ++k) bags[i].push_back("t" + std::to_string(rng() % 300));
    items.push_back({i % 3, bags[i]});
  }
  const auto a = serial::count_terms(items, 3);
  const auto b = parallel::count_terms(items, 3);
  CHECK(a == b);
  std::int64_t total = 0;
  for (const auto& g : a)
    for (const auto& [_, n] : g) total += n;
  std::int64_t expected = 0;
  for (const auto& bag : bags) expected += static_cast<std::int64_t>(bag.size());
  CHECK(total == expected);
}

TEST_CASE("count_terms rejects an out-of-range group") {
  std::vector<std::string> terms = {"x"};
  std::vector<GroupedTerms> items = {{2, terms}};
  CHECK_THROWS_AS(serial::count_terms(items, 2), ValidationError);
  CHECK_THROWS_AS(parallel::count_terms(items, 2), ValidationError);
}

TEST_CASE("log_odds_z: parallel matches serial bit for bit") {
  std::mt19937_64 rng(11);
  DenseCounts c;
  for (int i = 0; i < 20000; ++i) {
    c.group_a.push_back(static_cast<double>(rng() % 50));
    c.group_b.push_back(static_cast<double>(rng() % 50));
    c.alpha.push_back(0.01 + static_cast<double>(rng() % 100) / 100.0);
  }
  c.alpha0 = 0.0;
  for (double a : c.alpha) c.alpha0 += a;
  const auto s = serial::log_odds_z(c);
  const auto p = parallel::log_odds_z(c);
  REQUIRE(s.size() == p.size());
  for (std::size_t i = 0; i < s.size(); ++i) CHECK(s[i] == p[i]);
}

TEST_CASE("log_odds_z validates shapes") {
  DenseCounts c{{1.0}, {1.0, 2.0}, {1.0}, 1.0};
  CHECK_THROWS_AS(serial::log_odds_z(c), ValidationError);
  DenseCounts zero{{1.0}, {1.0}, {1.0}, 0.0};
  CHECK_THROWS_AS(parallel::log_odds_z(zero), ValidationError);
}

TEST_CASE("jsd: parallel agrees with serial and with a direct sum") {
  std::mt19937_64 rng(3);
  const auto p = random_simplex(rng, 10000);
  const auto q = random_simplex(rng, 10000);
  double direct = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    direct += 0.5 * p[i] * std::log(p[i] / m) + 0.5 * q[i] * std::log(q[i] / m);
  }
  CHECK(serial::jsd(p, q) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(parallel::jsd(p, q) == doctest::Approx(direct).epsilon(1e-12));
  CHECK(serial::jsd(p, p) == doctest::Approx(0.0));
  std::vector<double> shorter(3, 1.0 / 3);
  CHECK_THROWS_AS(parallel::jsd(p, shorter), ValidationError);
}

TEST_CASE("cosine_matrix: parallel matches serial; zero vector gives 0") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<std::vector<double>> vs(12, std::vector<double>(8));
  for (auto& v : vs)
    for (auto& x : v) x = n(rng);
  vs.push_back(std::vector<double>(8, 0.0));
  const auto s = serial::cosine_matrix(vs);
  const auto p = parallel::cosine_matrix(vs);
  CHECK(s == p);
  const std::size_t k = vs.size();
  for (std::size_t i = 0; i + 1 < k; ++i) {
    CHECK(s[i * k + i] == doctest::Approx(1.0));
    CHECK(s[i * k + (k - 1)] == 0.0);
    for (std::size_t j = 0; j < k; ++j) CHECK(s[i * k + j] == s[j * k + i]);
  }
  CHECK(s[(k - 1) * k + (k - 1)] == 0.0);
}

TEST_CASE("max_threads is positive") { CHECK(max_threads() >= 1); }
