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
#include "storybias/metrics.hpp"

using namespace storybias;

namespace {

CategoryLexicon abc_lexicon() {
  CategoryLexicon lex({"Agency", "Communality", "Intellect"});
  for (const auto* t : {"brave", "bold", "strong", "leader"}) lex.add_term("Agency", "en", t);
  for (const auto* t : {"kind", "caring", "warm", "gentle"}) lex.add_term("Communality", "en", t);
  for (const auto* t : {"smart", "clever", "wise", "curious"}) lex.add_term("Intellect", "en", t);
  return lex;
}

FrequencyTable table(std::initializer_list<std::pair<const char*, int>> entries) {
  FrequencyTable t;
  t.group.scope = {"en", "m"};
  for (const auto& [term, n] : entries) t.add(term, n);
  return t;
}

double oracle_jsd(std::vector<double> p, std::vector<double> q) {
  const double eps = 1e-10;
  const double norm = 1.0 + eps * static_cast<double>(p.size());
  double out = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double a = (p[i] + eps) / norm;
    const double b = (q[i] + eps) / norm;
    const double m = 0.5 * (a + b);
    out += 0.5 * a * std::log(a / m) + 0.5 * b * std::log(b / m);
  }
  return out;
}

}  // namespace

TEST_CASE("directional bias: hand values and clip") {
  CHECK(directional_bias(0.3, 0.3) == 0.0);
  // The eps smoothing shifts the value by about 5e-10.
  CHECK(std::abs(directional_bias(0.2, 0.1) - std::log(2.0)) < 1e-9);
  CHECK(directional_bias(0.9, 0.0) == 2.0);
  CHECK(directional_bias(0.0, 0.9) == -2.0);
  CHECK(directional_bias(0.0, 0.0) == 0.0);
}

TEST_CASE("directional bias is antisymmetric") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(directional_bias(a, b) == doctest::Approx(-directional_bias(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("category probability uses mapped terms only") {
  const auto lex = abc_lexicon();
  const auto t = table({{"brave", 2}, {"kind", 1}, {"smart", 1}, {"unmapped", 6}});
  CHECK(category_probability(t, lex, "Agency") == 0.5);
  CHECK(category_probability(t, lex, "Intellect") == 0.25);
  CHECK_THROWS_AS(category_probability(t, lex, "Nope"), ConfigError);
  const auto none = table({{"unmapped", 3}});
  CHECK(category_probability(none, lex, "Agency") == 0.0);
}

TEST_CASE("lexicon rejects a term in two categories of one language") {
  auto lex = abc_lexicon();
  CHECK_THROWS_AS(lex.add_term("Intellect", "en", "brave"), ConfigError);
  lex.add_term("Intellect", "es", "brave");
  CHECK(lex.category_of("brave", "es") == std::optional<std::size_t>(2));
  CHECK(lex.category_of("brave", "en") == std::optional<std::size_t>(0));
  CHECK_FALSE(lex.category_of("brave", "ja").has_value());
}

TEST_CASE("jsd hand cases") {
  const Distribution p{{"a", 0.5}, {"b", 0.5}};
  const Distribution q{{"a", 0.9}, {"b", 0.1}};
  CHECK(bias_strength_jsd(p, p) == doctest::Approx(0.0).epsilon(1e-12));
  // M = (0.7, 0.3).
  const double hand = 0.5 * (0.5 * std::log(0.5 / 0.7) + 0.5 * std::log(0.5 / 0.3)) +
                      0.5 * (0.9 * std::log(0.9 / 0.7) + 0.1 * std::log(0.1 / 0.3));
  CHECK(bias_strength_jsd(p, q) == doctest::Approx(hand).epsilon(1e-9));
  CHECK(std::abs(bias_strength_jsd(p, q) - 0.10175) < 1e-4);
  const Distribution x{{"a", 1.0}};
  const Distribution y{{"b", 1.0}};
  CHECK(std::abs(bias_strength_jsd(x, y) - std::log(2.0)) < 1e-6);
}

TEST_CASE("jsd is symmetric, bounded and matches the smoothed oracle") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<double> p(n), q(n);
    double sp = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = (rng() % 3 == 0) ? 0.0 : u(rng);
      q[i] = (rng() % 3 == 0) ? 0.0 : u(rng);
      sp += p[i];
      sq += q[i];
    }
    if (sp == 0 || sq == 0) continue;
    Distribution dp, dq;
    for (std::size_t i = 0; i < n; ++i) {
      p[i] /= sp;
      q[i] /= sq;
      const std::string key = "t" + std::to_string(i);
      if (p[i] > 0) dp[key] = p[i];
      if (q[i] > 0) dq[key] = q[i];
    }
    const double j = bias_strength_jsd(dp, dq);
    CHECK(j == doctest::Approx(bias_strength_jsd(dq, dp)).epsilon(1e-12));
    CHECK(j >= 0.0);
    CHECK(j <= std::log(2.0) + 1e-6);
    CHECK(j == doctest::Approx(oracle_jsd(p, q)).epsilon(1e-9));
  }
}

TEST_CASE("jsd rejects unnormalized input") {
  CHECK_THROWS_AS(bias_strength_jsd({{"a", 0.5}}, {{"a", 1.0}}), ValidationError);
  CHECK_THROWS_AS(bias_strength_jsd({{"a", -0.5}, {"b", 1.5}}, {{"a", 1.0}}), ValidationError);
}

TEST_CASE("to_distribution normalizes by total") {
  const auto d = to_distribution(table({{"a", 1}, {"b", 3}}));
  CHECK(d.at("a") == 0.25);
  CHECK(d.at("b") == 0.75);
  CHECK(to_distribution(FrequencyTable{}).empty());
}

TEST_CASE("planted fingerprint recovers ln 2 on Agency") {
  const auto lex = abc_lexicon();
  // male 40/30/30, female 20/40/40 over mapped terms.
  const auto m = table({{"brave", 40}, {"kind", 30}, {"smart", 30}, {"noise", 12}});
  const auto f = table({{"bold", 20}, {"warm", 40}, {"wise", 40}});
  const auto fp = fingerprint(m, f, lex, {"en", "m"});
  REQUIRE(fp.scores.size() == 3);
  CHECK(std::abs(fp.scores[0] - std::log(2.0)) < 1e-6);
  CHECK(fp.scores[1] == doctest::Approx(std::log(0.75)));
  CHECK(fp.coverage_mask == std::vector<bool>{true, true, true});
}

TEST_CASE("fingerprint masks categories without evidence") {
  const auto lex = abc_lexicon();
  const auto fp = fingerprint(table({{"brave", 3}}), table({{"bold", 1}}), lex, {"en", "m"});
  CHECK(fp.scores == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(fp.coverage_mask == std::vector<bool>{true, false, false});
  const auto clipped = fingerprint(table({{"brave", 3}, {"kind", 1}}), table({{"kind", 1}}), lex,
                                   {"en", "m"});
  CHECK(clipped.scores[0] == 2.0);
  CHECK_THROWS_AS(fingerprint(FrequencyTable{}, table({{"kind", 1}}), lex, {"en", "m"}),
                  ValidationError);
}

TEST_CASE("fingerprint json round trip") {
  const auto lex = abc_lexicon();
  const auto fp = fingerprint(table({{"brave", 3}, {"kind", 1}}), table({{"kind", 2}}), lex,
                              {"en", "m"});
  const auto back = BiasFingerprint::from_json(fp.to_json());
  CHECK(back.scores == fp.scores);
  CHECK(back.coverage_mask == fp.coverage_mask);
  CHECK(back.scope == fp.scope);
}

namespace {

BiasFingerprint fp_of(const std::string& lang, std::vector<std::string> cats,
                      std::vector<double> scores, std::vector<bool> mask = {}) {
  BiasFingerprint f;
  f.scope = {lang, "m"};
  f.categories = std::move(cats);
  f.scores = std::move(scores);
  f.coverage_mask = mask.empty() ? std::vector<bool>(f.scores.size(), true) : mask;
  return f;
}

}  // namespace

TEST_CASE("cosine similarity hand cases") {
  const std::vector<std::string> cats = {"A", "C", "I"};
  std::map<std::string, BiasFingerprint> fps;
  fps["en"] = fp_of("en", cats, {1, 2, 2});
  fps["es"] = fp_of("es", cats, {2, 1, 2});
  fps["ja"] = fp_of("ja", cats, {0, 0, 0});
  const auto s = cross_lingual_similarity(fps);
  CHECK(s.labels == std::vector<std::string>{"en", "es", "ja"});
  CHECK(std::abs(s.at(0, 1) - 8.0 / 9.0) < 1e-12);
  CHECK(std::abs(s.at(0, 0) - 1.0) < 1e-12);
  CHECK(s.at(0, 2) == 0.0);
  CHECK(s.at(2, 2) == 0.0);

  std::map<std::string, BiasFingerprint> ortho;
  ortho["a"] = fp_of("a", cats, {1, 0, 0});
  ortho["b"] = fp_of("b", cats, {0, 3, 0});
  CHECK(cross_lingual_similarity(ortho).at(0, 1) == 0.0);
}

TEST_CASE("cosine pads missing and masked categories with zero") {
  std::map<std::string, BiasFingerprint> fps;
  fps["en"] = fp_of("en", {"A", "C", "I"}, {1, 5, 2}, {true, false, true});
  fps["es"] = fp_of("es", {"A", "I"}, {2, 2});
  const auto s = cross_lingual_similarity(fps);
  // Padded: en = (1, 0, 2), es = (2, 0, 2).
  const double expected = (2.0 + 4.0) / (std::sqrt(5.0) * std::sqrt(8.0));
  CHECK(s.at(0, 1) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cosine accepts consistent subsets that never co-occur") {
  std::map<std::string, BiasFingerprint> fps;
  fps["a"] = fp_of("a", {"A", "I"}, {1, 1});
  fps["b"] = fp_of("b", {"C", "Y"}, {1, 1});
  fps["c"] = fp_of("c", {"I", "Y"}, {1, 1});
  const auto s = cross_lingual_similarity(fps);
  CHECK(s.at(0, 2) == doctest::Approx(0.5));
  CHECK(s.at(1, 2) == doctest::Approx(0.5));
  CHECK(s.at(0, 1) == 0.0);
}

TEST_CASE("cosine rejects conflicting orders and single languages") {
  std::map<std::string, BiasFingerprint> fps;
  fps["en"] = fp_of("en", {"A", "C"}, {1, 1});
  CHECK_THROWS_AS(cross_lingual_similarity(fps), ConfigError);
  fps["es"] = fp_of("es", {"C", "A"}, {1, 1});
  CHECK_THROWS_AS(cross_lingual_similarity(fps), ConfigError);
}

TEST_CASE("log-odds hand case") {
  const TermCounts m{{"w", 9}, {"other", 91}};
  const TermCounts f{{"w", 1}, {"other", 99}};
  const TermCounts prior{{"w", 1}, {"other", 1}};
  const auto z = log_odds_z(m, f, prior, 2.0);
  // delta = ln(10/92) - ln(2/100), var = 1/10 + 1/2.
  const double delta = std::log(10.0 / 92.0) - std::log(2.0 / 100.0);
  CHECK(delta == doctest::Approx(1.69282).epsilon(1e-5));
  CHECK(z.at("w") == doctest::Approx(delta / std::sqrt(0.6)).epsilon(1e-12));
  CHECK(std::abs(z.at("w") - 2.185) < 1e-3);
}

TEST_CASE("log-odds is antisymmetric under group swap") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    TermCounts m, f;
    for (int w = 0; w < 10; ++w) {
      const std::string t = "w" + std::to_string(w);
      if (rng() % 4) m[t] = static_cast<std::int64_t>(rng() % 30);
      if (rng() % 4) f[t] = static_cast<std::int64_t>(rng() % 30);
    }
    auto prior = pooled_prior(m, f);
    for (auto& [_, n] : prior) n += 1;
    const auto a = log_odds_z(m, f, prior, 50.0);
    const auto b = log_odds_z(f, m, prior, 50.0);
    for (const auto& [t, v] : a) CHECK(v == doctest::Approx(-b.at(t)).epsilon(1e-12));
  }
}

TEST_CASE("log-odds input validation") {
  const TermCounts m{{"w", 1}};
  CHECK_THROWS_AS(log_odds_z(m, m, {{"w", 1}}, 0.0), ValidationError);
  CHECK_THROWS_AS(log_odds_z(m, {{"x", 1}}, {{"w", 1}}, 1.0), ValidationError);
  CHECK_THROWS_AS(log_odds_z(m, m, {{"w", 0}}, 1.0), ValidationError);
}

TEST_CASE("pooled prior sums both groups") {
  const auto p = pooled_prior({{"a", 1}, {"b", 2}}, {{"b", 3}, {"c", 4}});
  CHECK(p == TermCounts{{"a", 1}, {"b", 5}, {"c", 4}});
}

TEST_CASE("top keywords order and ties") {
  const std::map<std::string, double> z{{"d", 1.0}, {"a", 3.0}, {"c", 1.0}, {"b", -2.0},
                                        {"e", -2.0}, {"z", 0.0}};
  const auto k = top_keywords(z, 2);
  REQUIRE(k.positive.size() == 2);
  CHECK(k.positive[0].first == "a");
  CHECK(k.positive[1].first == "c");
  REQUIRE(k.negative.size() == 2);
  CHECK(k.negative[0].first == "b");
  CHECK(k.negative[1].first == "e");
  CHECK_THROWS_AS(top_keywords(z, 0), ValidationError);
}

TEST_CASE("quantile interpolates linearly") {
  CHECK(quantile({4, 1, 3, 2}, 0.5) == 2.5);
  CHECK(quantile({4, 1, 3, 2}, 0.25) == 1.75);
  CHECK(quantile({7}, 0.9) == 7.0);
  CHECK_THROWS_AS(quantile({}, 0.5), ValidationError);
}

TEST_CASE("grouped bias strength splits by grammatical gender") {
  const std::map<std::string, double> jsd{{"en", 0.1}, {"zh", 0.2}, {"ja", 0.3}, {"ko", 0.4},
                                          {"es", 0.5}, {"ru", 0.6}, {"ar", 0.7}, {"sw", 9.0}};
  const auto g = grouped_bias_strength(jsd, default_gender_grouping());
  REQUIRE(g.size() == 2);
  const auto& n = g.at("N-Group");
  CHECK(n.values.size() == 4);
  CHECK(n.min == 0.1);
  CHECK(n.max == 0.4);
  CHECK(n.median == doctest::Approx(0.25));
  const auto& gg = g.at("G-Group");
  CHECK(gg.median == 0.6);
  CHECK(gg.max == 0.7);

  std::map<std::string, double> unknown = jsd;
  unknown["fr"] = 0.1;
  CHECK_THROWS_AS(grouped_bias_strength(unknown, default_gender_grouping()), ConfigError);
  CHECK_THROWS_AS(grouped_bias_strength({{"en", 0.1}}, default_gender_grouping()), ConfigError);
}
