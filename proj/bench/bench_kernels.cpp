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

// Serial reference vs OpenMP kernels on synthetic inputs.

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "storybias/corpus.hpp"
#include "storybias/kernels.hpp"
#include "storybias/langfilter.hpp"

namespace {

using namespace storybias;
using namespace storybias::kernels;

struct TermData {
  std::vector<std::vector<std::string>> bags;
  std::vector<GroupedTerms> items;
};

TermData make_terms(std::size_t stories) {
  TermData d;
  std::mt19937_64 rng(1);
  d.bags.resize(stories);
  for (std::size_t i = 0; i < stories; ++i) {
    for (int k = 0; k < 12; ++k) d.bags[i].push_back("term" + std::to_string(rng() % 5000));
    d.items.push_back({i % 2, d.bags[i]});
  }
  return d;
}

DenseCounts make_dense(std::size_t vocab) {
  std::mt19937_64 rng(2);
  DenseCounts c;
  for (std::size_t i = 0; i < vocab; ++i) {
    c.group_a.push_back(static_cast<double>(rng() % 100));
    c.group_b.push_back(static_cast<double>(rng() % 100));
    c.alpha.push_back(0.5);
  }
  c.alpha0 = 0.5 * static_cast<double>(vocab);
  return c;
}

std::vector<double> make_simplex(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  std::vector<double> v(n);
  double s = 0;
  for (auto& x : v) s += (x = u(rng));
  for (auto& x : v) x /= s;
  return v;
}

std::vector<std::vector<double>> make_vectors(std::size_t n, std::size_t dims) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> out(n, std::vector<double>(dims));
  for (auto& v : out)
    for (auto& x : v) x = g(rng);
  return out;
}

std::vector<StoryRecord> make_stories(std::size_t n) {
  std::vector<StoryRecord> out;
  std::string text = "Once upon a time";
  while (text.size() < 1500) text += " the children played by the river all afternoon and sang";
  for (std::size_t i = 0; i < n; ++i) {
    StoryRecord r;
    r.prompt_config = {"en", "american", "christian", "wealthy", "mother", "girl"};
    r.model_id = "m";
    r.sample_index = static_cast<int>(i);
    r.story_id = make_story_id(r.prompt_config.config_hash(), r.model_id, r.sample_index);
    r.story_text = text;
    out.push_back(std::move(r));
  }
  return out;
}

template <auto Fn>
void bm_count_terms(benchmark::State& state) {
  const auto d = make_terms(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(d.items, 2));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_log_odds(benchmark::State& state) {
  const auto c = make_dense(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(c));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_jsd(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = make_simplex(n, 4);
  const auto q = make_simplex(n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p, q));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void bm_cosine(benchmark::State& state) {
  const auto v = make_vectors(static_cast<std::size_t>(state.range(0)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(v));
}

template <auto Fn>
void bm_validate(benchmark::State& state) {
  const auto stories = make_stories(static_cast<std::size_t>(state.range(0)));
  const ScriptLanguageId lid;
  const auto rules = RefusalRuleset::defaults();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(stories, lid, rules));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bm_count_terms<serial::count_terms>)->Name("count_terms/serial")->Arg(100000);
BENCHMARK(bm_count_terms<parallel::count_terms>)->Name("count_terms/parallel")->Arg(100000);
BENCHMARK(bm_log_odds<serial::log_odds_z>)->Name("log_odds_z/serial")->Arg(1 << 20);
BENCHMARK(bm_log_odds<parallel::log_odds_z>)->Name("log_odds_z/parallel")->Arg(1 << 20);
BENCHMARK(bm_jsd<serial::jsd>)->Name("jsd/serial")->Arg(1 << 20);
BENCHMARK(bm_jsd<parallel::jsd>)->Name("jsd/parallel")->Arg(1 << 20);
BENCHMARK(bm_cosine<serial::cosine_matrix>)->Name("cosine_matrix/serial")->Arg(512);
BENCHMARK(bm_cosine<parallel::cosine_matrix>)->Name("cosine_matrix/parallel")->Arg(512);
BENCHMARK(bm_validate<serial::validate_batch>)->Name("validate_batch/serial")->Arg(5000);
BENCHMARK(bm_validate<parallel::validate_batch>)->Name("validate_batch/parallel")->Arg(5000);

BENCHMARK_MAIN();
