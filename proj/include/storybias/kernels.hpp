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

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "storybias/corpus.hpp"
#include "storybias/langfilter.hpp"

// Data-parallel inner loops of the analysis. Each kernel has a serial
// reference and an OpenMP version with the same signature; tests hold them
// equal and bench/ compares their throughput. Callers use the parallel
// versions.
namespace storybias::kernels {

using TermCountMap = std::map<std::string, std::int64_t>;

// One story's deduplicated term list attributed to a group.
struct GroupedTerms {
  std::size_t group = 0;
  std::span<const std::string> terms;
};

// Dense two-group counts over a sorted vocabulary, plus Dirichlet
// pseudo-counts.
struct DenseCounts {
  std::vector<double> group_a;
  std::vector<double> group_b;
  std::vector<double> alpha;
  double alpha0 = 0.0;
};

namespace serial {

// Per-group occurrence counts; result has `groups` entries.
std::vector<TermCountMap> count_terms(std::span<const GroupedTerms> items, std::size_t groups);

// Variance-normalized log-odds difference per vocabulary entry.
std::vector<double> log_odds_z(const DenseCounts& c);

// Jensen-Shannon divergence (nats) of two aligned, already smoothed and
// normalized vectors.
double jsd(std::span<const double> p, std::span<const double> q);

// Row-major n x n cosine similarities; a zero vector scores 0 against
// everything, itself included.
std::vector<double> cosine_matrix(std::span<const std::vector<double>> vectors);

std::vector<ValidityRecord> validate_batch(std::span<const StoryRecord> records,
                                           const LanguageIdBackend& lid,
                                           const RefusalRuleset& rules);

}  // namespace serial

namespace parallel {

std::vector<TermCountMap> count_terms(std::span<const GroupedTerms> items, std::size_t groups);
std::vector<double> log_odds_z(const DenseCounts& c);
double jsd(std::span<const double> p, std::span<const double> q);
std::vector<double> cosine_matrix(std::span<const std::vector<double>> vectors);
std::vector<ValidityRecord> validate_batch(std::span<const StoryRecord> records,
                                           const LanguageIdBackend& lid,
                                           const RefusalRuleset& rules);

}  // namespace parallel

int max_threads();

}  // namespace storybias::kernels
