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

#include <omp.h>

#include <cmath>
#include <exception>
#include <unordered_map>

#include "kernels_common.hpp"
#include "storybias/error.hpp"
#include "storybias/kernels.hpp"

namespace storybias::kernels {

int max_threads() { return omp_get_max_threads(); }

namespace parallel {

std::vector<TermCountMap> count_terms(std::span<const GroupedTerms> items, std::size_t groups) {
  for (const auto& item : items) {
    if (item.group >= groups) throw ValidationError("group index out of range");
  }
  std::vector<TermCountMap> out(groups);
  const auto n = static_cast<std::int64_t>(items.size());
#pragma omp parallel
  {
    std::vector<std::unordered_map<std::string, std::int64_t>> local(groups);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      const auto& item = items[static_cast<std::size_t>(i)];
      for (const auto& t : item.terms) ++local[item.group][t];
    }
#pragma omp critical(storybias_count_merge)
    for (std::size_t g = 0; g < groups; ++g) {
      for (auto& [term, count] : local[g]) out[g][term] += count;
    }
  }
  return out;
}

std::vector<double> log_odds_z(const DenseCounts& c) {
  detail::check_dense(c);
  // Totals are summed serially so results match the reference bit for bit.
  const double n_a = detail::sum(c.group_a);
  const double n_b = detail::sum(c.group_b);
  std::vector<double> z(c.group_a.size());
  const auto n = static_cast<std::int64_t>(z.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t w = 0; w < n; ++w) {
    const auto i = static_cast<std::size_t>(w);
    z[i] = detail::log_odds_z_term(c.group_a[i], c.group_b[i], c.alpha[i], n_a, n_b, c.alpha0);
  }
  return z;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("jsd inputs differ in length");
  double kl_p = 0.0;
  double kl_q = 0.0;
  const auto n = static_cast<std::int64_t>(p.size());
#pragma omp parallel for schedule(static) reduction(+ : kl_p, kl_q)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) kl_p += p[i] * std::log(p[i] / m);
    if (q[i] > 0) kl_q += q[i] * std::log(q[i] / m);
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

std::vector<double> cosine_matrix(std::span<const std::vector<double>> vectors) {
  const std::size_t n = vectors.size();
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) throw ValidationError("cosine inputs differ in length");
  }
  std::vector<double> out(n * n, 0.0);
  const auto cells = static_cast<std::int64_t>(n * n);
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < cells; ++k) {
    const auto i = static_cast<std::size_t>(k) / n;
    const auto j = static_cast<std::size_t>(k) % n;
    out[static_cast<std::size_t>(k)] = detail::cosine(vectors[i], vectors[j]);
  }
  return out;
}

std::vector<ValidityRecord> validate_batch(std::span<const StoryRecord> records,
                                           const LanguageIdBackend& lid,
                                           const RefusalRuleset& rules) {
  std::vector<ValidityRecord> out(records.size());
  std::exception_ptr failure;
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t k = 0; k < n; ++k) {
    try {
      out[static_cast<std::size_t>(k)] =
          validate_story(records[static_cast<std::size_t>(k)], lid, rules);
    } catch (...) {
#pragma omp critical(storybias_validate_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace parallel
}  // namespace storybias::kernels
