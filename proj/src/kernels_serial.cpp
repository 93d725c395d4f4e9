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

#include <cmath>

#include "kernels_common.hpp"
#include "storybias/error.hpp"
#include "storybias/kernels.hpp"

namespace storybias::kernels::serial {

std::vector<TermCountMap> count_terms(std::span<const GroupedTerms> items, std::size_t groups) {
  std::vector<TermCountMap> out(groups);
  for (const auto& item : items) {
    if (item.group >= groups) throw ValidationError("group index out of range");
    for (const auto& t : item.terms) ++out[item.group][t];
  }
  return out;
}

std::vector<double> log_odds_z(const DenseCounts& c) {
  detail::check_dense(c);
  const double n_a = detail::sum(c.group_a);
  const double n_b = detail::sum(c.group_b);
  std::vector<double> z(c.group_a.size());
  for (std::size_t w = 0; w < z.size(); ++w) {
    z[w] = detail::log_odds_z_term(c.group_a[w], c.group_b[w], c.alpha[w], n_a, n_b, c.alpha0);
  }
  return z;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ValidationError("jsd inputs differ in length");
  double kl_p = 0.0;
  double kl_q = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0) kl_p += p[i] * std::log(p[i] / m);
    if (q[i] > 0) kl_q += q[i] * std::log(q[i] / m);
  }
  return 0.5 * kl_p + 0.5 * kl_q;
}

std::vector<double> cosine_matrix(std::span<const std::vector<double>> vectors) {
  const std::size_t n = vectors.size();
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out[i * n + j] = detail::cosine(vectors[i], vectors[j]);
    }
  }
  return out;
}

std::vector<ValidityRecord> validate_batch(std::span<const StoryRecord> records,
                                           const LanguageIdBackend& lid,
                                           const RefusalRuleset& rules) {
  std::vector<ValidityRecord> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(validate_story(r, lid, rules));
  return out;
}

}  // namespace storybias::kernels::serial
