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

#include <algorithm>
#include <cmath>
#include <span>

#include "storybias/error.hpp"
#include "storybias/kernels.hpp"

// Per-element formulas shared by the serial and parallel kernels so that the
// two differ only in how the loop is scheduled.
namespace storybias::kernels::detail {

inline void check_dense(const DenseCounts& c) {
  if (c.group_a.size() != c.group_b.size() || c.group_a.size() != c.alpha.size()) {
    throw ValidationError("dense count vectors differ in length");
  }
  if (!(c.alpha0 > 0)) throw ValidationError("alpha0 must be > 0");
}

inline double sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

// delta = log-odds(a) - log-odds(b) with Dirichlet pseudo-counts,
// var ~= 1/(y_a + alpha) + 1/(y_b + alpha).
inline double log_odds_z_term(double y_a, double y_b, double alpha, double n_a, double n_b,
                              double alpha0) {
  const double la = std::log((y_a + alpha) / (n_a + alpha0 - y_a - alpha));
  const double lb = std::log((y_b + alpha) / (n_b + alpha0 - y_b - alpha));
  const double var = 1.0 / (y_a + alpha) + 1.0 / (y_b + alpha);
  return (la - lb) / std::sqrt(var);
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("cosine inputs differ in length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace storybias::kernels::detail
