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
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "storybias/corpus.hpp"

namespace storybias {

// Smoothing constant for both the log-probability ratio and the JSD.
inline constexpr double kEpsilon = 1e-10;
inline constexpr double kScoreClip = 2.0;

struct Scope {
  std::string language;
  std::string model_id;

  auto operator<=>(const Scope&) const = default;
};

struct GroupKey {
  Axis axis = Axis::kChildGender;
  std::string value;
  Scope scope;
};

// Ordered semantic categories with per-language term sets. Within one
// language a term belongs to at most one category.
class CategoryLexicon {
 public:
  CategoryLexicon() = default;
  explicit CategoryLexicon(std::vector<std::string> categories);

  // {"categories": [...], "terms": {category: {language: [terms]}}}.
  // Terms are normalized on load.
  static CategoryLexicon from_json(const nlohmann::json& j);
  static CategoryLexicon load(const std::filesystem::path& path);

  // Throws ConfigError if the term already maps to another category.
  void add_term(std::string_view category, std::string_view language, std::string_view term);

  const std::vector<std::string>& categories() const { return categories_; }
  std::optional<std::size_t> index_of(std::string_view category) const;
  // Category index of a normalized term in a language, if mapped.
  std::optional<std::size_t> category_of(std::string_view term, std::string_view language) const;

 private:
  std::vector<std::string> categories_;
  // language -> term -> category index
  std::map<std::string, std::unordered_map<std::string, std::size_t>, std::less<>> terms_;
};

struct FrequencyTable {
  GroupKey group;
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;

  void add(const std::string& term, std::int64_t n = 1);
};

// (count mapped to category) / (count mapped to any category); 0 when no
// term is mapped. Throws ConfigError for an unknown category.
double category_probability(const FrequencyTable& table, const CategoryLexicon& lexicon,
                            std::string_view category);

// ln(p_m + eps) - ln(p_f + eps), clipped to [-2, 2]. Positive values mean
// higher prevalence under the male-conditioned group.
double directional_bias(double p_m, double p_f);

using Distribution = std::map<std::string, double>;

// Normalized counts; empty for an empty table.
Distribution to_distribution(const FrequencyTable& table);

// Jensen-Shannon divergence in nats. Missing terms count as 0; every
// component gets eps and each side is renormalized before the KL terms.
// Throws ValidationError when an input does not sum to 1 within 1e-9.
double bias_strength_jsd(const Distribution& p_m, const Distribution& p_f);

struct BiasFingerprint {
  Scope scope;
  std::vector<std::string> categories;
  std::vector<double> scores;       // clipped S_C, one per category
  std::vector<bool> coverage_mask;  // category had evidence in either group

  ordered_json to_json() const;
  static BiasFingerprint from_json(const nlohmann::json& j);
};

// One clipped score per lexicon category. Categories with no evidence in
// either group score 0 and are masked out. Throws ValidationError when a
// group table is empty.
BiasFingerprint fingerprint(const FrequencyTable& male, const FrequencyTable& female,
                            const CategoryLexicon& lexicon, const Scope& scope);

struct SimilarityMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // row-major

  double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
};

// Cosine similarity between fingerprints, keyed and labelled by language in
// sorted order. Fingerprints may cover different category subsets as long
// as their relative order agrees; absent or masked dimensions count as 0.
// Throws ConfigError on conflicting category orders or fewer than two
// languages.
SimilarityMatrix cross_lingual_similarity(const std::map<std::string, BiasFingerprint>& fps);

using TermCounts = std::map<std::string, std::int64_t>;

// Log-odds ratio with an informative Dirichlet prior: alpha_w = prior_mass *
// prior_w / sum(prior), alpha0 = prior_mass. Positive Z means the term
// leans to counts_m. Throws ValidationError when a term of either group has
// no prior mass, or prior_mass <= 0. A term holding all prior mass and all
// counts has no defined odds and comes out non-finite.
std::map<std::string, double> log_odds_z(const TermCounts& counts_m, const TermCounts& counts_f,
                                         const TermCounts& prior, double prior_mass);

// Pooled counts of both groups: the default background prior.
TermCounts pooled_prior(const TermCounts& a, const TermCounts& b);

inline constexpr double kDefaultPriorMass = 500.0;

struct KeywordLists {
  std::vector<std::pair<std::string, double>> positive;  // Z >= 0, descending
  std::vector<std::pair<std::string, double>> negative;  // Z <= 0, ascending
};

// Ties broken by term, lexicographically.
KeywordLists top_keywords(const std::map<std::string, double>& z, std::size_t k);

struct BoxStats {
  std::vector<std::pair<std::string, double>> values;  // (language, value), by language
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> sample, double q);

// es, ru, ar -> "G-Group"; en, zh, ja, ko -> "N-Group".
std::map<std::string, std::string> default_gender_grouping();

// Splits per-language values by group. Languages in `excluded` are dropped;
// any other language missing from `grouping` is an error, as is a group
// that ends up empty.
std::map<std::string, BoxStats> grouped_bias_strength(
    const std::map<std::string, double>& jsd_by_language,
    const std::map<std::string, std::string>& grouping,
    const std::set<std::string>& excluded = {"sw"});

}  // namespace storybias
