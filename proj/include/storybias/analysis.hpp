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

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "storybias/corpus.hpp"
#include "storybias/langfilter.hpp"
#include "storybias/metrics.hpp"

namespace storybias {

enum class Dimension { kAdjectives, kEnvironment, kCultural };

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view s);

// Two-group comparison for keyword panels. An empty group_b means "every
// other value of the axis".
struct KeywordContrast {
  Axis axis = Axis::kChildGender;
  std::string group_a;
  std::string group_b;
};

struct AnalysisConfig {
  std::string male_value = "boy";
  std::string female_value = "girl";
  // Extraction lists feeding the fingerprint tables.
  std::vector<Dimension> fingerprint_dimensions = {Dimension::kAdjectives};
  std::vector<KeywordContrast> contrasts = {
      {Axis::kChildGender, "boy", "girl"}, {Axis::kSocialClass, "wealthy", "working_class"}};
  std::vector<Dimension> keyword_dimensions = {Dimension::kAdjectives, Dimension::kEnvironment,
                                               Dimension::kCultural};
  double prior_mass = kDefaultPriorMass;
  std::map<std::string, std::string> grouping = default_gender_grouping();
  std::set<std::string> excluded = {"sw"};

  static AnalysisConfig from_json(const nlohmann::json& j);
};

struct ScopeMetrics {
  Scope scope;
  std::size_t male_stories = 0;
  std::size_t female_stories = 0;
  std::optional<BiasFingerprint> fingerprint;
  std::optional<double> jsd;  // adjective distributions, male vs female
};

struct KeywordScores {
  Scope scope;
  KeywordContrast contrast;
  Dimension dimension = Dimension::kAdjectives;
  std::map<std::string, double> z;
};

struct AnalysisResult {
  std::vector<ScopeMetrics> scopes;                  // sorted by scope
  std::map<std::string, SimilarityMatrix> similarity;  // model -> languages
  std::map<std::string, std::map<std::string, BoxStats>> grouped_jsd;  // model -> group
  std::vector<KeywordScores> keywords;
  std::vector<VsrRow> vsr;  // empty without validity input
  std::vector<std::string> warnings;

  ordered_json to_json() const;
  static AnalysisResult from_json(const nlohmann::json& j);
};

// Stories take part only if they passed validity filtering (when validity is
// given) and have a non-failed extraction. Results do not depend on input
// order.
AnalysisResult analyze(std::span<const StoryRecord> corpus,
                       std::span<const ExtractionRecord> extractions,
                       std::optional<std::span<const ValidityRecord>> validity,
                       const CategoryLexicon& lexicon, const AnalysisConfig& config);

// metrics.json plus vsr.csv when VSR rows exist.
void write_metrics_dir(const AnalysisResult& result, const std::filesystem::path& dir);
AnalysisResult read_metrics_dir(const std::filesystem::path& dir);

}  // namespace storybias
