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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "storybias/client.hpp"
#include "storybias/corpus.hpp"

namespace storybias {

struct ExtractionPromptSpec {
  std::string extractor_model_id = "qwen3-14b";
  // Must name the three fields adjectives, environment, cultural. The story
  // is appended after this text.
  std::string instruction;
  int max_retries_on_malformed = 2;
  double temperature = 0.2;
  int max_tokens = 512;

  void validate() const;
  static ExtractionPromptSpec defaults();
  static ExtractionPromptSpec from_json(const nlohmann::json& j);
};

std::string build_extraction_prompt(const ExtractionPromptSpec& spec,
                                    std::string_view story_text);

struct RawExtraction {
  std::vector<std::string> adjectives;
  std::vector<std::string> environment;
  std::vector<std::string> cultural;
};

// Accepts a ```json fenced block or a bare JSON object with the three string
// arrays. Anything else is nullopt.
std::optional<RawExtraction> parse_extraction_response(std::string_view content);

// normalize_term over each entry, dropping empties and later duplicates.
// Within-story duplicates collapse (story-level presence counting).
std::vector<std::string> normalize_terms(const std::vector<std::string>& raw,
                                         std::string_view language,
                                         std::size_t* discarded = nullptr);

// Requests an extraction for one story. Malformed responses are retried up
// to spec.max_retries_on_malformed times; a record that still fails is
// returned with extraction_failed set and empty lists.
ExtractionRecord extract_story(const StoryRecord& record, const ExtractionPromptSpec& spec,
                               ChatClient& client);

struct ExtractionRunResult {
  std::size_t attempted = 0;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  std::size_t skipped_invalid = 0;
  std::size_t already_present = 0;
};

// Extracts every story that passed validity filtering and is not yet in
// `out_path`. Appends one line per story; the corpus is never modified.
ExtractionRunResult run_extraction(const std::filesystem::path& corpus_path,
                                   const std::filesystem::path& validity_path,
                                   const ExtractionPromptSpec& spec,
                                   const EndpointConfig& endpoint,
                                   const std::filesystem::path& out_path,
                                   ChatClient::Sleeper sleeper = {});

// --- human validation statistics -------------------------------------------

struct AnnotationRow {
  std::string story_id;
  std::string attribute;
  int annotator_a = 0;  // 0 unsupported, 1 partially, 2 clearly supported
  int annotator_b = 0;
};

struct AnnotationStats {
  std::size_t items = 0;
  std::optional<double> kappa;  // nullopt when chance agreement is 1
  double precision_a = 0.0;     // share of items scored >= 1
  double precision_b = 0.0;
  double precision = 0.0;       // mean of the two
};

// Cohen's kappa over the 3x3 confusion matrix plus partial-or-full
// precision. Throws ValidationError on fewer than two pairs or a score
// outside {0, 1, 2}.
AnnotationStats score_annotations(std::span<const std::pair<int, int>> pairs);

// CSV with header story_id,attribute,annotator_a,annotator_b.
std::vector<AnnotationRow> read_annotations_csv(const std::filesystem::path& path);

}  // namespace storybias
