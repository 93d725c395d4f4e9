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

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "json.hpp"

namespace storybias {

using ordered_json = nlohmann::ordered_json;

// The five demographic axes, in enumeration order.
enum class Axis { kNationality, kReligion, kSocialClass, kParentRole, kChildGender };

inline constexpr std::array<Axis, 5> kAllAxes = {
    Axis::kNationality, Axis::kReligion, Axis::kSocialClass, Axis::kParentRole,
    Axis::kChildGender};

// Field / lexicon key for the axis: "nationality", "religion", ...
std::string_view axis_key(Axis axis);
std::optional<Axis> parse_axis(std::string_view key);

struct ConfigSpace {
  std::vector<std::string> nationalities;
  std::vector<std::string> religions;
  std::vector<std::string> social_classes;
  std::vector<std::string> parent_roles;
  std::vector<std::string> child_genders;
  std::vector<std::string> languages;

  const std::vector<std::string>& values(Axis axis) const;
  bool contains(Axis axis, std::string_view id) const;

  // 27 nationalities, 6 religions, 2 classes, 3 parent roles, 3 genders,
  // 8 languages.
  static ConfigSpace default_space();

  // Throws ConfigError on empty, duplicate, or non-canonical identifiers.
  void validate() const;

  static ConfigSpace from_json(const nlohmann::json& j);
  ordered_json to_json() const;
};

struct PromptConfig {
  std::string language;
  std::string nationality;
  std::string religion;
  std::string social_class;
  std::string parent_role;
  std::string child_gender;

  const std::string& value(Axis axis) const;

  // Lowercase hex SHA-256 over the canonical field tuple
  // (language, nationality, religion, social_class, parent_role, child_gender)
  // joined with U+001F.
  std::string config_hash() const;

  auto operator<=>(const PromptConfig&) const = default;
};

struct GenerationParams {
  double temperature = 1.0;
  double top_p = 0.95;
  int top_k = 50;
  double repetition_penalty = 1.1;
  int max_new_tokens = 1024;
  std::int64_t random_seed = 42;
  int samples_per_prompt = 5;

  // Throws ConfigError when temperature <= 0, top_p outside (0, 1],
  // samples_per_prompt < 1 or max_new_tokens < 1.
  void validate() const;

  static GenerationParams from_json(const nlohmann::json& j);
  ordered_json to_json() const;

  bool operator==(const GenerationParams&) const = default;
};

enum class FinishReason { kComplete, kTruncated, kError };

std::string_view to_string(FinishReason r);
FinishReason parse_finish_reason(std::string_view s);

struct StoryRecord {
  std::string story_id;
  PromptConfig prompt_config;
  std::string model_id;
  int sample_index = 0;
  std::string prompt_text;
  std::string story_text;
  std::string created_at;  // ISO-8601 UTC
  FinishReason finish_reason = FinishReason::kComplete;

  // Throws ValidationError when text fields are not valid NFC UTF-8 or an
  // identifier is empty.
  void validate() const;

  bool operator==(const StoryRecord&) const = default;
};

// (config_hash, model_id, sample_index): unique within a corpus.
using StoryKey = std::tuple<std::string, std::string, int>;

StoryKey key_of(const StoryRecord& r);

// Deterministic id derived from the story key.
std::string make_story_id(std::string_view config_hash, std::string_view model_id,
                          int sample_index);

struct ValidityRecord {
  std::string story_id;
  std::string language;  // target language
  std::string model_id;
  std::string predicted_language;
  double lid_confidence = 0.0;
  bool is_refusal = false;
  bool language_ok = false;
  bool is_valid = false;
  std::string reason;

  bool operator==(const ValidityRecord&) const = default;
};

struct ExtractionRecord {
  std::string story_id;
  std::vector<std::string> adjectives;
  std::vector<std::string> environment;
  std::vector<std::string> cultural;
  std::string extractor_model_id;
  bool extraction_failed = false;
  std::string raw_response;

  bool operator==(const ExtractionRecord&) const = default;
};

// JSON mapping. Corpus field order is fixed: story_id, config_hash, language,
// nationality, religion, social_class, parent_role, child_gender, model_id,
// sample_index, prompt_text, story_text, created_at, finish_reason.
ordered_json to_json(const StoryRecord& r);
StoryRecord story_from_json(const nlohmann::json& j);
ordered_json to_json(const ValidityRecord& r);
ValidityRecord validity_from_json(const nlohmann::json& j);
ordered_json to_json(const ExtractionRecord& r);
ExtractionRecord extraction_from_json(const nlohmann::json& j);

// One JSONL line without the trailing newline.
std::string serialize_line(const StoryRecord& r);

// Writes every record to `path` through a temporary sibling that is renamed
// into place on success and removed on failure. Rejects invalid records and
// duplicate story keys with ValidationError before anything is published.
std::size_t write_corpus(std::span<const StoryRecord> records,
                         const std::filesystem::path& path);

using CorpusFilter = std::function<bool(const PromptConfig&, std::string_view model_id)>;

// Streaming JSONL reader; holds one line in memory at a time.
template <typename Record>
class JsonlReader {
 public:
  using Decoder = std::function<Record(const nlohmann::json&)>;

  JsonlReader(const std::filesystem::path& path, Decoder decode);

  // Next record, or nullopt at end of file. Throws ParseError on a malformed
  // or truncated line.
  std::optional<Record> next();

  std::uint64_t line_number() const { return line_; }

 private:
  std::ifstream in_;
  Decoder decode_;
  std::uint64_t line_ = 0;
  std::uint64_t offset_ = 0;
};

class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& path, CorpusFilter filter = {});

  // Next record passing the filter, in file order.
  std::optional<StoryRecord> next();

 private:
  JsonlReader<StoryRecord> reader_;
  CorpusFilter filter_;
};

// Reads a whole corpus. Convenience over CorpusReader for small inputs.
std::vector<StoryRecord> read_corpus(const std::filesystem::path& path,
                                     const CorpusFilter& filter = {});
std::vector<ValidityRecord> read_validity(const std::filesystem::path& path);
std::vector<ExtractionRecord> read_extractions(const std::filesystem::path& path);

// Append-only JSONL sink with one flushed line per call. On open, a torn
// final line (no trailing newline, left by a killed writer) is truncated.
class JsonlAppender {
 public:
  explicit JsonlAppender(const std::filesystem::path& path);
  ~JsonlAppender();

  JsonlAppender(const JsonlAppender&) = delete;
  JsonlAppender& operator=(const JsonlAppender&) = delete;

  void append_line(std::string_view line);

  // Bytes dropped from a torn tail when the file was opened.
  std::uint64_t repaired_bytes() const { return repaired_bytes_; }

 private:
  int fd_ = -1;
  std::filesystem::path path_;
  std::uint64_t repaired_bytes_ = 0;
};

void write_jsonl_atomic(const std::filesystem::path& path,
                        const std::vector<std::string>& lines);

// Writes `contents` through a sibling temp file renamed over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

// Current time as ISO-8601 UTC with second resolution.
std::string utc_timestamp();

}  // namespace storybias
