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
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "storybias/corpus.hpp"

namespace storybias {

struct LanguageGuess {
  std::string language;  // ISO-639-1, "und" when undetermined
  double confidence = 0.0;
};

// Language identifier. Implementations must be deterministic and safe to call
// concurrently.
class LanguageIdBackend {
 public:
  virtual ~LanguageIdBackend() = default;
  virtual LanguageGuess identify(std::string_view text) const = 0;
  virtual std::string name() const = 0;
};

// Table-driven stub: the first rule whose `contains` substring occurs in the
// text decides; no match yields the fallback guess.
class TableLanguageId final : public LanguageIdBackend {
 public:
  struct Rule {
    std::string contains;
    LanguageGuess guess;
  };

  explicit TableLanguageId(std::vector<Rule> rules, LanguageGuess fallback = {"und", 0.0});
  static TableLanguageId load(const std::filesystem::path& path);

  LanguageGuess identify(std::string_view text) const override;
  std::string name() const override { return "table"; }

 private:
  std::vector<Rule> rules_;
  LanguageGuess fallback_;
};

// Script census plus stopword voting for the Latin-script languages (en, es,
// sw). Coarse, dependency-free, and adequate for the eight corpus languages;
// swap in a trained identifier for production filtering.
class ScriptLanguageId final : public LanguageIdBackend {
 public:
  LanguageGuess identify(std::string_view text) const override;
  std::string name() const override { return "script"; }
};

struct RefusalRuleset {
  // language -> patterns; "*" applies to every language. Matching is on
  // case-folded text.
  std::map<std::string, std::vector<std::string>> patterns;
  std::size_t min_story_length = 200;  // code points, after trimming
  std::size_t scan_window = 200;       // patterns must start within this prefix

  void validate() const;
  static RefusalRuleset from_json(const nlohmann::json& j);
  static RefusalRuleset load(const std::filesystem::path& path);
  static RefusalRuleset defaults();
};

bool is_refusal(std::string_view story_text, std::string_view language,
                const RefusalRuleset& rules);

// is_valid = predicted == target AND confidence > 0.5 AND not a refusal.
// A throwing backend or an out-of-range confidence yields an invalid record
// with the diagnostic in `reason`.
ValidityRecord validate_story(const StoryRecord& record, const LanguageIdBackend& lid,
                              const RefusalRuleset& rules);

inline constexpr double kMinLidConfidence = 0.5;

struct VsrRow {
  std::string language;
  std::string model_id;
  std::size_t total = 0;
  std::size_t valid = 0;           // language check and refusal check
  std::size_t language_valid = 0;  // language check only

  double vsr_percent() const;
  double language_only_percent() const;
};

// Grouped by (language, model_id), sorted by that key. Order of the input
// does not matter.
std::vector<VsrRow> compute_vsr(std::span<const ValidityRecord> validities);

// 100 * num / den rounded half-up to one decimal, computed in integers:
// (581, 1000) -> "58.1".
std::string format_percent_tenths(std::size_t num, std::size_t den);

// Columns: language, model_id, total, valid, vsr_percent, language_valid,
// language_only_vsr_percent.
std::string vsr_csv(std::span<const VsrRow> rows);

std::unique_ptr<LanguageIdBackend> make_language_id(std::string_view spec);

}  // namespace storybias
