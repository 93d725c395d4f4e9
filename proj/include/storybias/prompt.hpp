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
#include <string>
#include <string_view>
#include <vector>

#include "storybias/corpus.hpp"

namespace storybias {

// Per-language prompt template. Segments use named slots: {parent_role},
// {nationality}, {ethnicity}, {social_class}, {religion}, {child_gender}.
//
// slot_lexicon maps an axis key to (id -> surface form). Each surface form is
// a whole phrase, so agreement (articles, case, particles) lives in the data
// file rather than in code. The {ethnicity} slot reads the "ethnicity" table
// when it has an entry for the nationality id and falls back to the
// nationality surface form otherwise.
struct LocalizationTemplate {
  std::string language;
  std::string identity_template;
  std::string task_template;
  std::string instruction_template;
  std::string segment_separator = " ";
  std::map<std::string, std::map<std::string, std::string>> slot_lexicon;

  static LocalizationTemplate from_json(const nlohmann::json& j);
  static LocalizationTemplate load(const std::filesystem::path& path);
  ordered_json to_json() const;

  // Throws ConfigError naming (axis, id, language) for the first id of
  // `space` a referenced slot cannot render.
  void check_coverage(const ConfigSpace& space) const;
};

// One template file per language: <dir>/<language>.json.
std::map<std::string, LocalizationTemplate> load_templates(
    const std::filesystem::path& dir);

// Demographic configs for one language, nested in axis order nationality,
// religion, social_class, parent_role, child_gender with values in the order
// the space lists them.
std::vector<PromptConfig> enumerate_configs(const ConfigSpace& space,
                                            std::string_view language);

// All languages of the space, language-major.
std::vector<PromptConfig> enumerate_configs(const ConfigSpace& space);

std::string render_prompt(const PromptConfig& config,
                          const LocalizationTemplate& tmpl);

}  // namespace storybias
