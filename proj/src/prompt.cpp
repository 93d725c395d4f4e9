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

#include "storybias/prompt.hpp"

#include <algorithm>

#include "storybias/error.hpp"
#include "storybias/text.hpp"

namespace storybias {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kEthnicity = "ethnicity";

bool is_known_slot(std::string_view name) {
  return name == kEthnicity || parse_axis(name).has_value();
}

// Slot names referenced by a segment, in order of appearance.
std::vector<std::string> slots_in(std::string_view segment, std::string_view language) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = segment.find('{', pos)) != std::string_view::npos) {
    auto close = segment.find('}', pos);
    if (close == std::string_view::npos) {
      throw ConfigError("unterminated slot in " + std::string(language) + " template");
    }
    std::string name(segment.substr(pos + 1, close - pos - 1));
    if (!is_known_slot(name) || name == "gender") {
      throw ConfigError("unknown slot {" + name + "} in " + std::string(language) +
                        " template");
    }
    out.push_back(std::move(name));
    pos = close + 1;
  }
  if (segment.find('}', pos) != std::string_view::npos) {
    throw ConfigError("stray '}' in " + std::string(language) + " template");
  }
  return out;
}

[[noreturn]] void missing_entry(std::string_view axis, std::string_view id,
                                std::string_view language) {
  throw ConfigError("no surface form for " + std::string(axis) + " '" + std::string(id) +
                    "' in language '" + std::string(language) + "'");
}

const std::string& surface(const LocalizationTemplate& t, std::string_view slot,
                           const PromptConfig& c) {
  if (slot == kEthnicity) {
    auto eth = t.slot_lexicon.find(std::string(kEthnicity));
    if (eth != t.slot_lexicon.end()) {
      auto it = eth->second.find(c.nationality);
      if (it != eth->second.end()) return it->second;
    }
    slot = "nationality";
  }
  const Axis axis = *parse_axis(slot);
  const std::string& id = c.value(axis);
  auto table = t.slot_lexicon.find(std::string(axis_key(axis)));
  if (table == t.slot_lexicon.end()) missing_entry(axis_key(axis), id, t.language);
  auto it = table->second.find(id);
  if (it == table->second.end()) missing_entry(axis_key(axis), id, t.language);
  return it->second;
}

std::string fill(std::string_view segment, const LocalizationTemplate& t,
                 const PromptConfig& c) {
  std::string out;
  out.reserve(segment.size() + 64);
  std::size_t pos = 0;
  while (true) {
    auto open = segment.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(segment.substr(pos));
      return out;
    }
    auto close = segment.find('}', open);
    out.append(segment.substr(pos, open - pos));
    out += surface(t, segment.substr(open + 1, close - open - 1), c);
    pos = close + 1;
  }
}

}  // namespace

LocalizationTemplate LocalizationTemplate::from_json(const nlohmann::json& j) {
  LocalizationTemplate t;
  t.language = j.at("language").get<std::string>();
  t.identity_template = j.at("identity_template").get<std::string>();
  t.task_template = j.at("task_template").get<std::string>();
  t.instruction_template = j.at("instruction_template").get<std::string>();
  t.segment_separator = j.value("segment_separator", std::string(" "));
  for (const auto& [axis, table] : j.at("slot_lexicon").items()) {
    if (!is_known_slot(axis)) {
      throw ConfigError("unknown lexicon axis '" + axis + "' in " + t.language + " template");
    }
    for (const auto& [id, form] : table.items()) {
      auto s = form.get<std::string>();
      if (s.empty() || s.find_first_of("{}") != std::string::npos) {
        throw ConfigError("invalid surface form for " + axis + " '" + id + "' in " +
                          t.language + " template");
      }
      t.slot_lexicon[axis][id] = text::to_nfc(s);
    }
  }
  for (const auto* seg : {&t.identity_template, &t.task_template, &t.instruction_template}) {
    slots_in(*seg, t.language);
  }
  return t;
}

LocalizationTemplate LocalizationTemplate::load(const fs::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse template " + path.string() + ": " + e.what());
  }
}

ordered_json LocalizationTemplate::to_json() const {
  ordered_json j;
  j["language"] = language;
  j["identity_template"] = identity_template;
  j["task_template"] = task_template;
  j["instruction_template"] = instruction_template;
  j["segment_separator"] = segment_separator;
  ordered_json lex = ordered_json::object();
  for (const auto& [axis, table] : slot_lexicon) {
    for (const auto& [id, form] : table) lex[axis][id] = form;
  }
  j["slot_lexicon"] = lex;
  return j;
}

void LocalizationTemplate::check_coverage(const ConfigSpace& space) const {
  std::vector<std::string> slots;
  for (const auto* seg : {&identity_template, &task_template, &instruction_template}) {
    for (auto& s : slots_in(*seg, language)) slots.push_back(std::move(s));
  }
  PromptConfig probe{language,
                     space.nationalities.front(),
                     space.religions.front(),
                     space.social_classes.front(),
                     space.parent_roles.front(),
                     space.child_genders.front()};
  for (const auto& slot : slots) {
    const Axis axis = slot == kEthnicity ? Axis::kNationality : *parse_axis(slot);
    for (const auto& id : space.values(axis)) {
      PromptConfig c = probe;
      switch (axis) {
        case Axis::kNationality: c.nationality = id; break;
        case Axis::kReligion: c.religion = id; break;
        case Axis::kSocialClass: c.social_class = id; break;
        case Axis::kParentRole: c.parent_role = id; break;
        case Axis::kChildGender: c.child_gender = id; break;
      }
      surface(*this, slot, c);
    }
  }
}

std::map<std::string, LocalizationTemplate> load_templates(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("template directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, LocalizationTemplate> out;
  for (const auto& f : files) {
    auto t = LocalizationTemplate::load(f);
    if (f.stem().string() != t.language) {
      throw ConfigError("template " + f.string() + " declares language '" + t.language + "'");
    }
    out.emplace(t.language, std::move(t));
  }
  return out;
}

std::vector<PromptConfig> enumerate_configs(const ConfigSpace& space,
                                            std::string_view language) {
  space.validate();
  std::vector<PromptConfig> out;
  out.reserve(space.nationalities.size() * space.religions.size() *
              space.social_classes.size() * space.parent_roles.size() *
              space.child_genders.size());
  for (const auto& nat : space.nationalities)
    for (const auto& rel : space.religions)
      for (const auto& cls : space.social_classes)
        for (const auto& par : space.parent_roles)
          for (const auto& gen : space.child_genders)
            out.push_back({std::string(language), nat, rel, cls, par, gen});
  return out;
}

std::vector<PromptConfig> enumerate_configs(const ConfigSpace& space) {
  std::vector<PromptConfig> out;
  for (const auto& lang : space.languages) {
    auto part = enumerate_configs(space, lang);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

std::string render_prompt(const PromptConfig& config, const LocalizationTemplate& tmpl) {
  if (config.language != tmpl.language) {
    throw ConfigError("template language '" + tmpl.language + "' does not match config '" +
                      config.language + "'");
  }
  std::string out = fill(tmpl.identity_template, tmpl, config);
  out += tmpl.segment_separator;
  out += fill(tmpl.task_template, tmpl, config);
  out += tmpl.segment_separator;
  out += fill(tmpl.instruction_template, tmpl, config);
  return text::to_nfc(out);
}

}  // namespace storybias
