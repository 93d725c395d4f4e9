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

#include "storybias/manifest.hpp"

#include <fstream>
#include <unordered_map>

#include "storybias/error.hpp"

namespace storybias {
namespace fs = std::filesystem;

namespace {
constexpr std::string_view kFormat = "storybias-manifest/1";

std::string key_string(const StoryKey& k) {
  return std::get<0>(k) + '\x1f' + std::get<1>(k) + '\x1f' + std::to_string(std::get<2>(k));
}
}  // namespace

std::string_view to_string(RowStatus s) {
  switch (s) {
    case RowStatus::kPending: return "pending";
    case RowStatus::kDone: return "done";
    case RowStatus::kFailed: return "failed";
  }
  return "pending";
}

RowStatus parse_row_status(std::string_view s) {
  if (s == "pending") return RowStatus::kPending;
  if (s == "done") return RowStatus::kDone;
  if (s == "failed") return RowStatus::kFailed;
  throw ValidationError("unknown manifest status '" + std::string(s) + "'");
}

std::size_t Manifest::count(RowStatus s) const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.status == s;
  return n;
}

Manifest emit_manifest(std::vector<ManifestPrompt> prompts, const GenerationParams& params,
                       const std::vector<std::string>& model_ids) {
  params.validate();
  if (prompts.empty()) throw ConfigError("manifest needs at least one prompt config");
  if (model_ids.empty()) throw ConfigError("manifest needs at least one model id");
  Manifest m;
  m.params = params;
  m.model_ids = model_ids;
  m.prompts = std::move(prompts);
  m.rows.reserve(m.prompts.size() * model_ids.size() *
                 static_cast<std::size_t>(params.samples_per_prompt));
  for (std::size_t p = 0; p < m.prompts.size(); ++p) {
    for (const auto& model : model_ids) {
      for (int s = 0; s < params.samples_per_prompt; ++s) {
        m.rows.push_back({p, model, s, RowStatus::kPending, {}});
      }
    }
  }
  return m;
}

std::vector<ManifestPrompt> render_prompts(
    std::span<const PromptConfig> configs,
    const std::map<std::string, LocalizationTemplate>& templates) {
  std::vector<ManifestPrompt> out;
  out.reserve(configs.size());
  for (const auto& c : configs) {
    auto t = templates.find(c.language);
    if (t == templates.end()) {
      throw ConfigError("no localization template for language '" + c.language + "'");
    }
    out.push_back({c, c.config_hash(), render_prompt(c, t->second)});
  }
  return out;
}

fs::path manifest_log_path(const fs::path& manifest) {
  fs::path p = manifest;
  p += ".log";
  return p;
}

namespace {

std::vector<std::string> manifest_lines(const Manifest& m) {
  std::vector<std::string> lines;
  lines.reserve(1 + m.prompts.size() + m.rows.size());
  ordered_json header;
  header["kind"] = "header";
  header["format"] = kFormat;
  header["params"] = m.params.to_json();
  header["models"] = m.model_ids;
  header["prompt_count"] = m.prompts.size();
  header["row_count"] = m.rows.size();
  lines.push_back(header.dump());
  for (const auto& p : m.prompts) {
    ordered_json j;
    j["kind"] = "prompt";
    j["config_hash"] = p.config_hash;
    j["language"] = p.config.language;
    j["nationality"] = p.config.nationality;
    j["religion"] = p.config.religion;
    j["social_class"] = p.config.social_class;
    j["parent_role"] = p.config.parent_role;
    j["child_gender"] = p.config.child_gender;
    j["prompt_text"] = p.prompt_text;
    lines.push_back(j.dump());
  }
  for (const auto& r : m.rows) {
    ordered_json j;
    j["kind"] = "row";
    j["config_hash"] = m.prompts[r.prompt_index].config_hash;
    j["model_id"] = r.model_id;
    j["sample_index"] = r.sample_index;
    j["status"] = to_string(r.status);
    if (!r.reason.empty()) j["reason"] = r.reason;
    lines.push_back(j.dump());
  }
  return lines;
}

}  // namespace

void write_manifest(const Manifest& m, const fs::path& path) {
  write_jsonl_atomic(path, manifest_lines(m));
}

void compact_manifest(const Manifest& m, const fs::path& path) {
  write_manifest(m, path);
  std::error_code ec;
  fs::remove(manifest_log_path(path), ec);
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  std::unordered_map<std::string, std::size_t> prompt_by_hash;
  std::unordered_map<std::string, std::size_t> row_by_key;
  std::string line;
  std::uint64_t lineno = 0;
  std::uint64_t offset = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const auto kind = j.at("kind").get<std::string>();
      if (kind == "header") {
        if (j.at("format").get<std::string>() != kFormat) {
          throw ParseError("unsupported manifest format", lineno, start);
        }
        m.params = GenerationParams::from_json(j.at("params"));
        m.model_ids = j.at("models").get<std::vector<std::string>>();
        have_header = true;
      } else if (kind == "prompt") {
        ManifestPrompt p;
        p.config = {j.at("language"), j.at("nationality"), j.at("religion"),
                    j.at("social_class"), j.at("parent_role"), j.at("child_gender")};
        p.config_hash = j.at("config_hash").get<std::string>();
        p.prompt_text = j.at("prompt_text").get<std::string>();
        if (p.config_hash != p.config.config_hash()) {
          throw ParseError("prompt config_hash mismatch", lineno, start);
        }
        prompt_by_hash.emplace(p.config_hash, m.prompts.size());
        m.prompts.push_back(std::move(p));
      } else if (kind == "row") {
        const auto hash = j.at("config_hash").get<std::string>();
        auto it = prompt_by_hash.find(hash);
        if (it == prompt_by_hash.end()) {
          throw ParseError("row references unknown config_hash", lineno, start);
        }
        ManifestRow r;
        r.prompt_index = it->second;
        r.model_id = j.at("model_id").get<std::string>();
        r.sample_index = j.at("sample_index").get<int>();
        r.status = parse_row_status(j.at("status").get<std::string>());
        r.reason = j.value("reason", std::string{});
        auto key = key_string({hash, r.model_id, r.sample_index});
        if (!row_by_key.emplace(key, m.rows.size()).second) {
          throw ParseError("duplicate manifest row", lineno, start);
        }
        m.rows.push_back(std::move(r));
      } else {
        throw ParseError("unknown manifest line kind '" + kind + "'", lineno, start);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed manifest line: ") + e.what(), lineno, start);
    }
  }
  if (!have_header) throw ParseError("manifest has no header", lineno, 0);

  // Replay the status log; a torn last entry from a killed run is ignored.
  std::ifstream log(manifest_log_path(path), std::ios::binary);
  while (log && std::getline(log, line)) {
    if (log.eof()) break;  // unterminated tail
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      continue;
    }
    auto it = row_by_key.find(key_string({j.at("config_hash").get<std::string>(),
                                          j.at("model_id").get<std::string>(),
                                          j.at("sample_index").get<int>()}));
    if (it == row_by_key.end()) continue;
    auto& row = m.rows[it->second];
    row.status = parse_row_status(j.at("status").get<std::string>());
    row.reason = j.value("reason", std::string{});
  }
  return m;
}

ManifestLog::ManifestLog(const fs::path& manifest) : out_(manifest_log_path(manifest)) {}

void ManifestLog::record(const StoryKey& key, RowStatus status, std::string_view reason) {
  ordered_json j;
  j["config_hash"] = std::get<0>(key);
  j["model_id"] = std::get<1>(key);
  j["sample_index"] = std::get<2>(key);
  j["status"] = to_string(status);
  if (!reason.empty()) j["reason"] = reason;
  std::lock_guard lock(mu_);
  out_.append_line(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

}  // namespace storybias
