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
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "storybias/corpus.hpp"
#include "storybias/prompt.hpp"

namespace storybias {

enum class RowStatus { kPending, kDone, kFailed };

std::string_view to_string(RowStatus s);
RowStatus parse_row_status(std::string_view s);

struct ManifestPrompt {
  PromptConfig config;
  std::string config_hash;
  std::string prompt_text;
};

struct ManifestRow {
  std::size_t prompt_index = 0;
  std::string model_id;
  int sample_index = 0;
  RowStatus status = RowStatus::kPending;
  std::string reason;
};

// Generation manifest. On disk it is JSONL: one header line, one "prompt"
// line per rendered config, one "row" line per (config_hash, model_id,
// sample_index). Status changes made during a campaign go to an append-only
// sibling log (<manifest>.log) and are folded back into the manifest by
// compact().
struct Manifest {
  GenerationParams params;
  std::vector<std::string> model_ids;
  std::vector<ManifestPrompt> prompts;
  std::vector<ManifestRow> rows;

  const ManifestPrompt& prompt_of(const ManifestRow& row) const {
    return prompts.at(row.prompt_index);
  }
  StoryKey key_of(const ManifestRow& row) const {
    return {prompt_of(row).config_hash, row.model_id, row.sample_index};
  }
  std::size_t count(RowStatus s) const;
};

// Rows ordered prompt-major, then model, then sample index; every row
// pending. Total = |prompts| x |models| x samples_per_prompt.
Manifest emit_manifest(std::vector<ManifestPrompt> prompts, const GenerationParams& params,
                       const std::vector<std::string>& model_ids);

// Renders every config with the template for its language.
std::vector<ManifestPrompt> render_prompts(
    std::span<const PromptConfig> configs,
    const std::map<std::string, LocalizationTemplate>& templates);

void write_manifest(const Manifest& m, const std::filesystem::path& path);

// Reads the manifest and replays <manifest>.log on top of it.
Manifest read_manifest(const std::filesystem::path& path);

std::filesystem::path manifest_log_path(const std::filesystem::path& manifest);

// Rewrites the manifest with current statuses (temp file + rename) and drops
// the log.
void compact_manifest(const Manifest& m, const std::filesystem::path& path);

// Thread-safe writer of status transitions to the manifest log.
class ManifestLog {
 public:
  explicit ManifestLog(const std::filesystem::path& manifest);
  void record(const StoryKey& key, RowStatus status, std::string_view reason);

 private:
  std::mutex mu_;
  JsonlAppender out_;
};

}  // namespace storybias
