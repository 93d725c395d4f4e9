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

#include <doctest.h>

#include <fstream>

#include "storybias/manifest.hpp"
#include "storybias/prompt.hpp"
#include "test_util.hpp"

using namespace storybias;
using storybias::testing::TempDir;

namespace {

std::vector<ManifestPrompt> some_prompts(std::size_t n) {
  std::vector<ManifestPrompt> out;
  const auto configs = enumerate_configs(ConfigSpace::default_space(), "en");
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({configs[i], configs[i].config_hash(), "prompt " + std::to_string(i)});
  }
  return out;
}

}  // namespace

TEST_CASE("row count is prompts x models x samples") {
  const auto configs = enumerate_configs(ConfigSpace::default_space());
  std::vector<ManifestPrompt> prompts;
  prompts.reserve(configs.size());
  for (const auto& c : configs) prompts.push_back({c, c.config_hash(), {}});
  GenerationParams p;
  const auto m = emit_manifest(std::move(prompts), p, {"qwen3-8b", "llama3-8b", "llama3-1b"});
  CHECK(m.rows.size() == 349920);
  CHECK(m.count(RowStatus::kPending) == 349920);
  CHECK(m.rows[0].model_id == "qwen3-8b");
  CHECK(m.rows[4].sample_index == 4);
  CHECK(m.rows[5].model_id == "llama3-8b");
}

TEST_CASE("manifest round trip and log replay") {
  TempDir tmp;
  GenerationParams p;
  p.samples_per_prompt = 2;
  auto m = emit_manifest(some_prompts(3), p, {"a", "b"});
  const auto path = tmp / "m.jsonl";
  write_manifest(m, path);
  auto back = read_manifest(path);
  CHECK(back.rows.size() == 12);
  CHECK(back.params == p);
  CHECK(back.prompts[2].prompt_text == "prompt 2");
  CHECK(back.prompts[2].config == m.prompts[2].config);

  {
    ManifestLog log(path);
    log.record(m.key_of(m.rows[0]), RowStatus::kDone, "");
    log.record(m.key_of(m.rows[1]), RowStatus::kFailed, "HTTP 500");
  }
  // Torn final log line from a killed writer is ignored.
  {
    std::ofstream out(manifest_log_path(path), std::ios::app);
    out << "{\"config_hash\":\"abc";
  }
  back = read_manifest(path);
  CHECK(back.count(RowStatus::kDone) == 1);
  CHECK(back.count(RowStatus::kFailed) == 1);
  CHECK(back.rows[1].reason == "HTTP 500");

  compact_manifest(back, path);
  CHECK_FALSE(std::filesystem::exists(manifest_log_path(path)));
  const auto compacted = read_manifest(path);
  CHECK(compacted.count(RowStatus::kDone) == 1);
  CHECK(compacted.count(RowStatus::kPending) == 10);
}

TEST_CASE("render_prompts requires a template per language") {
  const auto configs = enumerate_configs(ConfigSpace::default_space(), "zh");
  std::map<std::string, LocalizationTemplate> none;
  CHECK_THROWS(render_prompts(std::span(configs).first(1), none));
  const auto templates = load_templates(STORYBIAS_DATA_DIR "/templates");
  const auto rendered = render_prompts(std::span(configs).first(2), templates);
  REQUIRE(rendered.size() == 2);
  CHECK(rendered[0].config_hash == configs[0].config_hash());
  CHECK(rendered[0].prompt_text.find("\xe7\xbe\x8e\xe5\x9b\xbd") != std::string::npos);  // 美国
}
