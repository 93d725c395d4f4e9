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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include "storybias/corpus.hpp"

namespace storybias::testing {

// Removed with its contents on destruction.
class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "storybias-XXXXXX").string();
    char* p = ::mkdtemp(tmpl.data());
    if (!p) throw std::runtime_error("mkdtemp failed");
    path_ = p;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

inline PromptConfig make_config(std::string language = "en", std::string nationality = "american",
                                std::string gender = "girl") {
  return {std::move(language), std::move(nationality), "christian", "wealthy", "mother",
          std::move(gender)};
}

inline StoryRecord make_story(const PromptConfig& c, const std::string& model, int sample,
                              std::string text = "Once upon a time there was a story.") {
  StoryRecord r;
  r.prompt_config = c;
  r.model_id = model;
  r.sample_index = sample;
  r.story_id = make_story_id(c.config_hash(), model, sample);
  r.prompt_text = "prompt for " + c.config_hash().substr(0, 8);
  r.story_text = std::move(text);
  r.created_at = "2026-01-01T00:00:00Z";
  r.finish_reason = FinishReason::kComplete;
  return r;
}

}  // namespace storybias::testing
