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
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "storybias/corpus.hpp"

namespace storybias {

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using QueryParams = std::map<std::string, std::string>;

// Immutable in-memory view of a finished run. A data directory holds
// corpus.jsonl and bundle.json, and optionally extractions.jsonl,
// validity.jsonl, space.json (facet vocabulary; the default space otherwise)
// and static/ (UI assets served at /).
class ExplorerIndex {
 public:
  ExplorerIndex(std::vector<StoryRecord> stories, std::vector<ExtractionRecord> extractions,
                std::vector<ValidityRecord> validity, std::string bundle_bytes, ConfigSpace space);

  static ExplorerIndex load(const std::filesystem::path& data_dir);

  // Handlers are pure: same query, same response.
  ApiResponse stories(const QueryParams& q) const;
  ApiResponse compare(const QueryParams& q) const;
  ApiResponse fingerprint(const QueryParams& q) const;
  ApiResponse similarity(const QueryParams& q) const;
  ApiResponse vsr(const QueryParams& q) const;
  ApiResponse bundle() const;

  // Routes a GET path to its handler; unknown paths give 404.
  ApiResponse dispatch(const std::string& path, const QueryParams& q) const;

  std::size_t story_count() const { return stories_.size(); }

 private:
  struct Entry {
    StoryRecord story;
    std::string config_hash;
  };

  ordered_json item_json(const Entry& e) const;

  std::vector<Entry> stories_;  // sorted by (config_hash, model_id, sample_index)
  std::unordered_map<std::string, ExtractionRecord> extractions_;
  std::unordered_map<std::string, ValidityRecord> validity_;
  std::set<std::string> models_;
  std::string bundle_bytes_;
  nlohmann::ordered_json bundle_;
  ConfigSpace space_;
};

// HTTP front end over an index. CORS headers go on every response.
class ExplorerServer {
 public:
  ExplorerServer(std::shared_ptr<const ExplorerIndex> index,
                 std::optional<std::filesystem::path> static_dir = std::nullopt,
                 std::string cors_origin = "*");
  ~ExplorerServer();

  ExplorerServer(const ExplorerServer&) = delete;
  ExplorerServer& operator=(const ExplorerServer&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace storybias
