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
#include <functional>
#include <string>
#include <vector>

#include "storybias/client.hpp"
#include "storybias/manifest.hpp"

namespace storybias {

struct CampaignOptions {
  // Timestamp source for created_at; defaults to the wall clock.
  std::function<std::string()> clock;
  ChatClient::Sleeper sleeper;
};

struct CampaignResult {
  std::size_t attempted = 0;
  std::size_t done = 0;               // newly completed in this run
  std::size_t failed = 0;             // newly failed in this run
  std::size_t already_done = 0;       // skipped because the corpus had them
  std::size_t without_endpoint = 0;   // left pending: no endpoint for model
  std::uint64_t requests_issued = 0;  // HTTP attempts, retries included

  bool complete() const { return failed == 0 && without_endpoint == 0; }
};

// Drives every non-done manifest row through the endpoint serving its model.
//
// The corpus file is the source of truth for completion: on start it is
// scanned (a torn tail from a killed run is truncated) and rows whose key is
// already present are marked done without a request. Each finished row is
// appended to the corpus first and then logged to the manifest log, so a
// kill between the two steps cannot produce a duplicate on resume. The
// manifest is compacted when the run ends.
//
// Seeds: sample i of a prompt is requested with random_seed + i.
CampaignResult run_campaign(const std::filesystem::path& manifest_path,
                            const std::vector<EndpointConfig>& endpoints,
                            const std::filesystem::path& corpus_path,
                            const CampaignOptions& options = {});

}  // namespace storybias
