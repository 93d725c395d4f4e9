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

#include "storybias/orchestrator.hpp"

#include <spdlog/spdlog.h>

#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include "storybias/error.hpp"
#include "storybias/text.hpp"

namespace storybias {
namespace fs = std::filesystem;

CampaignResult run_campaign(const fs::path& manifest_path,
                            const std::vector<EndpointConfig>& endpoints,
                            const fs::path& corpus_path, const CampaignOptions& options) {
  Manifest manifest = read_manifest(manifest_path);
  const auto clock = options.clock ? options.clock : utc_timestamp;

  // Opening the appender first repairs a torn tail before we scan.
  JsonlAppender corpus(corpus_path);
  if (corpus.repaired_bytes() > 0) {
    spdlog::warn("dropped {} bytes of a torn record at the end of {}", corpus.repaired_bytes(),
                 corpus_path.string());
  }
  std::set<StoryKey> present;
  {
    CorpusReader reader(corpus_path);
    while (auto r = reader.next()) present.insert(key_of(*r));
  }

  ManifestLog log(manifest_path);
  CampaignResult result;

  std::map<std::string, std::unique_ptr<ChatClient>> clients;
  for (const auto& e : endpoints) {
    clients.emplace(e.model_id, std::make_unique<ChatClient>(e, options.sleeper));
  }

  std::map<std::string, std::vector<std::size_t>> work;  // model -> row indices
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    auto& row = manifest.rows[i];
    const auto key = manifest.key_of(row);
    if (present.count(key)) {
      if (row.status != RowStatus::kDone) {
        row.status = RowStatus::kDone;
        row.reason.clear();
        log.record(key, RowStatus::kDone, {});
      }
      ++result.already_done;
      continue;
    }
    if (row.status == RowStatus::kDone) {
      // Marked done but missing from this corpus file: regenerate.
      row.status = RowStatus::kPending;
    }
    if (!clients.count(row.model_id)) {
      ++result.without_endpoint;
      continue;
    }
    work[row.model_id].push_back(i);
  }
  if (result.without_endpoint > 0) {
    spdlog::warn("{} rows have no endpoint configured and stay pending",
                 result.without_endpoint);
  }

  std::mutex write_mu;
  auto run_model = [&](const std::string& model, const std::vector<std::size_t>& indices) {
    ChatClient& client = *clients.at(model);
    spdlog::info("{}: {} rows, up to {} in flight", model, indices.size(),
                 client.config().max_in_flight);
    run_bounded(indices.size(), client.config().max_in_flight, [&](std::size_t k) {
      ManifestRow& row = manifest.rows[indices[k]];
      const ManifestPrompt& prompt = manifest.prompt_of(row);
      const auto key = manifest.key_of(row);
      auto payload = build_request(prompt.prompt_text, manifest.params,
                                   client.config().model_name,
                                   client.config().extended_sampling,
                                   manifest.params.random_seed + row.sample_index);
      ChatResult res = client.complete(payload);

      std::lock_guard lock(write_mu);
      ++result.attempted;
      if (!res.ok) {
        row.status = RowStatus::kFailed;
        row.reason = res.error;
        ++result.failed;
        log.record(key, RowStatus::kFailed, res.error);
        spdlog::warn("{} sample {} of {} failed: {}", model, row.sample_index,
                     prompt.config_hash.substr(0, 12), res.error);
        return;
      }
      StoryRecord rec;
      rec.prompt_config = prompt.config;
      rec.model_id = model;
      rec.sample_index = row.sample_index;
      rec.story_id = make_story_id(prompt.config_hash, model, row.sample_index);
      rec.prompt_text = prompt.prompt_text;
      rec.story_text = text::to_nfc(res.content);
      rec.created_at = clock();
      rec.finish_reason = res.finish_reason;
      corpus.append_line(serialize_line(rec));
      row.status = RowStatus::kDone;
      row.reason.clear();
      ++result.done;
      log.record(key, RowStatus::kDone, {});
    });
    std::lock_guard lock(write_mu);
    result.requests_issued += client.requests_issued();
  };

  // Models run side by side, each through its own bounded pool.
  std::vector<std::thread> pools;
  std::vector<std::exception_ptr> errors(work.size());
  std::size_t slot = 0;
  for (const auto& [model, indices] : work) {
    pools.emplace_back([&, slot] {
      try {
        run_model(model, indices);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    });
    ++slot;
  }
  for (auto& t : pools) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  compact_manifest(manifest, manifest_path);
  spdlog::info("campaign: {} done, {} failed, {} already present, {} requests", result.done,
               result.failed, result.already_done, result.requests_issued);
  return result;
}

}  // namespace storybias
