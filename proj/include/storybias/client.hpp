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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "storybias/corpus.hpp"

namespace storybias {

// One chat-completions endpoint serving one corpus model id.
struct EndpointConfig {
  std::string model_id;    // label written to the corpus
  std::string base_url;    // e.g. http://127.0.0.1:8000/v1
  std::string model_name;  // "model" field sent on the wire; defaults to model_id
  std::string api_key_env_var_name;
  double request_timeout_s = 120.0;
  int max_in_flight = 4;
  int max_retries = 5;
  // Backoff before retry n (0-based) is base * 2^n, capped, with jitter.
  int backoff_base_ms = 1000;
  int backoff_cap_ms = 60000;
  // vLLM-style servers accept top_k and repetition_penalty; plain OpenAI
  // servers reject them.
  bool extended_sampling = true;

  void validate() const;
  static EndpointConfig from_json(const nlohmann::json& j);
};

// Accepts a single endpoint object or an array of them.
std::vector<EndpointConfig> load_endpoints(const std::filesystem::path& path);

// Chat-completions payload: the prompt as the only (user) message plus the
// sampling parameters. `seed` overrides params.random_seed when given.
ordered_json build_request(std::string_view prompt_text, const GenerationParams& params,
                           std::string_view model_name, bool extended_sampling = true,
                           std::optional<std::int64_t> seed = std::nullopt);

struct ChatResult {
  bool ok = false;
  std::string content;
  FinishReason finish_reason = FinishReason::kError;
  int http_status = 0;
  int attempts = 0;
  std::string error;
};

// Parses an OpenAI-style response body. Malformed bodies produce ok=false
// with an excerpt of the payload in `error`.
ChatResult parse_chat_response(std::string_view body);

std::chrono::milliseconds backoff_delay(int attempt, int base_ms, int cap_ms,
                                        std::mt19937_64& rng);

// Blocking client with retry. Thread-safe: each call opens its own
// connection.
class ChatClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit ChatClient(EndpointConfig config, Sleeper sleeper = {});

  // Retries transport failures, HTTP 429 and 5xx up to max_retries times.
  // Other 4xx and malformed bodies fail at once.
  ChatResult complete(const ordered_json& payload);

  const EndpointConfig& config() const { return config_; }
  std::uint64_t requests_issued() const { return requests_.load(); }

 private:
  EndpointConfig config_;
  Sleeper sleeper_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  std::atomic<std::uint64_t> requests_{0};
  std::atomic<std::uint64_t> jitter_seed_{0x5eed};
};

// Runs task(i) for i in [0, count) on at most `workers` threads.
void run_bounded(std::size_t count, int workers,
                 const std::function<void(std::size_t)>& task);

}  // namespace storybias
