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

#include "storybias/client.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "storybias/error.hpp"
#include "storybias/text.hpp"

namespace storybias {

void EndpointConfig::validate() const {
  if (model_id.empty()) throw ConfigError("endpoint model_id is empty");
  if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (!(request_timeout_s > 0)) throw ConfigError("request_timeout must be > 0");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (backoff_base_ms < 0 || backoff_cap_ms < 0) throw ConfigError("backoff must be >= 0");
}

EndpointConfig EndpointConfig::from_json(const nlohmann::json& j) {
  EndpointConfig c;
  c.model_id = j.at("model_id").get<std::string>();
  c.base_url = j.at("base_url").get<std::string>();
  c.model_name = j.value("model_name", c.model_id);
  c.api_key_env_var_name = j.value("api_key_env_var_name", std::string{});
  c.request_timeout_s = j.value("request_timeout", c.request_timeout_s);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
  c.backoff_cap_ms = j.value("backoff_cap_ms", c.backoff_cap_ms);
  c.extended_sampling = j.value("extended_sampling", c.extended_sampling);
  c.validate();
  return c;
}

std::vector<EndpointConfig> load_endpoints(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse endpoint file " + path.string() + ": " + e.what());
  }
  std::vector<EndpointConfig> out;
  if (j.is_array()) {
    for (const auto& e : j) out.push_back(EndpointConfig::from_json(e));
  } else {
    out.push_back(EndpointConfig::from_json(j));
  }
  return out;
}

ordered_json build_request(std::string_view prompt_text, const GenerationParams& params,
                           std::string_view model_name, bool extended_sampling,
                           std::optional<std::int64_t> seed) {
  params.validate();
  if (prompt_text.empty()) throw ValidationError("prompt text is empty");
  ordered_json j;
  j["model"] = model_name;
  j["messages"] = ordered_json::array({{{"role", "user"}, {"content", prompt_text}}});
  j["temperature"] = params.temperature;
  j["top_p"] = params.top_p;
  if (extended_sampling) {
    j["top_k"] = params.top_k;
    j["repetition_penalty"] = params.repetition_penalty;
  }
  j["max_tokens"] = params.max_new_tokens;
  j["seed"] = seed.value_or(params.random_seed);
  return j;
}

namespace {

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  std::string s(text::codepoint_prefix(body, kMax));
  if (s.size() < body.size()) s += "...";
  if (!text::is_valid_utf8(s)) return "<non-UTF-8 payload>";
  return s;
}

}  // namespace

ChatResult parse_chat_response(std::string_view body) {
  ChatResult r;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
    const auto& choice = j.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    if (!content.is_string()) throw std::runtime_error("content is not a string");
    r.content = content.get<std::string>();
    std::string finish = choice.contains("finish_reason") && choice["finish_reason"].is_string()
                             ? choice["finish_reason"].get<std::string>()
                             : "stop";
    if (finish == "stop" || finish == "eos") {
      r.finish_reason = FinishReason::kComplete;
    } else if (finish == "length") {
      r.finish_reason = FinishReason::kTruncated;
    } else {
      r.finish_reason = FinishReason::kError;
    }
  } catch (const std::exception&) {
    r.ok = false;
    r.error = "malformed endpoint response: " + excerpt(body);
    return r;
  }
  if (!text::is_valid_utf8(r.content)) {
    r.error = "endpoint returned non-UTF-8 content";
    return r;
  }
  r.ok = true;
  return r;
}

std::chrono::milliseconds backoff_delay(int attempt, int base_ms, int cap_ms,
                                        std::mt19937_64& rng) {
  const double raw = static_cast<double>(base_ms) * std::pow(2.0, std::min(attempt, 30));
  const double capped = std::min(raw, static_cast<double>(cap_ms));
  // Equal jitter: half fixed, half uniform.
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  return std::chrono::milliseconds(static_cast<std::int64_t>(capped * jitter(rng)));
}

ChatClient::ChatClient(EndpointConfig config, Sleeper sleeper)
    : config_(std::move(config)), sleeper_(std::move(sleeper)) {
  config_.validate();
  if (config_.model_name.empty()) config_.model_name = config_.model_id;
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };

  const std::string& url = config_.base_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url lacks a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/chat/completions";

  if (!config_.api_key_env_var_name.empty()) {
    if (const char* key = std::getenv(config_.api_key_env_var_name.c_str())) api_key_ = key;
  }
}

ChatResult ChatClient::complete(const ordered_json& payload) {
  const std::string body = payload.dump();
  std::mt19937_64 rng(jitter_seed_.fetch_add(1));
  ChatResult last;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      sleeper_(backoff_delay(attempt - 1, config_.backoff_base_ms, config_.backoff_cap_ms, rng));
    }
    httplib::Client cli(scheme_host_port_);
    const auto timeout = std::chrono::duration<double>(config_.request_timeout_s);
    cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    cli.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    ++requests_;
    auto res = cli.Post(path_, headers, body, "application/json");
    last = ChatResult{};
    last.attempts = attempt + 1;
    if (!res) {
      last.error = "transport error: " + httplib::to_string(res.error());
      spdlog::debug("{} attempt {} failed: {}", config_.model_id, attempt + 1, last.error);
      continue;
    }
    last.http_status = res->status;
    if (res->status == 429 || res->status >= 500) {
      last.error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
      spdlog::debug("{} attempt {} failed: {}", config_.model_id, attempt + 1, last.error);
      continue;
    }
    if (res->status != 200) {
      last.error = "HTTP " + std::to_string(res->status) + ": " + excerpt(res->body);
      return last;
    }
    auto parsed = parse_chat_response(res->body);
    parsed.http_status = res->status;
    parsed.attempts = attempt + 1;
    return parsed;
  }
  last.error = "gave up after " + std::to_string(config_.max_retries + 1) +
               " attempts; last error: " + last.error;
  return last;
}

void run_bounded(std::size_t count, int workers,
                 const std::function<void(std::size_t)>& task) {
  if (count == 0) return;
  const auto n = static_cast<std::size_t>(std::max(1, workers));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto body = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(std::min(n, count));
  for (std::size_t t = 0; t < std::min(n, count); ++t) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace storybias
