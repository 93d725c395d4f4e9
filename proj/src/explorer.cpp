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

#include "storybias/explorer.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>

#include "storybias/error.hpp"

namespace storybias {
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kDefaultPageSize = 20;
constexpr std::size_t kMaxPageSize = 500;

ApiResponse json_response(int status, const ordered_json& body) { return {status, body.dump()}; }

ApiResponse error_response(int status, std::string message, std::string parameter = {}) {
  ordered_json j;
  j["error"] = std::move(message);
  if (!parameter.empty()) j["parameter"] = std::move(parameter);
  return json_response(status, j);
}

std::optional<std::size_t> parse_positive(const std::string& s) {
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || v == 0) return std::nullopt;
  return v;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string::npos ? s.size() : comma;
    if (end > start) out.push_back(s.substr(start, end - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

const std::string* param(const QueryParams& q, const std::string& key) {
  auto it = q.find(key);
  return it == q.end() ? nullptr : &it->second;
}

}  // namespace

ExplorerIndex::ExplorerIndex(std::vector<StoryRecord> stories,
                             std::vector<ExtractionRecord> extractions,
                             std::vector<ValidityRecord> validity, std::string bundle_bytes,
                             ConfigSpace space)
    : bundle_bytes_(std::move(bundle_bytes)), space_(std::move(space)) {
  try {
    bundle_ = nlohmann::ordered_json::parse(bundle_bytes_);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bundle is not valid JSON: ") + e.what());
  }
  stories_.reserve(stories.size());
  for (auto& s : stories) {
    models_.insert(s.model_id);
    auto hash = s.prompt_config.config_hash();
    stories_.push_back({std::move(s), std::move(hash)});
  }
  std::sort(stories_.begin(), stories_.end(), [](const Entry& a, const Entry& b) {
    return std::tie(a.config_hash, a.story.model_id, a.story.sample_index) <
           std::tie(b.config_hash, b.story.model_id, b.story.sample_index);
  });
  for (auto& e : extractions) {
    auto id = e.story_id;
    extractions_.insert_or_assign(std::move(id), std::move(e));
  }
  for (auto& v : validity) {
    auto id = v.story_id;
    validity_.insert_or_assign(std::move(id), std::move(v));
  }
}

ExplorerIndex ExplorerIndex::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("data directory not found: " + dir.string());
  auto stories = read_corpus(dir / "corpus.jsonl");
  std::vector<ExtractionRecord> extractions;
  if (fs::exists(dir / "extractions.jsonl")) extractions = read_extractions(dir / "extractions.jsonl");
  std::vector<ValidityRecord> validity;
  if (fs::exists(dir / "validity.jsonl")) validity = read_validity(dir / "validity.jsonl");
  if (!fs::exists(dir / "bundle.json")) {
    throw ConfigError("missing " + (dir / "bundle.json").string() + "; run `report` first");
  }
  ConfigSpace space = ConfigSpace::default_space();
  if (fs::exists(dir / "space.json")) {
    space = ConfigSpace::from_json(nlohmann::json::parse(read_file(dir / "space.json")));
  }
  ExplorerIndex index(std::move(stories), std::move(extractions), std::move(validity),
                      read_file(dir / "bundle.json"), std::move(space));
  spdlog::info("explorer index: {} stories, {} models", index.stories_.size(),
               index.models_.size());
  return index;
}

ordered_json ExplorerIndex::item_json(const Entry& e) const {
  ordered_json j = to_json(e.story);
  auto x = extractions_.find(e.story.story_id);
  if (x == extractions_.end()) {
    j["tags"] = nullptr;
  } else {
    j["tags"] = {{"adjectives", x->second.adjectives},
                 {"environment", x->second.environment},
                 {"cultural", x->second.cultural},
                 {"extraction_failed", x->second.extraction_failed}};
  }
  auto v = validity_.find(e.story.story_id);
  j["is_valid"] = v == validity_.end() ? ordered_json(nullptr) : ordered_json(v->second.is_valid);
  return j;
}

ApiResponse ExplorerIndex::stories(const QueryParams& q) const {
  std::vector<std::pair<Axis, std::string>> facets;
  const std::string* model = nullptr;
  const std::string* language = nullptr;
  std::size_t page = 1;
  std::size_t page_size = kDefaultPageSize;
  for (const auto& [key, value] : q) {
    if (key == "page" || key == "page_size") {
      auto n = parse_positive(value);
      if (!n || (key == "page_size" && *n > kMaxPageSize)) {
        return error_response(400, "invalid value '" + value + "'", key);
      }
      (key == "page" ? page : page_size) = *n;
    } else if (key == "model_id") {
      if (!models_.count(value)) return error_response(400, "unknown model '" + value + "'", key);
      model = &value;
    } else if (key == "language") {
      if (std::find(space_.languages.begin(), space_.languages.end(), value) ==
          space_.languages.end()) {
        return error_response(400, "unknown language '" + value + "'", key);
      }
      language = &value;
    } else if (auto axis = parse_axis(key); axis && key != "gender") {
      if (!space_.contains(*axis, value)) {
        return error_response(400, "unknown " + key + " '" + value + "'", key);
      }
      facets.emplace_back(*axis, value);
    } else {
      return error_response(400, "unknown parameter", key);
    }
  }

  std::vector<const Entry*> hits;
  for (const auto& e : stories_) {
    if (model && e.story.model_id != *model) continue;
    if (language && e.story.prompt_config.language != *language) continue;
    bool ok = true;
    for (const auto& [axis, value] : facets) {
      if (e.story.prompt_config.value(axis) != value) {
        ok = false;
        break;
      }
    }
    if (ok) hits.push_back(&e);
  }
  ordered_json items = ordered_json::array();
  const std::size_t begin = (page - 1) * page_size;
  for (std::size_t i = begin; i < hits.size() && i < begin + page_size; ++i) {
    items.push_back(item_json(*hits[i]));
  }
  ordered_json j;
  j["total"] = hits.size();
  j["page"] = page;
  j["page_size"] = page_size;
  j["items"] = std::move(items);
  return json_response(200, j);
}

ApiResponse ExplorerIndex::compare(const QueryParams& q) const {
  const auto* hash = param(q, "config_hash");
  if (!hash || hash->empty()) return error_response(400, "config_hash is required", "config_hash");
  std::vector<std::string> models;
  if (const auto* m = param(q, "models")) {
    models = split_csv(*m);
    if (models.empty()) return error_response(400, "models is empty", "models");
  } else {
    models.assign(models_.begin(), models_.end());
  }

  auto lo = std::lower_bound(stories_.begin(), stories_.end(), *hash,
                             [](const Entry& e, const std::string& h) { return e.config_hash < h; });
  auto hi = std::upper_bound(lo, stories_.end(), *hash,
                             [](const std::string& h, const Entry& e) { return h < e.config_hash; });
  if (lo == hi) return error_response(404, "unknown config_hash '" + *hash + "'");

  std::map<int, std::vector<const Entry*>> rows;
  for (auto it = lo; it != hi; ++it) {
    auto pos = std::find(models.begin(), models.end(), it->story.model_id);
    if (pos == models.end()) continue;
    auto& cells = rows[it->story.sample_index];
    cells.resize(models.size(), nullptr);
    cells[static_cast<std::size_t>(pos - models.begin())] = &*it;
  }
  ordered_json out_rows = ordered_json::array();
  for (const auto& [idx, cells] : rows) {
    ordered_json c = ordered_json::array();
    for (const auto* e : cells) c.push_back(e ? item_json(*e) : ordered_json(nullptr));
    out_rows.push_back({{"sample_index", idx}, {"cells", std::move(c)}});
  }
  const auto& cfg = lo->story.prompt_config;
  ordered_json j;
  j["config_hash"] = *hash;
  j["prompt_config"] = {{"language", cfg.language},         {"nationality", cfg.nationality},
                        {"religion", cfg.religion},         {"social_class", cfg.social_class},
                        {"parent_role", cfg.parent_role},   {"child_gender", cfg.child_gender}};
  j["models"] = models;
  j["rows"] = std::move(out_rows);
  return json_response(200, j);
}

ApiResponse ExplorerIndex::fingerprint(const QueryParams& q) const {
  const auto* model = param(q, "model");
  const auto* language = param(q, "language");
  if (!model) return error_response(400, "model is required", "model");
  if (!language) return error_response(400, "language is required", "language");
  for (const auto& o : bundle_.value("radar", nlohmann::ordered_json::array())) {
    if (o.value("model_id", "") == *model && o.value("language", "") == *language) {
      return {200, o.dump()};
    }
  }
  return error_response(404, "no fingerprint for " + *model + "/" + *language);
}

ApiResponse ExplorerIndex::similarity(const QueryParams& q) const {
  const auto* model = param(q, "model");
  if (!model) return error_response(400, "model is required", "model");
  if (bundle_.contains("similarity") && bundle_["similarity"].contains(*model)) {
    return {200, bundle_["similarity"][*model].dump()};
  }
  return error_response(404, "no similarity matrix for " + *model);
}

ApiResponse ExplorerIndex::vsr(const QueryParams& q) const {
  const auto* model = param(q, "model");
  const auto* language = param(q, "language");
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& o : bundle_.value("vsr", nlohmann::ordered_json::array())) {
    if (model && o.value("model_id", "") != *model) continue;
    if (language && o.value("language", "") != *language) continue;
    out.push_back(o);
  }
  if ((model || language) && out.empty()) return error_response(404, "no VSR rows for scope");
  return {200, out.dump()};
}

ApiResponse ExplorerIndex::bundle() const { return {200, bundle_bytes_}; }

ApiResponse ExplorerIndex::dispatch(const std::string& path, const QueryParams& q) const {
  if (path == "/stories") return stories(q);
  if (path == "/compare") return compare(q);
  if (path == "/metrics/fingerprint") return fingerprint(q);
  if (path == "/metrics/similarity") return similarity(q);
  if (path == "/metrics/vsr") return vsr(q);
  if (path == "/metrics/bundle") return bundle();
  return error_response(404, "no such endpoint: " + path);
}

// ---------------------------------------------------------------------------

struct ExplorerServer::Impl {
  std::shared_ptr<const ExplorerIndex> index;
  std::string cors_origin;
  httplib::Server server;
};

ExplorerServer::ExplorerServer(std::shared_ptr<const ExplorerIndex> index,
                               std::optional<fs::path> static_dir, std::string cors_origin)
    : impl_(std::make_unique<Impl>()) {
  impl_->index = std::move(index);
  impl_->cors_origin = std::move(cors_origin);
  auto& srv = impl_->server;
  const std::string origin = impl_->cors_origin;
  srv.set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  srv.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  auto idx = impl_->index;
  auto handler = [idx](const httplib::Request& req, httplib::Response& res) {
    QueryParams q;
    for (const auto& [k, v] : req.params) q.insert_or_assign(k, v);
    ApiResponse r;
    try {
      r = idx->dispatch(req.path, q);
    } catch (const std::exception& e) {
      spdlog::error("{} failed: {}", req.path, e.what());
      r = error_response(500, e.what());
    }
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  for (const char* route : {"/stories", "/compare", "/metrics/fingerprint", "/metrics/similarity",
                            "/metrics/vsr", "/metrics/bundle"}) {
    srv.Get(route, handler);
  }
  if (static_dir && fs::is_directory(*static_dir)) {
    srv.set_mount_point("/", static_dir->string());
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      ordered_json j;
      j["endpoints"] = {"/stories", "/compare", "/metrics/fingerprint", "/metrics/similarity",
                        "/metrics/vsr", "/metrics/bundle"};
      res.set_content(j.dump(), "application/json");
    });
  }
}

ExplorerServer::~ExplorerServer() { stop(); }

int ExplorerServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ExplorerServer::listen() { impl_->server.listen_after_bind(); }

void ExplorerServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace storybias
