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

#include "storybias/extractor.hpp"

#include <spdlog/spdlog.h>

#include <array>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "storybias/error.hpp"
#include "storybias/text.hpp"

namespace storybias {
namespace fs = std::filesystem;

namespace {

constexpr const char* kDefaultInstruction =
    "Read the children's story below and extract a structured representation of it.\n"
    "Return exactly one JSON object inside a ```json fenced block with three fields:\n"
    "  \"adjectives\": adjectives describing the protagonist's traits or dispositions,\n"
    "  \"environment\": keywords describing the physical or social setting,\n"
    "  \"cultural\": explicit cultural references, objects or practices in the text.\n"
    "Each field is a list of short strings, possibly empty. Write the terms in the\n"
    "story's language. Do not add commentary.\n\nStory:\n";

}  // namespace

void ExtractionPromptSpec::validate() const {
  for (const char* field : {"adjectives", "environment", "cultural"}) {
    if (instruction.find(field) == std::string::npos) {
      throw ConfigError(std::string("extraction instruction must name the field '") + field +
                        "'");
    }
  }
  if (max_retries_on_malformed < 0) throw ConfigError("max_retries_on_malformed must be >= 0");
  if (extractor_model_id.empty()) throw ConfigError("extractor_model_id is empty");
}

ExtractionPromptSpec ExtractionPromptSpec::defaults() {
  ExtractionPromptSpec s;
  s.instruction = kDefaultInstruction;
  return s;
}

ExtractionPromptSpec ExtractionPromptSpec::from_json(const nlohmann::json& j) {
  ExtractionPromptSpec s = defaults();
  s.extractor_model_id = j.value("extractor_model_id", s.extractor_model_id);
  s.instruction = j.value("instruction", s.instruction);
  s.max_retries_on_malformed = j.value("max_retries_on_malformed", s.max_retries_on_malformed);
  s.temperature = j.value("temperature", s.temperature);
  s.max_tokens = j.value("max_tokens", s.max_tokens);
  s.validate();
  return s;
}

std::string build_extraction_prompt(const ExtractionPromptSpec& spec,
                                    std::string_view story_text) {
  return spec.instruction + std::string(story_text);
}

std::optional<RawExtraction> parse_extraction_response(std::string_view content) {
  std::string_view body = content;
  if (auto fence = content.find("```"); fence != std::string_view::npos) {
    auto nl = content.find('\n', fence);
    auto close = nl == std::string_view::npos ? nl : content.find("```", nl);
    if (close == std::string_view::npos) return std::nullopt;
    body = content.substr(nl + 1, close - nl - 1);
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (!j.is_object()) return std::nullopt;
  RawExtraction out;
  const std::array<std::pair<const char*, std::vector<std::string>*>, 3> fields = {
      {{"adjectives", &out.adjectives},
       {"environment", &out.environment},
       {"cultural", &out.cultural}}};
  for (const auto& [name, dest] : fields) {
    if (!j.contains(name) || !j[name].is_array()) return std::nullopt;
    for (const auto& item : j[name]) {
      if (!item.is_string()) return std::nullopt;
      dest->push_back(item.get<std::string>());
    }
  }
  return out;
}

std::vector<std::string> normalize_terms(const std::vector<std::string>& raw,
                                         std::string_view language, std::size_t* discarded) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& r : raw) {
    std::optional<std::string> t;
    if (text::is_valid_utf8(r)) t = text::normalize_term(r, language);
    if (!t) {
      if (discarded) ++*discarded;
      continue;
    }
    if (seen.insert(*t).second) out.push_back(std::move(*t));
  }
  return out;
}

ExtractionRecord extract_story(const StoryRecord& record, const ExtractionPromptSpec& spec,
                               ChatClient& client) {
  ExtractionRecord out;
  out.story_id = record.story_id;
  out.extractor_model_id = spec.extractor_model_id;

  ordered_json payload;
  payload["model"] = client.config().model_name;
  payload["messages"] = ordered_json::array(
      {{{"role", "user"}, {"content", build_extraction_prompt(spec, record.story_text)}}});
  payload["temperature"] = spec.temperature;
  payload["max_tokens"] = spec.max_tokens;

  const std::string& lang = record.prompt_config.language;
  for (int attempt = 0; attempt <= spec.max_retries_on_malformed; ++attempt) {
    ChatResult res = client.complete(payload);
    if (!res.ok) {
      // Transport retries already happened inside the client.
      out.raw_response = res.error;
      out.extraction_failed = true;
      return out;
    }
    out.raw_response = res.content;
    if (auto parsed = parse_extraction_response(res.content)) {
      std::size_t dropped = 0;
      out.adjectives = normalize_terms(parsed->adjectives, lang, &dropped);
      out.environment = normalize_terms(parsed->environment, lang, &dropped);
      out.cultural = normalize_terms(parsed->cultural, lang, &dropped);
      if (dropped > 0) spdlog::debug("{}: {} empty terms discarded", record.story_id, dropped);
      out.extraction_failed = false;
      return out;
    }
    spdlog::debug("{}: malformed extraction (attempt {})", record.story_id, attempt + 1);
  }
  out.adjectives.clear();
  out.environment.clear();
  out.cultural.clear();
  out.extraction_failed = true;
  return out;
}

ExtractionRunResult run_extraction(const fs::path& corpus_path, const fs::path& validity_path,
                                   const ExtractionPromptSpec& spec,
                                   const EndpointConfig& endpoint, const fs::path& out_path,
                                   ChatClient::Sleeper sleeper) {
  spec.validate();
  ExtractionRunResult result;
  std::unordered_map<std::string, bool> valid;
  for (const auto& v : read_validity(validity_path)) valid[v.story_id] = v.is_valid;

  JsonlAppender out(out_path);
  std::unordered_set<std::string> done;
  for (const auto& e : read_extractions(out_path)) done.insert(e.story_id);

  std::vector<StoryRecord> todo;
  CorpusReader reader(corpus_path);
  while (auto r = reader.next()) {
    auto it = valid.find(r->story_id);
    if (it == valid.end() || !it->second) {
      ++result.skipped_invalid;
      continue;
    }
    if (done.count(r->story_id)) {
      ++result.already_present;
      continue;
    }
    todo.push_back(std::move(*r));
  }

  ChatClient client(endpoint, std::move(sleeper));
  std::mutex mu;
  run_bounded(todo.size(), endpoint.max_in_flight, [&](std::size_t i) {
    ExtractionRecord rec = extract_story(todo[i], spec, client);
    const auto line =
        to_json(rec).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    std::lock_guard lock(mu);
    out.append_line(line);
    ++result.attempted;
    (rec.extraction_failed ? result.failed : result.succeeded) += 1;
  });
  spdlog::info("extraction: {} ok, {} failed, {} skipped (invalid), {} already present",
               result.succeeded, result.failed, result.skipped_invalid, result.already_present);
  return result;
}

// ---------------------------------------------------------------------------
// Annotation agreement

AnnotationStats score_annotations(std::span<const std::pair<int, int>> pairs) {
  if (pairs.size() < 2) throw ValidationError("need at least two annotation pairs");
  std::array<std::array<long long, 3>, 3> confusion{};
  std::size_t positive_a = 0, positive_b = 0;
  for (const auto& [a, b] : pairs) {
    if (a < 0 || a > 2 || b < 0 || b > 2) {
      throw ValidationError("annotation scores must be 0, 1 or 2");
    }
    ++confusion[a][b];
    positive_a += a >= 1;
    positive_b += b >= 1;
  }
  const auto n = static_cast<long long>(pairs.size());
  long long agree = 0;
  long long chance = 0;  // sum of row_total * col_total
  for (int k = 0; k < 3; ++k) {
    agree += confusion[k][k];
    long long row = 0, col = 0;
    for (int j = 0; j < 3; ++j) {
      row += confusion[k][j];
      col += confusion[j][k];
    }
    chance += row * col;
  }
  AnnotationStats s;
  s.items = pairs.size();
  // kappa = (p_o - p_e) / (1 - p_e), scaled by n^2 to stay in integers.
  if (n * n != chance) {
    s.kappa = static_cast<double>(n * agree - chance) / static_cast<double>(n * n - chance);
  }
  s.precision_a = static_cast<double>(positive_a) / static_cast<double>(n);
  s.precision_b = static_cast<double>(positive_b) / static_cast<double>(n);
  s.precision = 0.5 * (s.precision_a + s.precision_b);
  return s;
}

std::vector<AnnotationRow> read_annotations_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::vector<AnnotationRow> out;
  std::unordered_map<std::string, int> col;
  std::uint64_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(text::trim(cell));
    if (col.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = static_cast<int>(i);
      for (const char* need : {"story_id", "attribute", "annotator_a", "annotator_b"}) {
        if (!col.count(need)) throw ParseError(std::string("missing column ") + need, 1, 0);
      }
      continue;
    }
    auto get = [&](const char* name) -> const std::string& {
      auto idx = static_cast<std::size_t>(col.at(name));
      if (idx >= cells.size()) throw ParseError("short annotation row", lineno, 0);
      return cells[idx];
    };
    AnnotationRow r;
    r.story_id = get("story_id");
    r.attribute = get("attribute");
    try {
      r.annotator_a = std::stoi(get("annotator_a"));
      r.annotator_b = std::stoi(get("annotator_b"));
    } catch (const std::logic_error&) {
      throw ParseError("non-integer annotation score", lineno, 0);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace storybias
