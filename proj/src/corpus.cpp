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

#include "storybias/corpus.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <ctime>
#include <sstream>

#include "storybias/error.hpp"
#include "storybias/text.hpp"

namespace storybias {
namespace fs = std::filesystem;

std::string_view axis_key(Axis axis) {
  switch (axis) {
    case Axis::kNationality: return "nationality";
    case Axis::kReligion: return "religion";
    case Axis::kSocialClass: return "social_class";
    case Axis::kParentRole: return "parent_role";
    case Axis::kChildGender: return "child_gender";
  }
  return "unknown";
}

std::optional<Axis> parse_axis(std::string_view key) {
  for (Axis a : kAllAxes) {
    if (axis_key(a) == key) return a;
  }
  if (key == "gender") return Axis::kChildGender;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ConfigSpace

const std::vector<std::string>& ConfigSpace::values(Axis axis) const {
  switch (axis) {
    case Axis::kNationality: return nationalities;
    case Axis::kReligion: return religions;
    case Axis::kSocialClass: return social_classes;
    case Axis::kParentRole: return parent_roles;
    case Axis::kChildGender: return child_genders;
  }
  throw ConfigError("unknown axis");
}

bool ConfigSpace::contains(Axis axis, std::string_view id) const {
  for (const auto& v : values(axis)) {
    if (v == id) return true;
  }
  return false;
}

ConfigSpace ConfigSpace::default_space() {
  ConfigSpace s;
  s.nationalities = {
      // Americas
      "american", "mexican", "brazilian", "argentine",
      // Europe
      "british", "french", "german", "spanish", "russian", "ukrainian",
      // Asia
      "chinese", "japanese", "korean", "indian", "filipino", "indonesian", "thai",
      "vietnamese", "sri_lankan",
      // Middle East
      "iranian", "egyptian", "saudi",
      // Africa
      "nigerian", "ethiopian", "kenyan", "south_african",
      // Oceania
      "australian"};
  s.religions = {"christian", "muslim", "hindu", "buddhist", "jewish", "atheist"};
  s.social_classes = {"wealthy", "working_class"};
  s.parent_roles = {"mother", "father", "parent"};
  s.child_genders = {"girl", "boy", "child"};
  s.languages = {"en", "zh", "ja", "ko", "es", "ru", "ar", "sw"};
  return s;
}

namespace {

void validate_axis(std::string_view name, const std::vector<std::string>& ids) {
  if (ids.empty()) throw ConfigError(std::string("configuration axis '") +
                                     std::string(name) + "' is empty");
  std::set<std::string_view> seen;
  for (const auto& id : ids) {
    if (id.empty()) {
      throw ConfigError("empty identifier on axis '" + std::string(name) + "'");
    }
    if (!text::is_valid_utf8(id) || text::casefold(id) != id ||
        id.find_first_of(" \t\r\n") != std::string::npos) {
      throw ConfigError("identifier '" + id + "' on axis '" + std::string(name) +
                        "' is not case-normalized");
    }
    if (!seen.insert(id).second) {
      throw ConfigError("duplicate identifier '" + id + "' on axis '" +
                        std::string(name) + "'");
    }
  }
}

std::vector<std::string> string_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("space file lacks '") + key + "'");
  return j.at(key).get<std::vector<std::string>>();
}

}  // namespace

void ConfigSpace::validate() const {
  validate_axis("nationalities", nationalities);
  validate_axis("religions", religions);
  validate_axis("social_classes", social_classes);
  validate_axis("parent_roles", parent_roles);
  validate_axis("child_genders", child_genders);
  validate_axis("languages", languages);
}

ConfigSpace ConfigSpace::from_json(const nlohmann::json& j) {
  ConfigSpace s;
  s.nationalities = string_list(j, "nationalities");
  s.religions = string_list(j, "religions");
  s.social_classes = string_list(j, "social_classes");
  s.parent_roles = string_list(j, "parent_roles");
  s.child_genders = string_list(j, "child_genders");
  s.languages = string_list(j, "languages");
  s.validate();
  return s;
}

ordered_json ConfigSpace::to_json() const {
  ordered_json j;
  j["nationalities"] = nationalities;
  j["religions"] = religions;
  j["social_classes"] = social_classes;
  j["parent_roles"] = parent_roles;
  j["child_genders"] = child_genders;
  j["languages"] = languages;
  return j;
}

// ---------------------------------------------------------------------------
// PromptConfig

const std::string& PromptConfig::value(Axis axis) const {
  switch (axis) {
    case Axis::kNationality: return nationality;
    case Axis::kReligion: return religion;
    case Axis::kSocialClass: return social_class;
    case Axis::kParentRole: return parent_role;
    case Axis::kChildGender: return child_gender;
  }
  throw ConfigError("unknown axis");
}

std::string PromptConfig::config_hash() const {
  constexpr char sep = '\x1f';
  std::string canonical;
  canonical.reserve(96);
  for (const std::string* f : {&language, &nationality, &religion, &social_class,
                               &parent_role, &child_gender}) {
    if (!canonical.empty()) canonical.push_back(sep);
    canonical += *f;
  }
  return text::sha256_hex(canonical);
}

// ---------------------------------------------------------------------------
// GenerationParams

void GenerationParams::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("top_p must lie in (0, 1]");
  if (top_k < 0) throw ConfigError("top_k must be >= 0");
  if (!(repetition_penalty > 0.0)) throw ConfigError("repetition_penalty must be > 0");
  if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
  if (samples_per_prompt < 1) throw ConfigError("samples_per_prompt must be >= 1");
}

GenerationParams GenerationParams::from_json(const nlohmann::json& j) {
  GenerationParams p;
  p.temperature = j.value("temperature", p.temperature);
  p.top_p = j.value("top_p", p.top_p);
  p.top_k = j.value("top_k", p.top_k);
  p.repetition_penalty = j.value("repetition_penalty", p.repetition_penalty);
  p.max_new_tokens = j.value("max_new_tokens", p.max_new_tokens);
  p.random_seed = j.value("random_seed", p.random_seed);
  p.samples_per_prompt = j.value("samples_per_prompt", p.samples_per_prompt);
  p.validate();
  return p;
}

ordered_json GenerationParams::to_json() const {
  ordered_json j;
  j["temperature"] = temperature;
  j["top_p"] = top_p;
  j["top_k"] = top_k;
  j["repetition_penalty"] = repetition_penalty;
  j["max_new_tokens"] = max_new_tokens;
  j["random_seed"] = random_seed;
  j["samples_per_prompt"] = samples_per_prompt;
  return j;
}

// ---------------------------------------------------------------------------
// Records

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::kComplete: return "complete";
    case FinishReason::kTruncated: return "truncated";
    case FinishReason::kError: return "error";
  }
  return "error";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "complete") return FinishReason::kComplete;
  if (s == "truncated") return FinishReason::kTruncated;
  if (s == "error") return FinishReason::kError;
  throw ValidationError("unknown finish_reason '" + std::string(s) + "'");
}

namespace {

void require_nfc(std::string_view field, const std::string& value) {
  if (!text::is_valid_utf8(value)) {
    throw ValidationError(std::string(field) + " is not valid UTF-8");
  }
  if (!text::is_nfc(value)) {
    throw ValidationError(std::string(field) + " is not NFC-normalized");
  }
}

void require_nonempty(std::string_view field, const std::string& value) {
  if (value.empty()) throw ValidationError(std::string(field) + " is empty");
}

}  // namespace

void StoryRecord::validate() const {
  require_nonempty("story_id", story_id);
  require_nonempty("model_id", model_id);
  require_nonempty("language", prompt_config.language);
  for (Axis a : kAllAxes) require_nonempty(axis_key(a), prompt_config.value(a));
  if (sample_index < 0) throw ValidationError("sample_index must be >= 0");
  require_nfc("prompt_text", prompt_text);
  require_nfc("story_text", story_text);
}

StoryKey key_of(const StoryRecord& r) {
  return {r.prompt_config.config_hash(), r.model_id, r.sample_index};
}

std::string make_story_id(std::string_view config_hash, std::string_view model_id,
                          int sample_index) {
  std::string key(config_hash);
  key.push_back('\x1f');
  key += model_id;
  key.push_back('\x1f');
  key += std::to_string(sample_index);
  return text::sha256_hex(key).substr(0, 24);
}

ordered_json to_json(const StoryRecord& r) {
  ordered_json j;
  j["story_id"] = r.story_id;
  j["config_hash"] = r.prompt_config.config_hash();
  j["language"] = r.prompt_config.language;
  j["nationality"] = r.prompt_config.nationality;
  j["religion"] = r.prompt_config.religion;
  j["social_class"] = r.prompt_config.social_class;
  j["parent_role"] = r.prompt_config.parent_role;
  j["child_gender"] = r.prompt_config.child_gender;
  j["model_id"] = r.model_id;
  j["sample_index"] = r.sample_index;
  j["prompt_text"] = r.prompt_text;
  j["story_text"] = r.story_text;
  j["created_at"] = r.created_at;
  j["finish_reason"] = to_string(r.finish_reason);
  return j;
}

StoryRecord story_from_json(const nlohmann::json& j) {
  StoryRecord r;
  r.story_id = j.at("story_id").get<std::string>();
  r.prompt_config.language = j.at("language").get<std::string>();
  r.prompt_config.nationality = j.at("nationality").get<std::string>();
  r.prompt_config.religion = j.at("religion").get<std::string>();
  r.prompt_config.social_class = j.at("social_class").get<std::string>();
  r.prompt_config.parent_role = j.at("parent_role").get<std::string>();
  r.prompt_config.child_gender = j.at("child_gender").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.sample_index = j.at("sample_index").get<int>();
  r.prompt_text = j.at("prompt_text").get<std::string>();
  r.story_text = j.at("story_text").get<std::string>();
  r.created_at = j.at("created_at").get<std::string>();
  r.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
  const auto stored = j.at("config_hash").get<std::string>();
  if (stored != r.prompt_config.config_hash()) {
    throw ValidationError("config_hash does not match the record's configuration");
  }
  r.validate();
  return r;
}

ordered_json to_json(const ValidityRecord& r) {
  ordered_json j;
  j["story_id"] = r.story_id;
  j["language"] = r.language;
  j["model_id"] = r.model_id;
  j["predicted_language"] = r.predicted_language;
  j["lid_confidence"] = r.lid_confidence;
  j["is_refusal"] = r.is_refusal;
  j["language_ok"] = r.language_ok;
  j["is_valid"] = r.is_valid;
  j["reason"] = r.reason;
  return j;
}

ValidityRecord validity_from_json(const nlohmann::json& j) {
  ValidityRecord r;
  r.story_id = j.at("story_id").get<std::string>();
  r.language = j.at("language").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.predicted_language = j.at("predicted_language").get<std::string>();
  r.lid_confidence = j.at("lid_confidence").get<double>();
  r.is_refusal = j.at("is_refusal").get<bool>();
  r.language_ok = j.value("language_ok", false);
  r.is_valid = j.at("is_valid").get<bool>();
  r.reason = j.value("reason", std::string{});
  return r;
}

ordered_json to_json(const ExtractionRecord& r) {
  ordered_json j;
  j["story_id"] = r.story_id;
  j["adjectives"] = r.adjectives;
  j["environment"] = r.environment;
  j["cultural"] = r.cultural;
  j["extractor_model_id"] = r.extractor_model_id;
  j["extraction_failed"] = r.extraction_failed;
  j["raw_response"] = r.raw_response;
  return j;
}

ExtractionRecord extraction_from_json(const nlohmann::json& j) {
  ExtractionRecord r;
  r.story_id = j.at("story_id").get<std::string>();
  r.adjectives = j.at("adjectives").get<std::vector<std::string>>();
  r.environment = j.at("environment").get<std::vector<std::string>>();
  r.cultural = j.at("cultural").get<std::vector<std::string>>();
  r.extractor_model_id = j.at("extractor_model_id").get<std::string>();
  r.extraction_failed = j.at("extraction_failed").get<bool>();
  r.raw_response = j.value("raw_response", std::string{});
  return r;
}

std::string serialize_line(const StoryRecord& r) {
  return to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

// ---------------------------------------------------------------------------
// Files

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot publish " + path.string());
  }
}

void write_jsonl_atomic(const fs::path& path, const std::vector<std::string>& lines) {
  std::string buf;
  for (const auto& l : lines) {
    buf += l;
    buf.push_back('\n');
  }
  write_file_atomic(path, buf);
}

std::size_t write_corpus(std::span<const StoryRecord> records, const fs::path& path) {
  std::set<StoryKey> seen;
  std::vector<std::string> lines;
  lines.reserve(records.size());
  for (const auto& r : records) {
    r.validate();
    if (!seen.insert(key_of(r)).second) {
      throw ValidationError("duplicate story key (config_hash, model_id=" + r.model_id +
                            ", sample_index=" + std::to_string(r.sample_index) + ")");
    }
    lines.push_back(serialize_line(r));
  }
  write_jsonl_atomic(path, lines);
  return lines.size();
}

template <typename Record>
JsonlReader<Record>::JsonlReader(const fs::path& path, Decoder decode)
    : in_(path, std::ios::binary), decode_(std::move(decode)) {
  if (!in_) throw IoError("cannot open " + path.string());
}

template <typename Record>
std::optional<Record> JsonlReader<Record>::next() {
  std::string line;
  while (true) {
    const std::uint64_t start = offset_;
    if (!std::getline(in_, line)) return std::nullopt;
    const bool terminated = !in_.eof();
    offset_ += line.size() + (terminated ? 1 : 0);
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      return decode_(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string(terminated ? "malformed line: " : "truncated final line: ") +
                           e.what(),
                       line_, start);
    } catch (const ValidationError& e) {
      throw ParseError(std::string("invalid record: ") + e.what(), line_, start);
    }
  }
}

template class JsonlReader<StoryRecord>;
template class JsonlReader<ValidityRecord>;
template class JsonlReader<ExtractionRecord>;

CorpusReader::CorpusReader(const fs::path& path, CorpusFilter filter)
    : reader_(path, story_from_json), filter_(std::move(filter)) {}

std::optional<StoryRecord> CorpusReader::next() {
  while (auto r = reader_.next()) {
    if (!filter_ || filter_(r->prompt_config, r->model_id)) return r;
  }
  return std::nullopt;
}

std::vector<StoryRecord> read_corpus(const fs::path& path, const CorpusFilter& filter) {
  CorpusReader reader(path, filter);
  std::vector<StoryRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

std::vector<ValidityRecord> read_validity(const fs::path& path) {
  JsonlReader<ValidityRecord> reader(path, validity_from_json);
  std::vector<ValidityRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

std::vector<ExtractionRecord> read_extractions(const fs::path& path) {
  JsonlReader<ExtractionRecord> reader(path, extraction_from_json);
  std::vector<ExtractionRecord> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

// ---------------------------------------------------------------------------
// JsonlAppender

JsonlAppender::JsonlAppender(const fs::path& path) : path_(path) {
  fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
  struct stat st {};
  if (::fstat(fd_, &st) != 0) throw IoError("cannot stat " + path.string());
  const auto size = static_cast<std::uint64_t>(st.st_size);
  if (size == 0) return;

  // Find the last newline; anything after it is a torn record.
  constexpr std::uint64_t kChunk = 4096;
  std::uint64_t keep = 0;
  std::string buf;
  for (std::uint64_t end = size; end > 0;) {
    const std::uint64_t begin = end > kChunk ? end - kChunk : 0;
    buf.resize(end - begin);
    if (::pread(fd_, buf.data(), buf.size(), static_cast<off_t>(begin)) !=
        static_cast<ssize_t>(buf.size())) {
      throw IoError("cannot read " + path.string());
    }
    auto pos = buf.rfind('\n');
    if (pos != std::string::npos) {
      keep = begin + pos + 1;
      break;
    }
    end = begin;
  }
  if (keep < size) {
    if (::ftruncate(fd_, static_cast<off_t>(keep)) != 0) {
      throw IoError("cannot truncate torn tail of " + path.string());
    }
    repaired_bytes_ = size - keep;
  }
}

JsonlAppender::~JsonlAppender() {
  if (fd_ >= 0) ::close(fd_);
}

void JsonlAppender::append_line(std::string_view line) {
  std::string buf(line);
  buf.push_back('\n');
  // A single write per record keeps lines whole under O_APPEND.
  const char* p = buf.data();
  std::size_t left = buf.size();
  while (left > 0) {
    ssize_t n = ::write(fd_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("write failed for " + path_.string() + ": " + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace storybias
