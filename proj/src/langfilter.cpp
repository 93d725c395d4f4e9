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

#include "storybias/langfilter.hpp"

#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <array>
#include <sstream>
#include <unordered_set>

#include "storybias/error.hpp"
#include "storybias/text.hpp"

namespace storybias {
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// TableLanguageId

TableLanguageId::TableLanguageId(std::vector<Rule> rules, LanguageGuess fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {}

TableLanguageId TableLanguageId::load(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse language-id table " + path.string() + ": " + e.what());
  }
  std::vector<Rule> rules;
  for (const auto& r : j.at("rules")) {
    rules.push_back({text::to_nfc(r.at("contains").get<std::string>()),
                     {r.at("language").get<std::string>(), r.at("confidence").get<double>()}});
  }
  LanguageGuess fallback{"und", 0.0};
  if (j.contains("fallback")) {
    fallback = {j["fallback"].at("language").get<std::string>(),
                j["fallback"].at("confidence").get<double>()};
  }
  return TableLanguageId(std::move(rules), fallback);
}

LanguageGuess TableLanguageId::identify(std::string_view text) const {
  for (const auto& r : rules_) {
    if (text.find(r.contains) != std::string_view::npos) return r.guess;
  }
  return fallback_;
}

// ---------------------------------------------------------------------------
// ScriptLanguageId

namespace {

const std::unordered_set<std::string>& stopwords(std::string_view lang) {
  static const std::unordered_set<std::string> en = {
      "the", "and", "was", "of", "to", "in", "he", "she", "her", "his", "with",
      "that", "it", "they", "is", "for", "on", "had", "but", "were", "said", "one"};
  static const std::unordered_set<std::string> es = {
      "el", "los", "las", "que", "y", "en", "un", "una", "con", "por", "se", "su",
      "era", "para", "del", "al", "muy", "no", "de", "pero", "como", "sus"};
  static const std::unordered_set<std::string> sw = {
      "na", "ya", "wa", "kwa", "ni", "za", "katika", "alikuwa", "yake", "hii",
      "kama", "lakini", "watoto", "siku", "mtoto", "sana", "kila", "baada", "kwamba",
      "yao", "pia", "hadithi"};
  if (lang == "en") return en;
  if (lang == "es") return es;
  return sw;
}

}  // namespace

LanguageGuess ScriptLanguageId::identify(std::string_view text) const {
  std::size_t letters = 0, latin = 0, cyrillic = 0, arabic = 0, hangul = 0, kana = 0, han = 0;
  std::vector<std::string> words;
  std::string word;
  const auto* p = reinterpret_cast<const uint8_t*>(text.data());
  const auto len = static_cast<int32_t>(text.size());
  for (int32_t i = 0; i < len;) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    if (c < 0) continue;
    if (!u_isalpha(c)) {
      if (!word.empty()) words.push_back(std::move(word));
      word.clear();
      continue;
    }
    ++letters;
    UErrorCode status = U_ZERO_ERROR;
    switch (uscript_getScript(c, &status)) {
      case USCRIPT_LATIN: {
        ++latin;
        UChar32 lower = u_tolower(c);
        char buf[4];
        int32_t n = 0;
        U8_APPEND_UNSAFE(buf, n, lower);
        word.append(buf, static_cast<std::size_t>(n));
        continue;
      }
      case USCRIPT_CYRILLIC: ++cyrillic; break;
      case USCRIPT_ARABIC: ++arabic; break;
      case USCRIPT_HANGUL: ++hangul; break;
      case USCRIPT_HIRAGANA:
      case USCRIPT_KATAKANA: ++kana; break;
      case USCRIPT_HAN: ++han; break;
      default: break;
    }
    if (!word.empty()) words.push_back(std::move(word));
    word.clear();
  }
  if (!word.empty()) words.push_back(std::move(word));
  if (letters == 0) return {"und", 0.0};

  const auto share = [&](std::size_t n) { return static_cast<double>(n) / letters; };
  struct Candidate {
    const char* lang;
    std::size_t count;
  };
  std::array<Candidate, 6> scripts = {{{"latin", latin},
                                       {"ru", cyrillic},
                                       {"ar", arabic},
                                       {"ko", hangul},
                                       {"ja", kana},
                                       {"zh", han}}};
  // Japanese text mixes kana and kanji; any real amount of kana means ja.
  if (kana > 0 && share(kana) >= 0.1) {
    scripts[4].count = kana + han;
    scripts[5].count = 0;
  }
  auto best = std::max_element(scripts.begin(), scripts.end(),
                               [](const auto& a, const auto& b) { return a.count < b.count; });
  if (best->count == 0) return {"und", 0.0};
  if (std::string_view(best->lang) != "latin") return {best->lang, share(best->count)};

  std::array<std::pair<const char*, std::size_t>, 3> votes = {
      {{"en", 0}, {"es", 0}, {"sw", 0}}};
  std::size_t hits = 0;
  for (const auto& w : words) {
    for (auto& [lang, n] : votes) {
      if (stopwords(lang).count(w)) {
        ++n;
        ++hits;
      }
    }
  }
  if (hits == 0) return {"und", 0.0};
  auto top = std::max_element(votes.begin(), votes.end(),
                              [](const auto& a, const auto& b) { return a.second < b.second; });
  return {top->first, share(latin) * static_cast<double>(top->second) / hits};
}

// ---------------------------------------------------------------------------
// Refusals

void RefusalRuleset::validate() const {
  for (const auto& [lang, list] : patterns) {
    for (const auto& p : list) {
      if (p.empty()) throw ConfigError("empty refusal pattern for language '" + lang + "'");
    }
  }
}

RefusalRuleset RefusalRuleset::from_json(const nlohmann::json& j) {
  RefusalRuleset r;
  r.min_story_length = j.value("min_story_length", r.min_story_length);
  r.scan_window = j.value("scan_window", r.scan_window);
  if (j.contains("patterns")) {
    for (const auto& [lang, list] : j.at("patterns").items()) {
      for (const auto& p : list) r.patterns[lang].push_back(text::casefold(p.get<std::string>()));
    }
  }
  r.validate();
  return r;
}

RefusalRuleset RefusalRuleset::load(const fs::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse refusal rules " + path.string() + ": " + e.what());
  }
}

RefusalRuleset RefusalRuleset::defaults() {
  nlohmann::json j = {
      {"min_story_length", 200},
      {"patterns",
       {{"*", {"as an ai", "language model"}},
        {"en", {"i'm sorry", "i am sorry", "i cannot", "i can't", "i'm unable", "i am unable"}},
        {"es", {"lo siento", "no puedo", "como modelo de lenguaje"}},
        {"zh", {"抱歉", "对不起", "我无法", "我不能"}},
        {"ja", {"申し訳", "お応えできません", "作成できません"}},
        {"ko", {"죄송", "할 수 없습니다"}},
        {"ru", {"извините", "к сожалению, я", "я не могу"}},
        {"ar", {"عذرا", "عذرًا", "آسف", "لا أستطيع"}},
        {"sw", {"samahani", "siwezi"}}}}};
  return from_json(j);
}

bool is_refusal(std::string_view story_text, std::string_view language,
                const RefusalRuleset& rules) {
  const std::string trimmed = text::trim(story_text);
  if (text::codepoint_length(trimmed) < rules.min_story_length) return true;
  const std::string folded = text::casefold(trimmed);
  // Patterns must start inside the window; allow them to run past its end.
  const std::size_t window_bytes = text::codepoint_prefix(folded, rules.scan_window).size();
  auto check = [&](const std::vector<std::string>& list) {
    for (const auto& p : list) {
      auto pos = folded.find(p);
      if (pos != std::string::npos && pos < window_bytes) return true;
    }
    return false;
  };
  if (auto it = rules.patterns.find(std::string(language));
      it != rules.patterns.end() && check(it->second)) {
    return true;
  }
  if (auto it = rules.patterns.find("*"); it != rules.patterns.end() && check(it->second)) {
    return true;
  }
  return false;
}

ValidityRecord validate_story(const StoryRecord& record, const LanguageIdBackend& lid,
                              const RefusalRuleset& rules) {
  ValidityRecord v;
  v.story_id = record.story_id;
  v.language = record.prompt_config.language;
  v.model_id = record.model_id;
  try {
    LanguageGuess g = lid.identify(record.story_text);
    if (!(g.confidence >= 0.0 && g.confidence <= 1.0)) {
      throw Error("confidence out of [0, 1]");
    }
    v.predicted_language = g.language;
    v.lid_confidence = g.confidence;
  } catch (const std::exception& e) {
    v.predicted_language = "und";
    v.lid_confidence = 0.0;
    v.reason = std::string("language-id backend failure: ") + e.what();
    v.is_refusal = is_refusal(record.story_text, v.language, rules);
    return v;
  }
  v.language_ok = v.predicted_language == v.language && v.lid_confidence > kMinLidConfidence;
  v.is_refusal = is_refusal(record.story_text, v.language, rules);
  v.is_valid = v.language_ok && !v.is_refusal;
  if (!v.language_ok) {
    v.reason = v.predicted_language != v.language ? "language mismatch" : "low confidence";
  } else if (v.is_refusal) {
    v.reason = "refusal";
  }
  return v;
}

// ---------------------------------------------------------------------------
// VSR

double VsrRow::vsr_percent() const {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(valid) / static_cast<double>(total);
}

double VsrRow::language_only_percent() const {
  return total == 0 ? 0.0
                    : 100.0 * static_cast<double>(language_valid) / static_cast<double>(total);
}

std::vector<VsrRow> compute_vsr(std::span<const ValidityRecord> validities) {
  std::map<std::pair<std::string, std::string>, VsrRow> groups;
  for (const auto& v : validities) {
    auto& g = groups[{v.language, v.model_id}];
    g.language = v.language;
    g.model_id = v.model_id;
    ++g.total;
    g.valid += v.is_valid;
    g.language_valid += v.language_ok;
  }
  std::vector<VsrRow> out;
  out.reserve(groups.size());
  for (auto& [_, g] : groups) out.push_back(std::move(g));
  return out;
}

std::string format_percent_tenths(std::size_t num, std::size_t den) {
  if (den == 0) return "0.0";
  const unsigned long long tenths = (2000ULL * num + den) / (2ULL * den);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::string vsr_csv(std::span<const VsrRow> rows) {
  std::ostringstream out;
  out << "language,model_id,total,valid,vsr_percent,language_valid,language_only_vsr_percent\n";
  for (const auto& r : rows) {
    out << r.language << ',' << r.model_id << ',' << r.total << ',' << r.valid << ','
        << format_percent_tenths(r.valid, r.total) << ',' << r.language_valid << ','
        << format_percent_tenths(r.language_valid, r.total) << '\n';
  }
  return out.str();
}

std::unique_ptr<LanguageIdBackend> make_language_id(std::string_view spec) {
  if (spec.empty() || spec == "script") return std::make_unique<ScriptLanguageId>();
  if (spec.starts_with("table:")) {
    return std::make_unique<TableLanguageId>(TableLanguageId::load(std::string(spec.substr(6))));
  }
  throw ConfigError("unknown language-id backend '" + std::string(spec) +
                    "' (expected 'script' or 'table:<file>')");
}

}  // namespace storybias
