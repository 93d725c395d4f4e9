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

#include <doctest.h>

#include <random>

#include "storybias/error.hpp"
#include "storybias/kernels.hpp"
#include "storybias/langfilter.hpp"
#include "test_util.hpp"

using namespace storybias;
using storybias::testing::make_config;
using storybias::testing::make_story;
using storybias::testing::TempDir;
using storybias::testing::write_text;

namespace {

std::string long_text(const std::string& opening) {
  std::string s = opening;
  while (s.size() < 400) s += " and the little one walked to the river with her friends";
  return s + ".";
}

class ThrowingLid final : public LanguageIdBackend {
 public:
  LanguageGuess identify(std::string_view) const override { throw std::runtime_error("model missing"); }
  std::string name() const override { return "throwing"; }
};

}  // namespace

TEST_CASE("confidence threshold is strict") {
  const auto rules = RefusalRuleset::defaults();
  const auto story = make_story(make_config("sw"), "m", 0, long_text("Hapo zamani"));
  TableLanguageId at({{"Hapo", {"sw", 0.5}}});
  TableLanguageId above({{"Hapo", {"sw", 0.5000001}}});
  TableLanguageId wrong({{"Hapo", {"en", 0.99}}});
  const auto v_at = validate_story(story, at, rules);
  CHECK_FALSE(v_at.is_valid);
  CHECK_FALSE(v_at.language_ok);
  CHECK(v_at.reason == "low confidence");
  CHECK(validate_story(story, above, rules).is_valid);
  const auto v_wrong = validate_story(story, wrong, rules);
  CHECK_FALSE(v_wrong.is_valid);
  CHECK(v_wrong.reason == "language mismatch");
}

TEST_CASE("refusals are invalid even in the right language") {
  const auto rules = RefusalRuleset::defaults();
  TableLanguageId lid({}, {"en", 0.99});
  const auto refusal = make_story(make_config(), "m", 0, long_text("I'm sorry, but I cannot write that"));
  const auto v = validate_story(refusal, lid, rules);
  CHECK(v.language_ok);
  CHECK(v.is_refusal);
  CHECK_FALSE(v.is_valid);
  CHECK(v.reason == "refusal");

  const auto short_story = make_story(make_config(), "m", 1, "Once upon a time. The end.");
  CHECK(validate_story(short_story, lid, rules).is_refusal);
  // A pattern past the scan window is part of the story, not a refusal.
  const auto late = make_story(make_config(), "m", 2, long_text("Once upon a time") + " I'm sorry, said the fox.");
  CHECK_FALSE(validate_story(late, lid, rules).is_refusal);
  CHECK(is_refusal(long_text("As an AI language model I will"), "sw", rules));
}

TEST_CASE("backend failure yields an invalid record with a reason") {
  const auto v = validate_story(make_story(make_config(), "m", 0, long_text("Once")), ThrowingLid{},
                                RefusalRuleset::defaults());
  CHECK_FALSE(v.is_valid);
  CHECK(v.reason.find("model missing") != std::string::npos);
}

TEST_CASE("script identifier separates the eight languages") {
  ScriptLanguageId lid;
  struct Case {
    const char* text;
    const char* lang;
  };
  const Case cases[] = {
      {"Once upon a time there was a girl who loved the sea and she said it was hers.", "en"},
      {"Había una vez una niña que vivía en el bosque con sus padres y era muy feliz.", "es"},
      {"Hapo zamani za kale, kulikuwa na mtoto mmoja aliyeishi katika kijiji na wazazi wake.", "sw"},
      {"Жила-была девочка, которая очень любила читать книги.", "ru"},
      {"كان يا ما كان، في قديم الزمان، فتاة صغيرة تحب القراءة.", "ar"},
      {"옛날 옛적에 책을 좋아하는 작은 소녀가 살았습니다.", "ko"},
      {"むかしむかし、本が大好きな小さな女の子がいました。", "ja"},
      {"从前，有一个喜欢读书的小女孩，她住在山脚下。", "zh"},
  };
  for (const auto& c : cases) {
    const auto g = lid.identify(c.text);
    CHECK_MESSAGE(g.language == c.lang, c.text);
    CHECK(g.confidence > 0.5);
    CHECK(g.confidence <= 1.0);
  }
  CHECK(lid.identify("12345 !!!").language == "und");
}

TEST_CASE("table identifier loads from a file") {
  TempDir tmp;
  write_text(tmp / "lid.json", R"({"rules":[{"contains":"Érase","language":"es","confidence":0.9}],
                                   "fallback":{"language":"en","confidence":0.8}})");
  const auto lid = make_language_id("table:" + (tmp / "lid.json").string());
  CHECK(lid->identify("Érase una vez").language == "es");
  CHECK(lid->identify("Once").language == "en");
  CHECK_THROWS_AS(make_language_id("fasttext"), ConfigError);
}

TEST_CASE("planted 581 of 1000 reports 58.1") {
  std::vector<ValidityRecord> vs;
  for (int i = 0; i < 1000; ++i) {
    ValidityRecord v;
    v.story_id = std::to_string(i);
    v.language = "sw";
    v.model_id = "qwen3-8b";
    v.language_ok = i < 600;
    v.is_valid = i < 581;
    vs.push_back(v);
  }
  const auto rows = compute_vsr(vs);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].total == 1000);
  CHECK(rows[0].valid == 581);
  CHECK(format_percent_tenths(rows[0].valid, rows[0].total) == "58.1");
  CHECK(rows[0].vsr_percent() == doctest::Approx(58.1).epsilon(1e-12));
  CHECK(vsr_csv(rows) ==
        "language,model_id,total,valid,vsr_percent,language_valid,language_only_vsr_percent\n"
        "sw,qwen3-8b,1000,581,58.1,600,60.0\n");
}

TEST_CASE("percent formatting rounds half up on exact tenths") {
  CHECK(format_percent_tenths(1, 3) == "33.3");
  CHECK(format_percent_tenths(2, 3) == "66.7");
  CHECK(format_percent_tenths(1, 2000) == "0.1");  // 0.05 exactly
  CHECK(format_percent_tenths(1, 1) == "100.0");
  CHECK(format_percent_tenths(0, 7) == "0.0");
  CHECK(format_percent_tenths(0, 0) == "0.0");
}

TEST_CASE("VSR is monotone in valid stories") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ValidityRecord> vs;
    const int n = 1 + static_cast<int>(rng() % 50);
    for (int i = 0; i < n; ++i) {
      ValidityRecord v;
      v.language = "en";
      v.model_id = "m";
      v.is_valid = rng() % 2;
      vs.push_back(v);
    }
    const double before = compute_vsr(vs)[0].vsr_percent();
    auto plus_valid = vs;
    plus_valid.push_back({"x", "en", "m", "en", 0.9, false, true, true, ""});
    auto plus_invalid = vs;
    plus_invalid.push_back({"y", "en", "m", "und", 0.0, false, false, false, "x"});
    CHECK(compute_vsr(plus_valid)[0].vsr_percent() >= before);
    CHECK(compute_vsr(plus_invalid)[0].vsr_percent() <= before);
    // Flipping an invalid story to valid never lowers the rate.
    for (auto& v : vs) {
      if (!v.is_valid) {
        v.is_valid = true;
        break;
      }
    }
    CHECK(compute_vsr(vs)[0].vsr_percent() >= before);
  }
}

TEST_CASE("serial and parallel batch validation agree") {
  std::vector<StoryRecord> stories;
  for (int i = 0; i < 300; ++i) {
    const char* lang = i % 2 ? "es" : "en";
    stories.push_back(make_story(make_config(lang), "m", i,
                                 long_text(i % 7 == 0 ? "Lo siento" : "Once upon a time")));
  }
  ScriptLanguageId lid;
  const auto rules = RefusalRuleset::defaults();
  CHECK(kernels::serial::validate_batch(stories, lid, rules) ==
        kernels::parallel::validate_batch(stories, lid, rules));
}

TEST_CASE("shipped refusal rules load") {
  const auto rules = RefusalRuleset::load(STORYBIAS_DATA_DIR "/refusal_rules.json");
  CHECK(rules.patterns.size() == 9);
  CHECK(rules.min_story_length == 200);
}
