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

#include <cmath>
#include <fstream>
#include <sstream>

#include "planted.hpp"
#include "storybias/report.hpp"

using namespace storybias;
using storybias::testing::make_planted;
using storybias::testing::TempDir;

namespace {

AnalysisResult planted_metrics(const std::vector<std::string>& langs = {"en", "es"},
                               const std::vector<std::string>& models = {"m1"}) {
  const auto p = make_planted(langs, models);
  return analyze(p.stories, p.extractions, std::span<const ValidityRecord>(p.validity), p.lexicon,
                 {});
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("radar csv carries the planted Agency score") {
  const auto rep = build_report(planted_metrics());
  const auto rows = lines(rep.radar_csv);
  REQUIRE(rows.size() == 1 + 2 * 3);
  CHECK(rows[0] == "model_id,language,category,score,covered");
  int agency = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].find(",Agency,") == std::string::npos) continue;
    ++agency;
    const auto score = std::stod(rows[i].substr(rows[i].find(",Agency,") + 8));
    CHECK(std::abs(score - std::log(2.0)) < 1e-9);
    CHECK(rows[i].back() == '1');
  }
  CHECK(agency == 2);
}

TEST_CASE("scatter has one row per language and model") {
  const auto rep = build_report(planted_metrics({"en", "es"}, {"m1", "m2"}));
  const auto rows = lines(rep.scatter_csv);
  CHECK(rows[0] == "model_id,language,vsr,jsd");
  CHECK(rows.size() == 1 + 4);
  CHECK(rep.bundle["scatter"].size() == 4);
}

TEST_CASE("scatter omits scopes without VSR and warns") {
  const auto p = make_planted();
  const auto m = analyze(p.stories, p.extractions, std::nullopt, p.lexicon, {});
  std::vector<std::string> warnings;
  const auto s = scatter_data(m, &warnings);
  CHECK(s.empty());
  CHECK(warnings.size() == 2);
}

TEST_CASE("heatmap and bundle similarity agree") {
  const auto rep = build_report(planted_metrics());
  const auto rows = lines(rep.heatmap_csv);
  CHECK(rows[0] == "model_id,row_language,col_language,similarity");
  CHECK(rows.size() == 1 + 4);
  const auto& sim = rep.bundle["similarity"]["m1"];
  CHECK(sim["labels"] == nlohmann::json({"en", "es"}));
  CHECK(sim["matrix"].size() == 2);
}

TEST_CASE("keyword panel is truncated to k with ranks") {
  const auto rep = build_report(planted_metrics({"en"}), {2});
  const auto rows = lines(rep.keywords_csv);
  CHECK(rows[0] == "model_id,language,axis,group_a,group_b,dimension,direction,rank,term,z");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK((rows[i].find(",1,") != std::string::npos || rows[i].find(",2,") != std::string::npos));
  }
  const auto panel = keyword_panel(planted_metrics({"en"}), 2);
  for (const auto& o : panel) {
    CHECK(o["positive"].size() <= 2);
    CHECK(o["negative"].size() <= 2);
  }
}

TEST_CASE("vsr display strings are one decimal") {
  AnalysisResult m;
  m.vsr.push_back({"sw", "model-a", 1000, 581, 600});
  const auto v = vsr_data(m);
  REQUIRE(v.size() == 1);
  CHECK(v[0]["vsr_display"] == "58.1");
  CHECK(v[0]["language_only_vsr_display"] == "60.0");
}

TEST_CASE("empty metrics produce headers and a warning") {
  const auto rep = build_report(AnalysisResult{});
  CHECK(lines(rep.radar_csv).size() == 1);
  CHECK(lines(rep.boxplot_csv).size() == 1);
  CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("report output is byte-for-byte deterministic") {
  TempDir a, b;
  write_report(build_report(planted_metrics()), a.path());
  write_report(build_report(planted_metrics()), b.path());
  for (const auto* f :
       {"radar.csv", "heatmap.csv", "boxplot.csv", "scatter.csv", "keywords.csv", "bundle.json"}) {
    CHECK(std::filesystem::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto bundle = nlohmann::json::parse(slurp(a / "bundle.json"));
  CHECK(bundle["format"] == "storybias-bundle/1");
}

TEST_CASE("csv field quoting and number format") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(2.0) == "2");
  const double ln2 = std::log(2.0);
  CHECK(std::stod(format_double(ln2)) == ln2);
}
