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

#include "storybias/report.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <sstream>

namespace storybias {
namespace fs = std::filesystem;

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

namespace {

std::vector<const ScopeMetrics*> by_model_then_language(const AnalysisResult& m) {
  std::vector<const ScopeMetrics*> out;
  for (const auto& s : m.scopes) out.push_back(&s);
  std::sort(out.begin(), out.end(), [](const ScopeMetrics* a, const ScopeMetrics* b) {
    return std::tie(a->scope.model_id, a->scope.language) <
           std::tie(b->scope.model_id, b->scope.language);
  });
  return out;
}

}  // namespace

ordered_json radar_data(const AnalysisResult& metrics) {
  ordered_json out = ordered_json::array();
  for (const auto* s : by_model_then_language(metrics)) {
    if (!s->fingerprint) continue;
    const auto& fp = *s->fingerprint;
    ordered_json o;
    o["model_id"] = s->scope.model_id;
    o["language"] = s->scope.language;
    o["categories"] = fp.categories;
    o["scores"] = fp.scores;
    o["covered"] = fp.coverage_mask;
    out.push_back(std::move(o));
  }
  return out;
}

ordered_json heatmap_data(const AnalysisResult& metrics) {
  ordered_json out = ordered_json::object();
  for (const auto& [model, m] : metrics.similarity) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
      ordered_json row = ordered_json::array();
      for (std::size_t j = 0; j < m.labels.size(); ++j) row.push_back(m.at(i, j));
      rows.push_back(std::move(row));
    }
    out[model] = {{"labels", m.labels}, {"matrix", std::move(rows)}};
  }
  return out;
}

ordered_json boxplot_data(const AnalysisResult& metrics) {
  ordered_json out = ordered_json::array();
  for (const auto& [model, groups] : metrics.grouped_jsd) {
    for (const auto& [group, box] : groups) {
      ordered_json values = ordered_json::array();
      for (const auto& [lang, v] : box.values) values.push_back({{"language", lang}, {"jsd", v}});
      ordered_json o;
      o["model_id"] = model;
      o["group"] = group;
      o["values"] = std::move(values);
      o["min"] = box.min;
      o["q1"] = box.q1;
      o["median"] = box.median;
      o["q3"] = box.q3;
      o["max"] = box.max;
      out.push_back(std::move(o));
    }
  }
  return out;
}

ordered_json scatter_data(const AnalysisResult& metrics, std::vector<std::string>* warnings) {
  auto warn = [&](std::string msg) {
    if (warnings) warnings->push_back(std::move(msg));
  };
  ordered_json out = ordered_json::array();
  for (const auto* s : by_model_then_language(metrics)) {
    const std::string where = s->scope.model_id + "/" + s->scope.language;
    auto row = std::find_if(metrics.vsr.begin(), metrics.vsr.end(), [&](const VsrRow& r) {
      return r.language == s->scope.language && r.model_id == s->scope.model_id;
    });
    if (!s->jsd) {
      warn("scatter: no JSD for " + where + "; row omitted");
      continue;
    }
    if (row == metrics.vsr.end() || row->total == 0) {
      warn("scatter: no VSR for " + where + "; row omitted");
      continue;
    }
    out.push_back({{"model_id", s->scope.model_id},
                   {"language", s->scope.language},
                   {"vsr", row->vsr_percent()},
                   {"jsd", *s->jsd}});
  }
  return out;
}

ordered_json keyword_panel(const AnalysisResult& metrics, std::size_t k) {
  ordered_json out = ordered_json::array();
  auto list = [](const std::vector<std::pair<std::string, double>>& items) {
    ordered_json a = ordered_json::array();
    for (const auto& [term, z] : items) a.push_back({{"term", term}, {"z", z}});
    return a;
  };
  for (const auto& ks : metrics.keywords) {
    const auto top = top_keywords(ks.z, k);
    ordered_json o;
    o["model_id"] = ks.scope.model_id;
    o["language"] = ks.scope.language;
    o["axis"] = axis_key(ks.contrast.axis);
    o["group_a"] = ks.contrast.group_a;
    o["group_b"] = ks.contrast.group_b;
    o["dimension"] = to_string(ks.dimension);
    o["positive"] = list(top.positive);
    o["negative"] = list(top.negative);
    out.push_back(std::move(o));
  }
  return out;
}

ordered_json vsr_data(const AnalysisResult& metrics) {
  ordered_json out = ordered_json::array();
  for (const auto& r : metrics.vsr) {
    ordered_json o;
    o["language"] = r.language;
    o["model_id"] = r.model_id;
    o["total"] = r.total;
    o["valid"] = r.valid;
    o["vsr"] = r.vsr_percent();
    o["vsr_display"] = format_percent_tenths(r.valid, r.total);
    o["language_valid"] = r.language_valid;
    o["language_only_vsr"] = r.language_only_percent();
    o["language_only_vsr_display"] = format_percent_tenths(r.language_valid, r.total);
    out.push_back(std::move(o));
  }
  return out;
}

Report build_report(const AnalysisResult& metrics, const ReportOptions& options) {
  Report rep;
  if (metrics.scopes.empty()) rep.warnings.push_back("metrics hold no scopes; exports are empty");

  const auto radar = radar_data(metrics);
  const auto heatmap = heatmap_data(metrics);
  const auto boxplot = boxplot_data(metrics);
  const auto scatter = scatter_data(metrics, &rep.warnings);
  const auto keywords = keyword_panel(metrics, options.top_k);
  const auto vsr = vsr_data(metrics);

  std::ostringstream csv;
  csv << "model_id,language,category,score,covered\n";
  for (const auto& o : radar) {
    for (std::size_t i = 0; i < o["categories"].size(); ++i) {
      csv << csv_field(o["model_id"].get<std::string>()) << ','
          << csv_field(o["language"].get<std::string>()) << ','
          << csv_field(o["categories"][i].get<std::string>()) << ','
          << format_double(o["scores"][i].get<double>()) << ','
          << (o["covered"][i].get<bool>() ? 1 : 0) << '\n';
    }
  }
  rep.radar_csv = csv.str();

  csv.str({});
  csv << "model_id,row_language,col_language,similarity\n";
  for (const auto& [model, m] : metrics.similarity) {
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
      for (std::size_t j = 0; j < m.labels.size(); ++j) {
        csv << csv_field(model) << ',' << csv_field(m.labels[i]) << ',' << csv_field(m.labels[j])
            << ',' << format_double(m.at(i, j)) << '\n';
      }
    }
  }
  rep.heatmap_csv = csv.str();

  csv.str({});
  csv << "model_id,group,language,jsd\n";
  for (const auto& o : boxplot) {
    for (const auto& v : o["values"]) {
      csv << csv_field(o["model_id"].get<std::string>()) << ','
          << csv_field(o["group"].get<std::string>()) << ','
          << csv_field(v["language"].get<std::string>()) << ','
          << format_double(v["jsd"].get<double>()) << '\n';
    }
  }
  rep.boxplot_csv = csv.str();

  csv.str({});
  csv << "model_id,language,vsr,jsd\n";
  for (const auto& o : scatter) {
    csv << csv_field(o["model_id"].get<std::string>()) << ','
        << csv_field(o["language"].get<std::string>()) << ','
        << format_double(o["vsr"].get<double>()) << ',' << format_double(o["jsd"].get<double>())
        << '\n';
  }
  rep.scatter_csv = csv.str();

  csv.str({});
  csv << "model_id,language,axis,group_a,group_b,dimension,direction,rank,term,z\n";
  for (const auto& o : keywords) {
    for (const char* dir : {"positive", "negative"}) {
      std::size_t rank = 1;
      for (const auto& e : o[dir]) {
        csv << csv_field(o["model_id"].get<std::string>()) << ','
            << csv_field(o["language"].get<std::string>()) << ','
            << o["axis"].get<std::string>() << ',' << csv_field(o["group_a"].get<std::string>())
            << ',' << csv_field(o["group_b"].get<std::string>()) << ','
            << o["dimension"].get<std::string>() << ',' << dir << ',' << rank++ << ','
            << csv_field(e["term"].get<std::string>()) << ','
            << format_double(e["z"].get<double>()) << '\n';
      }
    }
  }
  rep.keywords_csv = csv.str();

  rep.bundle["format"] = "storybias-bundle/1";
  rep.bundle["radar"] = radar;
  rep.bundle["similarity"] = heatmap;
  rep.bundle["boxplot"] = boxplot;
  rep.bundle["scatter"] = scatter;
  rep.bundle["keywords"] = keywords;
  rep.bundle["vsr"] = vsr;
  for (const auto& w : metrics.warnings) rep.warnings.push_back(w);
  rep.bundle["warnings"] = rep.warnings;
  for (const auto& w : rep.warnings) spdlog::warn("{}", w);
  return rep;
}

void write_report(const Report& report, const fs::path& dir) {
  fs::create_directories(dir);
  write_file_atomic(dir / "radar.csv", report.radar_csv);
  write_file_atomic(dir / "heatmap.csv", report.heatmap_csv);
  write_file_atomic(dir / "boxplot.csv", report.boxplot_csv);
  write_file_atomic(dir / "scatter.csv", report.scatter_csv);
  write_file_atomic(dir / "keywords.csv", report.keywords_csv);
  write_file_atomic(dir / "bundle.json", report.bundle.dump(2) + "\n");
}

}  // namespace storybias
