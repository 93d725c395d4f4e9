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

#include <filesystem>
#include <string>
#include <vector>

#include "storybias/analysis.hpp"

namespace storybias {

struct ReportOptions {
  std::size_t top_k = 10;
};

// Figure-ready exports. CSV numbers use the shortest round-trip form; the
// bundle carries the same values plus display strings for VSR.
struct Report {
  std::string radar_csv;     // model_id,language,category,score,covered
  std::string heatmap_csv;   // model_id,row_language,col_language,similarity
  std::string boxplot_csv;   // model_id,group,language,jsd
  std::string scatter_csv;   // model_id,language,vsr,jsd
  std::string keywords_csv;  // model_id,language,axis,group_a,group_b,dimension,direction,rank,term,z
  ordered_json bundle;
  std::vector<std::string> warnings;
};

ordered_json radar_data(const AnalysisResult& metrics);
ordered_json heatmap_data(const AnalysisResult& metrics);
ordered_json boxplot_data(const AnalysisResult& metrics);
// Scopes lacking a VSR row or a JSD value are omitted with a warning.
ordered_json scatter_data(const AnalysisResult& metrics, std::vector<std::string>* warnings);
ordered_json keyword_panel(const AnalysisResult& metrics, std::size_t k);
ordered_json vsr_data(const AnalysisResult& metrics);

Report build_report(const AnalysisResult& metrics, const ReportOptions& options = {});

// radar.csv, heatmap.csv, boxplot.csv, scatter.csv, keywords.csv, bundle.json.
void write_report(const Report& report, const std::filesystem::path& dir);

// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view s);
// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace storybias
