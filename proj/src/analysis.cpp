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

#include "storybias/analysis.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "storybias/error.hpp"
#include "storybias/kernels.hpp"

namespace storybias {
namespace fs = std::filesystem;

std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::kAdjectives: return "adjectives";
    case Dimension::kEnvironment: return "environment";
    case Dimension::kCultural: return "cultural";
  }
  return "adjectives";
}

Dimension parse_dimension(std::string_view s) {
  if (s == "adjectives") return Dimension::kAdjectives;
  if (s == "environment") return Dimension::kEnvironment;
  if (s == "cultural") return Dimension::kCultural;
  throw ConfigError("unknown extraction dimension '" + std::string(s) + "'");
}

namespace {

const std::vector<std::string>& terms_of(const ExtractionRecord& e, Dimension d) {
  switch (d) {
    case Dimension::kAdjectives: return e.adjectives;
    case Dimension::kEnvironment: return e.environment;
    case Dimension::kCultural: return e.cultural;
  }
  return e.adjectives;
}

Axis require_axis(std::string_view key) {
  auto a = parse_axis(key);
  if (!a) throw ConfigError("unknown conditioning axis '" + std::string(key) + "'");
  return *a;
}

ordered_json contrast_json(const KeywordContrast& c) {
  ordered_json j;
  j["axis"] = axis_key(c.axis);
  j["group_a"] = c.group_a;
  j["group_b"] = c.group_b;
  return j;
}

KeywordContrast contrast_from_json(const nlohmann::json& j) {
  return {require_axis(j.at("axis").get<std::string>()), j.at("group_a").get<std::string>(),
          j.value("group_b", std::string{})};
}

struct Participant {
  const StoryRecord* story;
  const ExtractionRecord* extraction;
};

// Two-group term counts over the participants assigned by `group_of`
// (returns 0, 1, or -1 to skip).
template <typename GroupOf>
std::pair<TermCounts, TermCounts> count_groups(const std::vector<Participant>& people,
                                               const std::vector<Dimension>& dims,
                                               GroupOf group_of, std::size_t* n_a = nullptr,
                                               std::size_t* n_b = nullptr) {
  std::vector<std::vector<std::string>> merged;
  std::vector<std::size_t> groups;
  merged.reserve(people.size());
  for (const auto& p : people) {
    const int g = group_of(*p.story);
    if (g < 0) continue;
    std::vector<std::string> terms;
    std::unordered_set<std::string> seen;
    for (Dimension d : dims) {
      for (const auto& t : terms_of(*p.extraction, d)) {
        if (seen.insert(t).second) terms.push_back(t);
      }
    }
    merged.push_back(std::move(terms));
    groups.push_back(static_cast<std::size_t>(g));
  }
  std::vector<kernels::GroupedTerms> items;
  items.reserve(merged.size());
  for (std::size_t i = 0; i < merged.size(); ++i) items.push_back({groups[i], merged[i]});
  if (n_a) *n_a = static_cast<std::size_t>(std::count(groups.begin(), groups.end(), 0));
  if (n_b) *n_b = static_cast<std::size_t>(std::count(groups.begin(), groups.end(), 1));
  auto counts = kernels::parallel::count_terms(items, 2);
  return {std::move(counts[0]), std::move(counts[1])};
}

FrequencyTable make_table(const TermCounts& counts, Axis axis, const std::string& value,
                          const Scope& scope) {
  FrequencyTable t;
  t.group = {axis, value, scope};
  for (const auto& [term, n] : counts) t.add(term, n);
  return t;
}

}  // namespace

AnalysisConfig AnalysisConfig::from_json(const nlohmann::json& j) {
  AnalysisConfig c;
  c.male_value = j.value("male_value", c.male_value);
  c.female_value = j.value("female_value", c.female_value);
  if (j.contains("fingerprint_dimensions")) {
    c.fingerprint_dimensions.clear();
    for (const auto& d : j["fingerprint_dimensions"]) {
      c.fingerprint_dimensions.push_back(parse_dimension(d.get<std::string>()));
    }
  }
  if (j.contains("keyword_dimensions")) {
    c.keyword_dimensions.clear();
    for (const auto& d : j["keyword_dimensions"]) {
      c.keyword_dimensions.push_back(parse_dimension(d.get<std::string>()));
    }
  }
  if (j.contains("contrasts")) {
    c.contrasts.clear();
    for (const auto& x : j["contrasts"]) c.contrasts.push_back(contrast_from_json(x));
  }
  c.prior_mass = j.value("prior_mass", c.prior_mass);
  if (!(c.prior_mass > 0)) throw ConfigError("prior_mass must be > 0");
  if (j.contains("grouping")) c.grouping = j["grouping"].get<std::map<std::string, std::string>>();
  if (j.contains("excluded")) c.excluded = j["excluded"].get<std::set<std::string>>();
  return c;
}

AnalysisResult analyze(std::span<const StoryRecord> corpus,
                       std::span<const ExtractionRecord> extractions,
                       std::optional<std::span<const ValidityRecord>> validity,
                       const CategoryLexicon& lexicon, const AnalysisConfig& config) {
  AnalysisResult result;
  auto warn = [&](std::string msg) {
    spdlog::warn("{}", msg);
    result.warnings.push_back(std::move(msg));
  };

  std::unordered_map<std::string, bool> valid;
  if (validity) {
    for (const auto& v : *validity) valid[v.story_id] = v.is_valid;
    result.vsr = compute_vsr(*validity);
  }
  std::unordered_map<std::string, const ExtractionRecord*> extraction_of;
  for (const auto& e : extractions) {
    if (!e.extraction_failed) extraction_of.emplace(e.story_id, &e);
  }

  std::map<Scope, std::vector<Participant>> by_scope;
  for (const auto& s : corpus) {
    if (validity) {
      auto v = valid.find(s.story_id);
      if (v == valid.end() || !v->second) continue;
    }
    auto e = extraction_of.find(s.story_id);
    if (e == extraction_of.end()) continue;
    by_scope[{s.prompt_config.language, s.model_id}].push_back({&s, e->second});
  }
  for (auto& [_, people] : by_scope) {
    std::sort(people.begin(), people.end(), [](const Participant& a, const Participant& b) {
      return a.story->story_id < b.story->story_id;
    });
  }

  auto gender_group = [&](const StoryRecord& s) {
    const auto& g = s.prompt_config.child_gender;
    return g == config.male_value ? 0 : g == config.female_value ? 1 : -1;
  };

  std::map<std::string, std::map<std::string, BiasFingerprint>> fps_by_model;
  std::map<std::string, std::map<std::string, double>> jsd_by_model;

  for (const auto& [scope, people] : by_scope) {
    ScopeMetrics sm;
    sm.scope = scope;
    auto [fm, ff] = count_groups(people, config.fingerprint_dimensions, gender_group,
                                 &sm.male_stories, &sm.female_stories);
    const auto male = make_table(fm, Axis::kChildGender, config.male_value, scope);
    const auto female = make_table(ff, Axis::kChildGender, config.female_value, scope);
    if (male.total > 0 && female.total > 0) {
      sm.fingerprint = fingerprint(male, female, lexicon, scope);
      fps_by_model[scope.model_id][scope.language] = *sm.fingerprint;
    } else {
      warn("no fingerprint for " + scope.model_id + "/" + scope.language +
           ": a gender group has no terms");
    }

    auto [am, af] = count_groups(people, {Dimension::kAdjectives}, gender_group);
    const auto adj_m = make_table(am, Axis::kChildGender, config.male_value, scope);
    const auto adj_f = make_table(af, Axis::kChildGender, config.female_value, scope);
    if (adj_m.total > 0 && adj_f.total > 0) {
      sm.jsd = bias_strength_jsd(to_distribution(adj_m), to_distribution(adj_f));
      jsd_by_model[scope.model_id][scope.language] = *sm.jsd;
    }

    for (const auto& contrast : config.contrasts) {
      auto group_of = [&](const StoryRecord& s) {
        const auto& v = s.prompt_config.value(contrast.axis);
        if (v == contrast.group_a) return 0;
        if (contrast.group_b.empty() || v == contrast.group_b) return 1;
        return -1;
      };
      for (Dimension d : config.keyword_dimensions) {
        auto [ca, cb] = count_groups(people, {d}, group_of);
        if (ca.empty() || cb.empty()) continue;
        const auto prior = pooled_prior(ca, cb);
        if (prior.size() < 2) {
          // One term holds all prior mass: its log-odds are undefined.
          warn("no " + std::string(to_string(d)) + " keywords for " + scope.model_id + "/" +
               scope.language + " " + std::string(axis_key(contrast.axis)) +
               ": vocabulary has a single term");
          continue;
        }
        KeywordScores ks;
        ks.scope = scope;
        ks.contrast = contrast;
        ks.dimension = d;
        ks.z = log_odds_z(ca, cb, prior, config.prior_mass);
        result.keywords.push_back(std::move(ks));
      }
    }
    result.scopes.push_back(std::move(sm));
  }

  for (const auto& [model, fps] : fps_by_model) {
    if (fps.size() >= 2) {
      result.similarity[model] = cross_lingual_similarity(fps);
    } else {
      const auto& fp = fps.begin()->second;
      const bool nonzero = std::any_of(fp.scores.begin(), fp.scores.end(),
                                       [](double v) { return v != 0.0; });
      result.similarity[model] = {{fps.begin()->first}, {nonzero ? 1.0 : 0.0}};
    }
  }
  for (const auto& [model, jsd] : jsd_by_model) {
    try {
      result.grouped_jsd[model] = grouped_bias_strength(jsd, config.grouping, config.excluded);
    } catch (const ConfigError& e) {
      warn("no grouped bias strength for " + model + ": " + e.what());
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

ordered_json AnalysisResult::to_json() const {
  ordered_json j;
  j["format"] = "storybias-metrics/1";
  ordered_json scopes_j = ordered_json::array();
  for (const auto& s : scopes) {
    ordered_json o;
    o["language"] = s.scope.language;
    o["model_id"] = s.scope.model_id;
    o["male_stories"] = s.male_stories;
    o["female_stories"] = s.female_stories;
    o["fingerprint"] = s.fingerprint ? s.fingerprint->to_json() : ordered_json(nullptr);
    o["jsd"] = s.jsd ? ordered_json(*s.jsd) : ordered_json(nullptr);
    scopes_j.push_back(std::move(o));
  }
  j["scopes"] = std::move(scopes_j);

  ordered_json sim = ordered_json::object();
  for (const auto& [model, m] : similarity) {
    sim[model]["labels"] = m.labels;
    sim[model]["values"] = m.values;
  }
  j["similarity"] = std::move(sim);

  ordered_json grouped = ordered_json::object();
  for (const auto& [model, groups] : grouped_jsd) {
    for (const auto& [name, box] : groups) {
      ordered_json b;
      ordered_json vals = ordered_json::array();
      for (const auto& [lang, v] : box.values) vals.push_back({{"language", lang}, {"jsd", v}});
      b["values"] = std::move(vals);
      b["min"] = box.min;
      b["q1"] = box.q1;
      b["median"] = box.median;
      b["q3"] = box.q3;
      b["max"] = box.max;
      grouped[model][name] = std::move(b);
    }
  }
  j["grouped_jsd"] = std::move(grouped);

  ordered_json kw = ordered_json::array();
  for (const auto& k : keywords) {
    ordered_json o;
    o["language"] = k.scope.language;
    o["model_id"] = k.scope.model_id;
    o["contrast"] = contrast_json(k.contrast);
    o["dimension"] = to_string(k.dimension);
    ordered_json z = ordered_json::object();
    for (const auto& [t, v] : k.z) z[t] = v;
    o["z"] = std::move(z);
    kw.push_back(std::move(o));
  }
  j["keywords"] = std::move(kw);

  ordered_json vsr_j = ordered_json::array();
  for (const auto& r : vsr) {
    vsr_j.push_back({{"language", r.language},
                     {"model_id", r.model_id},
                     {"total", r.total},
                     {"valid", r.valid},
                     {"language_valid", r.language_valid}});
  }
  j["vsr"] = std::move(vsr_j);
  j["warnings"] = warnings;
  return j;
}

AnalysisResult AnalysisResult::from_json(const nlohmann::json& j) {
  AnalysisResult r;
  for (const auto& o : j.at("scopes")) {
    ScopeMetrics s;
    s.scope = {o.at("language").get<std::string>(), o.at("model_id").get<std::string>()};
    s.male_stories = o.at("male_stories").get<std::size_t>();
    s.female_stories = o.at("female_stories").get<std::size_t>();
    if (!o.at("fingerprint").is_null()) s.fingerprint = BiasFingerprint::from_json(o["fingerprint"]);
    if (!o.at("jsd").is_null()) s.jsd = o["jsd"].get<double>();
    r.scopes.push_back(std::move(s));
  }
  for (const auto& [model, m] : j.at("similarity").items()) {
    r.similarity[model] = {m.at("labels").get<std::vector<std::string>>(),
                           m.at("values").get<std::vector<double>>()};
  }
  for (const auto& [model, groups] : j.at("grouped_jsd").items()) {
    for (const auto& [name, b] : groups.items()) {
      BoxStats box;
      for (const auto& v : b.at("values")) {
        box.values.emplace_back(v.at("language").get<std::string>(), v.at("jsd").get<double>());
      }
      box.min = b.at("min");
      box.q1 = b.at("q1");
      box.median = b.at("median");
      box.q3 = b.at("q3");
      box.max = b.at("max");
      r.grouped_jsd[model][name] = std::move(box);
    }
  }
  for (const auto& o : j.at("keywords")) {
    KeywordScores k;
    k.scope = {o.at("language").get<std::string>(), o.at("model_id").get<std::string>()};
    k.contrast = contrast_from_json(o.at("contrast"));
    k.dimension = parse_dimension(o.at("dimension").get<std::string>());
    for (const auto& [t, v] : o.at("z").items()) k.z[t] = v.get<double>();
    r.keywords.push_back(std::move(k));
  }
  for (const auto& o : j.at("vsr")) {
    VsrRow row;
    row.language = o.at("language").get<std::string>();
    row.model_id = o.at("model_id").get<std::string>();
    row.total = o.at("total").get<std::size_t>();
    row.valid = o.at("valid").get<std::size_t>();
    row.language_valid = o.at("language_valid").get<std::size_t>();
    r.vsr.push_back(std::move(row));
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  return r;
}

void write_metrics_dir(const AnalysisResult& result, const fs::path& dir) {
  fs::create_directories(dir);
  write_file_atomic(dir / "metrics.json", result.to_json().dump(2) + "\n");
  if (!result.vsr.empty()) write_file_atomic(dir / "vsr.csv", vsr_csv(result.vsr));
}

AnalysisResult read_metrics_dir(const fs::path& dir) {
  const auto path = dir / "metrics.json";
  try {
    return AnalysisResult::from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace storybias
