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

#include "storybias/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "storybias/error.hpp"
#include "storybias/kernels.hpp"
#include "storybias/text.hpp"

namespace storybias {

// ---------------------------------------------------------------------------
// CategoryLexicon

CategoryLexicon::CategoryLexicon(std::vector<std::string> categories)
    : categories_(std::move(categories)) {
  std::set<std::string> seen;
  for (const auto& c : categories_) {
    if (c.empty() || !seen.insert(c).second) {
      throw ConfigError("category names must be unique and non-empty");
    }
  }
}

CategoryLexicon CategoryLexicon::from_json(const nlohmann::json& j) {
  CategoryLexicon lex(j.at("categories").get<std::vector<std::string>>());
  if (j.contains("terms")) {
    for (const auto& [category, by_lang] : j.at("terms").items()) {
      for (const auto& [lang, terms] : by_lang.items()) {
        for (const auto& t : terms) lex.add_term(category, lang, t.get<std::string>());
      }
    }
  }
  return lex;
}

CategoryLexicon CategoryLexicon::load(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse lexicon " + path.string() + ": " + e.what());
  }
}

std::optional<std::size_t> CategoryLexicon::index_of(std::string_view category) const {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i] == category) return i;
  }
  return std::nullopt;
}

void CategoryLexicon::add_term(std::string_view category, std::string_view language,
                               std::string_view term) {
  auto idx = index_of(category);
  if (!idx) throw ConfigError("lexicon term for undeclared category '" + std::string(category) + "'");
  auto norm = text::normalize_term(term, language);
  if (!norm) throw ConfigError("empty lexicon term in category '" + std::string(category) + "'");
  auto& table = terms_[std::string(language)];
  auto [it, inserted] = table.emplace(*norm, *idx);
  if (!inserted && it->second != *idx) {
    throw ConfigError("lexicon term '" + *norm + "' (" + std::string(language) +
                      ") is in both '" + categories_[it->second] + "' and '" +
                      std::string(category) + "'");
  }
}

std::optional<std::size_t> CategoryLexicon::category_of(std::string_view term,
                                                        std::string_view language) const {
  auto lang = terms_.find(language);
  if (lang == terms_.end()) return std::nullopt;
  auto it = lang->second.find(std::string(term));
  if (it == lang->second.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Frequencies and category probabilities

void FrequencyTable::add(const std::string& term, std::int64_t n) {
  if (n < 0) throw ValidationError("negative term count");
  counts[term] += n;
  total += n;
}

namespace {

// Category-mapped counts for one table, indexed like lexicon.categories().
std::vector<std::int64_t> category_counts(const FrequencyTable& table,
                                          const CategoryLexicon& lexicon) {
  std::vector<std::int64_t> out(lexicon.categories().size(), 0);
  for (const auto& [term, n] : table.counts) {
    if (auto c = lexicon.category_of(term, table.group.scope.language)) out[*c] += n;
  }
  return out;
}

double probability(const std::vector<std::int64_t>& counts, std::size_t c) {
  std::int64_t mapped = 0;
  for (auto n : counts) mapped += n;
  return mapped == 0 ? 0.0 : static_cast<double>(counts[c]) / static_cast<double>(mapped);
}

}  // namespace

double category_probability(const FrequencyTable& table, const CategoryLexicon& lexicon,
                            std::string_view category) {
  auto idx = lexicon.index_of(category);
  if (!idx) throw ConfigError("unknown category '" + std::string(category) + "'");
  return probability(category_counts(table, lexicon), *idx);
}

double directional_bias(double p_m, double p_f) {
  const double raw = std::log(p_m + kEpsilon) - std::log(p_f + kEpsilon);
  return std::clamp(raw, -kScoreClip, kScoreClip);
}

Distribution to_distribution(const FrequencyTable& table) {
  Distribution d;
  if (table.total <= 0) return d;
  for (const auto& [term, n] : table.counts) {
    if (n > 0) d[term] = static_cast<double>(n) / static_cast<double>(table.total);
  }
  return d;
}

double bias_strength_jsd(const Distribution& p_m, const Distribution& p_f) {
  for (const auto* d : {&p_m, &p_f}) {
    double s = 0.0;
    for (const auto& [_, v] : *d) {
      if (v < 0) throw ValidationError("negative probability");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw ValidationError("distribution sums to " + std::to_string(s) + ", expected 1");
    }
  }
  // Union vocabulary in sorted order: merge of two sorted maps.
  std::vector<double> p, q;
  auto a = p_m.begin();
  auto b = p_f.begin();
  while (a != p_m.end() || b != p_f.end()) {
    if (b == p_f.end() || (a != p_m.end() && a->first < b->first)) {
      p.push_back(a->second);
      q.push_back(0.0);
      ++a;
    } else if (a == p_m.end() || b->first < a->first) {
      p.push_back(0.0);
      q.push_back(b->second);
      ++b;
    } else {
      p.push_back(a->second);
      q.push_back(b->second);
      ++a;
      ++b;
    }
  }
  const double norm = 1.0 + kEpsilon * static_cast<double>(p.size());
  for (auto& v : p) v = (v + kEpsilon) / norm;
  for (auto& v : q) v = (v + kEpsilon) / norm;
  return kernels::parallel::jsd(p, q);
}

// ---------------------------------------------------------------------------
// Fingerprints and similarity

ordered_json BiasFingerprint::to_json() const {
  ordered_json j;
  j["language"] = scope.language;
  j["model_id"] = scope.model_id;
  j["categories"] = categories;
  j["scores"] = scores;
  j["coverage_mask"] = coverage_mask;
  return j;
}

BiasFingerprint BiasFingerprint::from_json(const nlohmann::json& j) {
  BiasFingerprint f;
  f.scope = {j.at("language").get<std::string>(), j.at("model_id").get<std::string>()};
  f.categories = j.at("categories").get<std::vector<std::string>>();
  f.scores = j.at("scores").get<std::vector<double>>();
  f.coverage_mask = j.at("coverage_mask").get<std::vector<bool>>();
  if (f.scores.size() != f.categories.size() || f.coverage_mask.size() != f.categories.size()) {
    throw ValidationError("fingerprint vectors differ in length");
  }
  return f;
}

BiasFingerprint fingerprint(const FrequencyTable& male, const FrequencyTable& female,
                            const CategoryLexicon& lexicon, const Scope& scope) {
  if (male.total <= 0 || female.total <= 0) {
    throw ValidationError("fingerprint needs non-empty male and female groups for " +
                          scope.model_id + "/" + scope.language);
  }
  FrequencyTable m = male, f = female;
  m.group.scope = scope;
  f.group.scope = scope;
  const auto cm = category_counts(m, lexicon);
  const auto cf = category_counts(f, lexicon);
  BiasFingerprint fp;
  fp.scope = scope;
  fp.categories = lexicon.categories();
  for (std::size_t c = 0; c < fp.categories.size(); ++c) {
    const bool evidence = cm[c] + cf[c] > 0;
    fp.coverage_mask.push_back(evidence);
    fp.scores.push_back(evidence ? directional_bias(probability(cm, c), probability(cf, c)) : 0.0);
  }
  return fp;
}

SimilarityMatrix cross_lingual_similarity(const std::map<std::string, BiasFingerprint>& fps) {
  if (fps.size() < 2) throw ConfigError("similarity needs at least two languages");

  // Canonical order: topological sort of the per-fingerprint orders, ties
  // going to the category seen first. A cycle means two fingerprints order
  // some categories differently.
  std::vector<std::string> seen;
  std::map<std::string, std::set<std::string>> succ;
  std::map<std::string, std::size_t> indegree;
  for (const auto& [_, fp] : fps) {
    for (std::size_t i = 0; i < fp.categories.size(); ++i) {
      const auto& c = fp.categories[i];
      if (!indegree.count(c)) {
        indegree[c] = 0;
        seen.push_back(c);
      }
      if (i > 0 && succ[fp.categories[i - 1]].insert(c).second) ++indegree[c];
    }
  }
  std::vector<std::string> order;
  std::vector<bool> placed(seen.size(), false);
  while (order.size() < seen.size()) {
    std::size_t pick = seen.size();
    for (std::size_t i = 0; i < seen.size(); ++i) {
      if (!placed[i] && indegree[seen[i]] == 0) {
        pick = i;
        break;
      }
    }
    if (pick == seen.size()) {
      for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!placed[i]) {
          throw ConfigError("fingerprints disagree on category order at '" + seen[i] + "'");
        }
      }
    }
    placed[pick] = true;
    order.push_back(seen[pick]);
    for (const auto& next : succ[seen[pick]]) --indegree[next];
  }

  SimilarityMatrix out;
  std::vector<std::vector<double>> vectors;
  for (const auto& [lang, fp] : fps) {
    out.labels.push_back(lang);
    std::vector<double> v(order.size(), 0.0);
    for (std::size_t i = 0; i < fp.categories.size(); ++i) {
      if (!fp.coverage_mask[i]) continue;
      auto pos = std::find(order.begin(), order.end(), fp.categories[i]) - order.begin();
      v[static_cast<std::size_t>(pos)] = fp.scores[i];
    }
    vectors.push_back(std::move(v));
  }
  out.values = kernels::parallel::cosine_matrix(vectors);
  return out;
}

// ---------------------------------------------------------------------------
// Log-odds with informative Dirichlet prior

TermCounts pooled_prior(const TermCounts& a, const TermCounts& b) {
  TermCounts out = a;
  for (const auto& [t, n] : b) out[t] += n;
  return out;
}

std::map<std::string, double> log_odds_z(const TermCounts& counts_m, const TermCounts& counts_f,
                                         const TermCounts& prior, double prior_mass) {
  if (!(prior_mass > 0)) throw ValidationError("prior_mass must be > 0");
  std::int64_t prior_total = 0;
  for (const auto& [_, n] : prior) {
    if (n < 0) throw ValidationError("negative prior count");
    prior_total += n;
  }
  std::vector<std::string> vocab;
  for (const auto& [t, _] : counts_m) vocab.push_back(t);
  for (const auto& [t, _] : counts_f) vocab.push_back(t);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());

  kernels::DenseCounts dense;
  dense.alpha0 = prior_mass;
  for (const auto& t : vocab) {
    auto p = prior.find(t);
    if (p == prior.end() || p->second <= 0 || prior_total <= 0) {
      throw ValidationError("term '" + t + "' has no prior mass");
    }
    auto m = counts_m.find(t);
    auto f = counts_f.find(t);
    dense.group_a.push_back(m == counts_m.end() ? 0.0 : static_cast<double>(m->second));
    dense.group_b.push_back(f == counts_f.end() ? 0.0 : static_cast<double>(f->second));
    dense.alpha.push_back(prior_mass * static_cast<double>(p->second) /
                          static_cast<double>(prior_total));
  }
  const auto z = kernels::parallel::log_odds_z(dense);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < vocab.size(); ++i) out.emplace(vocab[i], z[i]);
  return out;
}

KeywordLists top_keywords(const std::map<std::string, double>& z, std::size_t k) {
  KeywordLists out;
  if (k == 0) throw ValidationError("k must be >= 1");
  for (const auto& [t, v] : z) {
    if (v >= 0) out.positive.emplace_back(t, v);
    if (v <= 0) out.negative.emplace_back(t, v);
  }
  std::stable_sort(out.positive.begin(), out.positive.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::stable_sort(out.negative.begin(), out.negative.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  if (out.positive.size() > k) out.positive.resize(k);
  if (out.negative.size() > k) out.negative.resize(k);
  return out;
}

// ---------------------------------------------------------------------------
// Grouped bias strength

double quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw ValidationError("quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sample.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sample[lo] + frac * (sample[hi] - sample[lo]);
}

std::map<std::string, std::string> default_gender_grouping() {
  return {{"es", "G-Group"}, {"ru", "G-Group"}, {"ar", "G-Group"}, {"en", "N-Group"},
          {"zh", "N-Group"}, {"ja", "N-Group"}, {"ko", "N-Group"}};
}

std::map<std::string, BoxStats> grouped_bias_strength(
    const std::map<std::string, double>& jsd_by_language,
    const std::map<std::string, std::string>& grouping, const std::set<std::string>& excluded) {
  std::map<std::string, BoxStats> out;
  for (const auto& [_, group] : grouping) out[group];
  for (const auto& [lang, v] : jsd_by_language) {
    if (excluded.count(lang)) continue;
    auto g = grouping.find(lang);
    if (g == grouping.end()) {
      throw ConfigError("language '" + lang + "' is not assigned to a group");
    }
    out[g->second].values.emplace_back(lang, v);
  }
  for (auto& [name, box] : out) {
    if (box.values.empty()) throw ConfigError("group '" + name + "' has no languages");
    std::vector<double> sample;
    for (const auto& [_, v] : box.values) sample.push_back(v);
    box.min = quantile(sample, 0.0);
    box.q1 = quantile(sample, 0.25);
    box.median = quantile(sample, 0.5);
    box.q3 = quantile(sample, 0.75);
    box.max = quantile(sample, 1.0);
  }
  return out;
}

}  // namespace storybias
