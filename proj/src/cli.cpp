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

#include "storybias/cli.hpp"

#include <CLI11.hpp>
#include <signal.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <iostream>
#include <thread>

#include "storybias/analysis.hpp"
#include "storybias/client.hpp"
#include "storybias/error.hpp"
#include "storybias/explorer.hpp"
#include "storybias/kernels.hpp"
#include "storybias/extractor.hpp"
#include "storybias/langfilter.hpp"
#include "storybias/manifest.hpp"
#include "storybias/orchestrator.hpp"
#include "storybias/prompt.hpp"
#include "storybias/report.hpp"

namespace storybias {
namespace fs = std::filesystem;

namespace {

// Reads --config files as JSON. Top-level keys set global options; an object
// under a subcommand name sets that subcommand's options. Values given on
// the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(value, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

void setup_logging(const std::string& level) {
  auto logger = spdlog::get("storybias");
  if (!logger) logger = spdlog::stderr_color_mt("storybias");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(level));
}

struct Globals {
  std::string log_level = "info";
  std::optional<std::int64_t> seed;
};

// --- permute ----------------------------------------------------------------

struct PermuteArgs {
  std::string space;
  std::string templates;
  std::string out;
  std::string params;
  std::vector<std::string> models;
  std::vector<std::string> languages;
  std::optional<int> samples;
  bool dry_run = false;
};

int cmd_permute(const PermuteArgs& a, const Globals& g) {
  ConfigSpace space = a.space.empty()
                          ? ConfigSpace::default_space()
                          : ConfigSpace::from_json(nlohmann::json::parse(read_file(a.space)));
  if (!a.languages.empty()) {
    for (const auto& l : a.languages) {
      if (std::find(space.languages.begin(), space.languages.end(), l) == space.languages.end()) {
        throw ConfigError("language '" + l + "' is not in the configuration space");
      }
    }
    space.languages = a.languages;
  }
  space.validate();

  std::vector<PromptConfig> configs;
  for (const auto& lang : space.languages) {
    auto c = enumerate_configs(space, lang);
    spdlog::info("language {}: {} configs", lang, c.size());
    configs.insert(configs.end(), c.begin(), c.end());
  }
  spdlog::info("total: {} configs over {} languages", configs.size(), space.languages.size());
  if (a.dry_run) return kExitOk;
  if (a.out.empty()) throw ConfigError("--out is required unless --dry-run is given");
  if (a.templates.empty()) throw ConfigError("--templates is required unless --dry-run is given");
  if (a.models.empty()) throw ConfigError("--models is required unless --dry-run is given");

  GenerationParams params;
  if (!a.params.empty()) params = GenerationParams::from_json(nlohmann::json::parse(read_file(a.params)));
  if (a.samples) params.samples_per_prompt = *a.samples;
  if (g.seed) params.random_seed = *g.seed;
  params.validate();

  auto all = load_templates(a.templates);
  std::map<std::string, LocalizationTemplate> templates;
  for (const auto& lang : space.languages) {
    auto it = all.find(lang);
    if (it == all.end()) throw ConfigError("no template for language '" + lang + "' in " + a.templates);
    it->second.check_coverage(space);
    templates.insert(*it);
  }
  const auto manifest = emit_manifest(render_prompts(configs, templates), params, a.models);
  write_manifest(manifest, a.out);
  spdlog::info("manifest {}: {} prompts, {} rows", a.out, manifest.prompts.size(),
               manifest.rows.size());
  return kExitOk;
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string manifest, endpoint, out;
};

int cmd_generate(const GenerateArgs& a) {
  const auto endpoints = load_endpoints(a.endpoint);
  const auto r = run_campaign(a.manifest, endpoints, a.out);
  spdlog::info("generate: {} done, {} failed, {} already done, {} without endpoint, {} requests",
               r.done, r.failed, r.already_done, r.without_endpoint, r.requests_issued);
  if (!r.complete()) {
    spdlog::error("campaign incomplete; rerun the same command to resume");
    return kExitFailure;
  }
  return kExitOk;
}

// --- filter -----------------------------------------------------------------

struct FilterArgs {
  std::string in, out, rules, lid = "script", vsr;
};

int cmd_filter(const FilterArgs& a) {
  const auto rules = a.rules.empty() ? RefusalRuleset::defaults() : RefusalRuleset::load(a.rules);
  const auto lid = make_language_id(a.lid);
  const auto corpus = read_corpus(a.in);
  const auto validity = kernels::parallel::validate_batch(corpus, *lid, rules);
  std::vector<std::string> lines;
  lines.reserve(validity.size());
  for (const auto& v : validity) lines.push_back(to_json(v).dump());
  write_jsonl_atomic(a.out, lines);
  const auto rows = compute_vsr(validity);
  const fs::path vsr_path = a.vsr.empty() ? fs::path(a.out).parent_path() / "vsr.csv" : fs::path(a.vsr);
  write_file_atomic(vsr_path, vsr_csv(rows));
  for (const auto& r : rows) {
    spdlog::info("VSR {}/{}: {}% ({} of {})", r.model_id, r.language,
                 format_percent_tenths(r.valid, r.total), r.valid, r.total);
  }
  return kExitOk;
}

// --- extract ----------------------------------------------------------------

struct ExtractArgs {
  std::string corpus, validity, endpoint, out, spec, model;
};

int cmd_extract(const ExtractArgs& a) {
  const auto spec = a.spec.empty()
                        ? ExtractionPromptSpec::defaults()
                        : ExtractionPromptSpec::from_json(nlohmann::json::parse(read_file(a.spec)));
  const auto endpoints = load_endpoints(a.endpoint);
  const std::string& want = a.model.empty() ? spec.extractor_model_id : a.model;
  const EndpointConfig* chosen = nullptr;
  for (const auto& e : endpoints) {
    if (e.model_id == want) chosen = &e;
  }
  if (!chosen && endpoints.size() == 1) chosen = &endpoints.front();
  if (!chosen) throw ConfigError("no endpoint for extractor model '" + want + "'");
  const auto r = run_extraction(a.corpus, a.validity, spec, *chosen, a.out);
  return r.failed == 0 ? kExitOk : kExitFailure;
}

// --- analyze ----------------------------------------------------------------

struct AnalyzeArgs {
  std::string corpus, extractions, lexicon, validity, out, settings;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const auto corpus = read_corpus(a.corpus);
  const auto extractions = read_extractions(a.extractions);
  const auto lexicon = CategoryLexicon::load(a.lexicon);
  const auto config = a.settings.empty()
                          ? AnalysisConfig{}
                          : AnalysisConfig::from_json(nlohmann::json::parse(read_file(a.settings)));
  std::vector<ValidityRecord> validity;
  if (!a.validity.empty()) validity = read_validity(a.validity);
  std::optional<std::span<const ValidityRecord>> v;
  if (!a.validity.empty()) v = std::span<const ValidityRecord>(validity);
  const auto result = analyze(corpus, extractions, v, lexicon, config);
  write_metrics_dir(result, a.out);
  spdlog::info("analyze: {} scopes written to {}", result.scopes.size(), a.out);
  return kExitOk;
}

// --- report -----------------------------------------------------------------

struct ReportArgs {
  std::string metrics, out;
  std::size_t top_k = 10;
};

int cmd_report(const ReportArgs& a) {
  const auto metrics = read_metrics_dir(a.metrics);
  const auto report = build_report(metrics, {a.top_k});
  write_report(report, a.out);
  spdlog::info("report written to {}", a.out);
  return kExitOk;
}

// --- serve ------------------------------------------------------------------

struct ServeArgs {
  std::string data, host = "127.0.0.1", static_dir, cors_origin = "*";
  int port = 8080;
};

int cmd_serve(const ServeArgs& a) {
  auto index = std::make_shared<const ExplorerIndex>(ExplorerIndex::load(a.data));
  fs::path static_dir = a.static_dir.empty() ? fs::path(a.data) / "static" : fs::path(a.static_dir);
  ExplorerServer server(index, static_dir, a.cors_origin);

  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  const int port = server.bind(a.host, a.port);
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    spdlog::info("signal {}; shutting down", sig);
    server.stop();
  });
  spdlog::info("serving {} on http://{}:{}", a.data, a.host, port);
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return kExitOk;
}

// --- validate-annotations ---------------------------------------------------

struct AnnotationArgs {
  std::string annotations, out;
};

int cmd_validate_annotations(const AnnotationArgs& a) {
  const auto rows = read_annotations_csv(a.annotations);
  std::vector<std::pair<int, int>> pairs;
  std::map<std::string, std::vector<std::pair<int, int>>> by_attribute;
  for (const auto& r : rows) {
    pairs.emplace_back(r.annotator_a, r.annotator_b);
    by_attribute[r.attribute].emplace_back(r.annotator_a, r.annotator_b);
  }
  auto to_j = [](const AnnotationStats& s) {
    ordered_json j;
    j["items"] = s.items;
    j["kappa"] = s.kappa ? ordered_json(*s.kappa) : ordered_json(nullptr);
    j["precision_a"] = s.precision_a;
    j["precision_b"] = s.precision_b;
    j["precision"] = s.precision;
    return j;
  };
  const auto overall = score_annotations(pairs);
  ordered_json out;
  out["overall"] = to_j(overall);
  ordered_json attrs = ordered_json::object();
  for (const auto& [attr, p] : by_attribute) {
    if (p.size() >= 2) attrs[attr] = to_j(score_annotations(p));
  }
  out["by_attribute"] = std::move(attrs);
  spdlog::info("annotations: {} items, kappa {}, precision {:.3f}%", overall.items,
               overall.kappa ? fmt::format("{:.4f}", *overall.kappa) : std::string("undefined"),
               100.0 * overall.precision);
  if (!a.out.empty()) write_file_atomic(a.out, out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Multilingual children's-story bias evaluation toolkit", "storybias"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file (flags override its values)");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  std::int64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Base random seed (overrides the manifest params)");

  PermuteArgs pa;
  auto* permute = app.add_subcommand("permute", "Enumerate prompt configurations into a manifest");
  permute->add_option("--space", pa.space, "Configuration space JSON (default: built-in space)")
      ->check(CLI::ExistingFile);
  permute->add_option("--templates", pa.templates, "Directory of <language>.json templates")
      ->check(CLI::ExistingDirectory);
  permute->add_option("--out", pa.out, "Manifest path");
  permute->add_option("--models", pa.models, "Model ids to schedule")->delimiter(',');
  permute->add_option("--languages", pa.languages, "Restrict to these languages")->delimiter(',');
  permute->add_option("--samples", pa.samples, "Samples per prompt")->check(CLI::PositiveNumber);
  permute->add_option("--params", pa.params, "Generation parameters JSON")->check(CLI::ExistingFile);
  permute->add_flag("--dry-run", pa.dry_run, "Only report configuration counts");

  GenerateArgs ga;
  auto* generate = app.add_subcommand("generate", "Run (or resume) a generation campaign");
  generate->add_option("--manifest", ga.manifest, "Manifest path")->required();
  generate->add_option("--endpoint", ga.endpoint, "Endpoint configuration JSON")
      ->required()
      ->check(CLI::ExistingFile);
  generate->add_option("--out", ga.out, "Corpus JSONL path")->required();

  FilterArgs fa;
  auto* filter = app.add_subcommand("filter", "Language-ID and refusal filtering");
  filter->add_option("--in", fa.in, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  filter->add_option("--out", fa.out, "Validity JSONL")->required();
  filter->add_option("--rules", fa.rules, "Refusal rules JSON")->check(CLI::ExistingFile);
  filter->add_option("--lid", fa.lid, "Language identifier: script or table:<file>");
  filter->add_option("--vsr", fa.vsr, "VSR CSV path (default: vsr.csv beside --out)");

  ExtractArgs ea;
  auto* extract = app.add_subcommand("extract", "LLM-based attribute extraction");
  extract->add_option("--corpus", ea.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  extract->add_option("--validity", ea.validity, "Validity JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--endpoint", ea.endpoint, "Endpoint configuration JSON")
      ->required()
      ->check(CLI::ExistingFile);
  extract->add_option("--out", ea.out, "Extractions JSONL")->required();
  extract->add_option("--spec", ea.spec, "Extraction prompt JSON")->check(CLI::ExistingFile);
  extract->add_option("--model", ea.model, "Endpoint model_id to use");

  AnalyzeArgs aa;
  auto* analyze_cmd = app.add_subcommand("analyze", "Compute bias metrics");
  analyze_cmd->add_option("--corpus", aa.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--extractions", aa.extractions, "Extractions JSONL")
      ->required()
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--lexicon", aa.lexicon, "Category lexicon JSON")
      ->required()
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--validity", aa.validity, "Validity JSONL")->check(CLI::ExistingFile);
  analyze_cmd->add_option("--settings", aa.settings, "Analysis settings JSON")
      ->check(CLI::ExistingFile);
  analyze_cmd->add_option("--out", aa.out, "Metrics directory")->required();

  ReportArgs ra;
  auto* report = app.add_subcommand("report", "Write figure-ready exports");
  report->add_option("--metrics", ra.metrics, "Metrics directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  report->add_option("--out", ra.out, "Export directory")->required();
  report->add_option("--top-k", ra.top_k, "Keywords per panel")->check(CLI::PositiveNumber);

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Serve the read-only explorer API");
  serve->add_option("--data", sa.data, "Data directory")->required()->check(CLI::ExistingDirectory);
  serve->add_option("--port", sa.port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", sa.host, "Bind address");
  serve->add_option("--static", sa.static_dir, "UI asset directory (default: <data>/static)");
  serve->add_option("--cors-origin", sa.cors_origin, "Access-Control-Allow-Origin value");

  AnnotationArgs na;
  auto* annotations = app.add_subcommand("validate-annotations", "Inter-annotator agreement");
  annotations->add_option("--annotations", na.annotations, "Annotation CSV")
      ->required()
      ->check(CLI::ExistingFile);
  annotations->add_option("--out", na.out, "Result JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (argc <= 1) std::cerr << app.help();
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    setup_logging(g.log_level);
    if (*permute) return cmd_permute(pa, g);
    if (*generate) return cmd_generate(ga);
    if (*filter) return cmd_filter(fa);
    if (*extract) return cmd_extract(ea);
    if (*analyze_cmd) return cmd_analyze(aa);
    if (*report) return cmd_report(ra);
    if (*serve) return cmd_serve(sa);
    if (*annotations) return cmd_validate_annotations(na);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace storybias
