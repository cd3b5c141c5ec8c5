#include "maleval/pipeline.hpp"

#include <algorithm>
#include <functional>

#include "maleval/csv.hpp"
#include "maleval/errors.hpp"
#include "maleval/parallel.hpp"

namespace maleval::pipeline {

namespace {

using codebase::CodebaseBundle;
using evaluation::PerSampleMetrics;
using groundtruth::GeneratedReport;
using groundtruth::GroundTruthReport;
using representation::RepMode;

json config_echo(const RunConfig& config) {
  // worker count and cache paths intentionally excluded: results are
  // required to be byte-identical across them
  json echo;
  echo["model"] = config.model.tag();
  echo["judge"] = config.judge.tag();
  echo["pass1_model"] =
      config.pass1_model.has_value() ? config.pass1_model->tag() : config.model.tag();
  echo["context_free"] = config.context_free;
  echo["with_metadata"] = config.with_metadata;
  echo["tau"] = config.tau;
  echo["fidelity_k"] = config.fidelity_k;
  echo["seed"] = config.seed;
  echo["budget_tokens"] = config.budget_tokens;
  echo["weights"] = json{{"w_i", config.weights.w_i},
                         {"w_c", config.weights.w_c},
                         {"w_e", config.weights.w_e},
                         {"w_aa", config.weights.w_aa},
                         {"w_ds", config.weights.w_ds}};
  echo["format"] = config.format;
  return echo;
}

struct SampleState {
  CodebaseBundle bundle;
  reduction::EntrypointSet entrypoints;
  reduction::ReachableSet reachable;
  std::vector<representation::StructuralRep> reps;
  representation::RankedRepList ranked;
  evaluation::Task3Result task3;
  std::optional<GroundTruthReport> ground_truth;
  std::optional<double> rq;
  evaluation::JudgeScores rq_scores;
  std::optional<double> eas;
  bool judged = false;
};

std::string mode_suffix(RepMode mode) {
  return representation::rep_mode_name(mode);
}

// Halt with the stage name attached; gateway/disk caches make the partial
// run resumable as-is.
template <typename Fn>
auto stage_scope(const char* stage_name, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& error) {
    throw Error(error.kind(), std::string("stage ") + stage_name + ": " + error.what());
  }
}

}  // namespace

std::shared_ptr<gateway::Gateway> make_gateway(const RunConfig& config) {
  auto routing = std::make_shared<gateway::RoutingBackend>();

  std::filesystem::path script_path = config.mock_script;
  if (script_path.empty()) {
    script_path = config.corpus_root / "mock.jsonl";
  }
  if (std::filesystem::exists(script_path)) {
    routing->add("mock", std::make_shared<gateway::MockBackend>(
                             gateway::MockScript::load(script_path)));
  }
  if (!config.providers_file.empty() && std::filesystem::exists(config.providers_file)) {
    for (const auto& [name, provider] : gateway::load_providers(config.providers_file)) {
      auto key = gateway::provider_api_key(name);
      if (key.has_value()) {
        routing->add(name, std::make_shared<gateway::HttpBackend>(provider, *key));
      }
    }
  }

  gateway::GatewayOptions options;
  if (config.cache_dir.has_value()) {
    options.cache_dir = *config.cache_dir;
  } else if (const char* env = std::getenv("MALEVAL_CACHE_DIR"); env != nullptr && *env) {
    options.cache_dir = std::filesystem::path(env);
  } else {
    options.cache_dir = config.output_root / "cache";
  }
  return std::make_shared<gateway::Gateway>(routing, options);
}

void ingest_bundle(const std::filesystem::path& bundle_dir, const std::filesystem::path& out_dir,
                   std::vector<std::string>* warnings) {
  const auto bundle = codebase::load_bundle(bundle_dir, warnings);
  codebase::save_bundle(bundle, out_dir);
}

RunResult run_pipeline(const RunConfig& config, Stage stage) {
  config.weights.validate();
  if (config.model.provider == config.judge.provider && config.model.model == config.judge.model) {
    raise(ErrorKind::ConfigError, "the judge model must be held out from the evaluation pool");
  }

  RunResult result;

  // --- inputs ---------------------------------------------------------------
  const auto taxonomy_path = config.corpus_root / "config" / "taxonomy.json";
  const auto taxonomy = std::filesystem::exists(taxonomy_path)
                            ? groundtruth::BehaviorTaxonomy::load(taxonomy_path)
                            : groundtruth::BehaviorTaxonomy::builtin();
  const auto lifecycle_path = config.corpus_root / "config" / "lifecycle_db.json";
  const auto lifecycle = std::filesystem::exists(lifecycle_path)
                             ? reduction::load_lifecycle_db(lifecycle_path)
                             : reduction::default_lifecycle_db();
  const auto catalog = codebase::load_catalog(config.corpus_root / "catalog.jsonl");

  std::vector<std::filesystem::path> sample_dirs;
  const auto samples_root = config.corpus_root / "samples";
  if (!std::filesystem::is_directory(samples_root)) {
    raise(ErrorKind::MissingFile, samples_root.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(samples_root)) {
    if (entry.is_directory()) {
      sample_dirs.push_back(entry.path());
    }
  }
  std::sort(sample_dirs.begin(), sample_dirs.end());

  std::vector<SampleState> states(sample_dirs.size());
  for (std::size_t i = 0; i < sample_dirs.size(); ++i) {
    states[i].bundle = codebase::load_bundle(sample_dirs[i], &result.warnings);
    const auto& label = states[i].bundle.label;
    if (label.is_malware()) {
      auto gt_path = config.corpus_root / "gt" / (label.sample_id + ".json");
      if (!label.ground_truth_report.empty()) {
        const auto referenced = config.corpus_root / label.ground_truth_report;
        if (std::filesystem::exists(referenced)) {
          gt_path = referenced;
        }
      }
      if (std::filesystem::exists(gt_path)) {
        states[i].ground_truth = groundtruth::load_ground_truth(gt_path);
      } else {
        result.warnings.push_back("sample '" + label.sample_id + "': no ground-truth report");
      }
    }
  }

  auto gw = make_gateway(config);

  gateway::ModelSpec model = config.model;
  if (config.budget_tokens > 0) {
    model.context_budget = config.budget_tokens;
  }

  const auto metrics_dir = config.output_root / "metrics" / config.run_id;
  const auto analytics_dir = config.output_root / "analytics" / config.run_id;
  result.metrics_dir = metrics_dir;
  result.analytics_dir = analytics_dir;

  const json echo = config_echo(config);
  const auto summary_path = metrics_dir / "summary.json";
  if (std::filesystem::exists(summary_path)) {
    const json previous = read_json_file(summary_path);
    if (previous.contains("config") && previous["config"] != echo) {
      raise(ErrorKind::ConfigError,
            "run id '" + config.run_id + "' already exists with a different configuration");
    }
  }

  // --- reduce ---------------------------------------------------------------
  stage_scope("reduce", [&] {
    CsvBuilder reduction_csv;
    reduction_csv.row({"sample_id", "total_functions", "reachable_count", "reduction_pct",
                       "entrypoint_count"});
    for (auto& state : states) {
      state.entrypoints =
          reduction::identify_entrypoints(state.bundle, lifecycle, &result.warnings);
      state.reachable = reduction::reachable_functions(state.bundle, state.entrypoints);
      const auto stats = reduction::reduction_stats(state.bundle, state.reachable);
      reduction_csv.row({state.bundle.label.sample_id, std::to_string(stats.total_functions),
                         std::to_string(stats.reachable_count), fmt2(stats.reduction_pct),
                         std::to_string(stats.entrypoint_count)});

      json doc;
      json entrypoints = json::object();
      for (const auto& [id, source] : state.entrypoints.ids) {
        entrypoints[id] = reduction::entrypoint_source_name(source);
      }
      doc["entrypoints"] = entrypoints;
      doc["depths"] = state.reachable.depth;
      doc["parents"] = state.reachable.parent;
      write_json_file(
          config.output_root / "reduction" / (state.bundle.label.sample_id + ".json"), doc);
    }
    write_text_atomic(config.output_root / "reduction_report.csv", reduction_csv.str());
  });
  if (stage == Stage::Reduce) {
    return result;
  }

  // --- represent --------------------------------------------------------------
  const RepMode mode = config.context_free ? RepMode::ContextFree : RepMode::Contextual;
  auto templates = config.prompts_dir.empty()
                       ? representation::PromptTemplates::builtin()
                       : representation::PromptTemplates::load(config.prompts_dir);
  representation::RepBuilder builder(*gw, model, templates, config.capture_prompts);
  if (config.pass1_model.has_value()) {
    builder.set_pass1_spec(*config.pass1_model);
  }
  stage_scope("represent", [&] {
    for (auto& state : states) {
      state.reps = representation::build_sample_reps(state.bundle, state.reachable, builder,
                                                     mode, config.workers);
      representation::save_reps(config.output_root / "reps" /
                                    (state.bundle.label.sample_id + "." + mode_suffix(mode) +
                                     ".jsonl"),
                                state.reps, model.spec_hash());
      state.ranked = representation::rank_reps(state.reps);
    }
  });
  result.captured_pass2_prompts = builder.captured_prompts();
  if (stage == Stage::Represent) {
    return result;
  }

  // --- report generation (task 3) --------------------------------------------
  evaluation::Task3Options task3_options;
  task3_options.with_metadata = config.with_metadata;
  stage_scope("audit", [&] {
    for (auto& state : states) {
      state.task3 =
          evaluation::run_task3(state.bundle, state.ranked, *gw, model, taxonomy, task3_options);
      json doc;
      doc["sample_id"] = state.bundle.label.sample_id;
      doc["failed"] = state.task3.failed;
      doc["with_metadata"] = config.with_metadata;
      doc["input_ids"] = state.task3.payload.included_ids;
      doc["input_signatures"] = state.task3.payload.included_signatures;
      doc["included_count"] = state.task3.payload.included_count;
      if (state.task3.failed) {
        doc["failure"] = state.task3.failure;
      } else {
        doc["report"] = groundtruth::report_to_json(state.task3.report);
      }
      write_json_file(config.output_root / "reports" / config.run_id /
                          (state.bundle.label.sample_id + ".json"),
                      doc);
    }
  });
  if (stage == Stage::Audit) {
    return result;
  }

  // --- judging (parallel per sample, deterministic slots) ---------------------
  stage_scope("judge", [&] {
    parallel_for(states.size(), config.workers, [&](std::size_t i) {
      auto& state = states[i];
      if (!state.bundle.label.is_malware() || state.task3.failed ||
          !state.ground_truth.has_value()) {
        return;
      }
      const auto rq =
          evaluation::judge_report_quality(state.task3.report, *state.ground_truth, *gw,
                                           config.judge, config.weights);
      state.rq = rq.rq;
      state.rq_scores = rq.scores;
      state.judged = true;
      if (!state.task3.report.present_behaviors.empty()) {
        std::vector<representation::StructuralRep> cited_reps;
        for (const auto& signature : state.task3.report.cited_functions()) {
          for (const auto& rep : state.reps) {
            if (rep.signature == signature) {
              cited_reps.push_back(rep);
              break;
            }
          }
        }
        state.eas = evaluation::evidence_authenticity(state.task3.report, cited_reps, *gw,
                                                      config.judge);
      }
    });
    for (const auto& state : states) {
      if (state.judged) {
        json doc;
        doc["sample_id"] = state.bundle.label.sample_id;
        doc["rq"] = *state.rq;
        doc["scores"] = json{{"insight", state.rq_scores.insight},
                             {"comprehensiveness", state.rq_scores.comprehensiveness},
                             {"evidence_quality", state.rq_scores.evidence_quality},
                             {"justification", state.rq_scores.justification}};
        if (state.eas.has_value()) {
          doc["eas"] = *state.eas;
        }
        write_json_file(config.output_root / "judgements" / config.run_id /
                            (state.bundle.label.sample_id + ".json"),
                        doc);
      }
    }
  });

  // --- metrics -----------------------------------------------------------------
  std::vector<evaluation::FidelitySample> fidelity_samples;
  for (const auto& state : states) {
    if (state.bundle.label.is_malware()) {
      fidelity_samples.push_back({state.bundle.label.sample_id, state.bundle.label.category,
                                  state.reps});
    }
  }
  std::map<std::string, double> fs_by_sample;
  evaluation::FidelityResult fidelity;
  bool fidelity_computed = false;
  if (fidelity_samples.size() >= 2) {
    evaluation::FidelityConfig fidelity_config;
    fidelity_config.k_percent = config.fidelity_k;
    fidelity_config.seed = config.seed;
    fidelity_config.classifier.min_leaf = 1;
    try {
      fidelity = evaluation::fidelity_score(fidelity_samples, fidelity_config);
      fidelity_computed = true;
      for (const auto& [sample_id, fs] : fidelity.per_sample) {
        fs_by_sample[sample_id] = fs;
      }
    } catch (const Error& error) {
      if (error.kind() != ErrorKind::DegenerateSplit) {
        throw;
      }
      result.warnings.push_back(std::string("fidelity skipped: ") + error.what());
    }
  } else {
    result.warnings.push_back("fidelity skipped: fewer than 2 malware samples");
  }

  std::vector<PerSampleMetrics> rows;
  std::vector<evaluation::SampleVerdict> verdicts;
  for (const auto& state : states) {
    const auto& label = state.bundle.label;
    PerSampleMetrics row;
    row.sample_id = label.sample_id;
    row.split = label.split;
    row.category = label.category;
    row.task3_failed = state.task3.failed;
    if (auto it = fs_by_sample.find(label.sample_id); it != fs_by_sample.end()) {
      row.fs = it->second * 100.0;
    }
    try {
      const auto selected = representation::select_by_threshold(state.ranked, config.tau);
      const auto gt_apis =
          codebase::ground_truth_apis(state.bundle, catalog, state.reachable.ids());
      const auto invoked =
          codebase::sensitive_invocations(state.bundle, catalog, state.reachable.ids());
      row.csr = 100.0 * evaluation::csr(state.reachable.size(), selected, gt_apis, invoked);
    } catch (const Error& error) {
      if (error.kind() != ErrorKind::EmptyGroundTruth &&
          error.kind() != ErrorKind::EmptySelection) {
        throw;
      }
    }
    if (!state.task3.failed) {
      row.has_report = true;
      row.predicted_malicious = state.task3.report.is_malicious;
      row.predicted_category = state.task3.report.category;
      const auto sas = evaluation::syntax_authenticity(state.task3.report,
                                                       state.task3.payload.included_signatures);
      row.sas = sas.sas * 100.0;
      row.sas_literal = sas.literal_ratio;
      evaluation::SampleVerdict verdict;
      verdict.sample_id = label.sample_id;
      verdict.is_malware = label.is_malware();
      verdict.true_category = label.category;
      verdict.predicted_malicious = state.task3.report.is_malicious;
      verdict.predicted_category = state.task3.report.category;
      verdicts.push_back(std::move(verdict));
    }
    row.judged = state.judged;
    row.rq = state.rq;
    row.eas = state.eas;
    rows.push_back(std::move(row));
  }

  const auto disc = evaluation::discrimination(verdicts);
  auto bundle = evaluation::aggregate_metrics(std::move(rows), disc, config.weights,
                                              config.context_free, config.with_metadata);

  CsvBuilder per_sample_csv;
  per_sample_csv.row({"sample_id", "split", "category", "fs", "csr", "rq", "eas", "sas",
                      "sas_literal", "predicted_malicious", "predicted_category", "judged",
                      "task3_failed"});
  auto opt2 = [](const std::optional<double>& value) {
    return value.has_value() ? fmt2(*value) : std::string();
  };
  for (const auto& row : bundle.rows) {
    per_sample_csv.row({row.sample_id, row.split, row.category, opt2(row.fs), opt2(row.csr),
                        opt2(row.rq), opt2(row.eas), opt2(row.sas), fmt2(row.sas_literal),
                        row.has_report ? (row.predicted_malicious ? "true" : "false") : "",
                        row.predicted_category, row.judged ? "true" : "false",
                        row.task3_failed ? "true" : "false"});
  }
  std::filesystem::create_directories(metrics_dir);
  write_text_atomic(metrics_dir / "per_sample.csv", per_sample_csv.str());

  // --- analytics -----------------------------------------------------------------
  std::string model_label = model.tag();
  if (config.context_free) {
    model_label += " (context-free)";
  }
  if (config.with_metadata) {
    model_label += " (with-metadata)";
  }
  analytics::ModelReports model_reports;
  model_reports.label = model_label;
  std::map<std::string, GroundTruthReport> gts;
  for (const auto& state : states) {
    if (state.ground_truth.has_value()) {
      gts[state.bundle.label.sample_id] = *state.ground_truth;
    }
    if (!state.task3.failed) {
      model_reports.reports.push_back(
          groundtruth::validate_generated(state.task3.report, taxonomy, &result.warnings)
              .normalized);
    }
  }
  const auto matrix = analytics::deviation_matrix({model_reports}, gts, taxonomy);
  std::filesystem::create_directories(analytics_dir);
  write_text_atomic(analytics_dir / "deviation.csv", analytics::deviation_matrix_csv(matrix));

  // archive-vs-latest comparisons, pooled and per shared category
  CsvBuilder welch_csv;
  welch_csv.row({"metric", "category", "group_a", "group_b", "n_a", "n_b", "mean_a", "mean_b",
                 "t", "df", "p"});
  auto split_values = [&](auto accessor, const char* split, const std::string& category) {
    std::vector<double> values;
    for (const auto& row : bundle.rows) {
      if (row.split != split || (!category.empty() && row.category != category)) {
        continue;
      }
      if (const auto value = accessor(row); value.has_value()) {
        values.push_back(*value);
      }
    }
    return values;
  };
  std::vector<std::string> welch_categories{""};  // "" = pooled
  {
    std::set<std::string> seen;
    for (const auto& row : bundle.rows) {
      if (row.split != codebase::kSplitBenign && seen.insert(row.category).second) {
        welch_categories.push_back(row.category);
      }
    }
  }
  const std::vector<std::pair<std::string, std::function<std::optional<double>(
                                               const PerSampleMetrics&)>>>
      welch_metrics = {{"RQ", [](const PerSampleMetrics& row) { return row.rq; }},
                       {"EAS", [](const PerSampleMetrics& row) { return row.eas; }}};
  for (const auto& [name, accessor] : welch_metrics) {
    for (const auto& category : welch_categories) {
      const auto group_a =
          split_values(accessor, codebase::kSplitArchiveMalware, category);
      const auto group_b = split_values(accessor, codebase::kSplitLatestMalware, category);
      if (group_a.size() < 2 || group_b.size() < 2) {
        continue;
      }
      try {
        const auto welch = analytics::welch_ttest(group_a, group_b);
        welch_csv.row({name, category.empty() ? "(all)" : category,
                       codebase::kSplitArchiveMalware, codebase::kSplitLatestMalware,
                       std::to_string(welch.n_a), std::to_string(welch.n_b),
                       fmt2(welch.mean_a), fmt2(welch.mean_b), fmt_precise(welch.t),
                       fmt_precise(welch.df), fmt_precise(welch.p)});
      } catch (const Error& error) {
        if (error.kind() != ErrorKind::DegenerateGroups) {
          throw;
        }
      }
    }
  }
  write_text_atomic(analytics_dir / "welch.csv", welch_csv.str());

  // --- summary (commit marker, always last) ----------------------------------------
  const auto stats = gw->stats();
  json summary;
  summary["run_id"] = config.run_id;
  summary["config"] = echo;
  summary["aggregates"] = json{{"fs", bundle.fs_mean},     {"csr", bundle.csr_mean},
                               {"rq", bundle.rq_mean},     {"eas", bundle.eas_mean},
                               {"sas", bundle.sas_mean},   {"fpcr", bundle.disc.fpcr},
                               {"tpmr", bundle.disc.tpmr}, {"f1_c", bundle.disc.f1c},
                               {"aa", bundle.comp.aa},     {"ds", bundle.comp.ds},
                               {"wrs", bundle.comp.wrs}};
  summary["exclusions"] = json{{"csr_undefined", bundle.exclusions.csr_undefined},
                               {"unjudged", bundle.exclusions.unjudged},
                               {"task3_failed", bundle.exclusions.task3_failed},
                               {"eas_undefined", bundle.exclusions.eas_undefined},
                               {"aa_excluded", bundle.comp.excluded}};
  std::size_t malware_count = 0;
  for (const auto& state : states) {
    if (state.bundle.label.is_malware()) {
      ++malware_count;
    }
  }
  summary["counts"] = json{{"samples", states.size()},
                           {"malware", malware_count},
                           {"benign", states.size() - malware_count}};
  if (fidelity_computed) {
    summary["fidelity_split"] =
        json{{"train", fidelity.train_ids}, {"test", fidelity.test_ids}};
  }
  // repair usage is replay-stable (cache replays trigger the same repairs),
  // unlike backend-call counters which drop to zero on warm cache
  summary["repairs_used"] = stats.repairs;
  summary["unparseable_replies"] = stats.unparseable;
  write_json_file(summary_path, summary);

  result.bundle = std::move(bundle);
  result.gateway_stats = stats;
  return result;
}

}  // namespace maleval::pipeline
