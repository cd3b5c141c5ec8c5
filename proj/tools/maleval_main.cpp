#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "maleval/analytics.hpp"
#include "maleval/errors.hpp"
#include "maleval/fixtures.hpp"
#include "maleval/pipeline.hpp"

namespace {

using namespace maleval;

struct CommonRunArgs {
  pipeline::RunConfig config;
  std::string model = "mock:mock-eval";
  std::string judge = "mock:mock-judge";
  std::string pass1_model;
  std::string weights_spec;
};

gateway::ModelSpec parse_model_spec(const std::string& spec_text) {
  gateway::ModelSpec spec;
  const auto colon = spec_text.find(':');
  if (colon == std::string::npos) {
    spec.provider = "mock";
    spec.model = spec_text;
  } else {
    spec.provider = spec_text.substr(0, colon);
    spec.model = spec_text.substr(colon + 1);
  }
  if (spec.model.empty()) {
    raise(ErrorKind::ConfigError, "model spec '" + spec_text + "' has no model name");
  }
  return spec;
}

void parse_weights(const std::string& spec_text, evaluation::MetricWeights& weights) {
  if (spec_text.empty()) {
    return;
  }
  std::istringstream in(spec_text);
  std::string token;
  while (std::getline(in, token, ',')) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) {
      raise(ErrorKind::ConfigError, "weight entry '" + token + "' is not key=value");
    }
    const std::string key = token.substr(0, eq);
    const double value = std::stod(token.substr(eq + 1));
    if (key == "i") weights.w_i = value;
    else if (key == "c") weights.w_c = value;
    else if (key == "e") weights.w_e = value;
    else if (key == "aa") weights.w_aa = value;
    else if (key == "ds") weights.w_ds = value;
    else raise(ErrorKind::ConfigError, "unknown weight key '" + key + "'");
  }
  weights.validate();
}

void add_run_options(CLI::App* cmd, CommonRunArgs& args) {
  cmd->add_option("--corpus", args.config.corpus_root, "corpus root directory")->required();
  cmd->add_option("--out", args.config.output_root, "output root directory")->required();
  cmd->add_option("--run-id", args.config.run_id, "run identifier (default: run)");
  cmd->add_option("--model", args.model, "evaluated model as provider:name");
  cmd->add_option("--judge", args.judge, "judge model as provider:name");
  cmd->add_option("--pass1-model", args.pass1_model,
                  "model for pass-one descriptions (default: evaluated model)");
  cmd->add_option("--tau", args.config.tau, "sensitivity selection threshold (0-100)");
  cmd->add_option("--k", args.config.fidelity_k, "fidelity removal percentage");
  cmd->add_flag("--context-free", args.config.context_free,
                "build representations without inter-procedural context");
  cmd->add_flag("--with-metadata", args.config.with_metadata,
                "attach manifest metadata to report prompts");
  cmd->add_option("--seed", args.config.seed, "run seed");
  cmd->add_option("--weights", args.weights_spec,
                  "weight overrides, e.g. i=0.4,c=0.3,e=0.3,aa=0.5,ds=0.5");
  cmd->add_option("--budget-tokens", args.config.budget_tokens,
                  "input context budget override");
  cmd->add_option("--workers", args.config.workers, "worker thread count");
  cmd->add_option("--format", args.config.format, "table format: csv or markdown");
  cmd->add_option("--mock-script", args.config.mock_script,
                  "mock gateway script (default: <corpus>/mock.jsonl)");
  cmd->add_option("--providers", args.config.providers_file, "providers.toml for remote models");
  cmd->add_option("--prompts", args.config.prompts_dir, "prompt template directory");
}

pipeline::RunConfig finalize(CommonRunArgs& args) {
  args.config.model = parse_model_spec(args.model);
  args.config.judge = parse_model_spec(args.judge);
  if (!args.pass1_model.empty()) {
    args.config.pass1_model = parse_model_spec(args.pass1_model);
  }
  parse_weights(args.weights_spec, args.config.weights);
  return args.config;
}

void print_summary(const pipeline::RunResult& result) {
  const auto& b = result.bundle;
  std::cout << "FS " << b.fs_mean << "  CSR " << b.csr_mean << "  RQ " << b.rq_mean << "  EAS "
            << b.eas_mean << "  SAS " << b.sas_mean << "\n"
            << "FPCR " << b.disc.fpcr << "  TPMR " << b.disc.tpmr << "  F1_c " << b.disc.f1c
            << "\n"
            << "AA " << b.comp.aa << "  DS " << b.comp.ds << "  WRS " << b.comp.wrs << "\n"
            << "summary: " << (result.metrics_dir / "summary.json").string() << "\n";
  for (const auto& warning : result.warnings) {
    std::cerr << "warning: " << warning << "\n";
  }
}

int run_stage(CommonRunArgs& args, pipeline::Stage stage) {
  const auto config = finalize(args);
  const auto result = pipeline::run_pipeline(config, stage);
  if (stage == pipeline::Stage::Full || stage == pipeline::Stage::Evaluate) {
    print_summary(result);
  } else {
    for (const auto& warning : result.warnings) {
      std::cerr << "warning: " << warning << "\n";
    }
    std::cout << "stage complete\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maleval: static-reachability reduction, structural representations and "
               "LLM auditing metrics"};
  app.require_subcommand(1);

  // fixtures
  auto* fixtures_cmd = app.add_subcommand("fixtures", "emit a synthetic corpus with ledger");
  fixtures::FixtureParams fixture_params;
  std::filesystem::path fixtures_out;
  fixtures_cmd->add_option("--out", fixtures_out, "corpus output directory")->required();
  fixtures_cmd->add_option("--seed", fixture_params.seed, "generator seed");
  fixtures_cmd->add_option("--samples", fixture_params.samples, "number of samples");
  fixtures_cmd->add_option("--benign-fraction", fixture_params.benign_fraction,
                           "fraction of benign samples");
  fixtures_cmd->add_option("--functions", fixture_params.functions_per_sample,
                           "functions per sample");
  fixtures_cmd->add_option("--components", fixture_params.components_per_sample,
                           "manifest components per sample");
  fixtures_cmd->add_option("--overrides", fixture_params.overrides_per_sample,
                           "framework overrides per sample");
  fixtures_cmd->add_option("--dead-fraction", fixture_params.dead_fraction,
                           "fraction of dead helper code");
  fixtures_cmd->add_option("--catalog-size", fixture_params.catalog_size,
                           "sensitive API catalog size");

  // ingest
  auto* ingest_cmd = app.add_subcommand("ingest", "validate a bundle and re-emit it canonically");
  std::filesystem::path ingest_in, ingest_out;
  ingest_cmd->add_option("--bundle", ingest_in, "bundle directory")->required();
  ingest_cmd->add_option("--out", ingest_out, "normalized output directory")->required();

  // catalog
  auto* catalog_cmd = app.add_subcommand("catalog", "build the sensitive API catalog");
  std::filesystem::path catalog_in, catalog_out;
  std::string catalog_provenance;
  catalog_cmd->add_option("--raw", catalog_in, "raw entries (jsonl)")->required();
  catalog_cmd->add_option("--out", catalog_out, "catalog.jsonl output path")->required();
  catalog_cmd->add_option("--provenance", catalog_provenance, "provenance note");

  // staged pipeline commands
  CommonRunArgs reduce_args, represent_args, audit_args, evaluate_args, pipeline_args;
  auto* reduce_cmd = app.add_subcommand("reduce", "entrypoints + reachable code extraction");
  add_run_options(reduce_cmd, reduce_args);
  auto* represent_cmd =
      app.add_subcommand("represent", "build structural representations for reachable code");
  add_run_options(represent_cmd, represent_args);
  auto* audit_cmd = app.add_subcommand("audit", "generate behavior reports");
  add_run_options(audit_cmd, audit_args);
  auto* evaluate_cmd = app.add_subcommand("evaluate", "judge reports and compute all metrics");
  add_run_options(evaluate_cmd, evaluate_args);
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage end to end");
  add_run_options(pipeline_cmd, pipeline_args);

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "merge run outputs into tables");
  std::filesystem::path stats_out_root;
  std::vector<std::string> stats_run_ids;
  std::string stats_format = "csv";
  bool stats_delta = false;
  bool stats_markdown_stdout = false;
  stats_cmd->add_option("--out", stats_out_root, "output root holding metrics/<run-id>")
      ->required();
  stats_cmd->add_option("--runs", stats_run_ids, "run ids to merge")->required();
  stats_cmd->add_option("--format", stats_format, "csv or markdown");
  stats_cmd->add_flag("--delta", stats_delta, "append a signed percentage-change row (2 runs)");
  stats_cmd->add_flag("--print", stats_markdown_stdout, "print the markdown table to stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fixtures_cmd->parsed()) {
      fixtures::generate_corpus(fixture_params, fixtures_out);
      std::cout << "corpus written to " << fixtures_out.string() << "\n";
      return 0;
    }
    if (ingest_cmd->parsed()) {
      std::vector<std::string> warnings;
      pipeline::ingest_bundle(ingest_in, ingest_out, &warnings);
      for (const auto& warning : warnings) {
        std::cerr << "warning: " << warning << "\n";
      }
      std::cout << "bundle normalized to " << ingest_out.string() << "\n";
      return 0;
    }
    if (catalog_cmd->parsed()) {
      std::vector<codebase::SensitiveApiEntry> raw;
      for (const auto& line : read_jsonl_file(catalog_in)) {
        if (line.contains("_provenance")) {
          continue;  // emitted catalogs feed back in as raw entries
        }
        codebase::SensitiveApiEntry entry;
        entry.signature = line.at("signature").get<std::string>();
        entry.description = line.value("description", "");
        if (line.contains("required_permissions")) {
          for (const auto& p : line["required_permissions"]) {
            entry.required_permissions.push_back(p.get<std::string>());
          }
        }
        entry.deprecated = line.value("deprecated", false);
        entry.deprecation_note = line.value("deprecation_note", "");
        entry.replacement = line.value("replacement", "");
        raw.push_back(std::move(entry));
      }
      std::vector<std::string> warnings;
      const auto catalog = codebase::build_catalog(raw, catalog_provenance, &warnings);
      codebase::save_catalog(catalog, catalog_out);
      for (const auto& warning : warnings) {
        std::cerr << "warning: " << warning << "\n";
      }
      std::cout << catalog.entries.size() << " catalog entries written\n";
      return 0;
    }
    if (reduce_cmd->parsed()) return run_stage(reduce_args, pipeline::Stage::Reduce);
    if (represent_cmd->parsed()) return run_stage(represent_args, pipeline::Stage::Represent);
    if (audit_cmd->parsed()) return run_stage(audit_args, pipeline::Stage::Audit);
    if (evaluate_cmd->parsed()) return run_stage(evaluate_args, pipeline::Stage::Evaluate);
    if (pipeline_cmd->parsed()) return run_stage(pipeline_args, pipeline::Stage::Full);
    if (stats_cmd->parsed()) {
      std::vector<std::pair<std::string, analytics::AggregateMetrics>> rows;
      for (const auto& run_id : stats_run_ids) {
        const auto summary =
            read_json_file(stats_out_root / "metrics" / run_id / "summary.json");
        const auto& agg = summary.at("aggregates");
        analytics::AggregateMetrics metrics;
        metrics.fs = agg.at("fs").get<double>();
        metrics.csr = agg.at("csr").get<double>();
        metrics.rq = agg.at("rq").get<double>();
        metrics.eas = agg.at("eas").get<double>();
        metrics.sas = agg.at("sas").get<double>();
        metrics.fpcr = agg.at("fpcr").get<double>();
        metrics.tpmr = agg.at("tpmr").get<double>();
        metrics.f1c = agg.at("f1_c").get<double>();
        metrics.wrs = agg.at("wrs").get<double>();
        std::string label = summary.at("config").at("model").get<std::string>();
        if (summary.at("config").at("context_free").get<bool>()) {
          label += " (context-free)";
        }
        if (summary.at("config").at("with_metadata").get<bool>()) {
          label += " (with-metadata)";
        }
        rows.emplace_back(label + " [" + run_id + "]", metrics);
      }
      const std::string table =
          analytics::render_metrics_table(rows, stats_format, stats_delta);
      const auto table_path = stats_out_root / "analytics" /
                              ("merged_table." + std::string(stats_format == "markdown"
                                                                 ? "md"
                                                                 : "csv"));
      write_text_atomic(table_path, table);
      if (stats_markdown_stdout || stats_format == "markdown") {
        std::cout << table;
      } else {
        std::cout << "table written to " << table_path.string() << "\n";
      }
      return 0;
    }
  } catch (const Error& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  } catch (const std::exception& error) {
    std::cerr << "error: " << error.what() << "\n";
    return 1;
  }
  return 0;
}
