#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "maleval/analytics.hpp"
#include "maleval/evaluation.hpp"
#include "maleval/fixtures.hpp"

namespace maleval::pipeline {

enum class Stage { Reduce, Represent, Audit, Evaluate, Full };

struct RunConfig {
  std::filesystem::path corpus_root;
  std::filesystem::path output_root;
  std::string run_id = "run";

  gateway::ModelSpec model;
  gateway::ModelSpec judge;
  std::optional<gateway::ModelSpec> pass1_model;  // defaults to the evaluated model

  bool context_free = false;   // ablation: no inter-procedural context
  bool with_metadata = false;  // manifest dictionary appended to report prompts

  int tau = 60;
  double fidelity_k = 10.0;
  std::uint64_t seed = 0;
  evaluation::MetricWeights weights;
  std::size_t budget_tokens = 0;  // 0 = use model.context_budget
  std::size_t workers = 1;
  std::string format = "csv";

  std::filesystem::path mock_script;     // defaults to <corpus>/mock.jsonl
  std::filesystem::path providers_file;  // for remote providers
  std::optional<std::filesystem::path> cache_dir;  // defaults to <output>/cache
  std::filesystem::path prompts_dir;     // optional template override

  bool capture_prompts = false;  // retain pass-two prompts for contract checks
};

struct RunResult {
  std::filesystem::path metrics_dir;
  std::filesystem::path analytics_dir;
  evaluation::MetricBundle bundle;
  gateway::GatewayStats gateway_stats;
  std::vector<std::string> captured_pass2_prompts;
  std::vector<std::string> warnings;
};

/// Builds the gateway described by the config: the scripted mock for the
/// "mock" provider, an HTTP chat-completion backend otherwise.
std::shared_ptr<gateway::Gateway> make_gateway(const RunConfig& config);

/// Executes reduce -> represent -> report generation -> judging -> metrics ->
/// analytics, stopping after `stage`. Artifacts land under the output root;
/// metrics/<run_id>/summary.json is written last as the commit marker.
RunResult run_pipeline(const RunConfig& config, Stage stage = Stage::Full);

/// Re-validates a bundle directory and re-emits it canonically.
void ingest_bundle(const std::filesystem::path& bundle_dir, const std::filesystem::path& out_dir,
                   std::vector<std::string>* warnings = nullptr);

}  // namespace maleval::pipeline
