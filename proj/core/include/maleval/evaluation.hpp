#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "maleval/gbdt.hpp"
#include "maleval/groundtruth.hpp"
#include "maleval/representation.hpp"

namespace maleval::evaluation {

/// Stable prompt headers; mock-script rules key on them.
inline constexpr const char* kTask3PromptMarker = "## behavior report";
inline constexpr const char* kRqJudgeMarker = "## report quality judgement";
inline constexpr const char* kEasJudgeMarker = "## evidence authenticity judgement";

struct MetricWeights {
  // report-quality weights, sum to 1
  double w_i = 1.0 / 3.0;
  double w_c = 1.0 / 3.0;
  double w_e = 1.0 / 3.0;
  // workload-reduction weights, sum to 1
  double w_aa = 0.5;
  double w_ds = 0.5;

  void validate() const;  // raises ConfigError when a group does not sum to 1
};

// ---------------------------------------------------------------------------
// Task 1: function prioritization (fidelity)

struct FidelityConfig {
  double k_percent = 10.0;       // top-k% most sensitive functions removed
  double train_fraction = 0.8;   // 80/20 split
  std::uint64_t seed = 0;
  gbdt::GbdtConfig classifier;
};

struct FidelitySample {
  std::string sample_id;
  std::string category;
  std::vector<representation::StructuralRep> reps;
};

struct FidelityResult {
  std::vector<std::pair<std::string, double>> per_sample;  // test split, FS in [0,1]
  double mean_fs = 0.0;                                    // over the test split
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// The bare confidence-drop arithmetic: 1 - p_ablated / p_full, clipped to
/// [0, 1].
double fidelity_from_confidences(double p_full, double p_ablated);

/// Trains a TF-IDF + gradient-boosted-tree category classifier on
/// concatenated per-sample function descriptions (train split), then measures
/// the confidence drop on each test sample after removing its top-k% reps by
/// sensitivity.
FidelityResult fidelity_score(const std::vector<FidelitySample>& samples,
                              const FidelityConfig& config);

// ---------------------------------------------------------------------------
// Task 2: evidence attribution (CSR)

/// CSR = (covered gt APIs / |L_A|) / (|selected| / |reachable|).
/// `invoked` maps function id -> sensitive APIs it invokes.
double csr(std::size_t reachable_count, const std::set<std::string>& selected_ids,
           const std::set<std::string>& gt_apis,
           const std::map<std::string, std::vector<std::string>>& invoked);

// ---------------------------------------------------------------------------
// Task 3: behavioral synthesis (RQ / EAS / SAS)

struct JudgeScores {
  double insight = 0.0;
  double comprehensiveness = 0.0;
  double evidence_quality = 0.0;
  std::string justification;
};

struct RqResult {
  double rq = 0.0;  // weighted mean, 0-100
  JudgeScores scores;
};

RqResult judge_report_quality(const groundtruth::GeneratedReport& generated,
                              const groundtruth::GroundTruthReport& ground_truth,
                              gateway::Gateway& gw, const gateway::ModelSpec& judge,
                              const MetricWeights& weights);

/// Mean per-behavior support score from the judge, 0-100. Raises NoBehaviors
/// for a report with no claimed behaviors (benign-verdict shape).
double evidence_authenticity(const groundtruth::GeneratedReport& generated,
                             const std::vector<representation::StructuralRep>& cited_reps,
                             gateway::Gateway& gw, const gateway::ModelSpec& judge);

struct SasResult {
  double sas = 0.0;            // fraction of cited functions present in the input
  double literal_ratio = 0.0;  // |F_s| / |F_in| diagnostic
  std::size_t cited_count = 0;
  std::size_t cited_in_input = 0;
  std::size_t input_count = 0;
};

/// Conventions: a report with behaviors but zero citations scores 0; a report
/// with no behaviors scores 1 vacuously.
SasResult syntax_authenticity(const groundtruth::GeneratedReport& generated,
                              const std::vector<std::string>& input_signatures);

/// Generates the sample's behavior report from the ranked, budget-truncated
/// representation list; `with_metadata` appends the manifest dictionary as an
/// extra evidence block.
struct Task3Options {
  bool with_metadata = false;
  std::size_t overhead_tokens = 256;
};

struct Task3Result {
  groundtruth::GeneratedReport report;
  representation::PromptPayload payload;  // provenance: what the model saw
  std::string prompt;
  bool failed = false;      // unparseable after repair; sample drops from Tasks 3/4
  std::string failure;
};

Task3Result run_task3(const codebase::CodebaseBundle& bundle,
                      const representation::RankedRepList& ranked, gateway::Gateway& gw,
                      const gateway::ModelSpec& model,
                      const groundtruth::BehaviorTaxonomy& taxonomy,
                      const Task3Options& options);

// ---------------------------------------------------------------------------
// Task 4: sample discrimination

struct SampleVerdict {
  std::string sample_id;
  bool is_malware = false;          // ground-truth label
  std::string true_category;        // malware only
  bool predicted_malicious = false;
  std::string predicted_category;   // empty when predicted benign
};

struct DiscriminationResult {
  double fpcr = 0.0;  // benign correctly refuted, percent
  double tpmr = 0.0;  // malware kept malicious, percent
  double f1c = 0.0;   // macro F1 over malware categories, percent
  std::size_t benign_total = 0;
  std::size_t benign_refuted = 0;
  std::size_t malware_total = 0;
  std::size_t malware_kept = 0;
};

DiscriminationResult discrimination(const std::vector<SampleVerdict>& verdicts);

/// Convenience overload pairing labels with their reports; a missing report
/// raises MissingReport.
DiscriminationResult discrimination(
    const std::vector<codebase::SampleLabel>& labels,
    const std::map<std::string, const groundtruth::GeneratedReport*>& reports);

// ---------------------------------------------------------------------------
// Overall evaluation: AA / DS / WRS

struct AaRow {
  bool indicator = false;  // malware judged malicious
  bool judged = false;     // RQ/EAS/SAS available
  double rq = 0.0;         // 0-100
  double eas = 0.0;        // 0-100
  double sas = 0.0;        // 0-100
};

struct Composites {
  double aa = 0.0;
  double ds = 0.0;
  double wrs = 0.0;
  std::size_t excluded = 0;  // judged-malicious rows without judge scores
};

/// AA products are computed in [0,1] space then rescaled to percent, so AA
/// never exceeds its smallest component.
Composites composites(const std::vector<AaRow>& malware_rows,
                      const DiscriminationResult& disc, const MetricWeights& weights);

// ---------------------------------------------------------------------------
// Per-run metric bundle

struct PerSampleMetrics {
  std::string sample_id;
  std::string split;
  std::string category;
  std::optional<double> fs;   // test-split malware only, 0-100
  std::optional<double> csr;  // percent scale, [0, inf)
  std::optional<double> rq;
  std::optional<double> eas;
  std::optional<double> sas;  // 0-100
  double sas_literal = 0.0;   // diagnostic |F_s|/|F_in|
  bool has_report = false;
  bool predicted_malicious = false;
  std::string predicted_category;
  bool judged = false;
  bool task3_failed = false;
};

struct ExclusionCounts {
  std::size_t csr_undefined = 0;
  std::size_t unjudged = 0;
  std::size_t task3_failed = 0;
  std::size_t eas_undefined = 0;
};

struct MetricBundle {
  std::vector<PerSampleMetrics> rows;
  double fs_mean = 0.0;
  double csr_mean = 0.0;
  double rq_mean = 0.0;   // malware only
  double eas_mean = 0.0;  // malware only
  double sas_mean = 0.0;  // malware only
  DiscriminationResult disc;
  Composites comp;
  ExclusionCounts exclusions;
  bool context_free = false;
  bool with_metadata = false;
};

/// Aggregates per-sample rows into corpus metrics; Task 3 means are computed
/// over malware samples only.
MetricBundle aggregate_metrics(std::vector<PerSampleMetrics> rows,
                               const DiscriminationResult& disc, const MetricWeights& weights,
                               bool context_free, bool with_metadata);

}  // namespace maleval::evaluation
