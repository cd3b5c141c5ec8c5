#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "maleval/gateway.hpp"

namespace maleval::groundtruth {

/// The 12 canonical behavior categories plus the reserved "Other" bucket.
/// "Miner" is canonical but serves as the hallucination probe: the shipped
/// corpus contains no miner samples, so any prediction of it is a measured
/// hallucination. "Other" never appears in ground truth; it collects
/// model-invented behaviors.
struct BehaviorTaxonomy {
  std::vector<std::string> canonical;  // exactly 12 names, probe included
  std::string other_bucket = "Other";
  std::string probe = "Miner";
  std::string version = "1";

  bool is_canonical(const std::string& name) const;
  bool is_probe(const std::string& name) const { return name == probe; }
  /// Deviation-matrix column order: non-probe categories, then Other, then
  /// the probe last.
  std::vector<std::string> matrix_columns() const;

  static BehaviorTaxonomy builtin();
  static BehaviorTaxonomy load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

struct GtBehavior {
  std::string category;
  std::string evidence;    // verbatim span from the source report
  std::string confidence;  // pass-through text, no metric consumes it
};

struct GroundTruthReport {
  std::string sample_id;
  std::vector<GtBehavior> behaviors;  // categories deduplicated
  std::string summary;
  std::string malware_category;
};

struct ReportedBehavior {
  std::string behavior;
  std::string confidence;
  std::string evidence;
  std::vector<std::string> related_functions;
};

struct GeneratedReport {
  std::string sample_id;
  std::string model_spec_hash;
  bool is_malicious = false;
  std::vector<ReportedBehavior> present_behaviors;  // empty when benign
  std::string summary;
  std::string category;  // present when malicious

  /// Deduplicated cited function signatures (F_s).
  std::vector<std::string> cited_functions() const;
};

/// Drops ad blocks, navigation chrome, and legal footers from a vendor
/// report before parsing.
std::string strip_boilerplate(const std::string& markdown);

/// Parses a normalized vendor report into structured ground truth via the
/// gateway. Behaviors outside the taxonomy and evidence spans that are not
/// verbatim substrings of the source are dropped with a warning, never
/// silently renamed.
GroundTruthReport parse_vendor_report(const std::string& markdown, const std::string& sample_id,
                                      gateway::Gateway& gw, const gateway::ModelSpec& spec,
                                      const BehaviorTaxonomy& taxonomy,
                                      std::vector<std::string>* warnings = nullptr);

struct ValidationOutcome {
  GeneratedReport normalized;
  std::vector<std::string> out_of_taxonomy;   // original names rebucketed to Other
  std::vector<std::string> probe_hits;        // hallucination-probe predictions
};

/// Keeps in-taxonomy behaviors, rebuckets the rest to "Other", and flags
/// probe hits. Idempotent.
ValidationOutcome validate_generated(const GeneratedReport& report,
                                     const BehaviorTaxonomy& taxonomy,
                                     std::vector<std::string>* warnings = nullptr);

GeneratedReport report_from_json(const json& doc, const std::string& sample_id,
                                 const std::string& model_spec_hash);
json report_to_json(const GeneratedReport& report);
GeneratedReport load_generated(const std::filesystem::path& path);
void save_generated(const GeneratedReport& report, const std::filesystem::path& path);

json gt_to_json(const GroundTruthReport& report);
GroundTruthReport gt_from_json(const json& doc);
GroundTruthReport load_ground_truth(const std::filesystem::path& path);
void save_ground_truth(const GroundTruthReport& report, const std::filesystem::path& path);

}  // namespace maleval::groundtruth
