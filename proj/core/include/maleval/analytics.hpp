#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "maleval/groundtruth.hpp"

namespace maleval::analytics {

struct WelchResult {
  double t = 0.0;
  double df = 0.0;  // Welch-Satterthwaite
  double p = 0.0;   // two-sided
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

/// Welch's unequal-variance t-test with a two-sided p-value from the local
/// t-distribution survival function. Requires |a| >= 2, |b| >= 2 and nonzero
/// variance in at least one group.
WelchResult welch_ttest(std::span<const double> a, std::span<const double> b);

/// Signed per-category count deviation (predicted - ground truth), one row
/// per model. Column order: non-probe categories, then "Other", then the
/// hallucination probe.
struct DeviationMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> columns;
  std::vector<std::vector<long long>> cells;

  long long cell(const std::string& row, const std::string& column) const;
  long long row_sum(const std::string& row) const;
};

struct ModelReports {
  std::string label;  // model tag
  std::vector<groundtruth::GeneratedReport> reports;  // already normalized
};

DeviationMatrix deviation_matrix(const std::vector<ModelReports>& models,
                                 const std::map<std::string, groundtruth::GroundTruthReport>& gts,
                                 const groundtruth::BehaviorTaxonomy& taxonomy);

std::string deviation_matrix_csv(const DeviationMatrix& matrix, bool per_hundred_samples = false,
                                 std::size_t sample_count = 0);

/// Aggregate metric row for table emission (all values on the 0-100 percent
/// scale except CSR, which is a ratio reported as a percentage of selection
/// efficiency).
struct AggregateMetrics {
  double fs = 0.0;
  double csr = 0.0;
  double rq = 0.0;
  double eas = 0.0;
  double sas = 0.0;
  double fpcr = 0.0;
  double tpmr = 0.0;
  double f1c = 0.0;
  double wrs = 0.0;
};

inline constexpr const char* kMetricColumns[] = {"FS",   "CSR",  "RQ",   "EAS", "SAS",
                                                 "FPCR", "TPMR", "F1_c", "WRS"};

/// Renders the metric table in csv or markdown. With exactly two rows and
/// `with_delta`, a signed percentage-change row is appended.
std::string render_metrics_table(const std::vector<std::pair<std::string, AggregateMetrics>>& rows,
                                 const std::string& format, bool with_delta = false);

void emit_tables(const std::vector<std::pair<std::string, AggregateMetrics>>& rows,
                 const DeviationMatrix* matrix, const std::string& format,
                 const std::filesystem::path& out_dir, bool with_delta = false);

}  // namespace maleval::analytics
