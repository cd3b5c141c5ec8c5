#include "maleval/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "maleval/csv.hpp"
#include "maleval/errors.hpp"
#include "maleval/student_t.hpp"

namespace maleval::analytics {

WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    raise(ErrorKind::DegenerateGroups, "each group needs at least 2 observations");
  }
  WelchResult result;
  result.n_a = a.size();
  result.n_b = b.size();

  auto mean_of = [](std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
  };
  auto variance_of = [](std::span<const double> xs, double mean) {
    double sum = 0.0;
    for (double x : xs) sum += (x - mean) * (x - mean);
    return sum / static_cast<double>(xs.size() - 1);
  };

  result.mean_a = mean_of(a);
  result.mean_b = mean_of(b);
  const double var_a = variance_of(a, result.mean_a);
  const double var_b = variance_of(b, result.mean_b);
  if (var_a <= 0.0 && var_b <= 0.0) {
    if (result.mean_a == result.mean_b) {
      // identical constant groups: no separation at all
      result.t = 0.0;
      result.df = static_cast<double>(a.size() + b.size() - 2);
      result.p = 1.0;
      return result;
    }
    raise(ErrorKind::DegenerateGroups, "both groups have zero variance");
  }

  const double se_a = var_a / static_cast<double>(a.size());
  const double se_b = var_b / static_cast<double>(b.size());
  const double se = std::sqrt(se_a + se_b);
  result.t = (result.mean_a - result.mean_b) / se;
  result.df = (se_a + se_b) * (se_a + se_b) /
              (se_a * se_a / static_cast<double>(a.size() - 1) +
               se_b * se_b / static_cast<double>(b.size() - 1));
  result.p = result.t == 0.0 ? 1.0 : stats::student_t_two_sided_p(result.t, result.df);
  return result;
}

long long DeviationMatrix::cell(const std::string& row, const std::string& column) const {
  const auto row_it = std::find(row_labels.begin(), row_labels.end(), row);
  const auto col_it = std::find(columns.begin(), columns.end(), column);
  if (row_it == row_labels.end() || col_it == columns.end()) {
    return 0;
  }
  return cells[static_cast<std::size_t>(row_it - row_labels.begin())]
              [static_cast<std::size_t>(col_it - columns.begin())];
}

long long DeviationMatrix::row_sum(const std::string& row) const {
  const auto row_it = std::find(row_labels.begin(), row_labels.end(), row);
  if (row_it == row_labels.end()) {
    return 0;
  }
  long long sum = 0;
  for (long long value : cells[static_cast<std::size_t>(row_it - row_labels.begin())]) {
    sum += value;
  }
  return sum;
}

DeviationMatrix deviation_matrix(const std::vector<ModelReports>& models,
                                 const std::map<std::string, groundtruth::GroundTruthReport>& gts,
                                 const groundtruth::BehaviorTaxonomy& taxonomy) {
  DeviationMatrix matrix;
  matrix.columns = taxonomy.matrix_columns();

  std::map<std::string, std::size_t> column_index;
  for (std::size_t i = 0; i < matrix.columns.size(); ++i) {
    column_index[matrix.columns[i]] = i;
  }

  for (const auto& model : models) {
    std::vector<long long> row(matrix.columns.size(), 0);
    for (const auto& report : model.reports) {
      // predicted occurrence counts (Other included via prior rebucketing)
      for (const auto& behavior : report.present_behaviors) {
        auto it = column_index.find(behavior.behavior);
        if (it != column_index.end()) {
          ++row[it->second];
        }
      }
      // ground-truth counts are deduplicated categories, 0/1 per sample
      auto gt_it = gts.find(report.sample_id);
      if (gt_it != gts.end()) {
        for (const auto& behavior : gt_it->second.behaviors) {
          auto it = column_index.find(behavior.category);
          if (it != column_index.end()) {
            --row[it->second];
          }
        }
      }
    }
    matrix.row_labels.push_back(model.label);
    matrix.cells.push_back(std::move(row));
  }
  return matrix;
}

std::string deviation_matrix_csv(const DeviationMatrix& matrix, bool per_hundred_samples,
                                 std::size_t sample_count) {
  CsvBuilder csv;
  std::vector<std::string> header{"model"};
  for (const auto& column : matrix.columns) {
    header.push_back(column);
  }
  csv.row(header);
  for (std::size_t r = 0; r < matrix.row_labels.size(); ++r) {
    std::vector<std::string> row{matrix.row_labels[r]};
    for (long long value : matrix.cells[r]) {
      if (per_hundred_samples && sample_count > 0) {
        row.push_back(fmt2(100.0 * static_cast<double>(value) /
                           static_cast<double>(sample_count)));
      } else {
        row.push_back(std::to_string(value));
      }
    }
    csv.row(row);
  }
  return csv.str();
}

namespace {

std::vector<double> metric_values(const AggregateMetrics& m) {
  return {m.fs, m.csr, m.rq, m.eas, m.sas, m.fpcr, m.tpmr, m.f1c, m.wrs};
}

std::string signed_pct_change(double before, double after) {
  if (before == 0.0) {
    return after == 0.0 ? "0.00%" : "n/a";
  }
  const double change = 100.0 * (after - before) / before;
  return (change >= 0.0 ? "+" : "") + fmt2(change) + "%";
}

}  // namespace

std::string render_metrics_table(const std::vector<std::pair<std::string, AggregateMetrics>>& rows,
                                 const std::string& format, bool with_delta) {
  const std::size_t n_columns = std::size(kMetricColumns);
  if (format == "markdown") {
    std::string out = "| model |";
    for (const auto* column : kMetricColumns) {
      out += std::string(" ") + column + " |";
    }
    out += "\n|---|";
    for (std::size_t i = 0; i < n_columns; ++i) {
      out += "---|";
    }
    out += "\n";
    for (const auto& [label, metrics] : rows) {
      out += "| " + label + " |";
      for (double value : metric_values(metrics)) {
        out += " " + fmt2(value) + " |";
      }
      out += "\n";
    }
    if (with_delta && rows.size() == 2) {
      const auto before = metric_values(rows[0].second);
      const auto after = metric_values(rows[1].second);
      out += "| delta |";
      for (std::size_t i = 0; i < n_columns; ++i) {
        out += " " + signed_pct_change(before[i], after[i]) + " |";
      }
      out += "\n";
    }
    return out;
  }

  CsvBuilder csv;
  std::vector<std::string> header{"model"};
  for (const auto* column : kMetricColumns) {
    header.push_back(column);
  }
  csv.row(header);
  for (const auto& [label, metrics] : rows) {
    std::vector<std::string> row{label};
    for (double value : metric_values(metrics)) {
      row.push_back(fmt2(value));
    }
    csv.row(row);
  }
  if (with_delta && rows.size() == 2) {
    const auto before = metric_values(rows[0].second);
    const auto after = metric_values(rows[1].second);
    std::vector<std::string> row{"delta"};
    for (std::size_t i = 0; i < n_columns; ++i) {
      row.push_back(signed_pct_change(before[i], after[i]));
    }
    csv.row(row);
  }
  return csv.str();
}

void emit_tables(const std::vector<std::pair<std::string, AggregateMetrics>>& rows,
                 const DeviationMatrix* matrix, const std::string& format,
                 const std::filesystem::path& out_dir, bool with_delta) {
  std::filesystem::create_directories(out_dir);
  const std::string extension = format == "markdown" ? ".md" : ".csv";
  write_text_atomic(out_dir / ("metrics_table" + extension),
                    render_metrics_table(rows, format, with_delta));
  if (matrix != nullptr) {
    write_text_atomic(out_dir / "deviation.csv", deviation_matrix_csv(*matrix));
  }
}

}  // namespace maleval::analytics
