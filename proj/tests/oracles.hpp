#pragma once

// Independent brute-force implementations used as oracles. These must stay
// decoupled from the library code paths they check: set arithmetic is done
// with plain loops, closures with naive fixpoints, and p-values with direct
// numeric integration of the t density.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Transitive closure by repeated edge relaxation until no change.
inline std::set<std::string> naive_closure(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::set<std::string>& seeds) {
  std::set<std::string> reached = seeds;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [from, to] : edges) {
      if (reached.count(from) > 0 && reached.count(to) == 0) {
        reached.insert(to);
        changed = true;
      }
    }
  }
  return reached;
}

inline double fidelity(double p_full, double p_ablated) {
  long double fs = 1.0L - static_cast<long double>(p_ablated) / p_full;
  if (fs < 0.0L) fs = 0.0L;
  if (fs > 1.0L) fs = 1.0L;
  return static_cast<double>(fs);
}

inline double csr(std::size_t reachable_count, const std::vector<std::string>& selected,
                  const std::vector<std::string>& gt_apis,
                  const std::vector<std::pair<std::string, std::vector<std::string>>>& invoked) {
  std::vector<std::string> covered;
  for (const auto& id : selected) {
    for (const auto& [fn, apis] : invoked) {
      if (fn != id) continue;
      for (const auto& api : apis) {
        bool in_gt = false;
        for (const auto& gt : gt_apis) {
          if (gt == api) in_gt = true;
        }
        bool seen = false;
        for (const auto& c : covered) {
          if (c == api) seen = true;
        }
        if (in_gt && !seen) covered.push_back(api);
      }
    }
  }
  const double coverage = static_cast<double>(covered.size()) / gt_apis.size();
  const double selection = static_cast<double>(selected.size()) / reachable_count;
  return coverage / selection;
}

inline double sas(const std::vector<std::string>& cited_raw,
                  const std::vector<std::string>& input, bool has_behaviors) {
  std::vector<std::string> cited = cited_raw;
  std::sort(cited.begin(), cited.end());
  cited.erase(std::unique(cited.begin(), cited.end()), cited.end());
  if (!has_behaviors) return 1.0;
  if (cited.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& fn : cited) {
    for (const auto& in : input) {
      if (fn == in) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / cited.size();
}

struct Verdict {
  bool is_malware;
  std::string true_category;
  bool predicted_malicious;
  std::string predicted_category;
};

struct Discrimination {
  double fpcr, tpmr, f1c;
};

inline Discrimination discrimination(const std::vector<Verdict>& verdicts) {
  std::size_t benign = 0, refuted = 0, malware = 0, kept = 0;
  std::set<std::string> classes;
  for (const auto& v : verdicts) {
    if (v.is_malware) {
      ++malware;
      if (v.predicted_malicious) {
        ++kept;
        if (!v.predicted_category.empty()) classes.insert(v.predicted_category);
      }
      classes.insert(v.true_category);
    } else {
      ++benign;
      if (!v.predicted_malicious) ++refuted;
    }
  }
  Discrimination out{};
  out.fpcr = benign == 0 ? 0.0 : 100.0 * refuted / static_cast<double>(benign);
  out.tpmr = malware == 0 ? 0.0 : 100.0 * kept / static_cast<double>(malware);

  double f1_sum = 0.0;
  for (const auto& cls : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (const auto& v : verdicts) {
      if (!v.is_malware) continue;
      const std::string pred = v.predicted_malicious ? v.predicted_category : "";
      if (v.true_category == cls && pred == cls) tp += 1;
      if (v.true_category != cls && pred == cls) fp += 1;
      if (v.true_category == cls && pred != cls) fn += 1;
    }
    const double precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    const double recall = tp + fn == 0 ? 0.0 : tp / (tp + fn);
    f1_sum += precision + recall == 0 ? 0.0 : 2 * precision * recall / (precision + recall);
  }
  out.f1c = classes.empty() ? 0.0 : 100.0 * f1_sum / static_cast<double>(classes.size());
  return out;
}

struct AaRow {
  bool indicator, judged;
  double rq, eas, sas;
};

struct Composites {
  double aa, ds, wrs;
};

inline Composites composites(const std::vector<AaRow>& rows, double fpcr, double tpmr,
                             double f1c, double w_aa, double w_ds) {
  long double sum = 0.0L;
  std::size_t n = 0;
  for (const auto& row : rows) {
    if (row.indicator && !row.judged) continue;
    if (row.indicator) {
      sum += (static_cast<long double>(row.rq) / 100.0L) * (row.eas / 100.0L) *
             (row.sas / 100.0L);
    }
    ++n;
  }
  Composites out{};
  out.aa = n == 0 ? 0.0 : static_cast<double>(100.0L * sum / n);
  out.ds = (fpcr + tpmr + f1c) / 3.0;
  out.wrs = w_aa * out.aa + w_ds * out.ds;
  return out;
}

struct Welch {
  double t, df;
};

inline Welch welch(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& xs) {
    long double s = 0;
    for (double x : xs) s += x;
    return s / xs.size();
  };
  auto var = [&](const std::vector<double>& xs, long double m) {
    long double s = 0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / (xs.size() - 1);
  };
  const long double ma = mean(a), mb = mean(b);
  const long double va = var(a, ma) / a.size(), vb = var(b, mb) / b.size();
  Welch out{};
  out.t = static_cast<double>((ma - mb) / std::sqrt(va + vb));
  out.df = static_cast<double>((va + vb) * (va + vb) /
                               (va * va / (a.size() - 1) + vb * vb / (b.size() - 1)));
  return out;
}

// Two-sided p-value by Simpson integration of the t density over the tail.
// The substitution x = |t| + s/(1-s) maps the tail onto s in [0,1); near
// s=1 the integrand behaves like (1-s)^(df-1), so that piece is integrated
// in v = (1-s)^df where it is smooth.
inline double t_two_sided_p_numeric(double t, double df) {
  const double abs_t = std::fabs(t);
  const double log_norm = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                          0.5 * std::log(df * 3.14159265358979323846);
  auto log_density_at = [&](double x) {
    return log_norm - (df + 1.0) / 2.0 * std::log1p(x * x / df);
  };
  auto simpson = [](auto fn, double lo, double hi, int n) {
    const double h = (hi - lo) / n;
    long double sum = fn(lo) + fn(hi);
    for (int i = 1; i < n; ++i) {
      sum += fn(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    }
    return static_cast<double>(sum * h / 3.0L);
  };

  auto integrand_s = [&](double s) {
    const double one_minus = 1.0 - s;
    const double x = abs_t + s / one_minus;
    return std::exp(log_density_at(x)) / (one_minus * one_minus);
  };

  if (df >= 2.5) {
    // integrand decays like (1-s)^(df-1); the endpoint error of plain
    // Simpson scales like h^df, already ~1e-12 at this cutoff
    return std::min(1.0, 2.0 * simpson(integrand_s, 0.0, 1.0 - 1e-12, 40000));
  }

  // small df: the (1-s)^(df-1) endpoint ruins Simpson's order, so the upper
  // half is integrated in v = (1-s)^df where the integrand is regular
  const double part1 = simpson(integrand_s, 0.0, 0.5, 20000);
  auto integrand_v = [&](double v) {
    v = std::max(v, 1e-280);
    const double log_one_minus = std::log(v) / df;
    const double one_minus = std::exp(log_one_minus);
    const double s = 1.0 - one_minus;
    // x = (s + abs_t * one_minus) / one_minus
    const double log_x = std::log(s + abs_t * one_minus) - log_one_minus;
    double log_density;
    if (log_x > 20.0) {  // x*x would overflow; use the asymptotic form
      log_density = log_norm - (df + 1.0) / 2.0 * (2.0 * log_x - std::log(df));
    } else {
      log_density = log_density_at(std::exp(log_x));
    }
    const double log_value = log_density - (df + 1.0) * log_one_minus - std::log(df);
    return std::exp(log_value);
  };
  const double v0 = std::pow(0.5, df);
  const double part2 = simpson(integrand_v, 0.0, v0, 20000);
  return std::min(1.0, 2.0 * (part1 + part2));
}

}  // namespace oracle
