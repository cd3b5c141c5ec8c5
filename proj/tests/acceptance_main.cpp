// Acceptance suite: one criterion per function, one PASS/FAIL line each,
// nonzero exit when any criterion fails. Runs fully offline against the
// scripted mock gateway.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "maleval/analytics.hpp"
#include "maleval/errors.hpp"
#include "maleval/evaluation.hpp"
#include "maleval/fixtures.hpp"
#include "maleval/pipeline.hpp"
#include "maleval/reduction.hpp"
#include "oracles.hpp"

using namespace maleval;

namespace {

struct Criterion {
  int number;
  std::string title;
  std::function<bool(std::string&)> run;
};

bool nearly(double a, double b, double tolerance) { return std::fabs(a - b) <= tolerance; }

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::absolute("maleval_acceptance_tmp") / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --------------------------------------------------------------------------
// 1. metric implementations agree with brute-force oracles

bool criterion_metric_oracles(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20250101);

  for (int trial = 0; trial < 1000; ++trial) {
    // Eq-1 arithmetic layer
    {
      const double p_full = 0.01 + (rng() % 990) / 1000.0;
      const double p_ablated = (rng() % 1200) / 1000.0;
      const double got = evaluation::fidelity_from_confidences(p_full, p_ablated);
      const double want = oracle::fidelity(p_full, p_ablated);
      if (!nearly(got, want, 1e-9)) {
        detail = "fidelity mismatch at trial " + std::to_string(trial);
        return false;
      }
    }

    // CSR
    {
      const std::size_t reachable = 2 + rng() % 60;
      const std::size_t n_apis = 1 + rng() % 10;
      std::vector<std::string> gt_apis;
      for (std::size_t i = 0; i < n_apis; ++i) {
        gt_apis.push_back("api.A.m" + std::to_string(i) + "():void");
      }
      std::map<std::string, std::vector<std::string>> invoked;
      std::vector<std::pair<std::string, std::vector<std::string>>> invoked_list;
      std::set<std::string> selected;
      const std::size_t n_selected = 1 + rng() % reachable;
      for (std::size_t i = 0; i < n_selected; ++i) {
        const std::string fn = "f" + std::to_string(i);
        selected.insert(fn);
        std::vector<std::string> apis;
        const std::size_t n_inv = rng() % 4;
        for (std::size_t a = 0; a < n_inv; ++a) {
          apis.push_back(gt_apis[rng() % gt_apis.size()]);
        }
        std::sort(apis.begin(), apis.end());
        apis.erase(std::unique(apis.begin(), apis.end()), apis.end());
        if (!apis.empty()) {
          invoked[fn] = apis;
          invoked_list.emplace_back(fn, apis);
        }
      }
      const double got = evaluation::csr(reachable, selected, {gt_apis.begin(), gt_apis.end()},
                                         invoked);
      const double want = oracle::csr(
          reachable, {selected.begin(), selected.end()}, gt_apis, invoked_list);
      if (!nearly(got, want, 1e-9)) {
        detail = "csr mismatch at trial " + std::to_string(trial);
        return false;
      }
    }

    // SAS
    {
      std::vector<std::string> input;
      const std::size_t n_input = 1 + rng() % 12;
      for (std::size_t i = 0; i < n_input; ++i) {
        input.push_back("t.C.f" + std::to_string(i) + "():void");
      }
      groundtruth::GeneratedReport report;
      report.sample_id = "s";
      report.is_malicious = rng() % 4 != 0;
      report.summary = "s";
      std::vector<std::string> cited;
      if (report.is_malicious) {
        report.category = "Trojan";
        const std::size_t n_behaviors = 1 + rng() % 3;
        for (std::size_t b = 0; b < n_behaviors; ++b) {
          groundtruth::ReportedBehavior behavior;
          behavior.behavior = "Ads";
          const std::size_t n_cited = rng() % 4;
          for (std::size_t c = 0; c < n_cited; ++c) {
            std::string fn = rng() % 3 == 0 ? "ghost" + std::to_string(rng() % 5) + "():x"
                                            : input[rng() % input.size()];
            behavior.related_functions.push_back(fn);
            cited.push_back(fn);
          }
          report.present_behaviors.push_back(behavior);
        }
      }
      const auto got = evaluation::syntax_authenticity(report, input);
      const double want = oracle::sas(cited, input, !report.present_behaviors.empty());
      if (!nearly(got.sas, want, 1e-9)) {
        detail = "sas mismatch at trial " + std::to_string(trial);
        return false;
      }
    }

    // discrimination including macro F1
    {
      const char* categories[] = {"A", "B", "C", "D", "E"};
      std::vector<evaluation::SampleVerdict> verdicts;
      std::vector<oracle::Verdict> oracle_verdicts;
      const std::size_t n = 2 + rng() % 28;
      for (std::size_t i = 0; i < n; ++i) {
        evaluation::SampleVerdict v;
        v.sample_id = "s" + std::to_string(i);
        v.is_malware = rng() % 3 != 0;
        if (v.is_malware) {
          v.true_category = categories[rng() % 5];
          v.predicted_malicious = rng() % 4 != 0;
          if (v.predicted_malicious) {
            v.predicted_category = categories[rng() % 5];
          }
        } else {
          v.predicted_malicious = rng() % 3 == 0;
        }
        verdicts.push_back(v);
        oracle_verdicts.push_back(
            {v.is_malware, v.true_category, v.predicted_malicious, v.predicted_category});
      }
      const auto got = evaluation::discrimination(verdicts);
      const auto want = oracle::discrimination(oracle_verdicts);
      if (!nearly(got.fpcr, want.fpcr, 1e-9) || !nearly(got.tpmr, want.tpmr, 1e-9) ||
          !nearly(got.f1c, want.f1c, 1e-9)) {
        detail = "discrimination mismatch at trial " + std::to_string(trial);
        return false;
      }
    }

    // composites
    {
      std::vector<evaluation::AaRow> rows;
      std::vector<oracle::AaRow> oracle_rows;
      const std::size_t n = rng() % 20;
      for (std::size_t i = 0; i < n; ++i) {
        evaluation::AaRow row;
        row.indicator = rng() % 2 == 0;
        row.judged = rng() % 5 != 0;
        row.rq = static_cast<double>(rng() % 101);
        row.eas = static_cast<double>(rng() % 101);
        row.sas = static_cast<double>(rng() % 101);
        rows.push_back(row);
        oracle_rows.push_back({row.indicator, row.judged, row.rq, row.eas, row.sas});
      }
      evaluation::DiscriminationResult disc;
      disc.fpcr = static_cast<double>(rng() % 10001) / 100.0;
      disc.tpmr = static_cast<double>(rng() % 10001) / 100.0;
      disc.f1c = static_cast<double>(rng() % 10001) / 100.0;
      const auto got = evaluation::composites(rows, disc, evaluation::MetricWeights{});
      const auto want =
          oracle::composites(oracle_rows, disc.fpcr, disc.tpmr, disc.f1c, 0.5, 0.5);
      if (!nearly(got.aa, want.aa, 1e-9) || !nearly(got.ds, want.ds, 1e-9) ||
          !nearly(got.wrs, want.wrs, 1e-9)) {
        detail = "composites mismatch at trial " + std::to_string(trial);
        return false;
      }
    }

    // Welch t-test: t and df against the textbook formula, p against the
    // numeric integration oracle
    {
      std::vector<double> a, b;
      const std::size_t n_a = 2 + rng() % 30;
      const std::size_t n_b = 2 + rng() % 30;
      for (std::size_t i = 0; i < n_a; ++i) a.push_back((rng() % 10000) / 100.0);
      for (std::size_t i = 0; i < n_b; ++i) b.push_back((rng() % 10000) / 100.0);
      bool degenerate = true;
      for (double x : a) {
        if (x != a.front()) degenerate = false;
      }
      for (double x : b) {
        if (x != b.front()) degenerate = false;
      }
      if (!degenerate) {
        const auto got = analytics::welch_ttest(a, b);
        const auto want = oracle::welch(a, b);
        if (!nearly(got.t, want.t, 1e-9) || !nearly(got.df, want.df, 1e-9)) {
          detail = "welch t/df mismatch at trial " + std::to_string(trial);
          return false;
        }
        if (trial % 10 == 0) {  // the numeric oracle is the slow part
          const double p_oracle = oracle::t_two_sided_p_numeric(got.t, got.df);
          if (!nearly(got.p, p_oracle, 1e-6)) {
            detail = "welch p mismatch at trial " + std::to_string(trial);
            return false;
          }
        }
      }
    }
  }

  const double elapsed = seconds_since(start);
  detail = "1000 randomized instances per metric, " + std::to_string(elapsed) + "s";
  return elapsed < 30.0;
}

// --------------------------------------------------------------------------
// 2. published-row consistency of DS and the WRS equation

bool criterion_table_consistency(std::string& detail) {
  evaluation::DiscriminationResult disc;
  disc.fpcr = 92.00;
  disc.tpmr = 90.59;
  disc.f1c = 31.82;

  const auto ds_only = evaluation::composites({}, disc, evaluation::MetricWeights{});
  if (!nearly(ds_only.ds, 71.47, 0.01)) {
    detail = "DS = " + std::to_string(ds_only.ds);
    return false;
  }

  // substitute AA = 2*WRS - DS back into the WRS equation
  const double aa = 2.0 * 50.67 - ds_only.ds;
  evaluation::AaRow row;
  row.indicator = true;
  row.judged = true;
  row.rq = aa;  // single-row product on the unit scale reproduces AA exactly
  row.eas = 100.0;
  row.sas = 100.0;
  const auto full = evaluation::composites({row}, disc, evaluation::MetricWeights{});
  if (!nearly(full.wrs, 50.67, 0.01)) {
    detail = "WRS = " + std::to_string(full.wrs);
    return false;
  }
  detail = "DS=" + std::to_string(ds_only.ds) + " WRS=" + std::to_string(full.wrs);
  return true;
}

// --------------------------------------------------------------------------
// 3. reachability against the naive fixpoint oracle

codebase::CodebaseBundle graph_bundle(std::size_t nodes,
                                      const std::set<std::pair<std::string, std::string>>& edges) {
  codebase::CodebaseBundle bundle;
  bundle.label.sample_id = "graph";
  bundle.label.split = codebase::kSplitArchiveMalware;
  bundle.label.category = "Trojan";
  bundle.hierarchy.classes["java.lang.Object"] = {"", {}, true};
  bundle.hierarchy.classes["g.N"] = {"java.lang.Object", {}, false};
  for (std::size_t i = 0; i < nodes; ++i) {
    codebase::FunctionRecord fn;
    fn.id = "n" + std::to_string(i);
    fn.class_name = "g.N";
    fn.signature = "g.N.m" + std::to_string(i) + "():void";
    bundle.functions.push_back(std::move(fn));
  }
  bundle.callgraph.edges = edges;
  return bundle;
}

bool criterion_reachability(std::string& detail) {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);

  for (int graph = 0; graph < 50; ++graph) {
    const std::size_t live_nodes = 100 + rng() % 1700;
    const std::size_t dead_nodes = 20 + rng() % 200;  // planted unreachable block
    const std::size_t n = live_nodes + dead_nodes;

    std::set<std::pair<std::string, std::string>> edges;
    const std::size_t m = live_nodes * 2;
    for (std::size_t e = 0; e < m; ++e) {
      edges.emplace("n" + std::to_string(rng() % live_nodes),
                    "n" + std::to_string(rng() % live_nodes));
    }
    // dead block only links within itself
    for (std::size_t e = 0; e < dead_nodes; ++e) {
      edges.emplace("n" + std::to_string(live_nodes + rng() % dead_nodes),
                    "n" + std::to_string(live_nodes + rng() % dead_nodes));
    }

    reduction::EntrypointSet entrypoints;
    std::set<std::string> seeds;
    for (int s = 0; s < 12; ++s) {
      const std::string id = "n" + std::to_string(rng() % live_nodes);
      seeds.insert(id);
      entrypoints.ids.emplace(id, reduction::EntrypointSource::ManifestLifecycle);
    }

    auto bundle = graph_bundle(n, edges);
    const auto reachable = reduction::reachable_functions(bundle, entrypoints);
    const auto expected = oracle::naive_closure({edges.begin(), edges.end()}, seeds);
    if (reachable.ids() != expected) {
      detail = "closure mismatch on graph " + std::to_string(graph);
      return false;
    }
    for (std::size_t d = 0; d < dead_nodes; ++d) {
      if (reachable.contains("n" + std::to_string(live_nodes + d))) {
        detail = "planted dead node reached on graph " + std::to_string(graph);
        return false;
      }
    }

    // monotonicity under random edge insertions (checked on two graphs to
    // stay within the runtime budget)
    if (graph < 2) {
      auto previous = reachable.ids();
      for (int insert = 0; insert < 100; ++insert) {
        bundle.callgraph.edges.emplace("n" + std::to_string(rng() % n),
                                       "n" + std::to_string(rng() % n));
        const auto grown = reduction::reachable_functions(bundle, entrypoints).ids();
        if (!std::includes(grown.begin(), grown.end(), previous.begin(), previous.end())) {
          detail = "monotonicity violated on graph " + std::to_string(graph);
          return false;
        }
        previous = grown;
      }
    }
  }
  const double elapsed = seconds_since(start);
  detail = "50 digraphs + dead-code + monotonicity, " + std::to_string(elapsed) + "s";
  return elapsed < 10.0;
}

// --------------------------------------------------------------------------
// 4. end-to-end determinism of the mock pipeline

pipeline::RunConfig fixture_run_config(const std::filesystem::path& corpus,
                                       const std::filesystem::path& out) {
  pipeline::RunConfig config;
  config.corpus_root = corpus;
  config.output_root = out;
  config.run_id = "det";
  config.model.provider = "mock";
  config.model.model = "mock-eval";
  config.judge.provider = "mock";
  config.judge.model = "mock-judge";
  return config;
}

bool criterion_determinism(std::string& detail) {
  const auto root = scratch("determinism");
  fixtures::FixtureParams params;  // the 5-sample mock fixture corpus
  fixtures::generate_corpus(params, root / "corpus");

  auto read_artifacts = [&](const std::filesystem::path& out) {
    return std::vector<std::string>{
        read_text_file(out / "metrics" / "det" / "summary.json"),
        read_text_file(out / "metrics" / "det" / "per_sample.csv"),
        read_text_file(out / "analytics" / "det" / "deviation.csv"),
    };
  };

  auto config1 = fixture_run_config(root / "corpus", root / "out1");
  config1.workers = 1;

  const auto cold_start = std::chrono::steady_clock::now();
  pipeline::run_pipeline(config1);
  const double cold_seconds = seconds_since(cold_start);
  const auto reference = read_artifacts(root / "out1");

  double warm_seconds = 0.0;
  for (int rerun = 0; rerun < 2; ++rerun) {
    const auto warm_start = std::chrono::steady_clock::now();
    pipeline::run_pipeline(config1);
    warm_seconds = seconds_since(warm_start);
    if (read_artifacts(root / "out1") != reference) {
      detail = "raw rerun " + std::to_string(rerun + 2) + " differs";
      return false;
    }
  }

  auto config4 = fixture_run_config(root / "corpus", root / "out4");
  config4.workers = 4;
  pipeline::run_pipeline(config4);
  if (read_artifacts(root / "out4") != reference) {
    detail = "worker count 4 produced different artifacts";
    return false;
  }

  detail = "cold " + std::to_string(cold_seconds) + "s, warm " +
           std::to_string(warm_seconds) + "s";
  return cold_seconds < 60.0 && warm_seconds < 5.0;
}

// --------------------------------------------------------------------------
// 5. ablation contract

bool criterion_ablation(std::string& detail) {
  const auto root = scratch("ablation");
  fixtures::FixtureParams params;
  fixtures::generate_corpus(params, root / "corpus");

  auto contextual = fixture_run_config(root / "corpus", root / "out");
  contextual.run_id = "ctx";
  pipeline::run_pipeline(contextual);

  auto ablated = fixture_run_config(root / "corpus", root / "out");
  ablated.run_id = "free";
  ablated.context_free = true;
  ablated.capture_prompts = true;
  const auto ablated_result = pipeline::run_pipeline(ablated);

  std::size_t checked = 0;
  for (const auto& prompt : ablated_result.captured_pass2_prompts) {
    if (prompt.find(representation::kPass2Marker) == std::string::npos) {
      continue;
    }
    ++checked;
    if (prompt.find(representation::kNeighborMarker) != std::string::npos) {
      detail = "neighbor text found in a context-free pass-two prompt";
      return false;
    }
  }
  if (checked == 0) {
    detail = "no pass-two prompts captured";
    return false;
  }

  // the context-sensitive mock adds exactly kContextOffset per function
  long long contextual_sum = 0, ablated_sum = 0;
  std::size_t n_ctx = 0, n_free = 0;
  for (const auto& entry :
       std::filesystem::directory_iterator(root / "corpus" / "samples")) {
    const auto sample_id = entry.path().filename().string();
    for (const auto& rep : representation::load_reps(
             root / "out" / "reps" / (sample_id + ".contextual.jsonl"))) {
      contextual_sum += rep.sensitivity;
      ++n_ctx;
    }
    for (const auto& rep : representation::load_reps(
             root / "out" / "reps" / (sample_id + ".context_free.jsonl"))) {
      ablated_sum += rep.sensitivity;
      ++n_free;
    }
  }
  if (n_ctx == 0 || n_ctx != n_free) {
    detail = "rep stores are incomplete";
    return false;
  }
  const double mean_diff =
      static_cast<double>(contextual_sum - ablated_sum) / static_cast<double>(n_ctx);
  if (std::fabs(mean_diff - fixtures::kContextOffset) > 1e-9) {
    detail = "mean sensitivity offset " + std::to_string(mean_diff);
    return false;
  }
  detail = std::to_string(checked) + " prompts clean, offset " + std::to_string(mean_diff);
  return true;
}

// --------------------------------------------------------------------------
// 6. planted-signal fidelity beats random rankings

bool criterion_fidelity_planted(std::string& detail) {
  const auto samples = fixtures::planted_signal_corpus({});
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    evaluation::FidelityConfig config;
    config.k_percent = 25.0;
    config.seed = seed;
    config.classifier.min_leaf = 1;
    const auto truth = evaluation::fidelity_score(samples, config);
    const auto shuffled =
        evaluation::fidelity_score(fixtures::randomize_ranking(samples, seed), config);
    if (truth.mean_fs > shuffled.mean_fs) {
      ++wins;
    }
  }
  detail = std::to_string(wins) + "/100 seeds favor the true ranking";
  return wins >= 95;
}

// --------------------------------------------------------------------------
// 7. Welch reference values

bool criterion_welch_reference(std::string& detail) {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{2, 3, 4};
  const auto result = analytics::welch_ttest(a, b);
  std::ostringstream message;
  message << "t=" << result.t << " df=" << result.df << " p=" << result.p;
  detail = message.str();
  return nearly(result.t, -1.2247, 1e-4) && nearly(result.df, 4.0, 1e-9) &&
         nearly(result.p, 0.2878, 1e-3);
}

// --------------------------------------------------------------------------
// 8. desk-scale scope statement

bool criterion_scope_statement(std::string& detail) {
  detail =
      "published model scores require commercial LLM endpoints and a private "
      "malware corpus; they are not reproducible at desk scale. Acceptance rests "
      "on criteria 1-7 plus the per-module invariant suites, all offline via the "
      "mock gateway.";
  return true;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "metric-oracle suite (1e-9, p 1e-6, <30s)", criterion_metric_oracles},
      {2, "published-row DS/WRS consistency (+-0.01)", criterion_table_consistency},
      {3, "reachability closure, dead code, monotonicity (<10s)", criterion_reachability},
      {4, "end-to-end mock determinism across runs and worker counts",
       criterion_determinism},
      {5, "ablation contract: prompt purity and exact sensitivity offset",
       criterion_ablation},
      {6, "planted-signal fidelity beats random ranking (>=95/100)",
       criterion_fidelity_planted},
      {7, "Welch reference instance", criterion_welch_reference},
      {8, "offline scope statement", criterion_scope_statement},
  };

  int failures = 0;
  for (const auto& criterion : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = criterion.run(detail);
    } catch (const std::exception& error) {
      detail = std::string("exception: ") + error.what();
    }
    std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion.number,
                criterion.title.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) {
      ++failures;
    }
  }
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
