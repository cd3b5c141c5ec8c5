#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "maleval/evaluation.hpp"

namespace maleval::fixtures {

struct FixtureParams {
  std::uint64_t seed = 7;
  std::size_t samples = 5;
  double benign_fraction = 0.1;
  std::size_t functions_per_sample = 60;
  std::size_t components_per_sample = 3;
  std::size_t overrides_per_sample = 4;
  double dead_fraction = 0.2;  // of non-entrypoint functions
  std::size_t catalog_size = 40;
};

/// Planted truth recorded by the generator; oracle checks compare pipeline
/// outputs against it.
struct SampleLedger {
  std::string sample_id;
  std::string split;
  std::string category;
  std::map<std::string, std::string> entrypoints;  // id -> provenance tag
  std::set<std::string> reachable;
  std::set<std::string> dead;
  std::map<std::string, std::vector<std::string>> api_hits;  // reachable fn -> APIs
  std::set<std::string> reachable_apis;                      // expected L_A
  std::map<std::string, int> base_sensitivity;               // scripted pass-two score
  std::vector<std::string> gt_behaviors;
};

struct CorpusLedger {
  FixtureParams params;
  std::map<std::string, SampleLedger> samples;
};

/// Scripted pass-two replies add this to the base sensitivity whenever the
/// prompt carries at least one rendered neighbor entry.
inline constexpr int kContextOffset = 10;

/// Emits a self-contained synthetic corpus: samples/<id>/ bundles,
/// gt/<id>.json reports, catalog.jsonl, config/{taxonomy,lifecycle_db}.json,
/// mock.jsonl aligned with the planted truth, and ledger.json. Byte-identical
/// for identical params.
CorpusLedger generate_corpus(const FixtureParams& params, const std::filesystem::path& root);

CorpusLedger load_ledger(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Planted-signal corpus for the fidelity criterion: category is fully
// determined by a handful of high-sensitivity descriptions per sample.

struct PlantedSignalParams {
  std::uint64_t seed = 11;
  std::size_t samples = 36;
  std::size_t categories = 3;
  std::size_t functions_per_sample = 20;
  std::size_t planted_per_sample = 5;
};

std::vector<evaluation::FidelitySample> planted_signal_corpus(const PlantedSignalParams& params);

/// Same reps with sensitivities replaced by a seeded random permutation of
/// the original scores; the baseline ranking for the fidelity comparison.
std::vector<evaluation::FidelitySample> randomize_ranking(
    const std::vector<evaluation::FidelitySample>& samples, std::uint64_t seed);

}  // namespace maleval::fixtures
