#include <doctest.h>

#include <random>

#include "maleval/errors.hpp"
#include "maleval/fixtures.hpp"
#include "maleval/reduction.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace maleval;
using namespace maleval::reduction;

namespace {

// Bare-graph bundle: functions named by index, arbitrary edges, no
// entrypoint semantics (tests seed the entrypoint set directly).
codebase::CodebaseBundle graph_bundle(std::size_t nodes,
                                      const std::vector<std::pair<std::string, std::string>>& edges) {
  codebase::CodebaseBundle bundle;
  bundle.label.sample_id = "graph";
  bundle.label.split = codebase::kSplitArchiveMalware;
  bundle.label.category = "Trojan";
  bundle.hierarchy.classes["java.lang.Object"] = {"", {}, true};
  bundle.hierarchy.classes["g.Node"] = {"java.lang.Object", {}, false};
  for (std::size_t i = 0; i < nodes; ++i) {
    codebase::FunctionRecord fn;
    fn.id = "n" + std::to_string(i);
    fn.class_name = "g.Node";
    fn.signature = "g.Node.m" + std::to_string(i) + "():void";
    bundle.functions.push_back(std::move(fn));
  }
  for (const auto& edge : edges) {
    bundle.callgraph.edges.insert(edge);
  }
  return bundle;
}

EntrypointSet seeds(const std::vector<std::string>& ids) {
  EntrypointSet out;
  for (const auto& id : ids) {
    out.ids.emplace(id, EntrypointSource::ManifestLifecycle);
  }
  return out;
}

}  // namespace

TEST_CASE("manifest lifecycle methods become entrypoints") {
  codebase::CodebaseBundle bundle;
  bundle.label.sample_id = "s";
  bundle.label.split = codebase::kSplitBenign;
  bundle.hierarchy.classes["java.lang.Object"] = {"", {}, true};
  bundle.hierarchy.classes["android.app.Activity"] = {"java.lang.Object", {}, true};
  bundle.hierarchy.classes["com.app.Main"] = {"android.app.Activity", {}, false};
  bundle.manifest.components.push_back({"activity", "com.app.Main"});

  codebase::FunctionRecord on_create;
  on_create.id = "f1";
  on_create.class_name = "com.app.Main";
  on_create.signature = "com.app.Main.onCreate(android.os.Bundle):void";
  bundle.functions.push_back(on_create);

  codebase::FunctionRecord helper;
  helper.id = "f2";
  helper.class_name = "com.app.Main";
  helper.signature = "com.app.Main.step():void";
  bundle.functions.push_back(helper);

  const auto entrypoints = identify_entrypoints(bundle, default_lifecycle_db());
  REQUIRE(entrypoints.size() == 1);
  CHECK(entrypoints.ids.at("f1") == EntrypointSource::ManifestLifecycle);

  SUBCASE("a component without lifecycle methods warns instead of failing") {
    bundle.manifest.components.push_back({"receiver", "com.app.Main"});  // no onReceive
    std::vector<std::string> warnings;
    const auto again = identify_entrypoints(bundle, default_lifecycle_db(), &warnings);
    CHECK(again.size() == 1);
    CHECK(warnings.size() == 1);
  }
}

TEST_CASE("framework overrides become entrypoints") {
  codebase::CodebaseBundle bundle;
  bundle.label.sample_id = "s";
  bundle.label.split = codebase::kSplitBenign;
  bundle.hierarchy.classes["java.lang.Object"] = {"", {}, true};
  bundle.hierarchy.classes["android.view.View$OnClickListener"] = {"", {}, true};
  bundle.hierarchy.classes["com.app.Click"] = {
      "java.lang.Object", {"android.view.View$OnClickListener"}, false};

  codebase::FunctionRecord explicit_override;
  explicit_override.id = "f1";
  explicit_override.class_name = "com.app.Click";
  explicit_override.signature = "com.app.Click.onClick(android.view.View):void";
  explicit_override.override_of =
      "android.view.View$OnClickListener.onClick(android.view.View):void";

  codebase::FunctionRecord hierarchy_override = explicit_override;
  hierarchy_override.id = "f2";
  hierarchy_override.override_of.clear();  // resolved by climbing the hierarchy

  codebase::FunctionRecord plain;
  plain.id = "f3";
  plain.class_name = "com.app.Click";
  plain.signature = "com.app.Click.helper():void";

  bundle.functions = {explicit_override, hierarchy_override, plain};
  const auto entrypoints = identify_entrypoints(bundle, default_lifecycle_db());
  CHECK(entrypoints.size() == 2);
  CHECK(entrypoints.ids.at("f1") == EntrypointSource::FrameworkOverride);
  CHECK(entrypoints.ids.at("f2") == EntrypointSource::FrameworkOverride);
  CHECK_FALSE(entrypoints.contains("f3"));
}

TEST_CASE("fixture entrypoints match the generator ledger exactly") {
  const auto dir = testutil::test_dir("reduction_ledger");
  fixtures::FixtureParams params;
  params.samples = 3;
  params.benign_fraction = 0.0;
  params.functions_per_sample = 120;
  params.components_per_sample = 5;
  params.overrides_per_sample = 6;
  const auto ledger = fixtures::generate_corpus(params, dir);
  const auto db = load_lifecycle_db(dir / "config" / "lifecycle_db.json");

  for (const auto& [sample_id, planted] : ledger.samples) {
    const auto bundle = codebase::load_bundle(dir / "samples" / sample_id);
    const auto entrypoints = identify_entrypoints(bundle, db);
    // one planted lifecycle method per component plus the planted overrides
    CHECK(entrypoints.size() ==
          params.components_per_sample + params.overrides_per_sample);
    REQUIRE(entrypoints.size() == planted.entrypoints.size());
    for (const auto& [id, tag] : planted.entrypoints) {
      REQUIRE(entrypoints.contains(id));
      CHECK(entrypoint_source_name(entrypoints.ids.at(id)) == tag);
    }
  }
}

TEST_CASE("BFS depths on a chain") {
  const auto bundle = graph_bundle(4, {{"n0", "n1"}, {"n1", "n2"}});
  const auto reachable = reachable_functions(bundle, seeds({"n0"}));
  CHECK(reachable.size() == 3);
  CHECK(reachable.depth.at("n0") == 0);
  CHECK(reachable.depth.at("n1") == 1);
  CHECK(reachable.depth.at("n2") == 2);
  CHECK_FALSE(reachable.contains("n3"));  // disconnected dead code
}

TEST_CASE("empty entrypoint set is an error") {
  const auto bundle = graph_bundle(2, {{"n0", "n1"}});
  try {
    reachable_functions(bundle, EntrypointSet{});
    FAIL("expected EmptyEntrypointSet");
  } catch (const Error& error) {
    CHECK(error.kind() == ErrorKind::EmptyEntrypointSet);
  }
}

TEST_CASE("random digraphs match the naive fixpoint oracle") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 200 + rng() % 800;
    std::vector<std::pair<std::string, std::string>> edges;
    const std::size_t m = n * 2;
    for (std::size_t e = 0; e < m; ++e) {
      edges.emplace_back("n" + std::to_string(rng() % n), "n" + std::to_string(rng() % n));
    }
    std::set<std::string> seed_set;
    for (int s = 0; s < 25; ++s) {
      seed_set.insert("n" + std::to_string(rng() % n));
    }
    const auto bundle = graph_bundle(n, edges);
    EntrypointSet entry;
    for (const auto& id : seed_set) {
      entry.ids.emplace(id, EntrypointSource::FrameworkOverride);
    }
    const auto reachable = reachable_functions(bundle, entry);
    CHECK(reachable.ids() == oracle::naive_closure(edges, seed_set));
  }
}

TEST_CASE("adding an edge never shrinks the reachable set") {
  std::mt19937_64 rng(7);
  const std::size_t n = 120;
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t e = 0; e < 150; ++e) {
    edges.emplace_back("n" + std::to_string(rng() % n), "n" + std::to_string(rng() % n));
  }
  auto bundle = graph_bundle(n, edges);
  const auto entry = seeds({"n0", "n1"});
  auto previous = reachable_functions(bundle, entry).ids();
  for (int round = 0; round < 50; ++round) {
    bundle.callgraph.edges.emplace("n" + std::to_string(rng() % n),
                                   "n" + std::to_string(rng() % n));
    const auto current = reachable_functions(bundle, entry).ids();
    CHECK(std::includes(current.begin(), current.end(), previous.begin(), previous.end()));
    previous = current;
  }
}

TEST_CASE("every reachable function has a valid witness path") {
  std::mt19937_64 rng(13);
  const std::size_t n = 150;
  std::vector<std::pair<std::string, std::string>> edges;
  for (std::size_t e = 0; e < 300; ++e) {
    edges.emplace_back("n" + std::to_string(rng() % n), "n" + std::to_string(rng() % n));
  }
  const auto bundle = graph_bundle(n, edges);
  const auto entry = seeds({"n0", "n5", "n10"});
  const auto reachable = reachable_functions(bundle, entry);

  for (const auto& [id, depth] : reachable.depth) {
    const auto path = witness_path(reachable, id);
    REQUIRE_FALSE(path.empty());
    CHECK(entry.contains(path.front()));
    CHECK(path.back() == id);
    CHECK(path.size() == static_cast<std::size_t>(depth) + 1);
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      CHECK(bundle.callgraph.edges.count({path[i], path[i + 1]}) == 1);
    }
  }
  CHECK(witness_path(reachable, "not-a-node").empty());
}

TEST_CASE("determinism across repeated runs") {
  const auto dir = testutil::test_dir("reduction_determinism");
  fixtures::FixtureParams params;
  params.samples = 1;
  params.benign_fraction = 0.0;
  const auto ledger = fixtures::generate_corpus(params, dir);
  const auto bundle = codebase::load_bundle(dir / "samples" / "sample_000");
  const auto db = load_lifecycle_db(dir / "config" / "lifecycle_db.json");

  const auto a = identify_entrypoints(bundle, db);
  const auto b = identify_entrypoints(bundle, db);
  CHECK(a.ids == b.ids);
  const auto ra = reachable_functions(bundle, a);
  const auto rb = reachable_functions(bundle, b);
  CHECK(ra.depth == rb.depth);
  CHECK(ra.parent == rb.parent);

  // ledger agreement: reachable set and dead set
  const auto& planted = ledger.samples.at("sample_000");
  CHECK(ra.ids() == planted.reachable);
  for (const auto& id : planted.dead) {
    CHECK_FALSE(ra.contains(id));
  }
}

TEST_CASE("reduction stats arithmetic") {
  SUBCASE("no reduction") {
    const auto bundle = graph_bundle(2, {{"n0", "n1"}});
    const auto reachable = reachable_functions(bundle, seeds({"n0"}));
    const auto stats = reduction_stats(bundle, reachable);
    CHECK(stats.total_functions == 2);
    CHECK(stats.reachable_count == 2);
    CHECK(stats.reduction_pct == doctest::Approx(0.0));
    CHECK(stats.entrypoint_count == 1);
  }
  SUBCASE("75 percent cut") {
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 1; i < 50; ++i) {
      edges.emplace_back("n0", "n" + std::to_string(i));
    }
    const auto bundle = graph_bundle(200, edges);
    const auto reachable = reachable_functions(bundle, seeds({"n0"}));
    const auto stats = reduction_stats(bundle, reachable);
    CHECK(stats.reachable_count == 50);
    CHECK(stats.reduction_pct == doctest::Approx(75.0));
  }
  SUBCASE("direct formula on corpus-scale totals") {
    // the operation reports the plain formula value for these totals, which
    // is not the corpus-aggregate figure computed under a different
    // averaging basis
    const double pct = 100.0 * (1.0 - 689232.0 / 3187032.0);
    CHECK(pct == doctest::Approx(78.3737).epsilon(1e-4));
    CHECK(pct != doctest::Approx(66.02).epsilon(1e-3));
  }
}

TEST_CASE("lifecycle db round trip") {
  const auto dir = testutil::test_dir("reduction_lifecycle_db");
  const auto db = default_lifecycle_db();
  save_lifecycle_db(db, dir / "lifecycle_db.json");
  const auto loaded = load_lifecycle_db(dir / "lifecycle_db.json");
  CHECK(loaded.lifecycle_methods == db.lifecycle_methods);
  CHECK(loaded.framework_signatures == db.framework_signatures);
}
