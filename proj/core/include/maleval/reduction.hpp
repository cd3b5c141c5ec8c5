#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "maleval/codebase.hpp"

namespace maleval::reduction {

enum class EntrypointSource { ManifestLifecycle, FrameworkOverride };

const char* entrypoint_source_name(EntrypointSource source);

struct EntrypointSet {
  // function id -> provenance; union semantics, first tag wins for display
  std::map<std::string, EntrypointSource> ids;

  bool empty() const { return ids.empty(); }
  std::size_t size() const { return ids.size(); }
  bool contains(const std::string& id) const { return ids.count(id) > 0; }
};

/// Component kind -> lifecycle method names, plus the framework method
/// signatures that user overrides are matched against.
struct LifecycleDb {
  std::map<std::string, std::vector<std::string>> lifecycle_methods;
  std::set<std::string> framework_signatures;
};

LifecycleDb default_lifecycle_db();
LifecycleDb load_lifecycle_db(const std::filesystem::path& path);
void save_lifecycle_db(const LifecycleDb& db, const std::filesystem::path& path);

/// Entrypoints are the union of (a) lifecycle methods on manifest-declared
/// component classes and (b) user functions overriding a framework method.
EntrypointSet identify_entrypoints(const codebase::CodebaseBundle& bundle,
                                   const LifecycleDb& db,
                                   std::vector<std::string>* warnings = nullptr);

struct ReachableSet {
  std::map<std::string, int> depth;          // BFS level, entrypoints at 0
  std::map<std::string, std::string> parent; // BFS predecessor, empty at entrypoints

  bool contains(const std::string& id) const { return depth.count(id) > 0; }
  std::size_t size() const { return depth.size(); }
  std::set<std::string> ids() const;
};

/// Forward transitive closure from the entrypoints over call-graph edges.
ReachableSet reachable_functions(const codebase::CodebaseBundle& bundle,
                                 const EntrypointSet& entrypoints);

/// Call path from an entrypoint to `id`, reconstructed from BFS parents.
std::vector<std::string> witness_path(const ReachableSet& reachable, const std::string& id);

struct ReductionStats {
  std::size_t total_functions = 0;
  std::size_t reachable_count = 0;
  std::size_t entrypoint_count = 0;
  double reduction_pct = 0.0;  // 100 * (1 - reachable/total)
};

ReductionStats reduction_stats(const codebase::CodebaseBundle& bundle,
                               const ReachableSet& reachable);

}  // namespace maleval::reduction
