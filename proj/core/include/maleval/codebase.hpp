#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "maleval/json_util.hpp"

namespace maleval::codebase {

/// Fully qualified method signature: `pkg.Class.method(param,types):ret`.
/// All signatures are stored in normalized form (whitespace stripped).
std::string normalize_signature(std::string_view signature);
bool is_valid_signature(const std::string& signature);
std::string signature_class(const std::string& signature);
std::string signature_method(const std::string& signature);

struct FunctionRecord {
  std::string id;
  std::string signature;
  std::string class_name;
  std::string source_text;
  std::vector<std::string> invoked_apis;
  std::string override_of;  // empty when not an override
};

struct CallGraph {
  // Set semantics: no duplicate edges, deterministic order.
  std::set<std::pair<std::string, std::string>> edges;

  std::set<std::string> nodes() const;
};

struct ClassEntry {
  std::string superclass;  // empty at hierarchy roots
  std::vector<std::string> interfaces;
  bool framework = false;
};

struct ClassHierarchy {
  std::map<std::string, ClassEntry> classes;

  bool contains(const std::string& name) const { return classes.count(name) > 0; }
  /// Superclass plus interfaces, in declaration order.
  std::vector<std::string> parents(const std::string& name) const;
};

struct ManifestComponent {
  std::string kind;  // activity | service | receiver | provider
  std::string class_name;
};

struct Certificate {
  std::string issuer;
  std::string subject;
  std::string fingerprint;
};

struct ManifestMeta {
  std::string package_name;
  std::string version;
  std::vector<ManifestComponent> components;
  Certificate certificate;
};

inline constexpr const char* kSplitArchiveMalware = "archive_malware";
inline constexpr const char* kSplitLatestMalware = "latest_malware";
inline constexpr const char* kSplitBenign = "benign";

struct SampleLabel {
  std::string sample_id;
  std::string split;
  std::string family;              // optional
  std::string category;            // required for malware splits
  std::string ground_truth_report; // optional reference, forbidden for benign

  bool is_malware() const { return split != kSplitBenign; }
};

struct CodebaseBundle {
  SampleLabel label;
  std::vector<FunctionRecord> functions;
  CallGraph callgraph;
  ClassHierarchy hierarchy;
  ManifestMeta manifest;

  const FunctionRecord* find_function(const std::string& id) const;
  std::set<std::string> function_ids() const;

 private:
  mutable std::map<std::string, std::size_t> index_;
};

/// Loads the on-disk bundle layout (label.json, manifest.json,
/// hierarchy.json, functions.jsonl, callgraph.json) and cross-validates every
/// invariant. Non-fatal issues (e.g. a declared component class missing from
/// the hierarchy) are appended to `warnings`.
CodebaseBundle load_bundle(const std::filesystem::path& dir,
                           std::vector<std::string>* warnings = nullptr);

/// Canonical emission: loading and re-saving a bundle is byte-identical.
void save_bundle(const CodebaseBundle& bundle, const std::filesystem::path& dir);

void validate_bundle(const CodebaseBundle& bundle, std::vector<std::string>* warnings);

struct SensitiveApiEntry {
  std::string signature;
  std::string description;
  std::vector<std::string> required_permissions;
  bool deprecated = false;
  std::string deprecation_note;  // free text, e.g. "use getAllCellInfo instead"
  std::string replacement;       // resolved successor signature, deprecated only
};

struct SensitiveApiCatalog {
  std::map<std::string, SensitiveApiEntry> entries;
  std::string provenance;

  bool contains(const std::string& signature) const {
    return entries.count(signature) > 0;
  }
  const SensitiveApiEntry* find(const std::string& signature) const;
  /// Follows replacement links of deprecated entries; a non-deprecated entry
  /// resolves to itself.
  std::string resolve_active(const std::string& signature) const;
};

/// Normalizes raw entries: resolves deprecation notes to successor
/// signatures and adds named successors as first-class entries.
SensitiveApiCatalog build_catalog(const std::vector<SensitiveApiEntry>& raw_entries,
                                  const std::string& provenance = "",
                                  std::vector<std::string>* warnings = nullptr);

SensitiveApiCatalog load_catalog(const std::filesystem::path& path);
void save_catalog(const SensitiveApiCatalog& catalog, const std::filesystem::path& path);

/// L_A: catalog APIs invoked by at least one reachable function.
std::set<std::string> ground_truth_apis(const CodebaseBundle& bundle,
                                        const SensitiveApiCatalog& catalog,
                                        const std::set<std::string>& reachable_ids);

/// function id -> catalog APIs it invokes, restricted to `reachable_ids`.
std::map<std::string, std::vector<std::string>> sensitive_invocations(
    const CodebaseBundle& bundle, const SensitiveApiCatalog& catalog,
    const std::set<std::string>& reachable_ids);

}  // namespace maleval::codebase
