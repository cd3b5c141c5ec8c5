#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "maleval/codebase.hpp"
#include "maleval/gateway.hpp"
#include "maleval/reduction.hpp"

namespace maleval::representation {

enum class RepMode { Contextual, ContextFree };

const char* rep_mode_name(RepMode mode);
RepMode rep_mode_from_string(const std::string& name);

struct NeighborEntry {
  std::string signature;
  std::string description;  // context-free pass-one output
  std::string direction;    // "caller" | "callee"
};

/// One-hop caller/callee neighborhood of one function, restricted to the
/// reachable set.
struct NeighborDigest {
  std::vector<NeighborEntry> neighbors;
};

struct StructuralRep {
  std::string function_id;
  std::string signature;
  std::string context_description;
  int sensitivity = 0;  // 0..100
  RepMode mode = RepMode::Contextual;
  bool parse_failed = false;   // structured reply rejected twice; defaulted
  std::string raw_reply;       // preserved verbatim for audit when parse_failed
};

struct RankedRepList {
  std::vector<StructuralRep> reps;  // sensitivity desc, function_id asc
  std::string tie_break = "function_id_asc";
};

/// Stable prompt headers; mock-script rules and contract checks key on them.
inline constexpr const char* kPass1Marker = "## function description (pass one)";
inline constexpr const char* kPass2Marker = "## structural representation (pass two)";

struct PromptTemplates {
  std::string pass1;  // placeholders: {signature} {source}
  std::string pass2;  // placeholders: {signature} {source} {neighbors}

  static PromptTemplates builtin();
  static PromptTemplates load(const std::filesystem::path& dir);
};

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values);

/// Marker prefixed to every rendered neighbor entry; ablation-purity checks
/// assert its absence from context-free prompts.
inline constexpr const char* kNeighborMarker = "[neighbor]";

std::string render_neighbors(const NeighborDigest& digest);

class RepBuilder {
 public:
  RepBuilder(gateway::Gateway& gw, gateway::ModelSpec spec, PromptTemplates templates,
             bool capture_prompts = false);

  /// Pass one: functionality description from source alone.
  std::string describe_context_free(const codebase::FunctionRecord& fn);

  /// Pass two: context-driven description + sensitivity score. Malformed
  /// replies are repaired once by the gateway; a second failure defaults the
  /// rep to sensitivity 0 with the raw reply preserved.
  StructuralRep build_ir(const codebase::FunctionRecord& fn, const NeighborDigest& neighbors,
                         RepMode mode);

  std::vector<std::string> captured_prompts() const;
  const gateway::ModelSpec& spec() const { return spec_; }

  /// Pass one may run on a different (e.g. cheaper helper) model.
  void set_pass1_spec(gateway::ModelSpec spec) { pass1_spec_ = std::move(spec); }

 private:
  void capture(const std::string& prompt);

  gateway::Gateway& gateway_;
  gateway::ModelSpec spec_;
  std::optional<gateway::ModelSpec> pass1_spec_;
  PromptTemplates templates_;
  bool capture_prompts_;
  mutable std::mutex mutex_;
  std::vector<std::string> captured_;
};

/// Neighbors of `id`: one-hop in/out edges restricted to the reachable set,
/// with pass-one descriptions attached.
NeighborDigest collect_neighbors(const codebase::CodebaseBundle& bundle,
                                 const reduction::ReachableSet& reachable,
                                 const std::map<std::string, std::string>& pass1_descriptions,
                                 const std::string& id);

/// Two-pass representation build over the whole reachable set. Pass one is
/// skipped in context-free mode. Parallel across functions; the pass-one
/// cache is a barrier between passes.
std::vector<StructuralRep> build_sample_reps(const codebase::CodebaseBundle& bundle,
                                             const reduction::ReachableSet& reachable,
                                             RepBuilder& builder, RepMode mode,
                                             std::size_t workers = 1);

/// Stable sort: sensitivity descending, function_id ascending. All reps must
/// share one mode.
RankedRepList rank_reps(std::vector<StructuralRep> reps);

/// F̃_r: ids of reps with sensitivity >= tau (inclusive).
std::set<std::string> select_by_threshold(const RankedRepList& ranked, int tau);

/// Rendering of one rep as a prompt block (also the truncation unit).
std::string render_rep_block(const StructuralRep& rep);

struct PromptPayload {
  std::string rendered;                     // blocks in rank order
  std::vector<std::string> included_ids;    // function ids that fit
  std::vector<std::string> included_signatures;
  std::size_t included_count = 0;
};

/// Greedy rank-order fit of rep blocks into the model's context budget.
PromptPayload truncate_to_budget(const RankedRepList& ranked, const gateway::ModelSpec& spec,
                                 std::size_t overhead_tokens = 256);

void save_reps(const std::filesystem::path& path, const std::vector<StructuralRep>& reps,
               const std::string& model_spec_hash);
std::vector<StructuralRep> load_reps(const std::filesystem::path& path,
                                     std::string* model_spec_hash = nullptr);

}  // namespace maleval::representation
