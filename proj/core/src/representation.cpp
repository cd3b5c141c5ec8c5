#include "maleval/representation.hpp"

#include <algorithm>
#include <cmath>

#include "maleval/errors.hpp"
#include "maleval/parallel.hpp"

namespace maleval::representation {

const char* rep_mode_name(RepMode mode) {
  return mode == RepMode::Contextual ? "contextual" : "context_free";
}

RepMode rep_mode_from_string(const std::string& name) {
  if (name == "contextual") return RepMode::Contextual;
  if (name == "context_free") return RepMode::ContextFree;
  raise(ErrorKind::ConfigError, "unknown representation mode '" + name + "'");
}

PromptTemplates PromptTemplates::builtin() {
  PromptTemplates t;
  t.pass1 = std::string(kPass1Marker) +
            "\nDescribe what the following function does, based on its source code alone.\n"
            "Flag a trivial body explicitly.\n"
            "Signature: {signature}\n"
            "Source:\n{source}\n";
  t.pass2 = std::string(kPass2Marker) +
            "\nSummarize the function's role within its invocation context and score its\n"
            "security sensitivity from 0 (benign) to 100 (critical).\n"
            "Reply with a JSON object {\"description\": \"...\", \"sensitivity\": 0-100}.\n"
            "Signature: {signature}\n"
            "Source:\n{source}\n"
            "Neighborhood:\n{neighbors}\n";
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  PromptTemplates t;
  t.pass1 = read_text_file(dir / "ir_pass1.txt");
  t.pass2 = read_text_file(dir / "ir_pass2.txt");
  return t;
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const std::size_t open = tmpl.find('{', pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    const std::size_t close = tmpl.find('}', open);
    if (close == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    out.append(tmpl, pos, open - pos);
    const std::string key = tmpl.substr(open + 1, close - open - 1);
    auto it = values.find(key);
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(tmpl, open, close - open + 1);  // unknown placeholder kept verbatim
    }
    pos = close + 1;
  }
  return out;
}

std::string render_neighbors(const NeighborDigest& digest) {
  if (digest.neighbors.empty()) {
    return "(none)";
  }
  std::string out;
  for (const auto& n : digest.neighbors) {
    out += std::string(kNeighborMarker) + " " + n.direction + " " + n.signature + ": " +
           n.description + "\n";
  }
  return out;
}

RepBuilder::RepBuilder(gateway::Gateway& gw, gateway::ModelSpec spec, PromptTemplates templates,
                       bool capture_prompts)
    : gateway_(gw),
      spec_(std::move(spec)),
      templates_(std::move(templates)),
      capture_prompts_(capture_prompts) {}

void RepBuilder::capture(const std::string& prompt) {
  if (!capture_prompts_) {
    return;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  captured_.push_back(prompt);
}

std::vector<std::string> RepBuilder::captured_prompts() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return captured_;
}

std::string RepBuilder::describe_context_free(const codebase::FunctionRecord& fn) {
  const std::string prompt = render_template(
      templates_.pass1, {{"signature", fn.signature}, {"source", fn.source_text}});
  capture(prompt);
  try {
    return gateway_.complete(pass1_spec_.value_or(spec_), prompt).reply;
  } catch (const Error& error) {
    raise(ErrorKind::GatewayError,
          "function '" + fn.id + "': " + error.what());
  }
}

StructuralRep RepBuilder::build_ir(const codebase::FunctionRecord& fn,
                                   const NeighborDigest& neighbors, RepMode mode) {
  const std::string neighbor_text =
      mode == RepMode::Contextual ? render_neighbors(neighbors) : "(context-free mode)";
  const std::string prompt =
      render_template(templates_.pass2, {{"signature", fn.signature},
                                         {"source", fn.source_text},
                                         {"neighbors", neighbor_text}});
  capture(prompt);

  StructuralRep rep;
  rep.function_id = fn.id;
  rep.signature = fn.signature;
  rep.mode = mode;
  try {
    const json reply = gateway_.complete_structured(spec_, prompt, "ir_reply");
    rep.context_description = reply["description"].get<std::string>();
    rep.sensitivity =
        static_cast<int>(std::lround(reply["sensitivity"].get<double>()));
  } catch (const Error& error) {
    if (error.kind() != ErrorKind::UnparseableReply) {
      raise(ErrorKind::GatewayError, "function '" + fn.id + "': " + error.what());
    }
    // One bad function must not void the sample: default and keep the raw
    // reply for audit.
    rep.parse_failed = true;
    rep.sensitivity = 0;
    rep.context_description = "(unparseable reply)";
    rep.raw_reply = error.what();
  }
  return rep;
}

NeighborDigest collect_neighbors(const codebase::CodebaseBundle& bundle,
                                 const reduction::ReachableSet& reachable,
                                 const std::map<std::string, std::string>& pass1_descriptions,
                                 const std::string& id) {
  NeighborDigest digest;
  auto add = [&](const std::string& neighbor_id, const char* direction) {
    if (!reachable.contains(neighbor_id) || neighbor_id == id) {
      return;
    }
    const auto* fn = bundle.find_function(neighbor_id);
    if (fn == nullptr) {
      return;
    }
    NeighborEntry entry;
    entry.signature = fn->signature;
    entry.direction = direction;
    auto it = pass1_descriptions.find(neighbor_id);
    entry.description = it == pass1_descriptions.end() ? "" : it->second;
    digest.neighbors.push_back(std::move(entry));
  };
  for (const auto& [from, to] : bundle.callgraph.edges) {
    if (from == id) {
      add(to, "callee");
    }
    if (to == id) {
      add(from, "caller");
    }
  }
  std::sort(digest.neighbors.begin(), digest.neighbors.end(),
            [](const NeighborEntry& a, const NeighborEntry& b) {
              return std::tie(a.direction, a.signature) < std::tie(b.direction, b.signature);
            });
  return digest;
}

std::vector<StructuralRep> build_sample_reps(const codebase::CodebaseBundle& bundle,
                                             const reduction::ReachableSet& reachable,
                                             RepBuilder& builder, RepMode mode,
                                             std::size_t workers) {
  std::vector<const codebase::FunctionRecord*> targets;
  for (const auto& fn : bundle.functions) {
    if (reachable.contains(fn.id)) {
      targets.push_back(&fn);
    }
  }
  std::sort(targets.begin(), targets.end(),
            [](const auto* a, const auto* b) { return a->id < b->id; });

  // Pass one: context-free neighbor descriptions. Skipped entirely in the
  // ablation mode, which never consumes neighborhoods.
  std::map<std::string, std::string> pass1;
  if (mode == RepMode::Contextual) {
    std::vector<std::string> descriptions(targets.size());
    parallel_for(targets.size(), workers, [&](std::size_t i) {
      descriptions[i] = builder.describe_context_free(*targets[i]);
    });
    for (std::size_t i = 0; i < targets.size(); ++i) {
      pass1[targets[i]->id] = std::move(descriptions[i]);
    }
  }

  // Pass two observes the completed pass-one map.
  std::vector<StructuralRep> reps(targets.size());
  parallel_for(targets.size(), workers, [&](std::size_t i) {
    NeighborDigest digest;
    if (mode == RepMode::Contextual) {
      digest = collect_neighbors(bundle, reachable, pass1, targets[i]->id);
    }
    reps[i] = builder.build_ir(*targets[i], digest, mode);
  });
  return reps;
}

RankedRepList rank_reps(std::vector<StructuralRep> reps) {
  if (!reps.empty()) {
    const RepMode mode = reps.front().mode;
    for (const auto& rep : reps) {
      if (rep.mode != mode) {
        raise(ErrorKind::MixedMode,
              "rep '" + rep.function_id + "' has mode " + rep_mode_name(rep.mode) +
                  ", expected " + rep_mode_name(mode));
      }
    }
  }
  std::stable_sort(reps.begin(), reps.end(), [](const StructuralRep& a, const StructuralRep& b) {
    if (a.sensitivity != b.sensitivity) {
      return a.sensitivity > b.sensitivity;
    }
    return a.function_id < b.function_id;
  });
  RankedRepList ranked;
  ranked.reps = std::move(reps);
  return ranked;
}

std::set<std::string> select_by_threshold(const RankedRepList& ranked, int tau) {
  std::set<std::string> selected;
  for (const auto& rep : ranked.reps) {
    if (rep.sensitivity >= tau) {
      selected.insert(rep.function_id);
    }
  }
  return selected;
}

std::string render_rep_block(const StructuralRep& rep) {
  return "- function: " + rep.signature + "\n  sensitivity: " +
         std::to_string(rep.sensitivity) + "\n  description: " + rep.context_description +
         "\n";
}

PromptPayload truncate_to_budget(const RankedRepList& ranked, const gateway::ModelSpec& spec,
                                 std::size_t overhead_tokens) {
  std::vector<std::string> blocks;
  blocks.reserve(ranked.reps.size());
  for (const auto& rep : ranked.reps) {
    blocks.push_back(render_rep_block(rep));
  }
  const auto fit = gateway::fit_blocks(blocks, spec, overhead_tokens);

  PromptPayload payload;
  payload.included_count = fit.included;
  for (std::size_t i = 0; i < fit.included; ++i) {
    payload.rendered += blocks[i];
    payload.included_ids.push_back(ranked.reps[i].function_id);
    payload.included_signatures.push_back(ranked.reps[i].signature);
  }
  return payload;
}

void save_reps(const std::filesystem::path& path, const std::vector<StructuralRep>& reps,
               const std::string& model_spec_hash) {
  std::vector<json> lines;
  lines.push_back(json{{"_model_spec_hash", model_spec_hash}});
  for (const auto& rep : reps) {
    json line;
    line["function_id"] = rep.function_id;
    line["signature"] = rep.signature;
    line["context_description"] = rep.context_description;
    line["sensitivity"] = rep.sensitivity;
    line["mode"] = rep_mode_name(rep.mode);
    if (rep.parse_failed) {
      line["parse_failed"] = true;
      line["raw_reply"] = rep.raw_reply;
    }
    lines.push_back(std::move(line));
  }
  write_jsonl_file(path, lines);
}

std::vector<StructuralRep> load_reps(const std::filesystem::path& path,
                                     std::string* model_spec_hash) {
  std::vector<StructuralRep> reps;
  for (const auto& line : read_jsonl_file(path)) {
    if (line.contains("_model_spec_hash")) {
      if (model_spec_hash != nullptr) {
        *model_spec_hash = line["_model_spec_hash"].get<std::string>();
      }
      continue;
    }
    StructuralRep rep;
    rep.function_id = line["function_id"].get<std::string>();
    rep.signature = line["signature"].get<std::string>();
    rep.context_description = line["context_description"].get<std::string>();
    rep.sensitivity = line["sensitivity"].get<int>();
    rep.mode = rep_mode_from_string(line["mode"].get<std::string>());
    if (line.contains("parse_failed")) {
      rep.parse_failed = line["parse_failed"].get<bool>();
      rep.raw_reply = line.value("raw_reply", "");
    }
    reps.push_back(std::move(rep));
  }
  return reps;
}

}  // namespace maleval::representation
