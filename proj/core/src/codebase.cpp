#include "maleval/codebase.hpp"

#include <algorithm>
#include <cctype>

#include "maleval/errors.hpp"

namespace maleval::codebase {

namespace {

std::string require_string(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    raise(ErrorKind::SchemaViolation, where + ": missing string field '" + key + "'");
  }
  return doc[key].get<std::string>();
}

std::string optional_string(const json& doc, const char* key) {
  if (doc.contains(key) && doc[key].is_string()) {
    return doc[key].get<std::string>();
  }
  return {};
}

const std::set<std::string> kComponentKinds = {"activity", "service", "receiver", "provider"};
const std::set<std::string> kSplits = {kSplitArchiveMalware, kSplitLatestMalware, kSplitBenign};

}  // namespace

std::string normalize_signature(std::string_view signature) {
  std::string out;
  out.reserve(signature.size());
  for (char c : signature) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      out += c;
    }
  }
  return out;
}

bool is_valid_signature(const std::string& signature) {
  const std::size_t open = signature.find('(');
  const std::size_t close = signature.find(')', open == std::string::npos ? 0 : open);
  if (open == std::string::npos || close == std::string::npos || open == 0) {
    return false;
  }
  // class.method before '('; both segments non-empty
  const std::size_t dot = signature.rfind('.', open);
  if (dot == std::string::npos || dot == 0 || dot + 1 == open) {
    return false;
  }
  return true;
}

std::string signature_class(const std::string& signature) {
  const std::size_t open = signature.find('(');
  const std::size_t dot = signature.rfind('.', open);
  if (dot == std::string::npos) {
    return {};
  }
  return signature.substr(0, dot);
}

std::string signature_method(const std::string& signature) {
  const std::size_t open = signature.find('(');
  const std::size_t dot = signature.rfind('.', open);
  if (dot == std::string::npos || open == std::string::npos) {
    return {};
  }
  return signature.substr(dot + 1, open - dot - 1);
}

std::set<std::string> CallGraph::nodes() const {
  std::set<std::string> out;
  for (const auto& [from, to] : edges) {
    out.insert(from);
    out.insert(to);
  }
  return out;
}

std::vector<std::string> ClassHierarchy::parents(const std::string& name) const {
  std::vector<std::string> out;
  auto it = classes.find(name);
  if (it == classes.end()) {
    return out;
  }
  if (!it->second.superclass.empty()) {
    out.push_back(it->second.superclass);
  }
  for (const auto& iface : it->second.interfaces) {
    out.push_back(iface);
  }
  return out;
}

const FunctionRecord* CodebaseBundle::find_function(const std::string& id) const {
  if (index_.empty() && !functions.empty()) {
    for (std::size_t i = 0; i < functions.size(); ++i) {
      index_[functions[i].id] = i;
    }
  }
  auto it = index_.find(id);
  if (it == index_.end()) {
    return nullptr;
  }
  return &functions[it->second];
}

std::set<std::string> CodebaseBundle::function_ids() const {
  std::set<std::string> out;
  for (const auto& f : functions) {
    out.insert(f.id);
  }
  return out;
}

namespace {

json label_to_json(const SampleLabel& label) {
  json doc;
  doc["sample_id"] = label.sample_id;
  doc["split"] = label.split;
  if (!label.family.empty()) doc["family"] = label.family;
  if (!label.category.empty()) doc["category"] = label.category;
  if (!label.ground_truth_report.empty()) doc["ground_truth_report"] = label.ground_truth_report;
  return doc;
}

SampleLabel label_from_json(const json& doc) {
  SampleLabel label;
  label.sample_id = require_string(doc, "sample_id", "label.json");
  label.split = require_string(doc, "split", "label.json");
  label.family = optional_string(doc, "family");
  label.category = optional_string(doc, "category");
  label.ground_truth_report = optional_string(doc, "ground_truth_report");
  return label;
}

json manifest_to_json(const ManifestMeta& manifest) {
  json doc;
  doc["package_name"] = manifest.package_name;
  doc["version"] = manifest.version;
  json comps = json::array();
  for (const auto& c : manifest.components) {
    comps.push_back({{"class_name", c.class_name}, {"kind", c.kind}});
  }
  doc["components"] = comps;
  doc["certificate"] = {{"fingerprint", manifest.certificate.fingerprint},
                        {"issuer", manifest.certificate.issuer},
                        {"subject", manifest.certificate.subject}};
  return doc;
}

ManifestMeta manifest_from_json(const json& doc) {
  ManifestMeta manifest;
  manifest.package_name = require_string(doc, "package_name", "manifest.json");
  manifest.version = require_string(doc, "version", "manifest.json");
  if (!doc.contains("components") || !doc["components"].is_array()) {
    raise(ErrorKind::SchemaViolation, "manifest.json: missing array field 'components'");
  }
  for (const auto& c : doc["components"]) {
    ManifestComponent comp;
    comp.kind = require_string(c, "kind", "manifest.json components[]");
    comp.class_name = require_string(c, "class_name", "manifest.json components[]");
    if (kComponentKinds.count(comp.kind) == 0) {
      raise(ErrorKind::SchemaViolation,
            "manifest.json: unknown component kind '" + comp.kind + "'");
    }
    manifest.components.push_back(std::move(comp));
  }
  if (doc.contains("certificate")) {
    const auto& cert = doc["certificate"];
    manifest.certificate.issuer = optional_string(cert, "issuer");
    manifest.certificate.subject = optional_string(cert, "subject");
    manifest.certificate.fingerprint = optional_string(cert, "fingerprint");
  }
  return manifest;
}

json hierarchy_to_json(const ClassHierarchy& hierarchy) {
  json classes = json::object();
  for (const auto& [name, entry] : hierarchy.classes) {
    json e;
    e["framework"] = entry.framework;
    e["interfaces"] = entry.interfaces;
    e["superclass"] = entry.superclass;
    classes[name] = e;
  }
  return json{{"classes", classes}};
}

ClassHierarchy hierarchy_from_json(const json& doc) {
  ClassHierarchy hierarchy;
  if (!doc.contains("classes") || !doc["classes"].is_object()) {
    raise(ErrorKind::SchemaViolation, "hierarchy.json: missing object field 'classes'");
  }
  for (const auto& [name, value] : doc["classes"].items()) {
    ClassEntry entry;
    entry.superclass = optional_string(value, "superclass");
    entry.framework = value.contains("framework") && value["framework"].is_boolean()
                          ? value["framework"].get<bool>()
                          : false;
    if (value.contains("interfaces")) {
      for (const auto& iface : value["interfaces"]) {
        entry.interfaces.push_back(iface.get<std::string>());
      }
    }
    hierarchy.classes[name] = std::move(entry);
  }
  return hierarchy;
}

json function_to_json(const FunctionRecord& fn) {
  json doc;
  doc["id"] = fn.id;
  doc["signature"] = fn.signature;
  doc["class_name"] = fn.class_name;
  doc["source_text"] = fn.source_text;
  doc["invoked_apis"] = fn.invoked_apis;
  if (!fn.override_of.empty()) doc["override_of"] = fn.override_of;
  return doc;
}

FunctionRecord function_from_json(const json& doc, const std::string& where) {
  FunctionRecord fn;
  fn.id = require_string(doc, "id", where);
  fn.signature = normalize_signature(require_string(doc, "signature", where));
  fn.class_name = require_string(doc, "class_name", where);
  fn.source_text = optional_string(doc, "source_text");
  if (doc.contains("invoked_apis")) {
    if (!doc["invoked_apis"].is_array()) {
      raise(ErrorKind::SchemaViolation, where + ": invoked_apis: expected array");
    }
    for (const auto& api : doc["invoked_apis"]) {
      fn.invoked_apis.push_back(normalize_signature(api.get<std::string>()));
    }
  }
  fn.override_of = normalize_signature(optional_string(doc, "override_of"));
  return fn;
}

void check_hierarchy_acyclic(const ClassHierarchy& hierarchy) {
  // colors: 0 unvisited, 1 on stack, 2 done
  std::map<std::string, int> color;
  for (const auto& [name, entry] : hierarchy.classes) {
    (void)entry;
    if (color[name] != 0) {
      continue;
    }
    std::vector<std::pair<std::string, std::size_t>> stack{{name, 0}};
    color[name] = 1;
    while (!stack.empty()) {
      auto& [current, next_parent] = stack.back();
      const auto parents = hierarchy.parents(current);
      if (next_parent >= parents.size()) {
        color[current] = 2;
        stack.pop_back();
        continue;
      }
      const std::string parent = parents[next_parent++];
      if (!hierarchy.contains(parent)) {
        continue;  // external ancestor, treated as a leaf boundary
      }
      if (color[parent] == 1) {
        raise(ErrorKind::SchemaViolation, "hierarchy.json: cycle through class '" + parent + "'");
      }
      if (color[parent] == 0) {
        color[parent] = 1;
        stack.emplace_back(parent, 0);
      }
    }
  }
}

}  // namespace

void validate_bundle(const CodebaseBundle& bundle, std::vector<std::string>* warnings) {
  const SampleLabel& label = bundle.label;
  if (label.sample_id.empty()) {
    raise(ErrorKind::SchemaViolation, "label.json: sample_id empty");
  }
  if (kSplits.count(label.split) == 0) {
    raise(ErrorKind::SchemaViolation, "label.json: unknown split '" + label.split + "'");
  }
  if (label.is_malware() && label.category.empty()) {
    raise(ErrorKind::SchemaViolation,
          "label.json: malware split '" + label.split + "' requires a category");
  }
  if (!label.is_malware() && !label.category.empty()) {
    raise(ErrorKind::SchemaViolation, "label.json: benign split forbids a category");
  }
  if (!label.is_malware() && !label.ground_truth_report.empty()) {
    raise(ErrorKind::SchemaViolation, "label.json: benign split forbids a ground-truth report");
  }

  std::set<std::string> ids;
  for (const auto& fn : bundle.functions) {
    if (fn.id.empty()) {
      raise(ErrorKind::SchemaViolation, "functions.jsonl: empty function id");
    }
    if (!ids.insert(fn.id).second) {
      raise(ErrorKind::SchemaViolation, "functions.jsonl: duplicate function id '" + fn.id + "'");
    }
    if (fn.signature.empty()) {
      raise(ErrorKind::SchemaViolation, "functions.jsonl: " + fn.id + ": signature empty");
    }
    for (const auto& api : fn.invoked_apis) {
      if (!is_valid_signature(api)) {
        raise(ErrorKind::SchemaViolation,
              "functions.jsonl: " + fn.id + ": invalid invoked API signature '" + api + "'");
      }
    }
    if (!bundle.hierarchy.contains(fn.class_name)) {
      raise(ErrorKind::DanglingReference,
            "functions.jsonl: " + fn.id + ": unknown class '" + fn.class_name + "'");
    }
  }

  for (const auto& [from, to] : bundle.callgraph.edges) {
    if (ids.count(from) == 0) {
      raise(ErrorKind::DanglingReference, from);
    }
    if (ids.count(to) == 0) {
      raise(ErrorKind::DanglingReference, to);
    }
  }

  check_hierarchy_acyclic(bundle.hierarchy);

  for (const auto& comp : bundle.manifest.components) {
    if (!bundle.hierarchy.contains(comp.class_name) && warnings) {
      warnings->push_back("manifest component class '" + comp.class_name +
                          "' not present in class hierarchy");
    }
  }
}

CodebaseBundle load_bundle(const std::filesystem::path& dir, std::vector<std::string>* warnings) {
  CodebaseBundle bundle;
  bundle.label = label_from_json(read_json_file(dir / "label.json"));
  bundle.manifest = manifest_from_json(read_json_file(dir / "manifest.json"));
  bundle.hierarchy = hierarchy_from_json(read_json_file(dir / "hierarchy.json"));

  const auto fn_lines = read_jsonl_file(dir / "functions.jsonl");
  std::size_t lineno = 0;
  for (const auto& line : fn_lines) {
    ++lineno;
    bundle.functions.push_back(
        function_from_json(line, "functions.jsonl:" + std::to_string(lineno)));
  }

  const json cg = read_json_file(dir / "callgraph.json");
  if (!cg.contains("edges") || !cg["edges"].is_array()) {
    raise(ErrorKind::SchemaViolation, "callgraph.json: missing array field 'edges'");
  }
  for (const auto& edge : cg["edges"]) {
    if (!edge.is_array() || edge.size() != 2) {
      raise(ErrorKind::SchemaViolation, "callgraph.json: edge must be a [caller, callee] pair");
    }
    bundle.callgraph.edges.emplace(edge[0].get<std::string>(), edge[1].get<std::string>());
  }

  validate_bundle(bundle, warnings);
  return bundle;
}

void save_bundle(const CodebaseBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_json_file(dir / "label.json", label_to_json(bundle.label));
  write_json_file(dir / "manifest.json", manifest_to_json(bundle.manifest));
  write_json_file(dir / "hierarchy.json", hierarchy_to_json(bundle.hierarchy));

  std::vector<json> fn_lines;
  fn_lines.reserve(bundle.functions.size());
  std::vector<FunctionRecord> sorted = bundle.functions;
  std::sort(sorted.begin(), sorted.end(),
            [](const FunctionRecord& a, const FunctionRecord& b) { return a.id < b.id; });
  for (const auto& fn : sorted) {
    fn_lines.push_back(function_to_json(fn));
  }
  write_jsonl_file(dir / "functions.jsonl", fn_lines);

  json edges = json::array();
  for (const auto& [from, to] : bundle.callgraph.edges) {
    edges.push_back(json::array({from, to}));
  }
  write_json_file(dir / "callgraph.json", json{{"edges", edges}});
}

const SensitiveApiEntry* SensitiveApiCatalog::find(const std::string& signature) const {
  auto it = entries.find(signature);
  return it == entries.end() ? nullptr : &it->second;
}

std::string SensitiveApiCatalog::resolve_active(const std::string& signature) const {
  std::string current = signature;
  std::set<std::string> seen;
  while (true) {
    const auto* entry = find(current);
    if (entry == nullptr || !entry->deprecated || entry->replacement.empty()) {
      return current;
    }
    if (!seen.insert(current).second) {
      raise(ErrorKind::CyclicReplacement, "replacement cycle at '" + current + "'");
    }
    current = entry->replacement;
  }
}

namespace {

// Rule-based successor extraction: "... use <name-or-signature> instead ...".
std::string successor_token(const std::string& note) {
  const std::string kUse = "use ";
  const std::string kInstead = " instead";
  const std::size_t use_pos = note.find(kUse);
  if (use_pos == std::string::npos) {
    return {};
  }
  const std::size_t start = use_pos + kUse.size();
  const std::size_t instead_pos = note.find(kInstead, start);
  if (instead_pos == std::string::npos || instead_pos <= start) {
    return {};
  }
  return normalize_signature(note.substr(start, instead_pos - start));
}

}  // namespace

SensitiveApiCatalog build_catalog(const std::vector<SensitiveApiEntry>& raw_entries,
                                  const std::string& provenance,
                                  std::vector<std::string>* warnings) {
  SensitiveApiCatalog catalog;
  catalog.provenance = provenance;

  for (const auto& raw : raw_entries) {
    SensitiveApiEntry entry = raw;
    entry.signature = normalize_signature(entry.signature);
    entry.replacement = normalize_signature(entry.replacement);
    if (!is_valid_signature(entry.signature)) {
      raise(ErrorKind::SchemaViolation, "catalog: invalid signature '" + entry.signature + "'");
    }
    if (catalog.entries.count(entry.signature) > 0) {
      raise(ErrorKind::DuplicateSignature, entry.signature);
    }
    if (!entry.replacement.empty() && !entry.deprecated) {
      raise(ErrorKind::SchemaViolation,
            "catalog: '" + entry.signature + "' carries a replacement but is not deprecated");
    }
    if (entry.replacement == entry.signature && !entry.signature.empty() &&
        !entry.replacement.empty()) {
      raise(ErrorKind::SchemaViolation,
            "catalog: '" + entry.signature + "' replaces itself");
    }
    catalog.entries[entry.signature] = std::move(entry);
  }

  // Resolve deprecation notes to successor signatures.
  for (auto& [signature, entry] : catalog.entries) {
    if (!entry.deprecated || !entry.replacement.empty() || entry.deprecation_note.empty()) {
      continue;
    }
    const std::string token = successor_token(entry.deprecation_note);
    if (token.empty()) {
      continue;
    }
    std::string resolved;
    if (is_valid_signature(token)) {
      resolved = token;
    } else {
      // Bare method name: unique match among known entries wins.
      std::vector<std::string> matches;
      for (const auto& [other_sig, other] : catalog.entries) {
        (void)other;
        if (signature_method(other_sig) == token) {
          matches.push_back(other_sig);
        }
      }
      if (matches.size() == 1) {
        resolved = matches.front();
      } else if (warnings) {
        warnings->push_back("catalog: cannot resolve successor '" + token + "' for '" +
                            signature + "'");
      }
    }
    if (resolved == signature) {
      raise(ErrorKind::SchemaViolation, "catalog: '" + signature + "' replaces itself");
    }
    entry.replacement = resolved;
  }

  // Named successors become first-class entries.
  std::vector<SensitiveApiEntry> successors;
  for (const auto& [signature, entry] : catalog.entries) {
    if (entry.deprecated && !entry.replacement.empty() &&
        catalog.entries.count(entry.replacement) == 0) {
      SensitiveApiEntry successor;
      successor.signature = entry.replacement;
      successor.description = "successor of " + signature_method(signature);
      successors.push_back(std::move(successor));
    }
  }
  for (auto& successor : successors) {
    catalog.entries.emplace(successor.signature, std::move(successor));
  }

  // Replacement chains must terminate.
  for (const auto& [signature, entry] : catalog.entries) {
    (void)entry;
    catalog.resolve_active(signature);
  }
  return catalog;
}

namespace {

json catalog_entry_to_json(const SensitiveApiEntry& entry) {
  json doc;
  doc["signature"] = entry.signature;
  doc["description"] = entry.description;
  doc["required_permissions"] = entry.required_permissions;
  doc["deprecated"] = entry.deprecated;
  if (!entry.deprecation_note.empty()) doc["deprecation_note"] = entry.deprecation_note;
  if (!entry.replacement.empty()) doc["replacement"] = entry.replacement;
  return doc;
}

}  // namespace

SensitiveApiCatalog load_catalog(const std::filesystem::path& path) {
  std::vector<SensitiveApiEntry> raw;
  std::string provenance;
  for (const auto& line : read_jsonl_file(path)) {
    if (line.contains("_provenance")) {
      provenance = line["_provenance"].get<std::string>();
      continue;
    }
    SensitiveApiEntry entry;
    entry.signature = require_string(line, "signature", path.string());
    entry.description = optional_string(line, "description");
    if (line.contains("required_permissions")) {
      for (const auto& p : line["required_permissions"]) {
        entry.required_permissions.push_back(p.get<std::string>());
      }
    }
    entry.deprecated = line.contains("deprecated") && line["deprecated"].get<bool>();
    entry.deprecation_note = optional_string(line, "deprecation_note");
    entry.replacement = optional_string(line, "replacement");
    raw.push_back(std::move(entry));
  }
  return build_catalog(raw, provenance);
}

void save_catalog(const SensitiveApiCatalog& catalog, const std::filesystem::path& path) {
  std::vector<json> lines;
  if (!catalog.provenance.empty()) {
    lines.push_back(json{{"_provenance", catalog.provenance}});
  }
  for (const auto& [signature, entry] : catalog.entries) {
    (void)signature;
    lines.push_back(catalog_entry_to_json(entry));
  }
  write_jsonl_file(path, lines);
}

std::set<std::string> ground_truth_apis(const CodebaseBundle& bundle,
                                        const SensitiveApiCatalog& catalog,
                                        const std::set<std::string>& reachable_ids) {
  if (reachable_ids.empty()) {
    raise(ErrorKind::EmptyReachableSet,
          "sample '" + bundle.label.sample_id + "': reduction must run first");
  }
  std::set<std::string> apis;
  for (const auto& fn : bundle.functions) {
    if (reachable_ids.count(fn.id) == 0) {
      continue;
    }
    for (const auto& api : fn.invoked_apis) {
      if (catalog.contains(api)) {
        apis.insert(api);
      }
    }
  }
  return apis;
}

std::map<std::string, std::vector<std::string>> sensitive_invocations(
    const CodebaseBundle& bundle, const SensitiveApiCatalog& catalog,
    const std::set<std::string>& reachable_ids) {
  std::map<std::string, std::vector<std::string>> out;
  for (const auto& fn : bundle.functions) {
    if (reachable_ids.count(fn.id) == 0) {
      continue;
    }
    std::vector<std::string> hits;
    for (const auto& api : fn.invoked_apis) {
      if (catalog.contains(api)) {
        hits.push_back(api);
      }
    }
    if (!hits.empty()) {
      std::sort(hits.begin(), hits.end());
      hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
      out[fn.id] = std::move(hits);
    }
  }
  return out;
}

}  // namespace maleval::codebase
