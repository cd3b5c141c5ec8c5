#include "maleval/groundtruth.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "maleval/errors.hpp"

namespace maleval::groundtruth {

bool BehaviorTaxonomy::is_canonical(const std::string& name) const {
  return std::find(canonical.begin(), canonical.end(), name) != canonical.end();
}

std::vector<std::string> BehaviorTaxonomy::matrix_columns() const {
  std::vector<std::string> columns;
  for (const auto& name : canonical) {
    if (!is_probe(name)) {
      columns.push_back(name);
    }
  }
  columns.push_back(other_bucket);
  columns.push_back(probe);
  return columns;
}

BehaviorTaxonomy BehaviorTaxonomy::builtin() {
  BehaviorTaxonomy t;
  t.canonical = {"Privacy Stealing",
                 "SMS/CALL Abuse",
                 "Remote Control",
                 "Bank Stealing",
                 "Ransom",
                 "Abusing Accessibility",
                 "Privilege Escalation",
                 "Stealthy Escalation",
                 "Ads",
                 "Premium Service",
                 "Tricky Behavior",
                 "Miner"};
  return t;
}

BehaviorTaxonomy BehaviorTaxonomy::load(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  BehaviorTaxonomy t;
  t.canonical.clear();
  for (const auto& name : doc.at("categories")) {
    t.canonical.push_back(name.get<std::string>());
  }
  if (doc.contains("other_bucket")) t.other_bucket = doc["other_bucket"].get<std::string>();
  if (doc.contains("probe")) t.probe = doc["probe"].get<std::string>();
  if (doc.contains("version")) t.version = doc["version"].get<std::string>();
  if (t.canonical.size() != 12) {
    raise(ErrorKind::SchemaViolation,
          path.string() + ": taxonomy must list exactly 12 canonical categories, got " +
              std::to_string(t.canonical.size()));
  }
  if (!t.is_canonical(t.probe)) {
    raise(ErrorKind::SchemaViolation, path.string() + ": probe category '" + t.probe +
                                          "' must be one of the canonical names");
  }
  return t;
}

void BehaviorTaxonomy::save(const std::filesystem::path& path) const {
  write_json_file(path, json{{"categories", canonical},
                             {"other_bucket", other_bucket},
                             {"probe", probe},
                             {"version", version}});
}

std::vector<std::string> GeneratedReport::cited_functions() const {
  std::vector<std::string> cited;
  for (const auto& behavior : present_behaviors) {
    for (const auto& fn : behavior.related_functions) {
      cited.push_back(fn);
    }
  }
  std::sort(cited.begin(), cited.end());
  cited.erase(std::unique(cited.begin(), cited.end()), cited.end());
  return cited;
}

namespace {

bool is_boilerplate_line(const std::string& line) {
  static const std::vector<std::string> kMarkers = {
      "[ad]",        "advertisement", "sponsored",   "subscribe to our",
      "cookie policy", "all rights reserved", "terms of service", "privacy policy",
      "navigation:",  "home |",        "share this",  "follow us",
  };
  std::string lower;
  lower.reserve(line.size());
  for (char c : line) {
    lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (const auto& marker : kMarkers) {
    if (lower.find(marker) != std::string::npos) {
      return true;
    }
  }
  return false;
}

}  // namespace

std::string strip_boilerplate(const std::string& markdown) {
  std::istringstream in(markdown);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (is_boilerplate_line(line)) {
      continue;
    }
    out += line;
    out += '\n';
  }
  return out;
}

GroundTruthReport parse_vendor_report(const std::string& markdown, const std::string& sample_id,
                                      gateway::Gateway& gw, const gateway::ModelSpec& spec,
                                      const BehaviorTaxonomy& taxonomy,
                                      std::vector<std::string>* warnings) {
  const std::string filtered = strip_boilerplate(markdown);
  if (filtered.find_first_not_of(" \t\r\n") == std::string::npos) {
    raise(ErrorKind::SchemaViolation, "vendor report for '" + sample_id + "' is empty");
  }

  const std::string prompt =
      "## vendor report parsing\n"
      "Extract the malicious behaviors described in the report below. Map each\n"
      "behavior to one of these categories: " +
      [&] {
        std::string joined;
        for (std::size_t i = 0; i < taxonomy.canonical.size(); ++i) {
          if (i > 0) joined += ", ";
          joined += taxonomy.canonical[i];
        }
        return joined;
      }() +
      ".\nQuote the supporting evidence verbatim from the report.\n"
      "Reply with a JSON object {\"behaviors\": [{\"category\": \"...\", \"evidence\": "
      "\"...\", \"confidence\": \"...\"}], \"summary\": \"...\", \"malware_category\": "
      "\"...\"}.\n"
      "Sample: " +
      sample_id + "\nReport:\n" + filtered;

  const json reply = gw.complete_structured(spec, prompt, "report_parse");

  GroundTruthReport report;
  report.sample_id = sample_id;
  report.summary = reply["summary"].get<std::string>();
  report.malware_category = reply["malware_category"].get<std::string>();

  std::set<std::string> seen_categories;
  for (const auto& entry : reply["behaviors"]) {
    GtBehavior behavior;
    behavior.category = entry["category"].get<std::string>();
    behavior.evidence = entry["evidence"].get<std::string>();
    if (entry.contains("confidence")) {
      behavior.confidence = entry["confidence"].is_string()
                                ? entry["confidence"].get<std::string>()
                                : entry["confidence"].dump();
    }
    if (!taxonomy.is_canonical(behavior.category)) {
      if (warnings) {
        warnings->push_back("sample '" + sample_id + "': behavior '" + behavior.category +
                            "' outside the taxonomy, dropped");
      }
      continue;
    }
    if (behavior.category == taxonomy.other_bucket) {
      continue;  // "Other" never appears in ground truth
    }
    if (markdown.find(behavior.evidence) == std::string::npos) {
      if (warnings) {
        warnings->push_back("sample '" + sample_id + "': evidence for '" + behavior.category +
                            "' is not a verbatim span of the source report, dropped");
      }
      continue;
    }
    if (!seen_categories.insert(behavior.category).second) {
      continue;  // categories deduplicated
    }
    report.behaviors.push_back(std::move(behavior));
  }
  return report;
}

ValidationOutcome validate_generated(const GeneratedReport& report,
                                     const BehaviorTaxonomy& taxonomy,
                                     std::vector<std::string>* warnings) {
  ValidationOutcome outcome;
  outcome.normalized = report;
  for (auto& behavior : outcome.normalized.present_behaviors) {
    if (taxonomy.is_canonical(behavior.behavior)) {
      if (taxonomy.is_probe(behavior.behavior)) {
        outcome.probe_hits.push_back(behavior.behavior);
        if (warnings) {
          warnings->push_back("sample '" + report.sample_id +
                              "': hallucination-probe category '" + behavior.behavior +
                              "' predicted");
        }
      }
      continue;
    }
    if (behavior.behavior == taxonomy.other_bucket) {
      continue;  // already rebucketed
    }
    outcome.out_of_taxonomy.push_back(behavior.behavior);
    if (warnings) {
      warnings->push_back("sample '" + report.sample_id + "': behavior '" + behavior.behavior +
                          "' outside the taxonomy, rebucketed to " + taxonomy.other_bucket);
    }
    behavior.behavior = taxonomy.other_bucket;
  }
  return outcome;
}

GeneratedReport report_from_json(const json& doc, const std::string& sample_id,
                                 const std::string& model_spec_hash) {
  GeneratedReport report;
  report.sample_id = sample_id;
  report.model_spec_hash = model_spec_hash;
  report.is_malicious = doc["is_malicious"].get<bool>();
  report.summary = doc["summary"].get<std::string>();
  if (doc.contains("category")) {
    report.category = doc["category"].get<std::string>();
  }
  for (const auto& entry : doc["present_behaviors"]) {
    ReportedBehavior behavior;
    behavior.behavior = entry["behavior"].get<std::string>();
    if (entry.contains("confidence")) {
      behavior.confidence = entry["confidence"].is_string()
                                ? entry["confidence"].get<std::string>()
                                : entry["confidence"].dump();
    }
    behavior.evidence = entry.value("evidence", "");
    for (const auto& fn : entry["related_functions"]) {
      behavior.related_functions.push_back(fn.get<std::string>());
    }
    report.present_behaviors.push_back(std::move(behavior));
  }
  return report;
}

json report_to_json(const GeneratedReport& report) {
  json doc;
  doc["sample_id"] = report.sample_id;
  doc["model_spec_hash"] = report.model_spec_hash;
  doc["is_malicious"] = report.is_malicious;
  doc["summary"] = report.summary;
  if (!report.category.empty()) {
    doc["category"] = report.category;
  }
  json behaviors = json::array();
  for (const auto& behavior : report.present_behaviors) {
    behaviors.push_back(json{{"behavior", behavior.behavior},
                             {"confidence", behavior.confidence},
                             {"evidence", behavior.evidence},
                             {"related_functions", behavior.related_functions}});
  }
  doc["present_behaviors"] = behaviors;
  return doc;
}

GeneratedReport load_generated(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  GeneratedReport report =
      report_from_json(doc, doc.value("sample_id", ""), doc.value("model_spec_hash", ""));
  return report;
}

void save_generated(const GeneratedReport& report, const std::filesystem::path& path) {
  write_json_file(path, report_to_json(report));
}

json gt_to_json(const GroundTruthReport& report) {
  json behaviors = json::array();
  for (const auto& behavior : report.behaviors) {
    behaviors.push_back(json{{"category", behavior.category},
                             {"confidence", behavior.confidence},
                             {"evidence", behavior.evidence}});
  }
  return json{{"sample_id", report.sample_id},
              {"behaviors", behaviors},
              {"summary", report.summary},
              {"malware_category", report.malware_category}};
}

GroundTruthReport gt_from_json(const json& doc) {
  GroundTruthReport report;
  report.sample_id = doc.at("sample_id").get<std::string>();
  report.summary = doc.at("summary").get<std::string>();
  report.malware_category = doc.value("malware_category", "");
  for (const auto& entry : doc.at("behaviors")) {
    GtBehavior behavior;
    behavior.category = entry.at("category").get<std::string>();
    behavior.evidence = entry.value("evidence", "");
    behavior.confidence = entry.value("confidence", "");
    report.behaviors.push_back(std::move(behavior));
  }
  return report;
}

GroundTruthReport load_ground_truth(const std::filesystem::path& path) {
  return gt_from_json(read_json_file(path));
}

void save_ground_truth(const GroundTruthReport& report, const std::filesystem::path& path) {
  write_json_file(path, gt_to_json(report));
}

}  // namespace maleval::groundtruth
