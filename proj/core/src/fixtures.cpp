#include "maleval/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "maleval/codebase.hpp"
#include "maleval/errors.hpp"
#include "maleval/gateway.hpp"
#include "maleval/groundtruth.hpp"
#include "maleval/reduction.hpp"

namespace maleval::fixtures {

namespace {

// Self-contained bounded draws; std distributions are implementation-defined
// and would break byte-stability of generated corpora across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }
  std::size_t below(std::size_t n) { return n == 0 ? 0 : next() % n; }
  int range(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::size_t>(hi - lo + 1))); }

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

const std::vector<std::string> kMalwareCategories = {"Trojan",  "Banker", "Rootkits",
                                                     "Spyware", "Adware", "Ransomware"};

const std::map<std::string, std::vector<std::string>> kCategoryBehaviors = {
    {"Trojan", {"Privacy Stealing", "Remote Control", "Premium Service"}},
    {"Banker", {"Bank Stealing", "Abusing Accessibility", "Privacy Stealing"}},
    {"Rootkits", {"Privilege Escalation", "Stealthy Escalation", "Remote Control"}},
    {"Spyware", {"Privacy Stealing", "SMS/CALL Abuse", "Tricky Behavior"}},
    {"Adware", {"Ads", "Tricky Behavior"}},
    {"Ransomware", {"Ransom", "Privilege Escalation"}},
};

const std::vector<std::string> kNoiseWords = {
    "parse",  "cache",  "layout", "buffer", "decode", "render", "intent", "bundle",
    "cursor", "adapter", "widget", "string", "format", "resize", "timer",  "queue",
    "config", "prefs",  "bitmap", "stream", "click",  "scroll", "toast",  "dialog"};

std::string pad3(std::size_t value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03zu", value);
  return buf;
}

std::string pad4(std::size_t value) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04zu", value);
  return buf;
}

std::string category_beacon(const std::string& category) {
  std::string token = "beacon_";
  for (char c : category) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  return token;
}

std::string noise_phrase(Rng& rng, std::size_t words) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) out += ' ';
    out += kNoiseWords[rng.below(kNoiseWords.size())];
  }
  return out;
}

codebase::SensitiveApiCatalog make_catalog(const FixtureParams& params) {
  std::vector<codebase::SensitiveApiEntry> raw;
  for (std::size_t k = 0; k < params.catalog_size; ++k) {
    codebase::SensitiveApiEntry entry;
    entry.signature = "android.fix.Api" + std::to_string(k / 4) + ".call" + std::to_string(k) +
                      "(java.lang.String):int";
    entry.description = "fixture sensitive API #" + std::to_string(k);
    if (k % 3 == 0) {
      entry.required_permissions.push_back("android.permission.FIXTURE_" +
                                           std::to_string(k % 7));
    }
    if (k % 10 == 9 && k + 1 < params.catalog_size) {
      entry.deprecated = true;
      entry.deprecation_note = "Deprecated. use call" + std::to_string(k + 1) + " instead";
    }
    raw.push_back(std::move(entry));
  }
  return codebase::build_catalog(raw, "fixture catalog seed " + std::to_string(params.seed));
}

struct MockLines {
  std::vector<gateway::MockRule> pass_rules;
  std::vector<gateway::MockRule> report_rules;
  std::vector<gateway::MockRule> judge_rules;
};

gateway::MockRule mock_rule(std::vector<std::string> contains, std::string reply) {
  gateway::MockRule rule;
  rule.contains = std::move(contains);
  rule.reply = std::move(reply);
  return rule;
}

}  // namespace

CorpusLedger generate_corpus(const FixtureParams& params, const std::filesystem::path& root) {
  const std::size_t min_functions = params.components_per_sample + params.overrides_per_sample + 4;
  if (params.functions_per_sample < min_functions) {
    raise(ErrorKind::ConfigError, "functions_per_sample must be at least " +
                                      std::to_string(min_functions));
  }
  if (params.samples == 0) {
    raise(ErrorKind::ConfigError, "need at least one sample");
  }

  std::filesystem::create_directories(root);
  std::filesystem::create_directories(root / "samples");
  std::filesystem::create_directories(root / "gt");
  std::filesystem::create_directories(root / "config");

  const auto catalog = make_catalog(params);
  codebase::save_catalog(catalog, root / "catalog.jsonl");
  std::vector<std::string> active_apis;
  for (const auto& [signature, entry] : catalog.entries) {
    if (!entry.deprecated) {
      active_apis.push_back(signature);
    }
  }

  groundtruth::BehaviorTaxonomy taxonomy = groundtruth::BehaviorTaxonomy::builtin();
  taxonomy.save(root / "config" / "taxonomy.json");
  reduction::save_lifecycle_db(reduction::default_lifecycle_db(), root / "config" / "lifecycle_db.json");

  const std::size_t benign_count = std::min<std::size_t>(
      params.samples,
      static_cast<std::size_t>(std::llround(static_cast<double>(params.samples) *
                                            params.benign_fraction)));
  const std::size_t malware_count = params.samples - benign_count;
  const std::size_t n_categories =
      std::min<std::size_t>(kMalwareCategories.size(),
                            std::max<std::size_t>(1, std::min<std::size_t>(3, malware_count / 2)));

  CorpusLedger ledger;
  ledger.params = params;

  MockLines mock;
  Rng rng(params.seed);
  std::size_t malware_seen = 0;

  for (std::size_t index = 0; index < params.samples; ++index) {
    const std::string sample_id = "sample_" + pad3(index);
    const bool benign = index >= malware_count;
    const std::string package = "com.fixture.app" + pad3(index);

    SampleLedger sample;
    sample.sample_id = sample_id;
    if (benign) {
      sample.split = codebase::kSplitBenign;
    } else {
      sample.split = malware_seen % 2 == 0 ? codebase::kSplitArchiveMalware
                                           : codebase::kSplitLatestMalware;
      sample.category = kMalwareCategories[malware_seen % n_categories];
    }

    codebase::CodebaseBundle bundle;
    bundle.label.sample_id = sample_id;
    bundle.label.split = sample.split;
    bundle.label.category = sample.category;
    if (!benign) {
      bundle.label.family = sample.category + "Kin" + std::to_string(malware_seen % 4);
      bundle.label.ground_truth_report = "gt/" + sample_id + ".json";
    }

    // hierarchy: framework roots plus the sample's own classes
    auto& classes = bundle.hierarchy.classes;
    classes["java.lang.Object"] = {"", {}, true};
    classes["android.app.Activity"] = {"java.lang.Object", {}, true};
    classes["android.app.Service"] = {"java.lang.Object", {}, true};
    classes["android.content.BroadcastReceiver"] = {"java.lang.Object", {}, true};
    classes["android.view.View$OnClickListener"] = {"", {}, true};

    const std::vector<std::pair<std::string, std::string>> kKinds = {
        {"activity", "android.app.Activity"},
        {"service", "android.app.Service"},
        {"receiver", "android.content.BroadcastReceiver"}};

    bundle.manifest.package_name = package;
    bundle.manifest.version = "1." + std::to_string(index);
    bundle.manifest.certificate = {"CN=Fixture CA", "CN=" + package,
                                   "f1x" + gateway::hex64(gateway::fnv1a64(package))};

    std::size_t fn_seq = 0;
    auto next_id = [&] { return "f_" + pad4(fn_seq++); };

    std::vector<std::string> entrypoint_ids;

    // manifest components, one lifecycle method each
    for (std::size_t c = 0; c < params.components_per_sample; ++c) {
      const auto& [kind, framework_class] = kKinds[c % kKinds.size()];
      const std::string class_name = package + ".Comp" + std::to_string(c);
      classes[class_name] = {framework_class, {}, false};
      bundle.manifest.components.push_back({kind, class_name});

      codebase::FunctionRecord fn;
      fn.id = next_id();
      fn.class_name = class_name;
      if (kind == "activity") {
        fn.signature = class_name + ".onCreate(android.os.Bundle):void";
      } else if (kind == "service") {
        fn.signature = class_name + ".onStartCommand(android.content.Intent,int,int):int";
      } else {
        fn.signature = class_name + ".onReceive(android.content.Context,android.content.Intent):void";
      }
      fn.source_text = "void lifecycle() { init(); }";
      entrypoint_ids.push_back(fn.id);
      sample.entrypoints[fn.id] = "manifest_lifecycle";
      bundle.functions.push_back(std::move(fn));
    }

    // framework overrides, alternating explicit override_of and hierarchy match
    for (std::size_t o = 0; o < params.overrides_per_sample; ++o) {
      const std::string class_name = package + ".Listener" + std::to_string(o);
      classes[class_name] = {"java.lang.Object", {"android.view.View$OnClickListener"}, false};

      codebase::FunctionRecord fn;
      fn.id = next_id();
      fn.class_name = class_name;
      fn.signature = class_name + ".onClick(android.view.View):void";
      if (o % 2 == 0) {
        fn.override_of = "android.view.View$OnClickListener.onClick(android.view.View):void";
      }
      fn.source_text = "void onClick(View v) { handle(v); }";
      entrypoint_ids.push_back(fn.id);
      sample.entrypoints[fn.id] = "framework_override";
      bundle.functions.push_back(std::move(fn));
    }

    for (std::size_t h = 0; h < 8; ++h) {
      classes[package + ".Helper" + std::to_string(h)] = {"java.lang.Object", {}, false};
    }

    const std::size_t remaining =
        params.functions_per_sample - params.components_per_sample - params.overrides_per_sample;
    const std::size_t dead_count = static_cast<std::size_t>(
        std::floor(static_cast<double>(remaining) * params.dead_fraction));
    const std::size_t helper_count = remaining - dead_count;

    std::vector<std::string> helper_ids;
    for (std::size_t h = 0; h < helper_count; ++h) {
      codebase::FunctionRecord fn;
      fn.id = next_id();
      fn.class_name = package + ".Helper" + std::to_string(h % 8);
      fn.signature = fn.class_name + ".proc" + std::to_string(h) + "():void";
      fn.source_text = "void proc() { " + noise_phrase(rng, 3) + "(); }";
      helper_ids.push_back(fn.id);
      bundle.functions.push_back(std::move(fn));
    }

    std::vector<std::string> dead_ids;
    for (std::size_t d = 0; d < dead_count; ++d) {
      codebase::FunctionRecord fn;
      fn.id = next_id();
      fn.class_name = package + ".Helper" + std::to_string(d % 8);
      fn.signature = fn.class_name + ".dead" + std::to_string(d) + "():void";
      fn.source_text = "void dead() { /* unreferenced */ }";
      dead_ids.push_back(fn.id);
      sample.dead.insert(fn.id);
      bundle.functions.push_back(std::move(fn));
    }

    // call graph: every entrypoint calls a helper; every helper has a
    // reachable parent, so each reachable function has at least one
    // reachable neighbor (the context-offset contract relies on this)
    auto& edges = bundle.callgraph.edges;
    if (!helper_ids.empty()) {
      for (std::size_t e = 0; e < entrypoint_ids.size(); ++e) {
        edges.emplace(entrypoint_ids[e], helper_ids[e % helper_ids.size()]);
      }
      for (std::size_t j = 0; j < helper_ids.size(); ++j) {
        std::string parent;
        if (j == 0 || rng.below(4) == 0) {
          parent = entrypoint_ids[rng.below(entrypoint_ids.size())];
        } else {
          parent = helper_ids[rng.below(j)];
        }
        edges.emplace(parent, helper_ids[j]);
      }
      for (std::size_t extra = 0; extra < helper_ids.size() / 2; ++extra) {
        const std::string from = rng.below(2) == 0
                                     ? entrypoint_ids[rng.below(entrypoint_ids.size())]
                                     : helper_ids[rng.below(helper_ids.size())];
        const std::string to = helper_ids[rng.below(helper_ids.size())];
        if (from != to) {
          edges.emplace(from, to);
        }
      }
    }
    for (std::size_t d = 0; d + 1 < dead_ids.size(); ++d) {
      edges.emplace(dead_ids[d], dead_ids[d + 1]);
    }

    for (const auto& id : entrypoint_ids) {
      sample.reachable.insert(id);
    }
    for (const auto& id : helper_ids) {
      sample.reachable.insert(id);
    }

    // planted sensitive-API invocations in reachable helpers (plus one dead
    // decoy that must never surface in L_A)
    const std::size_t hit_count =
        benign ? std::min<std::size_t>(2, helper_ids.size())
               : std::min(helper_ids.size(), std::max<std::size_t>(3, helper_ids.size() / 4));
    std::vector<std::size_t> helper_order(helper_ids.size());
    for (std::size_t i = 0; i < helper_order.size(); ++i) helper_order[i] = i;
    rng.shuffle(helper_order);
    std::set<std::string> hit_ids;
    for (std::size_t i = 0; i < hit_count; ++i) {
      const std::string& fn_id = helper_ids[helper_order[i]];
      const std::size_t n_apis = 1 + rng.below(3);
      std::set<std::string> apis;
      for (std::size_t a = 0; a < n_apis; ++a) {
        apis.insert(active_apis[rng.below(active_apis.size())]);
      }
      std::vector<std::string> api_list(apis.begin(), apis.end());
      for (auto& fn : bundle.functions) {
        if (fn.id == fn_id) {
          fn.invoked_apis = api_list;
        }
      }
      sample.api_hits[fn_id] = api_list;
      for (const auto& api : api_list) {
        sample.reachable_apis.insert(api);
      }
      hit_ids.insert(fn_id);
    }
    if (!dead_ids.empty()) {
      for (auto& fn : bundle.functions) {
        if (fn.id == dead_ids.front()) {
          fn.invoked_apis = {active_apis[rng.below(active_apis.size())]};
        }
      }
    }

    // scripted sensitivities: API hits rank on top of everything else;
    // base + kContextOffset must stay inside the 0-100 reply schema
    for (const auto& fn : bundle.functions) {
      if (sample.dead.count(fn.id) > 0) {
        continue;
      }
      const bool hit = hit_ids.count(fn.id) > 0;
      sample.base_sensitivity[fn.id] = hit ? 70 + rng.range(0, 20) : 5 + rng.range(0, 39);
    }

    // ground truth + scripted model outputs
    std::vector<std::string> top_cites;
    {
      std::vector<std::pair<int, std::string>> ranked_hits;  // (-sens, id)
      for (const auto& id : hit_ids) {
        ranked_hits.emplace_back(-sample.base_sensitivity[id], id);
      }
      std::sort(ranked_hits.begin(), ranked_hits.end());
      for (std::size_t i = 0; i < ranked_hits.size() && i < 3; ++i) {
        for (const auto& fn : bundle.functions) {
          if (fn.id == ranked_hits[i].second) {
            top_cites.push_back(fn.signature);
          }
        }
      }
    }

    if (!benign) {
      sample.gt_behaviors = kCategoryBehaviors.at(sample.category);
      groundtruth::GroundTruthReport gt;
      gt.sample_id = sample_id;
      gt.summary = "Sample " + sample_id + " runs a " + sample.category +
                   " campaign coordinated through its planted helpers.";
      gt.malware_category = sample.category;
      for (const auto& behavior : sample.gt_behaviors) {
        groundtruth::GtBehavior entry;
        entry.category = behavior;
        entry.evidence = behavior + " implemented via " +
                         (top_cites.empty() ? "planted helpers" : top_cites.front());
        entry.confidence = rng.below(2) == 0 ? "high" : "medium";
        gt.behaviors.push_back(std::move(entry));
      }
      groundtruth::save_ground_truth(gt, root / "gt" / (sample_id + ".json"));
    }

    // --- mock rules -------------------------------------------------------
    const std::string sample_token = "Sample: " + sample_id + "\n";

    // pass-two rules per reachable function; neighbor-bearing prompts score
    // kContextOffset higher than the context-free baseline
    for (const auto& fn : bundle.functions) {
      if (sample.dead.count(fn.id) > 0) {
        continue;
      }
      const bool hit = hit_ids.count(fn.id) > 0;
      std::string description;
      if (!benign && hit) {
        const std::string beacon = category_beacon(sample.category);
        description = "collects and transmits data through " + fn.signature + " " + beacon +
                      " " + beacon + " " + noise_phrase(rng, 2);
      } else {
        description = "routine application logic: " + noise_phrase(rng, 5);
      }
      const int base = sample.base_sensitivity[fn.id];
      const std::string signature_token = "Signature: " + fn.signature + "\n";
      mock.pass_rules.push_back(mock_rule(
          {representation::kPass2Marker, signature_token,
           representation::kNeighborMarker},
          json{{"description", description}, {"sensitivity", base + kContextOffset}}.dump()));
      mock.pass_rules.push_back(mock_rule(
          {representation::kPass2Marker, signature_token},
          json{{"description", description}, {"sensitivity", base}}.dump()));
    }

    // task-3 report
    if (benign) {
      mock.report_rules.push_back(
          mock_rule({evaluation::kTask3PromptMarker, sample_token},
                    json{{"is_malicious", false},
                         {"present_behaviors", json::array()},
                         {"summary", "Utility app with routine UI and storage access only."}}
                        .dump()));
    } else {
      const bool refuted = malware_seen == 3;  // one maintained false negative
      if (refuted) {
        mock.report_rules.push_back(
            mock_rule({evaluation::kTask3PromptMarker, sample_token},
                      json{{"is_malicious", false},
                           {"present_behaviors", json::array()},
                           {"summary", "Behaviors look like a commercial SDK; suspicion "
                                       "refuted."}}
                          .dump()));
      } else {
        std::vector<std::string> predicted = sample.gt_behaviors;
        if (malware_seen % 3 == 0 && predicted.size() > 1) {
          predicted.pop_back();  // under-observation
        }
        if (malware_seen % 4 == 1) {
          predicted.push_back("Custom Exfiltration Channel");  // lands in Other
        }
        std::vector<std::string> cites = top_cites;
        if (malware_seen % 5 == 3) {
          cites.push_back("com.fixture.ghost.Ghost.run():void");  // fabricated citation
        }
        json behaviors = json::array();
        std::size_t behavior_index = 0;
        for (const auto& behavior : predicted) {
          json cite_list = json::array();
          if (!cites.empty()) {
            cite_list.push_back(cites[behavior_index % cites.size()]);
            cite_list.push_back(cites[(behavior_index + 1) % cites.size()]);
          }
          behaviors.push_back(json{{"behavior", behavior},
                                   {"confidence", "high"},
                                   {"evidence", behavior + " traced to planted helpers"},
                                   {"related_functions", cite_list}});
          ++behavior_index;
        }
        std::string predicted_category = sample.category;
        if (malware_seen % 5 == 2) {
          predicted_category =
              kMalwareCategories[(malware_seen + 1) % kMalwareCategories.size()];
        }
        mock.report_rules.push_back(mock_rule(
            {evaluation::kTask3PromptMarker, sample_token},
            json{{"is_malicious", true},
                 {"present_behaviors", behaviors},
                 {"summary", "Coordinated " + sample.category + " operation."},
                 {"category", predicted_category}}
                .dump()));

        // per-behavior authenticity scores for the scripted report
        json behavior_scores = json::array();
        for (const auto& behavior : predicted) {
          behavior_scores.push_back(
              json{{"behavior", behavior}, {"score", 50 + rng.range(0, 50)}});
        }
        mock.judge_rules.push_back(
            mock_rule({evaluation::kEasJudgeMarker, sample_token},
                      json{{"behavior_scores", behavior_scores}}.dump()));
      }
      mock.judge_rules.push_back(
          mock_rule({evaluation::kRqJudgeMarker, sample_token},
                    json{{"insight", 40 + rng.range(0, 55)},
                         {"comprehensiveness", 40 + rng.range(0, 55)},
                         {"evidence_quality", 40 + rng.range(0, 55)},
                         {"justification", "scripted fixture judgement"}}
                        .dump()));
      ++malware_seen;
    }

    codebase::save_bundle(bundle, root / "samples" / sample_id);
    ledger.samples[sample_id] = std::move(sample);
  }

  // assemble the script: specific rules first, one catch-all for pass one
  gateway::MockScript script;
  for (auto* group : {&mock.pass_rules, &mock.report_rules, &mock.judge_rules}) {
    for (auto& rule : *group) {
      script.rules.push_back(std::move(rule));
    }
  }
  script.rules.push_back(
      mock_rule({representation::kPass1Marker},
                "summary derived from the function source alone"));
  script.default_reply = "ok";
  script.save(root / "mock.jsonl");

  // ledger
  json ledger_doc;
  ledger_doc["params"] = json{{"seed", params.seed},
                              {"samples", params.samples},
                              {"benign_fraction", params.benign_fraction},
                              {"functions_per_sample", params.functions_per_sample},
                              {"components_per_sample", params.components_per_sample},
                              {"overrides_per_sample", params.overrides_per_sample},
                              {"dead_fraction", params.dead_fraction},
                              {"catalog_size", params.catalog_size}};
  json samples_doc = json::object();
  for (const auto& [sample_id, sample] : ledger.samples) {
    json doc;
    doc["split"] = sample.split;
    doc["category"] = sample.category;
    doc["entrypoints"] = sample.entrypoints;
    doc["reachable"] = std::vector<std::string>(sample.reachable.begin(), sample.reachable.end());
    doc["dead"] = std::vector<std::string>(sample.dead.begin(), sample.dead.end());
    doc["api_hits"] = sample.api_hits;
    doc["reachable_apis"] =
        std::vector<std::string>(sample.reachable_apis.begin(), sample.reachable_apis.end());
    doc["base_sensitivity"] = sample.base_sensitivity;
    doc["gt_behaviors"] = sample.gt_behaviors;
    samples_doc[sample_id] = std::move(doc);
  }
  ledger_doc["samples"] = std::move(samples_doc);
  write_json_file(root / "ledger.json", ledger_doc);

  return ledger;
}

CorpusLedger load_ledger(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  CorpusLedger ledger;
  const auto& params = doc.at("params");
  ledger.params.seed = params.at("seed").get<std::uint64_t>();
  ledger.params.samples = params.at("samples").get<std::size_t>();
  ledger.params.benign_fraction = params.at("benign_fraction").get<double>();
  ledger.params.functions_per_sample = params.at("functions_per_sample").get<std::size_t>();
  ledger.params.components_per_sample = params.at("components_per_sample").get<std::size_t>();
  ledger.params.overrides_per_sample = params.at("overrides_per_sample").get<std::size_t>();
  ledger.params.dead_fraction = params.at("dead_fraction").get<double>();
  ledger.params.catalog_size = params.at("catalog_size").get<std::size_t>();
  for (const auto& [sample_id, entry] : doc.at("samples").items()) {
    SampleLedger sample;
    sample.sample_id = sample_id;
    sample.split = entry.at("split").get<std::string>();
    sample.category = entry.at("category").get<std::string>();
    for (const auto& [id, tag] : entry.at("entrypoints").items()) {
      sample.entrypoints[id] = tag.get<std::string>();
    }
    for (const auto& id : entry.at("reachable")) sample.reachable.insert(id.get<std::string>());
    for (const auto& id : entry.at("dead")) sample.dead.insert(id.get<std::string>());
    for (const auto& [id, apis] : entry.at("api_hits").items()) {
      for (const auto& api : apis) sample.api_hits[id].push_back(api.get<std::string>());
    }
    for (const auto& api : entry.at("reachable_apis")) {
      sample.reachable_apis.insert(api.get<std::string>());
    }
    for (const auto& [id, value] : entry.at("base_sensitivity").items()) {
      sample.base_sensitivity[id] = value.get<int>();
    }
    for (const auto& behavior : entry.at("gt_behaviors")) {
      sample.gt_behaviors.push_back(behavior.get<std::string>());
    }
    ledger.samples[sample_id] = std::move(sample);
  }
  return ledger;
}

std::vector<evaluation::FidelitySample> planted_signal_corpus(const PlantedSignalParams& params) {
  Rng rng(params.seed);
  std::vector<evaluation::FidelitySample> samples;
  for (std::size_t i = 0; i < params.samples; ++i) {
    evaluation::FidelitySample sample;
    sample.sample_id = "planted_" + pad3(i);
    sample.category = "cat" + std::to_string(i % params.categories);
    const std::string beacon = "beacon_" + sample.category;

    for (std::size_t f = 0; f < params.functions_per_sample; ++f) {
      representation::StructuralRep rep;
      rep.function_id = "f_" + pad3(f);
      rep.signature = "planted.App" + std::to_string(i) + ".fn" + std::to_string(f) + "():void";
      rep.mode = representation::RepMode::Contextual;
      if (f < params.planted_per_sample) {
        rep.context_description =
            beacon + " " + beacon + "_core " + beacon + " exfil channel " + noise_phrase(rng, 2);
        rep.sensitivity = 80 + rng.range(0, 19);
      } else {
        rep.context_description = noise_phrase(rng, 8);
        rep.sensitivity = 5 + rng.range(0, 39);
      }
      sample.reps.push_back(std::move(rep));
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<evaluation::FidelitySample> randomize_ranking(
    const std::vector<evaluation::FidelitySample>& samples, std::uint64_t seed) {
  std::vector<evaluation::FidelitySample> out = samples;
  Rng rng(seed);
  for (auto& sample : out) {
    std::vector<int> scores;
    scores.reserve(sample.reps.size());
    for (const auto& rep : sample.reps) {
      scores.push_back(rep.sensitivity);
    }
    rng.shuffle(scores);
    for (std::size_t i = 0; i < sample.reps.size(); ++i) {
      sample.reps[i].sensitivity = scores[i];
    }
  }
  return out;
}

}  // namespace maleval::fixtures
