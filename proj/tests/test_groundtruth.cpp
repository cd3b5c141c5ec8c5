#include <doctest.h>

#include "maleval/errors.hpp"
#include "maleval/groundtruth.hpp"
#include "test_util.hpp"

using namespace maleval;
using namespace maleval::groundtruth;

namespace {

gateway::GatewayOptions fast_options() {
  gateway::GatewayOptions options;
  options.retry.sleep_between = false;
  return options;
}

}  // namespace

TEST_CASE("builtin taxonomy shape") {
  const auto taxonomy = BehaviorTaxonomy::builtin();
  CHECK(taxonomy.canonical.size() == 12);
  CHECK(taxonomy.is_canonical("Miner"));
  CHECK(taxonomy.is_probe("Miner"));
  CHECK_FALSE(taxonomy.is_canonical("Other"));

  const auto columns = taxonomy.matrix_columns();
  REQUIRE(columns.size() == 13);  // 11 regular + Other + probe
  CHECK(columns[columns.size() - 2] == "Other");
  CHECK(columns.back() == "Miner");
}

TEST_CASE("taxonomy is a versioned config asset") {
  const auto dir = testutil::test_dir("gt_taxonomy");
  auto taxonomy = BehaviorTaxonomy::builtin();
  taxonomy.version = "2024-test";
  taxonomy.save(dir / "taxonomy.json");
  const auto loaded = BehaviorTaxonomy::load(dir / "taxonomy.json");
  CHECK(loaded.canonical == taxonomy.canonical);
  CHECK(loaded.version == "2024-test");

  // wrong cardinality is rejected
  write_json_file(dir / "bad.json", json{{"categories", json::array({"A", "B"})}});
  CHECK_THROWS_AS(BehaviorTaxonomy::load(dir / "bad.json"), Error);
}

TEST_CASE("boilerplate filter drops ads, navigation and legal footers") {
  const std::string report =
      "# Threat report\n"
      "[AD] Buy our premium scanner today\n"
      "The sample sends premium SMS messages.\n"
      "Home | Products | Blog\n"
      "It hides its icon after install.\n"
      "All rights reserved. Terms of Service apply.\n";
  const std::string filtered = strip_boilerplate(report);
  CHECK(filtered.find("premium SMS") != std::string::npos);
  CHECK(filtered.find("hides its icon") != std::string::npos);
  CHECK(filtered.find("Buy our premium scanner") == std::string::npos);
  CHECK(filtered.find("Home |") == std::string::npos);
  CHECK(filtered.find("All rights reserved") == std::string::npos);
}

TEST_CASE("vendor report parsing maps behaviors and keeps verbatim evidence") {
  const std::string markdown =
      "# Vendor analysis\n"
      "The trojan subscribes victims to premium SMS services without consent.\n"
      "It also opens a covert channel to a remote server for commands.\n";

  gateway::MockScript script;
  script.rules.push_back(
      {{"## vendor report parsing"},
       json{{"behaviors",
             json::array(
                 {json{{"category", "Premium Service"},
                       {"evidence",
                        "subscribes victims to premium SMS services without consent"},
                       {"confidence", "high"}},
                  json{{"category", "Remote Control"},
                       {"evidence", "opens a covert channel to a remote server"},
                       {"confidence", "medium"}},
                  json{{"category", "Premium SMS fraud"},  // outside the taxonomy
                       {"evidence", "subscribes victims"},
                       {"confidence", "low"}},
                  json{{"category", "Ads"},
                       {"evidence", "this span does not appear in the source"},
                       {"confidence", "low"}}})},
            {"summary", "Premium SMS trojan with remote control."},
            {"malware_category", "Trojan"}}
           .dump(),
       0});
  auto backend = std::make_shared<gateway::MockBackend>(script);
  gateway::Gateway gw(backend, fast_options());

  std::vector<std::string> warnings;
  const auto report = parse_vendor_report(markdown, "s1", gw, gateway::ModelSpec{},
                                          BehaviorTaxonomy::builtin(), &warnings);

  REQUIRE(report.behaviors.size() == 2);
  CHECK(report.behaviors[0].category == "Premium Service");
  CHECK(report.behaviors[1].category == "Remote Control");
  // evidence spans are verbatim substrings of the source
  for (const auto& behavior : report.behaviors) {
    CHECK(markdown.find(behavior.evidence) != std::string::npos);
  }
  // out-of-taxonomy and non-verbatim behaviors were dropped with warnings
  CHECK(warnings.size() == 2);
  CHECK(report.malware_category == "Trojan");
}

TEST_CASE("parsing twice under the mock yields identical output") {
  const std::string markdown = "The app records audio in the background.\n";
  gateway::MockScript script;
  script.rules.push_back(
      {{"## vendor report parsing"},
       json{{"behaviors", json::array({json{{"category", "Privacy Stealing"},
                                            {"evidence", "records audio in the background"},
                                            {"confidence", "high"}}})},
            {"summary", "Spyware."},
            {"malware_category", "Spyware"}}
           .dump(),
       0});
  auto backend = std::make_shared<gateway::MockBackend>(script);
  gateway::Gateway gw(backend, fast_options());

  const auto a =
      parse_vendor_report(markdown, "s1", gw, gateway::ModelSpec{}, BehaviorTaxonomy::builtin());
  const auto b =
      parse_vendor_report(markdown, "s1", gw, gateway::ModelSpec{}, BehaviorTaxonomy::builtin());
  CHECK(gt_to_json(a) == gt_to_json(b));
}

TEST_CASE("empty report body is an error with no partial output") {
  gateway::MockScript script;
  script.default_reply = "unused";
  auto backend = std::make_shared<gateway::MockBackend>(script);
  gateway::Gateway gw(backend, fast_options());
  CHECK_THROWS_AS(parse_vendor_report("  \n\t\n", "s1", gw, gateway::ModelSpec{},
                                      BehaviorTaxonomy::builtin()),
                  Error);
}

TEST_CASE("parsing a Ztorg-style report covers all six ground-truth behaviors") {
  const std::string markdown =
      "This Ztorg family trojan exfiltrates contact and device data, "
      "sends premium-rate SMS messages and silently subscribes the victim, "
      "receives commands from a remote C2, abuses Accessibility Services to "
      "install payloads, and floods the device with ads.\n";
  json behaviors = json::array();
  const std::vector<std::pair<std::string, std::string>> expected = {
      {"Privacy Stealing", "exfiltrates contact and device data"},
      {"SMS/CALL Abuse", "sends premium-rate SMS messages"},
      {"Remote Control", "receives commands from a remote C2"},
      {"Abusing Accessibility", "abuses Accessibility Services"},
      {"Ads", "floods the device with ads"},
      {"Premium Service", "silently subscribes the victim"},
  };
  for (const auto& [category, evidence] : expected) {
    behaviors.push_back(
        json{{"category", category}, {"evidence", evidence}, {"confidence", "high"}});
  }
  gateway::MockScript script;
  script.rules.push_back({{"## vendor report parsing"},
                          json{{"behaviors", behaviors},
                               {"summary", "Remote-controlled financial fraud trojan."},
                               {"malware_category", "Rootkits"}}
                              .dump(),
                          0});
  auto backend = std::make_shared<gateway::MockBackend>(script);
  gateway::Gateway gw(backend, fast_options());

  const auto report = parse_vendor_report(markdown, "ztorg", gw, gateway::ModelSpec{},
                                          BehaviorTaxonomy::builtin());
  CHECK(report.behaviors.size() == 6);
  bool has_remote_control = false;
  bool has_premium_service = false;
  for (const auto& behavior : report.behaviors) {
    if (behavior.category == "Remote Control") has_remote_control = true;
    if (behavior.category == "Premium Service") has_premium_service = true;
  }
  CHECK(has_remote_control);
  CHECK(has_premium_service);
}

TEST_CASE("validate_generated rebuckets out-of-taxonomy behaviors to Other") {
  GeneratedReport report;
  report.sample_id = "s1";
  report.is_malicious = true;
  report.category = "Trojan";
  report.summary = "s";
  report.present_behaviors.push_back({"Ads", "high", "e", {}});
  report.present_behaviors.push_back({"Crypto-wallet hijack", "low", "e", {}});
  report.present_behaviors.push_back({"Miner", "low", "e", {}});

  const auto taxonomy = BehaviorTaxonomy::builtin();
  const auto outcome = validate_generated(report, taxonomy);

  CHECK(outcome.normalized.present_behaviors[0].behavior == "Ads");
  CHECK(outcome.normalized.present_behaviors[1].behavior == "Other");
  CHECK(outcome.normalized.present_behaviors[2].behavior == "Miner");
  REQUIRE(outcome.out_of_taxonomy.size() == 1);
  CHECK(outcome.out_of_taxonomy[0] == "Crypto-wallet hijack");
  REQUIRE(outcome.probe_hits.size() == 1);  // hallucination-probe hit stays flagged

  SUBCASE("idempotent") {
    const auto again = validate_generated(outcome.normalized, taxonomy);
    CHECK(report_to_json(again.normalized) == report_to_json(outcome.normalized));
    CHECK(again.out_of_taxonomy.empty());
  }
}

TEST_CASE("generated report json round trip") {
  const auto dir = testutil::test_dir("gt_report_io");
  GeneratedReport report;
  report.sample_id = "s1";
  report.model_spec_hash = "h";
  report.is_malicious = true;
  report.category = "Banker";
  report.summary = "steals credentials";
  report.present_behaviors.push_back(
      {"Bank Stealing", "high", "overlay attack", {"a.B.m():void", "a.B.n():void"}});
  save_generated(report, dir / "r.json");
  const auto loaded = load_generated(dir / "r.json");
  CHECK(report_to_json(loaded) == report_to_json(report));
  CHECK(loaded.cited_functions() ==
        std::vector<std::string>{"a.B.m():void", "a.B.n():void"});
}
