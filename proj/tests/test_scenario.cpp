#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "botsim/errors.hpp"
#include "botsim/scenario.hpp"
#include "botsim/time.hpp"

using namespace botsim;

#ifndef BOTSIM_SCENARIO_DIR
#error "BOTSIM_SCENARIO_DIR must point at the shipped scenario files"
#endif

namespace {

const std::string kDir = BOTSIM_SCENARIO_DIR;

// smallest complete scenario: one router, one gateway, the control plane
std::string minimal_json(const std::string& extra = "") {
    return std::string(R"({
  "schema_version": 1,
  "name": "minimal",
  "topology": {
    "contained_block": "10.20.0.0/24",
    "routers": 1,
    "gateways": [{"router": 0, "iot_devices": 2}],
    "lan_servers": ["dns", "cnc", "scanlisten", "loader"]
  },
  "dns": {"records": [
    {"domain": "cnc.botlab.test", "device": "cnc"},
    {"domain": "report.botlab.test", "device": "scanlisten"}
  ]},
  "bot": {"seed_devices": ["iot-0-0"]},
  "dictionary": [{"username": "root", "password": "root"}])") +
           (extra.empty() ? "" : ",\n" + extra) + "\n}";
}

ValidationError capture_validation(const std::string& json) {
    try {
        const ScenarioConfig cfg = parse_scenario_json(json, "inline");
        validate_scenario(cfg);
    } catch (const ValidationError& e) {
        return e;
    }
    FAIL("expected a validation error");
    return ValidationError("", "unreachable");
}

} // namespace

TEST_CASE("all shipped scenarios parse and validate") {
    for (const char* name :
         {"propagation", "keepalive", "scan-times", "udp-flood", "syn-flood", "dns-remap",
          "telnet-desync", "containment-violation"}) {
        CAPTURE(name);
        const ScenarioConfig cfg = load_scenario(kDir + "/" + name + ".json");
        CHECK_NOTHROW(validate_scenario(cfg));
        CHECK(cfg.name == name);
    }
}

TEST_CASE("minimal scenario fills defaults") {
    const ScenarioConfig cfg = parse_scenario_json(minimal_json(), "inline");
    validate_scenario(cfg);

    CHECK(cfg.root_seed == 1);
    CHECK(cfg.duration_us == us_from_seconds(60.0));
    CHECK(cfg.series_bin_s == 1.0);
    CHECK(cfg.cnc_domain == "cnc.botlab.test");
    CHECK(cfg.cnc_port == 6667);
    CHECK(cfg.keepalive_interval_us == us_from_seconds(60.0));
    CHECK(cfg.keepalive_loss_tolerance == 3);
    CHECK(cfg.dns_ttl_s == 60);
    CHECK(cfg.dns_backoff_base_s == 5.0);
    CHECK(cfg.dns_backoff_cap_s == 80.0);
    CHECK(cfg.report_port == 48101);
    CHECK(cfg.binary_bytes == 61440);
    CHECK(cfg.segment_bytes == 1024);
    CHECK(cfg.scan_rate_pps == 10.0);
    CHECK(cfg.telnet_port == 23);
    CHECK(cfg.max_attempts_per_connection == 3);
    CHECK(cfg.prompt_byte_budget == 512);
    CHECK(cfg.victim_port == 9000);
    CHECK(cfg.victim_capacity_pps == 5000.0);
    CHECK(cfg.victim_queue_len == 100);
    CHECK(cfg.client_script == "default");
    CHECK(cfg.attacks.empty()); // propagation-only runs are valid
    REQUIRE(cfg.accounts.size() == 1);
    CHECK(cfg.accounts[0].name == "root");
    CHECK(cfg.accounts[0].max_bots == -1);
}

TEST_CASE("unknown keys are rejected with their path") {
    const std::string json = minimal_json(R"("victim": {"prot": 9000})");
    CHECK_THROWS_WITH_AS(parse_scenario_json(json, "inline"),
                         doctest::Contains("victim.prot"), ParseError);
}

TEST_CASE("wrong schema version is rejected") {
    std::string json = minimal_json();
    json.replace(json.find("\"schema_version\": 1"), 19, "\"schema_version\": 9");
    CHECK_THROWS_AS(parse_scenario_json(json, "inline"), ParseError);
}

TEST_CASE("malformed hex in a script step is rejected") {
    const std::string json = minimal_json(
        R"("telnet_scripts": {"odd": {"pre_steps": [{"expect": "fff"}]}})");
    CHECK_THROWS_WITH_AS(parse_scenario_json(json, "inline"), doctest::Contains("expect"),
                         ParseError);
}

TEST_CASE("cnc domain must resolve to a cnc server") {
    // domain missing from the zone entirely
    std::string json = minimal_json(R"("cnc": {"domain": "elsewhere.test"})");
    ValidationError e = capture_validation(json);
    CHECK(e.field == "cnc_domain");

    // domain present but pointing at the wrong role
    json = minimal_json(R"("cnc": {"domain": "report.botlab.test"})");
    e = capture_validation(json);
    CHECK(e.field == "cnc_domain");
}

TEST_CASE("dangling device references fail validation") {
    const std::string seed = minimal_json(R"("bot": {"seed_devices": ["iot-9-9"]})");
    // a second bot table overrides the first in parse order; build a fresh one
    std::string json(R"({
  "schema_version": 1,
  "name": "dangling",
  "topology": {
    "contained_block": "10.20.0.0/24",
    "routers": 1,
    "gateways": [{"router": 0, "iot_devices": 2}],
    "lan_servers": ["dns", "cnc", "scanlisten", "loader"]
  },
  "dns": {"records": [
    {"domain": "cnc.botlab.test", "device": "cnc"},
    {"domain": "report.botlab.test", "device": "scanlisten"},
    {"domain": "ghost.test", "device": "poltergeist"}
  ]},
  "bot": {"seed_devices": ["iot-0-0"]},
  "dictionary": [{"username": "root", "password": "root"}]
})");
    const ScenarioConfig cfg = parse_scenario_json(json, "inline");
    CHECK_THROWS_AS(validate_scenario(cfg), ValidationError);
}

TEST_CASE("attacks referencing unknown accounts or devices fail") {
    const std::string json = minimal_json(
        R"("attacks": [{"at_s": 5, "account": "nobody", "type": "udp",)"
        R"( "target_device": "iot-0-1", "duration_s": 5, "rate_pps": 10}])");
    const ScenarioConfig cfg = parse_scenario_json(json, "inline");
    CHECK_THROWS_AS(validate_scenario(cfg), ValidationError);

    const std::string json2 = minimal_json(
        R"("attacks": [{"at_s": 5, "type": "udp",)"
        R"( "target_device": "nothere", "duration_s": 5, "rate_pps": 10}])");
    const ScenarioConfig cfg2 = parse_scenario_json(json2, "inline");
    CHECK_THROWS_AS(validate_scenario(cfg2), ValidationError);
}

TEST_CASE("unknown attack type is rejected at parse time") {
    const std::string json = minimal_json(
        R"("attacks": [{"at_s": 5, "type": "slowloris",)"
        R"( "target_device": "iot-0-1", "duration_s": 5, "rate_pps": 10}])");
    CHECK_THROWS_AS(parse_scenario_json(json, "inline"), ParseError);
}

TEST_CASE("a topology without a dns server cannot validate") {
    const std::string json(R"({
  "schema_version": 1,
  "name": "no-dns",
  "topology": {
    "contained_block": "10.20.0.0/24",
    "routers": 1,
    "gateways": [{"router": 0, "iot_devices": 2}],
    "lan_servers": ["cnc", "scanlisten", "loader"]
  },
  "dns": {"records": []},
  "bot": {"seed_devices": ["iot-0-0"]},
  "dictionary": [{"username": "root", "password": "root"}]
})");
    const ScenarioConfig cfg = parse_scenario_json(json, "inline");
    CHECK_THROWS_AS(validate_scenario(cfg), ValidationError);
}

TEST_CASE("segment larger than the binary is rejected") {
    const std::string json =
        minimal_json(R"("loader": {"binary_bytes": 100, "segment_bytes": 1024})");
    const ScenarioConfig cfg = parse_scenario_json(json, "inline");
    CHECK_THROWS_AS(validate_scenario(cfg), ValidationError);
}

TEST_CASE("scripts may reference the implicit default by name") {
    const std::string json = minimal_json(R"("device_scripts": {"iot-0-1": "default"})");
    const ScenarioConfig cfg = parse_scenario_json(json, "inline");
    CHECK_NOTHROW(validate_scenario(cfg));

    const std::string bad = minimal_json(R"("device_scripts": {"iot-0-1": "nocturne"})");
    const ScenarioConfig cfg2 = parse_scenario_json(bad, "inline");
    CHECK_THROWS_AS(validate_scenario(cfg2), ValidationError);
}

TEST_CASE("event kinds are checked") {
    const std::string json =
        minimal_json(R"("events": [{"at_s": 1, "kind": "teleport", "device": "iot-0-0"}])");
    CHECK_THROWS_AS(parse_scenario_json(json, "inline"), ParseError);
}

TEST_CASE("effective config echo reparses to the same scenario") {
    const ScenarioConfig cfg = load_scenario(kDir + "/propagation.json");
    const std::string echo = effective_config_json(cfg);
    const ScenarioConfig back = parse_scenario_json(echo, "echo");
    validate_scenario(back);

    CHECK(back.name == cfg.name);
    CHECK(back.root_seed == cfg.root_seed);
    CHECK(back.duration_us == cfg.duration_us);
    CHECK(back.topology.contained_block.str() == cfg.topology.contained_block.str());
    CHECK(back.topology.gateways.size() == cfg.topology.gateways.size());
    CHECK(back.dictionary.entries.size() == cfg.dictionary.entries.size());
    CHECK(back.seed_devices == cfg.seed_devices);
    CHECK(back.attacks.size() == cfg.attacks.size());
    CHECK(back.scan_rate_pps == cfg.scan_rate_pps);
    CHECK(back.keepalive_interval_us == cfg.keepalive_interval_us);
    // and the echo of the echo is stable
    CHECK(effective_config_json(back) == echo);
}

TEST_CASE("missing file and broken json yield distinct errors") {
    CHECK_THROWS_AS(load_scenario(kDir + "/does-not-exist.json"), IoError);
    CHECK_THROWS_AS(parse_scenario_json("{not json", "inline"), ParseError);
    CHECK_THROWS_AS(parse_scenario_json("[]", "inline"), ParseError);
}
