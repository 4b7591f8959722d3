#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "botsim/attack.hpp"
#include "botsim/telnet.hpp"
#include "botsim/time.hpp"
#include "botsim/topology.hpp"

namespace botsim {

struct DnsRecordSpec {
    std::string domain;
    std::string device; // resolves to that device's address
};

struct ScheduledAttack {
    SimTime at_us = 0;
    std::string account = "root";
    std::string target_device; // resolved to command.target_addr when set
    AttackCommand command;
};

/// Mid-run control events (DNS repoints, devices going on/offline).
struct ScheduledEvent {
    SimTime at_us = 0;
    std::string kind; // dns_remap | set_online | set_offline | inject_rogue
    std::string domain;
    std::string device;
    std::string address; // inject_rogue: destination of the rogue packet
};

struct CncAccountSpec {
    std::string name;
    int max_bots = -1; // -1: no cap
};

struct ClientTrafficSpec {
    SimTime period_us = us_from_seconds(1.0);
    SimTime timeout_us = us_from_seconds(1.0);
    std::uint32_t payload_bytes = 64;
    // TCP echo-stream knobs (used when the client kind is tcp)
    std::uint32_t segment_bytes = 512;
    int dup_ack_threshold = 3;
    int max_retransmits = 8;
};

struct ScenarioConfig {
    int schema_version = 1;
    std::string name = "default";

    // run
    std::uint64_t root_seed = 1;
    SimTime duration_us = us_from_seconds(60.0);
    double series_bin_s = 1.0;

    TopologySpec topology;

    // dns
    std::vector<DnsRecordSpec> dns_records;
    std::uint32_t dns_ttl_s = 60;
    double dns_backoff_base_s = 5.0;
    double dns_backoff_cap_s = 80.0;

    // cnc
    std::string cnc_domain = "cnc.botlab.test";
    std::uint16_t cnc_port = 6667;
    SimTime keepalive_interval_us = us_from_seconds(60.0);
    int keepalive_loss_tolerance = 3;
    std::vector<CncAccountSpec> accounts{{"root", -1}};
    std::vector<std::string> cnc_whitelist; // target addresses dispatch refuses

    // report/loader
    std::string report_domain = "report.botlab.test";
    std::uint16_t report_port = 48101;
    bool retry_failed_loads = false;
    std::string binary_id = "bot.bin";
    std::uint32_t binary_bytes = 61440;
    std::uint32_t segment_bytes = 1024;
    SimTime download_duration_us = us_from_seconds(6.0);

    // bot behavior
    std::vector<std::string> seed_devices; // pre-infected at t=0
    double scan_rate_pps = 10.0;
    SimTime syn_timeout_us = us_from_seconds(5.0);
    SimTime session_timeout_us = us_from_seconds(30.0);
    std::uint16_t telnet_port = 23;
    CredentialList dictionary;
    int max_attempts_per_connection = 3;
    int prompt_byte_budget = 512;

    // telnet scripts (per-name; devices reference one by name, empty = "default")
    std::map<std::string, NegotiationScript> scripts;
    std::string client_script = "default";
    std::map<std::string, std::string> device_scripts; // device name -> script name

    // victim service
    std::uint16_t victim_port = 9000;
    double victim_capacity_pps = 5000.0;
    std::uint32_t victim_queue_len = 100;

    ClientTrafficSpec client_traffic;

    std::vector<ScheduledAttack> attacks;
    std::vector<ScheduledEvent> events;
};

/// Parse a scenario JSON file. Unknown keys, bad types, malformed hex and
/// cross-field contradictions throw ValidationError with the field path.
ScenarioConfig load_scenario(const std::string& path);
ScenarioConfig parse_scenario_json(const std::string& text, const std::string& origin);

/// Cross-field checks shared by load and the validate CLI verb.
void validate_scenario(const ScenarioConfig& cfg);

/// Canonical JSON of the fully-defaulted config, echoed into summary.txt
/// so a run records exactly what it executed.
std::string effective_config_json(const ScenarioConfig& cfg);

} // namespace botsim
