#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "botsim/attack.hpp"
#include "botsim/runner.hpp"
#include "botsim/scenario.hpp"
#include "botsim/time.hpp"

using namespace botsim;

namespace {

// one seeded bot, the control-plane servers, a victim, nothing else
ScenarioConfig flood_scenario(const std::string& type, double rate_pps, double duration_s,
                              double run_s) {
    ScenarioConfig cfg;
    cfg.name = "flood-probe";
    cfg.root_seed = 99;
    cfg.duration_us = us_from_seconds(run_s);
    cfg.topology.contained_block = *CidrBlock::parse("10.8.0.0/24");
    cfg.topology.routers = 1;
    cfg.topology.gateways = {{0, 1}};
    cfg.topology.lan_servers = {"dns", "cnc", "scanlisten", "loader", "victim"};
    cfg.dns_records = {{"cnc.botlab.test", "cnc"}, {"report.botlab.test", "scanlisten"}};
    cfg.seed_devices = {"iot-0-0"};
    cfg.scan_rate_pps = 0.5; // keep the trace small
    cfg.dictionary.entries = {{"root", "root"}};

    ScheduledAttack atk;
    atk.at_us = us_from_seconds(2.0);
    atk.target_device = "victim";
    atk.command.attack = *attack_type_from_name(type);
    atk.command.duration_s = duration_s;
    atk.command.rate_pps_per_bot = rate_pps;
    cfg.attacks = {atk};
    return cfg;
}

struct FloodSample {
    std::vector<SimTime> send_times;
    Packet example;
    bool example_set = false;
    std::vector<std::uint16_t> src_ports;
};

FloodSample run_flood(const ScenarioConfig& cfg) {
    const RunResult res = run_scenario(cfg);
    FloodSample out;
    for (const TraceRecord& r : res.world->sim().trace().records()) {
        if (r.tag != PacketTag::AttackFlood || r.event != TraceEvent::Send) continue;
        out.send_times.push_back(r.t);
        out.src_ports.push_back(r.src_port);
        if (!out.example_set) {
            out.example.transport = r.transport;
            out.example.tcp_flags = r.tcp_flags;
            out.example.dst_port = r.dst_port;
            out.example.size_bytes = r.size_bytes;
            out.example_set = true;
        }
    }
    return out;
}

} // namespace

TEST_CASE("profile table matches the documented wire shapes") {
    const auto& t = default_attack_profiles();
    const auto& udp = t[static_cast<int>(AttackType::UdpFlood)];
    CHECK(udp.transport == Transport::Udp);
    CHECK(udp.payload_bytes == 512);
    CHECK_FALSE(udp.random_src_port);

    const auto& syn = t[static_cast<int>(AttackType::SynFlood)];
    CHECK(syn.transport == Transport::Tcp);
    CHECK(syn.tcp_flags == tcpflag::Syn);
    CHECK(syn.payload_bytes == 0);
    CHECK(syn.random_src_port);

    const auto& ack = t[static_cast<int>(AttackType::AckFlood)];
    CHECK(ack.tcp_flags == tcpflag::Ack);

    const auto& stomp = t[static_cast<int>(AttackType::TcpStompFlood)];
    CHECK(stomp.tcp_flags == (tcpflag::Psh | tcpflag::Ack));
    CHECK(stomp.payload_bytes == 768);

    const auto& vse = t[static_cast<int>(AttackType::ValveSourceEngineFlood)];
    CHECK(vse.transport == Transport::Udp);
    CHECK(vse.default_dst_port == 27015);
    CHECK(vse.payload_bytes == 25);

    const auto& dns = t[static_cast<int>(AttackType::DnsResolverFlood)];
    CHECK(dns.default_dst_port == 53);
    CHECK(dns.payload_bytes == 60);

    const auto& greip = t[static_cast<int>(AttackType::GreIpFlood)];
    CHECK(greip.transport == Transport::Gre);
    CHECK(greip.payload_bytes == 512);

    const auto& greeth = t[static_cast<int>(AttackType::GreEthFlood)];
    CHECK(greeth.transport == Transport::Gre);
    CHECK(greeth.payload_bytes == 526);

    const auto& http = t[static_cast<int>(AttackType::HttpFlood)];
    CHECK(http.transport == Transport::Tcp);
    CHECK(http.default_dst_port == 80);
    CHECK(http.tcp_flags == (tcpflag::Psh | tcpflag::Ack));
}

TEST_CASE("attack names round-trip") {
    for (int i = 0; i < kAttackTypeCount; ++i) {
        const auto type = static_cast<AttackType>(i);
        const auto back = attack_type_from_name(attack_type_name(type));
        REQUIRE(back.has_value());
        CHECK(*back == type);
    }
    CHECK_FALSE(attack_type_from_name("icmp").has_value());
    CHECK_FALSE(attack_type_from_name("").has_value());
}

TEST_CASE("command validity needs positive duration and rate") {
    AttackCommand cmd;
    CHECK_FALSE(cmd.valid());
    cmd.duration_s = 10;
    CHECK_FALSE(cmd.valid());
    cmd.rate_pps_per_bot = 5;
    CHECK(cmd.valid());
    cmd.duration_s = -1;
    CHECK_FALSE(cmd.valid());
}

TEST_CASE("emitted packet count tracks rate times duration") {
    struct Case {
        double rate;
        double duration;
    };
    for (const Case c : {Case{40, 5}, Case{7, 3}, Case{0.5, 9}, Case{333, 2}}) {
        const FloodSample s = run_flood(flood_scenario("udp", c.rate, c.duration, c.duration + 6));
        const double expect = c.rate * c.duration;
        CHECK(std::abs(static_cast<double>(s.send_times.size()) - expect) <= 1.0);
    }
}

TEST_CASE("flood packets carry the profile's shape on the wire") {
    const FloodSample udp = run_flood(flood_scenario("udp", 50, 2, 6));
    REQUIRE(udp.example_set);
    CHECK(udp.example.transport == Transport::Udp);
    CHECK(udp.example.size_bytes == kUdpHeaderBytes + 512);
    CHECK(udp.example.dst_port == 0); // profile names no service, command did not either

    ScenarioConfig ported = flood_scenario("udp", 50, 2, 6);
    ported.attacks[0].command.target_port = 9000;
    const FloodSample udp_ported = run_flood(ported);
    REQUIRE(udp_ported.example_set);
    CHECK(udp_ported.example.dst_port == 9000); // command port overrides the profile

    const FloodSample vse = run_flood(flood_scenario("vse", 50, 2, 6));
    REQUIRE(vse.example_set);
    CHECK(vse.example.dst_port == 27015);
    CHECK(vse.example.size_bytes == kUdpHeaderBytes + 25);

    const FloodSample syn = run_flood(flood_scenario("syn", 50, 2, 6));
    REQUIRE(syn.example_set);
    CHECK(syn.example.transport == Transport::Tcp);
    CHECK(syn.example.tcp_flags == tcpflag::Syn);
    CHECK(syn.example.size_bytes == kTcpHeaderBytes);
}

TEST_CASE("syn flood draws ephemeral source ports, udp flood does not") {
    const FloodSample syn = run_flood(flood_scenario("syn", 100, 3, 8));
    REQUIRE(syn.src_ports.size() > 100);
    std::map<std::uint16_t, int> seen;
    for (std::uint16_t p : syn.src_ports) {
        CHECK(p >= 1024);
        ++seen[p];
    }
    CHECK(seen.size() > syn.src_ports.size() / 2); // near-unique draws

    const FloodSample udp = run_flood(flood_scenario("udp", 100, 3, 8));
    REQUIRE_FALSE(udp.src_ports.empty());
    for (std::uint16_t p : udp.src_ports) CHECK(p == udp.src_ports.front());
}

TEST_CASE("emission grid jitters but never clumps or gaps badly") {
    const double rate = 200;
    const FloodSample s = run_flood(flood_scenario("udp", rate, 5, 12));
    REQUIRE(s.send_times.size() > 500);
    const double gap_us = 1e6 / rate;
    for (std::size_t i = 1; i < s.send_times.size(); ++i) {
        const double d = static_cast<double>(s.send_times[i] - s.send_times[i - 1]);
        // each point wanders +-10% of the grid pitch, so neighbor spacing
        // stays within +-20%
        CHECK(d > 0.79 * gap_us);
        CHECK(d < 1.21 * gap_us);
    }
}

TEST_CASE("attack emission is open-loop: victim overload changes nothing") {
    ScenarioConfig roomy = flood_scenario("udp", 120, 4, 10);
    roomy.victim_capacity_pps = 100000;
    ScenarioConfig choked = flood_scenario("udp", 120, 4, 10);
    choked.victim_capacity_pps = 10;
    choked.victim_queue_len = 2;

    const FloodSample a = run_flood(roomy);
    const FloodSample b = run_flood(choked);
    CHECK(a.send_times == b.send_times); // same seed, same grid, no backpressure
}

TEST_CASE("packets stop within one grid step of the commanded end") {
    const double rate = 100;
    const double duration = 3;
    const ScenarioConfig cfg = flood_scenario("udp", rate, duration, 10);
    const FloodSample s = run_flood(cfg);
    REQUIRE_FALSE(s.send_times.empty());
    const SimTime start = us_from_seconds(2.0);
    const SimTime end = start + us_from_seconds(duration);
    const SimTime slack = static_cast<SimTime>(1.2e6 / rate);
    CHECK(s.send_times.front() >= start);
    CHECK(s.send_times.front() <= start + slack);
    CHECK(s.send_times.back() <= end + slack);
}
