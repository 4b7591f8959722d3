#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "botsim/engine.hpp"
#include "botsim/errors.hpp"
#include "botsim/packet.hpp"
#include "botsim/trace.hpp"

using namespace botsim;

namespace {

CidrBlock block24() { return *CidrBlock::parse("10.0.0.0/24"); }

// records every event it sees, optionally refusing packet admission
struct Probe : Entity {
    std::vector<std::pair<SimTime, std::uint64_t>> timer_log; // (when, TimerData.a)
    std::vector<Packet> packets;
    std::vector<ControlData> controls;
    bool admit_packets = true;

    bool admit(Sim&, const Packet&) override { return admit_packets; }

    void handle(Sim& sim, const Event& ev) override {
        switch (ev.kind) {
        case EventKind::Timer:
            timer_log.emplace_back(sim.now(), std::get<TimerData>(ev.payload).a);
            break;
        case EventKind::PacketArrival:
            packets.push_back(std::get<Packet>(ev.payload));
            break;
        case EventKind::ControlCommand:
            controls.push_back(std::get<ControlData>(ev.payload));
            break;
        }
    }
};

// flat fabric: every registered address is one hop at a fixed latency
struct FlatFabric : PacketFabric {
    std::map<std::uint32_t, EntityId> owners;
    SimTime latency_us = 1000;

    std::optional<std::pair<EntityId, SimTime>> delivery(Address, Address dst) override {
        const auto it = owners.find(dst.v4);
        if (it == owners.end()) return std::nullopt;
        return std::make_pair(it->second, latency_us);
    }
};

Packet make_packet(Address src, Address dst) {
    Packet p;
    p.src_addr = src;
    p.dst_addr = dst;
    p.src_port = 1000;
    p.dst_port = 2000;
    p.transport = Transport::Udp;
    p.tag = PacketTag::Scan;
    return p;
}

} // namespace

TEST_CASE("timers fire in time order with FIFO tie-break") {
    Sim sim(1, block24());
    Probe probe;
    const EntityId id = sim.add_entity(&probe);

    sim.schedule_timer(500, id, {TimerCode::BotBoot, 1, 0});
    sim.schedule_timer(200, id, {TimerCode::BotBoot, 2, 0});
    sim.schedule_timer(500, id, {TimerCode::BotBoot, 3, 0}); // same instant as #1
    sim.schedule_timer(100, id, {TimerCode::BotBoot, 4, 0});
    sim.run_until(1000);

    REQUIRE(probe.timer_log.size() == 4);
    CHECK(probe.timer_log[0] == std::pair<SimTime, std::uint64_t>{100, 4});
    CHECK(probe.timer_log[1] == std::pair<SimTime, std::uint64_t>{200, 2});
    // 500us pair keeps scheduling order
    CHECK(probe.timer_log[2] == std::pair<SimTime, std::uint64_t>{500, 1});
    CHECK(probe.timer_log[3] == std::pair<SimTime, std::uint64_t>{500, 3});
}

TEST_CASE("run_until stops the clock at the requested end") {
    Sim sim(1, block24());
    Probe probe;
    const EntityId id = sim.add_entity(&probe);
    sim.schedule_timer(100, id, {TimerCode::BotBoot, 1, 0});
    sim.schedule_timer(900, id, {TimerCode::BotBoot, 2, 0});

    sim.run_until(500);
    CHECK(probe.timer_log.size() == 1);
    CHECK(sim.now() == 500);

    sim.run_until(1000);
    CHECK(probe.timer_log.size() == 2);
    CHECK(sim.now() == 1000);
}

TEST_CASE("scheduling into the past is rejected") {
    Sim sim(1, block24());
    Probe probe;
    const EntityId id = sim.add_entity(&probe);
    sim.schedule_timer(100, id, {TimerCode::BotBoot, 1, 0});
    sim.run_until(200);
    CHECK_THROWS_AS(sim.schedule_timer(150, id, {TimerCode::BotBoot, 2, 0}), PastEventError);
}

TEST_CASE("packets deliver through the fabric with latency") {
    Sim sim(1, block24());
    Probe a;
    Probe b;
    const EntityId ia = sim.add_entity(&a);
    sim.add_entity(&b);
    FlatFabric fabric;
    const Address src = *Address::parse("10.0.0.1");
    const Address dst = *Address::parse("10.0.0.2");
    fabric.owners[dst.v4] = 1;
    fabric.latency_us = 250;
    sim.set_fabric(&fabric);

    sim.send_packet(make_packet(src, dst), ia);
    sim.run_until(1000);

    REQUIRE(b.packets.size() == 1);
    CHECK(b.packets[0].dst_addr == dst);
    CHECK(sim.stats().packets_sent == 1);
    CHECK(sim.stats().packets_delivered == 1);

    // trace carries the send and the deliver, 250us apart
    const auto& recs = sim.trace().records();
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].event == TraceEvent::Send);
    CHECK(recs[0].t == 0);
    CHECK(recs[1].event == TraceEvent::Deliver);
    CHECK(recs[1].t == 250);
}

TEST_CASE("out-of-block addresses abort the run") {
    Sim sim(1, block24());
    Probe a;
    const EntityId ia = sim.add_entity(&a);
    FlatFabric fabric;
    sim.set_fabric(&fabric);

    const Address in = *Address::parse("10.0.0.1");
    const Address out = *Address::parse("192.168.1.1");
    CHECK_THROWS_AS(sim.send_packet(make_packet(in, out), ia), ContainmentViolation);
    CHECK_THROWS_AS(sim.send_packet(make_packet(out, in), ia), ContainmentViolation);
}

TEST_CASE("unroutable and refused packets are dropped, and counts reconcile") {
    Sim sim(1, block24());
    Probe a;
    Probe b;
    const EntityId ia = sim.add_entity(&a);
    sim.add_entity(&b);
    FlatFabric fabric;
    const Address src = *Address::parse("10.0.0.1");
    const Address dst = *Address::parse("10.0.0.2");
    const Address nowhere = *Address::parse("10.0.0.99");
    fabric.owners[dst.v4] = 1;
    sim.set_fabric(&fabric);

    sim.send_packet(make_packet(src, nowhere), ia); // unroutable
    b.admit_packets = false;
    sim.send_packet(make_packet(src, dst), ia); // refused at admission
    sim.run_until(10000);
    b.admit_packets = true;
    sim.send_packet(make_packet(src, dst), ia); // delivered
    sim.run_until(20000);

    CHECK(b.packets.size() == 1);
    CHECK(sim.stats().packets_sent == 3);
    CHECK(sim.stats().packets_delivered == 1);
    CHECK(sim.stats().packets_dropped == 2);
}

TEST_CASE("drain_in_flight settles the send/deliver/drop balance") {
    Sim sim(1, block24());
    Probe a;
    Probe b;
    const EntityId ia = sim.add_entity(&a);
    sim.add_entity(&b);
    FlatFabric fabric;
    const Address src = *Address::parse("10.0.0.1");
    const Address dst = *Address::parse("10.0.0.2");
    fabric.owners[dst.v4] = 1;
    fabric.latency_us = 5000;
    sim.set_fabric(&fabric);

    sim.run_until(100);
    sim.send_packet(make_packet(src, dst), ia); // lands at 5100, beyond the run end
    sim.run_until(1000);
    CHECK(sim.stats().packets_delivered == 0);

    sim.drain_in_flight();
    const auto& st = sim.stats();
    CHECK(st.packets_sent == st.packets_delivered + st.packets_dropped);
    CHECK(st.packets_dropped == 1);
}

TEST_CASE("offline entities drop packets and lose timers but keep controls") {
    Sim sim(1, block24());
    Probe a;
    Probe b;
    const EntityId ia = sim.add_entity(&a);
    const EntityId ib = sim.add_entity(&b);
    FlatFabric fabric;
    const Address src = *Address::parse("10.0.0.1");
    const Address dst = *Address::parse("10.0.0.2");
    fabric.owners[dst.v4] = ib;
    sim.set_fabric(&fabric);

    sim.schedule_timer(500, ib, {TimerCode::BotBoot, 1, 0});
    sim.schedule_control(600, ib, ControlData{SetOnlineCmd{ib, true}});
    sim.send_packet(make_packet(src, dst), ia);
    sim.set_online(ib, false);
    sim.run_until(1000);

    CHECK(b.packets.empty());
    CHECK(b.timer_log.empty());
    CHECK(b.controls.size() == 1); // controls reach offline entities
    CHECK(sim.stats().packets_dropped == 1);
}

TEST_CASE("same seed and same schedule give identical traces") {
    auto run_once = [] {
        Sim sim(77, block24());
        Probe a;
        Probe b;
        const EntityId ia = sim.add_entity(&a);
        sim.add_entity(&b);
        FlatFabric fabric;
        const Address src = *Address::parse("10.0.0.1");
        const Address dst = *Address::parse("10.0.0.2");
        fabric.owners[dst.v4] = 1;
        sim.set_fabric(&fabric);
        RngStream r = sim.make_stream("demo", 0);
        SimTime t = 0;
        for (int i = 0; i < 200; ++i) {
            t += static_cast<SimTime>(r.exponential(0.001));
            sim.run_until(t);
            sim.send_packet(make_packet(src, dst), ia);
        }
        sim.run_until(t + 100000);
        std::vector<std::string> lines;
        for (const auto& rec : sim.trace().records()) lines.push_back(trace_jsonl_line(rec));
        return lines;
    };
    CHECK(run_once() == run_once());
}

TEST_CASE("session ids start at one and increase") {
    Sim sim(1, block24());
    CHECK(sim.next_session_id() == 1);
    CHECK(sim.next_session_id() == 2);
    CHECK(sim.next_session_id() == 3);
}
