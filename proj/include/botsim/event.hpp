#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "botsim/attack.hpp"
#include "botsim/packet.hpp"
#include "botsim/time.hpp"

namespace botsim {

using EntityId = std::uint32_t;
constexpr EntityId kNoEntity = ~EntityId(0);

enum class EventKind : std::uint8_t { PacketArrival, Timer, ControlCommand };

/// Entity-defined timer discriminators. Each component owns a range so a
/// node can route the callback without a second dispatch table.
enum class TimerCode : std::uint16_t {
    BotBoot = 1,
    BotResolveRetry,
    BotScanTick,
    BotSynTimeout,
    BotKeepAliveTick,
    BotSessionStep,
    BotSessionTimeout,
    BotAttackEmit,
    BotAttackEnd,
    BotReportTimeout,
    CncAudit,
    TelnetSweep,
    LoaderSegment,
    LoaderJobTimeout,
    VictimServe,
    ClientRequestTick,
    ClientRto,
    ClientHandshakeRetry,
};

struct TimerData {
    TimerCode code = TimerCode::BotBoot;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
};

// Scenario-scheduled control directives.
struct StartAttackCmd {
    std::string account;
    AttackCommand cmd;
};
struct DnsRemapCmd {
    std::string domain;
    Address to;
};
struct SetOnlineCmd {
    EntityId device = kNoEntity;
    bool online = true;
};
struct InjectPacketCmd {
    Packet pkt;
};

using ControlData = std::variant<StartAttackCmd, DnsRemapCmd, SetOnlineCmd, InjectPacketCmd>;

struct Event {
    SimTime fire_at = 0;
    std::uint64_t seq = 0; // global tie-break; equal fire_at fires in seq order
    EntityId target = kNoEntity;
    EventKind kind = EventKind::Timer;
    std::variant<Packet, TimerData, ControlData> payload;
};

} // namespace botsim
