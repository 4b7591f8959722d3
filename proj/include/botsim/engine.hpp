#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <string_view>
#include <utility>
#include <vector>

#include "botsim/errors.hpp"
#include "botsim/event.hpp"
#include "botsim/packet.hpp"
#include "botsim/rng.hpp"
#include "botsim/time.hpp"
#include "botsim/trace.hpp"

namespace botsim {

class Sim;

/// Anything that can receive events from the run loop.
class Entity {
public:
    virtual ~Entity() = default;
    virtual void handle(Sim& sim, const Event& ev) = 0;
    /// Consulted before a PacketArrival is traced: returning false turns
    /// the arrival into a Drop (a full service queue turning packets away)
    /// and handle() is not called for it.
    virtual bool admit(Sim& sim, const Packet& pkt) {
        (void)sim;
        (void)pkt;
        return true;
    }
};

/// Routing/delivery answers the engine needs from the topology.
class PacketFabric {
public:
    virtual ~PacketFabric() = default;
    /// Entity owning dst plus total path latency, or nullopt if unroutable.
    virtual std::optional<std::pair<EntityId, SimTime>> delivery(Address src, Address dst) = 0;
};

struct RunStats {
    std::uint64_t events_processed = 0;
    std::uint64_t packets_sent = 0;
    std::uint64_t packets_delivered = 0;
    std::uint64_t packets_dropped = 0;
    std::int64_t wall_ms = 0;

    bool operator==(const RunStats&) const = default;
};

/// Deterministic discrete-event engine: virtual clock, (fire_at, seq)
/// ordered queue, seeded substreams, and packet delivery through the
/// fabric. Single logical thread per run; one instance per run.
class Sim {
public:
    Sim(std::uint64_t root_seed, CidrBlock contained_block);

    SimTime now() const { return now_; }
    std::uint64_t root_seed() const { return root_seed_; }
    const CidrBlock& contained_block() const { return contained_block_; }

    EntityId add_entity(Entity* e);
    void set_fabric(PacketFabric* fabric) { fabric_ = fabric; }

    void set_online(EntityId id, bool online);
    bool online(EntityId id) const { return online_[id]; }

    /// Enqueue an event; throws PastEventError if fire_at < now.
    void schedule(Event ev);
    void schedule_timer(SimTime at, EntityId target, TimerData data);
    void schedule_control(SimTime at, EntityId target, ControlData data);

    /// Trace a send and schedule delivery (or a drop when unroutable).
    /// Throws ContainmentViolation when either address is outside the
    /// contained block; the run must abort.
    void send_packet(Packet pkt, EntityId from);

    /// Process every event with fire_at <= end. Returns cumulative stats.
    RunStats run_until(SimTime end);

    /// Drop-trace packets still in flight; call once after the final
    /// run_until so sent == delivered + dropped holds over the trace.
    void drain_in_flight();

    RngStream make_stream(std::string_view purpose, std::uint64_t entity = 0) const {
        return RngStream(root_seed_, stream_label(purpose, entity));
    }

    std::uint64_t next_session_id() { return session_counter_++; }

    TraceLog& trace() { return trace_; }
    const RunStats& stats() const { return stats_; }

private:
    struct QueueOrder {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_at != b.fire_at) return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    void dispatch(const Event& ev);
    void trace_packet(const Packet& p, TraceEvent event, SimTime t);

    std::uint64_t root_seed_;
    CidrBlock contained_block_;
    SimTime now_ = 0;
    std::uint64_t seq_counter_ = 0;
    std::uint64_t session_counter_ = 1;
    std::priority_queue<Event, std::vector<Event>, QueueOrder> queue_;
    std::vector<Entity*> entities_;
    std::vector<bool> online_;
    PacketFabric* fabric_ = nullptr;
    TraceLog trace_;
    RunStats stats_;
};

} // namespace botsim
