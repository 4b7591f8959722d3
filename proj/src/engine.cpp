#include "botsim/engine.hpp"

#include <chrono>

namespace botsim {

Sim::Sim(std::uint64_t root_seed, CidrBlock contained_block)
    : root_seed_(root_seed), contained_block_(contained_block) {}

EntityId Sim::add_entity(Entity* e) {
    entities_.push_back(e);
    online_.push_back(true);
    return static_cast<EntityId>(entities_.size() - 1);
}

void Sim::set_online(EntityId id, bool online) {
    online_.at(id) = online;
}

void Sim::schedule(Event ev) {
    if (ev.fire_at < now_)
        throw PastEventError("event scheduled at t=" + std::to_string(ev.fire_at) +
                             " before now=" + std::to_string(now_));
    ev.seq = seq_counter_++;
    queue_.push(std::move(ev));
}

void Sim::schedule_timer(SimTime at, EntityId target, TimerData data) {
    Event ev;
    ev.fire_at = at;
    ev.target = target;
    ev.kind = EventKind::Timer;
    ev.payload = data;
    schedule(std::move(ev));
}

void Sim::schedule_control(SimTime at, EntityId target, ControlData data) {
    Event ev;
    ev.fire_at = at;
    ev.target = target;
    ev.kind = EventKind::ControlCommand;
    ev.payload = std::move(data);
    schedule(std::move(ev));
}

void Sim::send_packet(Packet pkt, EntityId from) {
    (void)from;
    if (!contained_block_.contains(pkt.src_addr) || !contained_block_.contains(pkt.dst_addr)) {
        trace_.flush();
        throw ContainmentViolation("packet " + pkt.src_addr.str() + " -> " + pkt.dst_addr.str() +
                                   " leaves contained block " + contained_block_.str());
    }
    trace_packet(pkt, TraceEvent::Send, now_);
    ++stats_.packets_sent;

    const auto hop = fabric_ ? fabric_->delivery(pkt.src_addr, pkt.dst_addr) : std::nullopt;
    if (!hop) {
        trace_packet(pkt, TraceEvent::Drop, now_);
        ++stats_.packets_dropped;
        return;
    }
    Event ev;
    ev.fire_at = now_ + hop->second;
    ev.target = hop->first;
    ev.kind = EventKind::PacketArrival;
    ev.payload = std::move(pkt);
    schedule(std::move(ev));
}

RunStats Sim::run_until(SimTime end) {
    const auto wall_start = std::chrono::steady_clock::now();
    while (!queue_.empty() && queue_.top().fire_at <= end) {
        const Event ev = queue_.top();
        queue_.pop();
        now_ = ev.fire_at;
        dispatch(ev);
        ++stats_.events_processed;
    }
    now_ = end;
    const auto wall_end = std::chrono::steady_clock::now();
    stats_.wall_ms +=
        std::chrono::duration_cast<std::chrono::milliseconds>(wall_end - wall_start).count();
    return stats_;
}

void Sim::drain_in_flight() {
    while (!queue_.empty()) {
        const Event ev = queue_.top();
        queue_.pop();
        if (ev.kind != EventKind::PacketArrival) continue;
        // in-flight at run end; drop at the would-be arrival time so the
        // trace stays time-ordered and conservation holds
        trace_packet(std::get<Packet>(ev.payload), TraceEvent::Drop, ev.fire_at);
        ++stats_.packets_dropped;
    }
}

void Sim::dispatch(const Event& ev) {
    switch (ev.kind) {
    case EventKind::PacketArrival: {
        const Packet& pkt = std::get<Packet>(ev.payload);
        if (!online_[ev.target]) {
            trace_packet(pkt, TraceEvent::Drop, now_);
            ++stats_.packets_dropped;
            return;
        }
        Entity* e = entities_[ev.target];
        if (!e->admit(*this, pkt)) {
            trace_packet(pkt, TraceEvent::Drop, now_);
            ++stats_.packets_dropped;
            return;
        }
        trace_packet(pkt, TraceEvent::Deliver, now_);
        ++stats_.packets_delivered;
        e->handle(*this, ev);
        return;
    }
    case EventKind::Timer:
        // timers die with an offline device; control commands always land
        if (!online_[ev.target]) return;
        entities_[ev.target]->handle(*this, ev);
        return;
    case EventKind::ControlCommand:
        entities_[ev.target]->handle(*this, ev);
        return;
    }
}

void Sim::trace_packet(const Packet& p, TraceEvent event, SimTime t) {
    TraceRecord r;
    r.t = t;
    r.src = p.src_addr;
    r.src_port = p.src_port;
    r.dst = p.dst_addr;
    r.dst_port = p.dst_port;
    r.transport = p.transport;
    r.tcp_flags = p.tcp_flags;
    r.size_bytes = p.size_bytes;
    r.tag = p.tag;
    r.event = event;
    r.session_id = p.session_id;
    trace_.add(r);
}

} // namespace botsim
