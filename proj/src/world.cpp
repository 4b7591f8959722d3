#include "botsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace botsim {

namespace {

std::uint64_t flow_key(Address addr, std::uint16_t port) {
    return (std::uint64_t(addr.v4) << 16) | port;
}

Packet reply_to(const Packet& pkt, std::uint8_t flags, PacketTag tag) {
    Packet p;
    p.src_addr = pkt.dst_addr;
    p.src_port = pkt.dst_port;
    p.dst_addr = pkt.src_addr;
    p.dst_port = pkt.src_port;
    p.transport = pkt.transport;
    p.tcp_flags = flags;
    p.tag = tag;
    p.session_id = pkt.session_id;
    return p;
}

Packet data_reply(const Packet& pkt, PacketTag tag, Bytes payload) {
    Packet p = reply_to(pkt, tcpflag::Psh | tcpflag::Ack, tag);
    p.size_bytes = kTcpHeaderBytes + static_cast<std::uint32_t>(payload.size());
    p.payload = std::move(payload);
    return p;
}

} // namespace

// ---------------------------------------------------------------- Node

Node::Node(World& world, DeviceId id)
    : world_(world), id_(id), addr_(world.topo().device(id).addr) {}

void Node::handle(Sim& sim, const Event& ev) {
    switch (ev.kind) {
    case EventKind::PacketArrival: {
        const auto& pkt = std::get<Packet>(ev.payload);
        if (closed_port_semantics(sim, pkt)) return;
        on_packet(sim, pkt);
        return;
    }
    case EventKind::Timer:
        on_timer(sim, std::get<TimerData>(ev.payload));
        return;
    case EventKind::ControlCommand:
        on_control(sim, std::get<ControlData>(ev.payload));
        return;
    }
}

void Node::on_packet(Sim&, const Packet&) {}
void Node::on_timer(Sim&, const TimerData&) {}

void Node::on_control(Sim& sim, const ControlData& c) {
    if (const auto* set = std::get_if<SetOnlineCmd>(&c)) {
        sim.set_online(set->device == kNoEntity ? id_ : set->device, set->online);
        return;
    }
    if (const auto* inject = std::get_if<InjectPacketCmd>(&c)) {
        sim.send_packet(inject->pkt, id_);
        return;
    }
}

bool Node::closed_port_semantics(Sim& sim, const Packet& pkt) {
    if (pkt.transport != Transport::Tcp) return false;
    if (!(pkt.tcp_flags & tcpflag::Syn) || (pkt.tcp_flags & tcpflag::Ack)) return false;
    if (world_.topo().device(id_).open_ports.count(pkt.dst_port)) return false;
    // flood SYNs to dead ports get no courtesy RST; everything else does
    if (pkt.tag != PacketTag::AttackFlood) {
        Packet rst = reply_to(pkt, tcpflag::Rst, pkt.tag);
        rst.size_bytes = kTcpHeaderBytes;
        sim.send_packet(rst, id_);
    }
    return true;
}

// ---------------------------------------------------------------- DnsNode

DnsNode::DnsNode(World& world, DeviceId id, std::map<std::string, Address> zone,
                 std::uint32_t ttl_s)
    : Node(world, id), zone_(std::move(zone)), ttl_s_(ttl_s) {}

void DnsNode::on_packet(Sim& sim, const Packet& pkt) {
    if (pkt.transport != Transport::Udp || pkt.dst_port != 53) return;
    std::istringstream in(string_from_bytes(pkt.payload));
    std::string verb, domain;
    std::uint32_t txn = 0;
    in >> verb >> txn >> domain;
    if (verb != "Q" || domain.empty()) return;
    ++queries_;

    Packet answer = reply_to(pkt, 0, PacketTag::DnsAnswer);
    const auto it = zone_.find(domain);
    std::string text;
    if (it == zone_.end()) {
        ++nxdomains_;
        text = "N " + std::to_string(txn) + " " + domain;
    } else {
        text = "A " + std::to_string(txn) + " " + domain + " " + it->second.str() + " " +
               std::to_string(ttl_s_);
    }
    answer.payload = bytes_from_string(text);
    answer.size_bytes = kUdpHeaderBytes + static_cast<std::uint32_t>(answer.payload.size());
    sim.send_packet(answer, id_);
}

void DnsNode::on_control(Sim& sim, const ControlData& c) {
    if (const auto* remap = std::get_if<DnsRemapCmd>(&c)) {
        zone_[remap->domain] = remap->to;
        return;
    }
    Node::on_control(sim, c);
}

// ---------------------------------------------------------------- CncNode

CncNode::CncNode(World& world, DeviceId id) : Node(world, id) {}

void CncNode::on_packet(Sim& sim, const Packet& pkt) {
    if (pkt.transport != Transport::Tcp || pkt.dst_port != world_.config().cnc_port) return;
    if ((pkt.tcp_flags & tcpflag::Syn) && !(pkt.tcp_flags & tcpflag::Ack)) {
        Packet synack = reply_to(pkt, tcpflag::Syn | tcpflag::Ack, pkt.tag);
        synack.size_bytes = kTcpHeaderBytes;
        sim.send_packet(synack, id_);
        return;
    }
    const std::string text = string_from_bytes(pkt.payload);
    if (text == "REG") {
        auto& row = registered_[pkt.src_addr];
        if (row.registered_at == 0 && row.last_seen == 0) row.registered_at = sim.now();
        row.addr = pkt.src_addr;
        row.last_seen = sim.now();
        sim.send_packet(data_reply(pkt, PacketTag::CncCommand, bytes_from_string("ROK")), id_);
        return;
    }
    if (text == "PING") {
        const auto it = registered_.find(pkt.src_addr);
        if (it == registered_.end()) return; // deregistered bots get silence
        it->second.last_seen = sim.now();
        sim.send_packet(data_reply(pkt, PacketTag::CncKeepAlive, bytes_from_string("PONG")), id_);
        return;
    }
}

void CncNode::on_timer(Sim& sim, const TimerData& t) {
    if (t.code != TimerCode::CncAudit) return;
    const SimTime interval = world_.config().keepalive_interval_us;
    const SimTime cutoff = 3 * interval;
    for (auto it = registered_.begin(); it != registered_.end();) {
        if (sim.now() - it->second.last_seen > cutoff) {
            it = registered_.erase(it);
            ++deregistrations_;
        } else {
            ++it;
        }
    }
    sim.schedule_timer(sim.now() + interval, id_, {TimerCode::CncAudit, 0, 0});
}

void CncNode::on_control(Sim& sim, const ControlData& c) {
    if (const auto* start = std::get_if<StartAttackCmd>(&c)) {
        dispatch_attack(sim, start->account, start->cmd);
        return;
    }
    // going offline discards the pending audit tick, so a revival has to
    // restart the chain or stale bots would never be swept again
    const auto* set = std::get_if<SetOnlineCmd>(&c);
    const bool revived = set && set->online && !sim.online(id_) &&
                         (set->device == kNoEntity || set->device == id_);
    Node::on_control(sim, c);
    if (revived)
        sim.schedule_timer(sim.now() + world_.config().keepalive_interval_us, id_,
                           {TimerCode::CncAudit, 0, 0});
}

void CncNode::dispatch_attack(Sim& sim, const std::string& account, const AttackCommand& cmd) {
    const auto& cfg = world_.config();
    const std::string target = cmd.target_addr.str();
    if (std::find(cfg.cnc_whitelist.begin(), cfg.cnc_whitelist.end(), target) !=
        cfg.cnc_whitelist.end()) {
        ++rejected_commands_;
        return;
    }

    std::size_t want = registered_.size();
    for (const auto& a : cfg.accounts)
        if (a.name == account && a.max_bots >= 0)
            want = std::min(want, static_cast<std::size_t>(a.max_bots));
    if (cmd.bot_count > 0) want = std::min(want, static_cast<std::size_t>(cmd.bot_count));
    if (want == 0) {
        ++rejected_commands_; // no bots to carry the command
        return;
    }

    std::ostringstream text;
    text << "CMD " << attack_type_name(cmd.attack) << " " << target << " " << cmd.target_port
         << " " << cmd.duration_s << " " << cmd.rate_pps_per_bot;

    int dispatched = 0;
    for (const auto& [addr, row] : registered_) {
        if (static_cast<std::size_t>(dispatched) >= want) break;
        Packet p;
        p.src_addr = addr_;
        p.src_port = cfg.cnc_port;
        p.dst_addr = addr;
        p.dst_port = kBotCncPort;
        p.transport = Transport::Tcp;
        p.tcp_flags = tcpflag::Psh | tcpflag::Ack;
        p.tag = PacketTag::CncCommand;
        p.payload = bytes_from_string(text.str());
        p.size_bytes = kTcpHeaderBytes + static_cast<std::uint32_t>(p.payload.size());
        sim.send_packet(p, id_);
        ++dispatched;
    }
    history_.push_back({sim.now(), account, cmd, dispatched});
}

// ---------------------------------------------------------------- ScanListenNode

ScanListenNode::ScanListenNode(World& world, DeviceId id) : Node(world, id) {}

void ScanListenNode::on_packet(Sim& sim, const Packet& pkt) {
    if (pkt.transport != Transport::Udp || pkt.dst_port != world_.config().report_port) return;
    std::istringstream in(string_from_bytes(pkt.payload));
    std::string verb, addr_s, user_hex, pass_hex;
    int port = 0;
    in >> verb >> addr_s >> port >> user_hex >> pass_hex;
    if (verb != "RPT" || in.fail()) return;
    const auto victim = Address::parse(addr_s);
    const auto user = bytes_from_hex(user_hex);
    const auto pass = bytes_from_hex(pass_hex);
    if (!victim || !user || !pass || port < 0 || port > 65535) return;
    ++reports_;
    world_.forward_report(sim, *victim, static_cast<std::uint16_t>(port),
                          {string_from_bytes(*user), string_from_bytes(*pass)});
}

// ---------------------------------------------------------------- LoaderNode

const char* loader_job_state_name(LoaderJobState s) {
    switch (s) {
    case LoaderJobState::Pending: return "pending";
    case LoaderJobState::LoggingIn: return "logging_in";
    case LoaderJobState::Downloading: return "downloading";
    case LoaderJobState::Done: return "done";
    case LoaderJobState::Failed: return "failed";
    }
    return "?";
}

LoaderNode::LoaderNode(World& world, DeviceId id) : Node(world, id) {}

void LoaderNode::enqueue(Sim& sim, Address victim, std::uint16_t port, const Credentials& creds) {
    const std::uint64_t key = flow_key(victim, port);
    const auto it = jobs_.find(key);
    if (it != jobs_.end()) {
        const bool retryable =
            it->second.state == LoaderJobState::Failed && world_.config().retry_failed_loads;
        if (!retryable) {
            ++duplicates_ignored_;
            return;
        }
        port_to_job_.erase(it->second.local_port);
        jobs_.erase(it);
    }

    LoaderJob& job = jobs_[key];
    job.victim = victim;
    job.port = port;
    job.creds = creds;
    job.state = LoaderJobState::LoggingIn;
    job.started_at = sim.now();
    job.local_port = next_port_++;
    port_to_job_[job.local_port] = key;
    job.login = std::make_unique<PacketLoginDriver>(
        world_.client_script(), CredentialList{{creds}}, addr_, job.local_port, victim, port,
        world_.config().max_attempts_per_connection, world_.config().prompt_byte_budget);

    sim.send_packet(job.login->syn_packet(PacketTag::TelnetData), id_);
    sim.schedule_timer(sim.now() + world_.config().session_timeout_us, id_,
                       {TimerCode::LoaderJobTimeout, key, 0});
}

LoaderJob* LoaderNode::job_by_port(std::uint16_t local_port) {
    const auto it = port_to_job_.find(local_port);
    if (it == port_to_job_.end()) return nullptr;
    const auto jt = jobs_.find(it->second);
    return jt == jobs_.end() ? nullptr : &jt->second;
}

void LoaderNode::drive(Sim& sim, LoaderJob& job, const PacketLoginDriver::Step& step) {
    if (step.reply) sim.send_packet(*step.reply, id_);
    if (!step.done && !job.login->finished()) return;
    if (job.login->outcome().kind == LoginOutcome::Kind::Success) {
        begin_transfer(sim, job);
    } else {
        job.state = LoaderJobState::Failed;
        job.finished_at = sim.now();
    }
}

void LoaderNode::begin_transfer(Sim& sim, LoaderJob& job) {
    const auto& cfg = world_.config();
    job.state = LoaderJobState::Downloading;
    const std::uint32_t segments =
        (cfg.binary_bytes + cfg.segment_bytes - 1) / cfg.segment_bytes;
    const SimTime interval = std::max<SimTime>(cfg.download_duration_us / segments, 1);
    const std::uint64_t key = flow_key(job.victim, job.port);
    for (std::uint32_t k = 0; k < segments; ++k)
        sim.schedule_timer(sim.now() + static_cast<SimTime>(k) * interval, id_,
                           {TimerCode::LoaderSegment, key, k});
    sim.schedule_timer(sim.now() + cfg.download_duration_us + cfg.session_timeout_us, id_,
                       {TimerCode::LoaderJobTimeout, key, 1});
}

void LoaderNode::on_packet(Sim& sim, const Packet& pkt) {
    if (pkt.transport != Transport::Tcp || pkt.src_port != world_.config().telnet_port) return;
    LoaderJob* job = job_by_port(pkt.dst_port);
    if (!job || pkt.src_addr != job->victim) return;

    if (job->state == LoaderJobState::Downloading) {
        if (string_from_bytes(pkt.payload) == "DONE") {
            job->state = LoaderJobState::Done;
            job->finished_at = sim.now();
        }
        return;
    }
    if (job->state != LoaderJobState::LoggingIn) return;

    if (pkt.tcp_flags & tcpflag::Rst) {
        job->login->mark_unreachable();
        job->state = LoaderJobState::Failed;
        job->finished_at = sim.now();
        return;
    }
    if ((pkt.tcp_flags & tcpflag::Syn) && (pkt.tcp_flags & tcpflag::Ack)) {
        drive(sim, *job, job->login->on_syn_ack());
        return;
    }
    if (pkt.tcp_flags & tcpflag::Fin) {
        drive(sim, *job, job->login->on_fin());
        return;
    }
    if (!pkt.payload.empty()) drive(sim, *job, job->login->on_data(pkt.payload));
}

void LoaderNode::on_timer(Sim& sim, const TimerData& t) {
    const auto it = jobs_.find(t.a);
    if (it == jobs_.end()) return;
    LoaderJob& job = it->second;

    if (t.code == TimerCode::LoaderSegment) {
        if (job.state != LoaderJobState::Downloading) return;
        const auto& cfg = world_.config();
        const std::uint32_t remaining = cfg.binary_bytes - job.segments_sent * cfg.segment_bytes;
        Packet p;
        p.src_addr = addr_;
        p.src_port = job.local_port;
        p.dst_addr = job.victim;
        p.dst_port = job.port;
        p.transport = Transport::Tcp;
        p.tcp_flags = tcpflag::Psh | tcpflag::Ack;
        p.tag = PacketTag::LoaderData;
        p.size_bytes = kTcpHeaderBytes + std::min(cfg.segment_bytes, remaining);
        sim.send_packet(p, id_);
        ++job.segments_sent;
        return;
    }
    if (t.code == TimerCode::LoaderJobTimeout) {
        if (t.b == 0 && job.state == LoaderJobState::LoggingIn) {
            job.login->mark_unreachable();
            job.state = LoaderJobState::Failed;
            job.finished_at = sim.now();
        }
        if (t.b == 1 && job.state == LoaderJobState::Downloading) {
            job.state = LoaderJobState::Failed;
            job.finished_at = sim.now();
        }
    }
}

// ---------------------------------------------------------------- VictimNode

VictimNode::VictimNode(World& world, DeviceId id, double capacity_pps, std::uint32_t queue_len,
                       std::uint16_t service_port)
    : Node(world, id), service_us_(gap_us_from_pps(capacity_pps)), queue_len_(queue_len),
      service_port_(service_port) {}

bool VictimNode::queue_applies(const Packet& pkt) const {
    if (pkt.transport == Transport::Gre) return true;
    return pkt.dst_port == service_port_ &&
           (pkt.transport == Transport::Udp || pkt.transport == Transport::Tcp);
}

bool VictimNode::admit(Sim& sim, const Packet& pkt) {
    if (!queue_applies(pkt)) return true;
    const SimTime backlog = next_free_ > sim.now() ? next_free_ - sim.now() : 0;
    if (backlog >= static_cast<SimTime>(queue_len_) * service_us_) {
        ++dropped_;
        return false;
    }
    const SimTime serve_t = std::max(next_free_, sim.now()) + service_us_;
    next_free_ = serve_t;
    pending_serve_t_ = serve_t;
    ++served_;
    return true;
}

void VictimNode::on_packet(Sim& sim, const Packet& pkt) {
    if (!queue_applies(pkt)) return;
    const SimTime serve_t = pending_serve_t_;
    if (pkt.tag != PacketTag::LegitRequest) return; // floods are absorbed, never answered

    Packet response;
    if (pkt.transport == Transport::Udp) {
        response = reply_to(pkt, 0, PacketTag::LegitResponse);
        response.size_bytes = pkt.size_bytes;
        response.payload = pkt.payload;
    } else if ((pkt.tcp_flags & tcpflag::Syn) && !(pkt.tcp_flags & tcpflag::Ack)) {
        response = reply_to(pkt, tcpflag::Syn | tcpflag::Ack, PacketTag::LegitResponse);
        response.size_bytes = kTcpHeaderBytes;
    } else if (!pkt.payload.empty()) {
        response = data_reply(pkt, PacketTag::LegitResponse, pkt.payload);
    } else {
        return; // bare ACKs need no echo
    }
    sim.schedule_control(serve_t, id_, InjectPacketCmd{response});
}

void VictimNode::on_control(Sim& sim, const ControlData& c) { Node::on_control(sim, c); }

// ---------------------------------------------------------------- UdpClientNode

UdpClientNode::UdpClientNode(World& world, DeviceId id, const ClientTrafficSpec& spec)
    : Node(world, id), spec_(spec),
      gap_rng_(world.sim().make_stream("client-traffic", id)) {}

SimTime UdpClientNode::next_gap() {
    // memoryless request gaps: the client samples the victim queue without
    // phase bias, so its share under load tracks the fair-share proportion
    const double gap = gap_rng_.exponential(1.0 / static_cast<double>(spec_.period_us));
    return std::max<SimTime>(1, std::llround(gap));
}

void UdpClientNode::on_timer(Sim& sim, const TimerData& t) {
    if (t.code == TimerCode::ClientRequestTick) {
        VictimNode* victim = world_.victim();
        if (victim) {
            const std::uint64_t sid = sim.next_session_id();
            Packet p;
            p.src_addr = addr_;
            p.src_port = port_;
            p.dst_addr = victim->addr();
            p.dst_port = world_.config().victim_port;
            p.transport = Transport::Udp;
            p.tag = PacketTag::LegitRequest;
            p.size_bytes = kUdpHeaderBytes + spec_.payload_bytes;
            p.session_id = sid;
            sim.send_packet(p, id_);
            ++stats_.sent;
            outstanding_[sid] = sim.now();
            sim.schedule_timer(sim.now() + spec_.timeout_us, id_, {TimerCode::ClientRto, sid, 0});
        }
        sim.schedule_timer(sim.now() + next_gap(), id_, {TimerCode::ClientRequestTick, 0, 0});
        return;
    }
    if (t.code == TimerCode::ClientRto) {
        if (outstanding_.erase(t.a) > 0) ++stats_.timed_out;
    }
}

void UdpClientNode::on_packet(Sim&, const Packet& pkt) {
    if (pkt.transport != Transport::Udp || pkt.tag != PacketTag::LegitResponse) return;
    if (outstanding_.erase(pkt.session_id) > 0) ++stats_.succeeded;
}

// ---------------------------------------------------------------- TcpClientNode

TcpClientNode::TcpClientNode(World& world, DeviceId id, const ClientTrafficSpec& spec)
    : Node(world, id), gap_rng_(world.sim().make_stream("client-traffic", id)), spec_(spec) {}

SimTime TcpClientNode::next_gap() {
    const double jittered = static_cast<double>(spec_.period_us) * gap_rng_.uniform(0.5, 1.5);
    return std::max<SimTime>(1, std::llround(jittered));
}

void TcpClientNode::start_handshake(Sim& sim) {
    VictimNode* victim = world_.victim();
    if (!victim) return;
    handshake_pending_ = true;
    Packet syn;
    syn.src_addr = addr_;
    syn.src_port = port_;
    syn.dst_addr = victim->addr();
    syn.dst_port = world_.config().victim_port;
    syn.transport = Transport::Tcp;
    syn.tcp_flags = tcpflag::Syn;
    syn.tag = PacketTag::LegitRequest;
    syn.session_id = sim.next_session_id();
    sim.send_packet(syn, id_);
    sim.schedule_timer(sim.now() + spec_.timeout_us, id_,
                       {TimerCode::ClientHandshakeRetry, session_gen_, 0});
}

void TcpClientNode::send_segment(Sim& sim, std::uint64_t seq, bool retransmit) {
    VictimNode* victim = world_.victim();
    if (!victim) return;
    Packet p;
    p.src_addr = addr_;
    p.src_port = port_;
    p.dst_addr = victim->addr();
    p.dst_port = world_.config().victim_port;
    p.transport = Transport::Tcp;
    p.tcp_flags = tcpflag::Psh | tcpflag::Ack;
    p.tag = PacketTag::LegitRequest;
    p.size_bytes = kTcpHeaderBytes + spec_.segment_bytes;
    p.payload = bytes_from_string("SEG " + std::to_string(seq));
    sim.send_packet(p, id_);
    ++stats_.sent;
    if (retransmit) {
        ++stats_.retransmissions;
        stats_.retransmission_times.push_back(sim.now());
    } else {
        unacked_[seq] = 0;
    }
    sim.schedule_timer(sim.now() + spec_.timeout_us, id_, {TimerCode::ClientRto, seq, session_gen_});
}

void TcpClientNode::reset_session(Sim& sim) {
    VictimNode* victim = world_.victim();
    ++stats_.resets;
    if (victim) {
        Packet rst;
        rst.src_addr = addr_;
        rst.src_port = port_;
        rst.dst_addr = victim->addr();
        rst.dst_port = world_.config().victim_port;
        rst.transport = Transport::Tcp;
        rst.tcp_flags = tcpflag::Rst;
        rst.tag = PacketTag::LegitRequest;
        sim.send_packet(rst, id_);
    }
    established_ = false;
    handshake_pending_ = true;
    unacked_.clear();
    ooo_run_ = 0;
    ++session_gen_;
    sim.schedule_timer(sim.now() + spec_.timeout_us, id_,
                       {TimerCode::ClientHandshakeRetry, session_gen_, 0});
}

void TcpClientNode::on_timer(Sim& sim, const TimerData& t) {
    switch (t.code) {
    case TimerCode::ClientRequestTick:
        if (established_) {
            send_segment(sim, next_seq_++, false);
        } else if (!handshake_pending_) {
            start_handshake(sim);
        }
        sim.schedule_timer(sim.now() + next_gap(), id_, {TimerCode::ClientRequestTick, 0, 0});
        return;
    case TimerCode::ClientHandshakeRetry:
        if (t.a != session_gen_ || established_ || !handshake_pending_) return;
        handshake_pending_ = false;
        start_handshake(sim);
        return;
    case TimerCode::ClientRto: {
        if (t.b != session_gen_ || !established_) return;
        const auto it = unacked_.find(t.a);
        if (it == unacked_.end()) return;
        if (++it->second > spec_.max_retransmits) {
            reset_session(sim);
            return;
        }
        send_segment(sim, t.a, true);
        return;
    }
    default:
        return;
    }
}

void TcpClientNode::on_packet(Sim& sim, const Packet& pkt) {
    if (pkt.transport != Transport::Tcp || pkt.tag != PacketTag::LegitResponse) return;
    if ((pkt.tcp_flags & tcpflag::Syn) && (pkt.tcp_flags & tcpflag::Ack)) {
        if (established_) return;
        established_ = true;
        handshake_pending_ = false;
        Packet ack = reply_to(pkt, tcpflag::Ack, PacketTag::LegitRequest);
        ack.size_bytes = kTcpHeaderBytes;
        ack.session_id = 0;
        sim.send_packet(ack, id_);
        return;
    }
    if (pkt.payload.empty()) return;
    std::istringstream in(string_from_bytes(pkt.payload));
    std::string word;
    std::uint64_t seq = 0;
    in >> word >> seq;
    if (word != "SEG" || in.fail()) return;

    const bool in_order = !unacked_.empty() && unacked_.begin()->first == seq;
    if (unacked_.erase(seq) == 0) return; // echo of a segment already resolved
    if (in_order) {
        ooo_run_ = 0;
        expected_echo_ = unacked_.empty() ? next_seq_ : unacked_.begin()->first;
        return;
    }
    ++ooo_run_;
    if (ooo_run_ >= spec_.dup_ack_threshold) {
        ++stats_.dup_acks;
        stats_.dup_ack_times.push_back(sim.now());
        Packet dup = reply_to(pkt, tcpflag::Ack, PacketTag::LegitRequest);
        dup.size_bytes = kTcpHeaderBytes;
        dup.session_id = 0;
        sim.send_packet(dup, id_);
    }
}

// ---------------------------------------------------------------- IotNode

IotNode::IotNode(World& world, DeviceId id) : Node(world, id) {}

void IotNode::activate_bot(Sim& sim) {
    if (bot_) return;
    // the implant kills the telnet listener so nobody steals the device
    world_.topo().device(id_).open_ports.erase(world_.config().telnet_port);
    bot_ = std::make_unique<BotAgent>(world_, id_, addr_);
    sim.schedule_timer(sim.now(), id_, {TimerCode::BotBoot, 0, 0});
}

bool IotNode::telnet_packet(Sim& sim, const Packet& pkt) {
    const auto& cfg = world_.config();
    if (pkt.transport != Transport::Tcp || pkt.dst_port != cfg.telnet_port) return false;
    const std::uint64_t key = flow_key(pkt.src_addr, pkt.src_port);

    if ((pkt.tcp_flags & tcpflag::Syn) && !(pkt.tcp_flags & tcpflag::Ack)) {
        const Device& dev = world_.topo().device(id_);
        ServerSession& session = sessions_[key];
        session.peer_port = pkt.src_port;
        session.logged_in = false;
        session.bytes_received = 0;
        session.fsm = std::make_unique<TelnetServerFsm>(world_.server_script_for(id_),
                                                        dev.credentials,
                                                        cfg.max_attempts_per_connection);
        Packet synack = reply_to(pkt, tcpflag::Syn | tcpflag::Ack, pkt.tag);
        synack.size_bytes = kTcpHeaderBytes;
        sim.send_packet(synack, id_);
        return true;
    }

    const auto it = sessions_.find(key);
    if (it == sessions_.end()) return false;
    ServerSession& session = it->second;

    if (pkt.tcp_flags & tcpflag::Rst) {
        sessions_.erase(it);
        return true;
    }

    if (session.logged_in) {
        // post-login bytes are the loader's binary transfer
        if (pkt.tag == PacketTag::LoaderData && pkt.size_bytes > kTcpHeaderBytes) {
            session.bytes_received += pkt.size_bytes - kTcpHeaderBytes;
            if (session.bytes_received >= world_.config().binary_bytes) {
                Packet done = data_reply(pkt, PacketTag::LoaderData, bytes_from_string("DONE"));
                sim.send_packet(done, id_);
                Device& dev = world_.topo().device(id_);
                if (dev.infection != InfectionState::Infected) {
                    dev.infection = InfectionState::Infected;
                    world_.record_infection(id_, sim.now(), false);
                    activate_bot(sim);
                }
            }
        }
        return true;
    }

    if (pkt.payload.empty() && !(pkt.tcp_flags & tcpflag::Psh)) {
        // bare handshake ACK: the service speaks first
        if ((pkt.tcp_flags & tcpflag::Ack) && session.fsm) {
            const Bytes greeting = session.fsm->on_open();
            if (!greeting.empty())
                sim.send_packet(data_reply(pkt, PacketTag::TelnetData, greeting), id_);
        }
        return true;
    }

    const ServerOutput out = session.fsm->consume(pkt.payload);
    if (out.login_success) session.logged_in = true;
    if (!out.out.empty())
        sim.send_packet(data_reply(pkt, PacketTag::TelnetData, out.out), id_);
    if (out.close_after) {
        Packet fin = reply_to(pkt, tcpflag::Fin | tcpflag::Ack, PacketTag::TelnetData);
        fin.size_bytes = kTcpHeaderBytes;
        sim.send_packet(fin, id_);
        sessions_.erase(key);
    }
    return true;
}

void IotNode::on_packet(Sim& sim, const Packet& pkt) {
    if (bot_ && bot_->on_packet(sim, pkt)) return;
    telnet_packet(sim, pkt);
}

void IotNode::on_timer(Sim& sim, const TimerData& t) {
    if (bot_ && t.code >= TimerCode::BotBoot && t.code <= TimerCode::BotReportTimeout)
        bot_->on_timer(sim, t);
}

void IotNode::on_control(Sim& sim, const ControlData& c) { Node::on_control(sim, c); }

// ---------------------------------------------------------------- World

World::World(ScenarioConfig cfg)
    : cfg_(std::move(cfg)), topo_(build_topology(cfg_.topology)),
      sim_(std::make_unique<Sim>(cfg_.root_seed, cfg_.topology.contained_block)) {
    sim_->set_fabric(&topo_);
    scripts_ = cfg_.scripts;
    if (!scripts_.count("default")) scripts_["default"] = default_negotiation_script();

    // service ports the role implies
    std::map<std::string, Address> zone;
    for (const auto& rec : cfg_.dns_records) {
        const auto dev = topo_.find_by_name(rec.device);
        if (dev) zone[rec.domain] = topo_.device(*dev).addr;
    }

    std::size_t client_index = 0;
    for (auto& dev : topo_.devices()) {
        std::unique_ptr<Node> node;
        switch (dev.role) {
        case DeviceRole::DnsServer:
            dev.open_ports.insert(53);
            node = std::make_unique<DnsNode>(*this, dev.id, zone, cfg_.dns_ttl_s);
            break;
        case DeviceRole::CncServer:
            dev.open_ports.insert(cfg_.cnc_port);
            node = std::make_unique<CncNode>(*this, dev.id);
            break;
        case DeviceRole::ScanListenServer:
            dev.open_ports.insert(cfg_.report_port);
            node = std::make_unique<ScanListenNode>(*this, dev.id);
            break;
        case DeviceRole::LoaderServer:
            node = std::make_unique<LoaderNode>(*this, dev.id);
            break;
        case DeviceRole::VictimServer:
            dev.open_ports.insert(cfg_.victim_port);
            node = std::make_unique<VictimNode>(*this, dev.id, cfg_.victim_capacity_pps,
                                                cfg_.victim_queue_len, cfg_.victim_port);
            break;
        case DeviceRole::IoTDevice:
            node = std::make_unique<IotNode>(*this, dev.id);
            break;
        case DeviceRole::LegitClient: {
            const std::string kind = client_index < cfg_.topology.clients.size()
                                         ? cfg_.topology.clients[client_index].kind
                                         : "udp";
            ++client_index;
            if (kind == "tcp")
                node = std::make_unique<TcpClientNode>(*this, dev.id, cfg_.client_traffic);
            else
                node = std::make_unique<UdpClientNode>(*this, dev.id, cfg_.client_traffic);
            break;
        }
        default:
            node = std::make_unique<Node>(*this, dev.id);
            break;
        }

        const EntityId handle = sim_->add_entity(node.get());
        if (handle != dev.id)
            throw SimError("entity id drifted from device id: " + dev.name);

        switch (dev.role) {
        case DeviceRole::DnsServer:
            if (!dns_node_) {
                dns_node_ = static_cast<DnsNode*>(node.get());
                dns_addr_ = dev.addr;
            }
            break;
        case DeviceRole::CncServer:
            cnc_nodes_.push_back(static_cast<CncNode*>(node.get()));
            break;
        case DeviceRole::ScanListenServer:
            if (!scanlisten_node_) scanlisten_node_ = static_cast<ScanListenNode*>(node.get());
            break;
        case DeviceRole::LoaderServer:
            if (!loader_node_) loader_node_ = static_cast<LoaderNode*>(node.get());
            break;
        case DeviceRole::VictimServer:
            if (!victim_node_) victim_node_ = static_cast<VictimNode*>(node.get());
            break;
        case DeviceRole::IoTDevice:
            iot_nodes_.push_back(static_cast<IotNode*>(node.get()));
            break;
        case DeviceRole::LegitClient:
            client_nodes_.push_back(node.get());
            break;
        default:
            break;
        }
        nodes_.push_back(std::move(node));
    }
}

const NegotiationScript& World::client_script() const {
    return scripts_.at(cfg_.client_script);
}

const NegotiationScript& World::server_script_for(DeviceId id) const {
    const auto it = cfg_.device_scripts.find(topo_.device(id).name);
    if (it != cfg_.device_scripts.end()) return scripts_.at(it->second);
    return scripts_.at("default");
}

std::vector<const BotAgent*> World::bots() const {
    std::vector<const BotAgent*> out;
    for (const IotNode* node : iot_nodes_)
        if (node->bot()) out.push_back(node->bot());
    return out;
}

void World::record_infection(DeviceId device, SimTime at, bool seeded) {
    infections_.push_back({device, at, seeded});
}

void World::forward_report(Sim& sim, Address victim, std::uint16_t port, const Credentials& creds) {
    if (loader_node_) loader_node_->enqueue(sim, victim, port, creds);
}

void World::start() {
    for (const auto& name : cfg_.seed_devices) {
        const auto id = topo_.find_by_name(name);
        if (!id) continue; // validate_scenario already rejected this
        Device& dev = topo_.device(*id);
        dev.infection = InfectionState::Infected;
        record_infection(*id, 0, true);
        static_cast<IotNode*>(nodes_.at(*id).get())->activate_bot(*sim_);
    }

    for (Node* client : client_nodes_)
        sim_->schedule_timer(0, client->id(), {TimerCode::ClientRequestTick, 0, 0});

    for (CncNode* cnc : cnc_nodes_)
        sim_->schedule_timer(cfg_.keepalive_interval_us, cnc->id(), {TimerCode::CncAudit, 0, 0});

    if (!cnc_nodes_.empty()) {
        for (const auto& row : cfg_.attacks) {
            StartAttackCmd cmd{row.account, row.command};
            if (!row.target_device.empty()) {
                const auto dev = topo_.find_by_name(row.target_device);
                if (dev) cmd.cmd.target_addr = topo_.device(*dev).addr;
            }
            sim_->schedule_control(row.at_us, cnc_nodes_.front()->id(), ControlData{cmd});
        }
    }

    for (const auto& ev : cfg_.events) {
        if (ev.kind == "dns_remap") {
            const auto dev = topo_.find_by_name(ev.device);
            if (dev && dns_node_)
                sim_->schedule_control(ev.at_us, dns_node_->id(),
                                       ControlData{DnsRemapCmd{ev.domain, topo_.device(*dev).addr}});
        } else if (ev.kind == "set_online" || ev.kind == "set_offline") {
            const auto dev = topo_.find_by_name(ev.device);
            if (dev)
                sim_->schedule_control(ev.at_us, *dev,
                                       ControlData{SetOnlineCmd{*dev, ev.kind == "set_online"}});
        } else if (ev.kind == "inject_rogue") {
            const auto addr = Address::parse(ev.address);
            if (addr && dns_node_) {
                Packet rogue;
                rogue.src_addr = dns_node_->addr();
                rogue.src_port = 4444;
                rogue.dst_addr = *addr;
                rogue.dst_port = 4444;
                rogue.transport = Transport::Udp;
                rogue.tag = PacketTag::AttackFlood;
                rogue.size_bytes = kUdpHeaderBytes;
                sim_->schedule_control(ev.at_us, dns_node_->id(),
                                       ControlData{InjectPacketCmd{rogue}});
            }
        }
    }
}

RunStats World::run_to_end() {
    sim_->run_until(cfg_.duration_us);
    sim_->drain_in_flight();
    return sim_->stats();
}

} // namespace botsim
