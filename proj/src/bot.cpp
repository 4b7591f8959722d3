#include "botsim/bot.hpp"

#include <cmath>
#include <sstream>

#include "botsim/engine.hpp"
#include "botsim/world.hpp"

namespace botsim {

namespace {

std::uint64_t session_key(Address target, std::uint16_t port) {
    return (std::uint64_t(target.v4) << 16) | port;
}

Packet text_packet(Address src, std::uint16_t sport, Address dst, std::uint16_t dport,
                   Transport transport, PacketTag tag, const std::string& text) {
    Packet p;
    p.src_addr = src;
    p.src_port = sport;
    p.dst_addr = dst;
    p.dst_port = dport;
    p.transport = transport;
    p.tag = tag;
    p.payload = bytes_from_string(text);
    if (transport == Transport::Tcp) {
        p.tcp_flags = tcpflag::Psh | tcpflag::Ack;
        p.size_bytes = kTcpHeaderBytes + static_cast<std::uint32_t>(p.payload.size());
    } else {
        p.size_bytes = kUdpHeaderBytes + static_cast<std::uint32_t>(p.payload.size());
    }
    return p;
}

} // namespace

const char* bot_state_name(BotState s) {
    switch (s) {
    case BotState::Boot: return "boot";
    case BotState::ResolvingCnc: return "resolving_cnc";
    case BotState::ConnectingCnc: return "connecting_cnc";
    case BotState::Scanning: return "scanning";
    case BotState::BruteForcing: return "brute_forcing";
    case BotState::Reporting: return "reporting";
    case BotState::Attacking: return "attacking";
    }
    return "?";
}

BotAgent::BotAgent(World& world, DeviceId device, Address self_addr)
    : world_(world), device_(device), self_(self_addr),
      backoff_s_(world.config().dns_backoff_base_s), next_port_(kBotScanPortBase),
      scan_gap_rng_(world.sim().make_stream("bot-scan-gap", device)),
      scan_target_rng_(world.sim().make_stream("bot-scan-target", device)),
      attack_rng_(world.sim().make_stream("bot-attack", device)) {}

void BotAgent::boot(Sim& sim) {
    state_ = BotState::ResolvingCnc;
    resolve(sim, world_.config().cnc_domain);
}

std::optional<Address> BotAgent::cached(Sim& sim, const std::string& domain) {
    const auto it = dns_cache_.find(domain);
    if (it == dns_cache_.end()) return {};
    if (it->second.expires_at <= sim.now()) {
        dns_cache_.erase(it);
        return {};
    }
    return it->second.addr;
}

void BotAgent::resolve(Sim& sim, const std::string& domain) {
    if (const auto hit = cached(sim, domain)) {
        on_dns_answer(sim, text_packet(world_.dns_addr(), 53, self_, kBotDnsPort, Transport::Udp,
                                       PacketTag::DnsAnswer,
                                       "A 0 " + domain + " " + hit->str() + " 0"));
        return;
    }
    const std::uint32_t txn = ++dns_txn_;
    pending_queries_[txn] = domain;
    sim.send_packet(text_packet(self_, kBotDnsPort, world_.dns_addr(), 53, Transport::Udp,
                                PacketTag::DnsQuery, "Q " + std::to_string(txn) + " " + domain),
                    device_);
    sim.schedule_timer(sim.now() + us_from_seconds(backoff_s_), device_,
                       {TimerCode::BotResolveRetry, txn, 0});
}

void BotAgent::on_dns_answer(Sim& sim, const Packet& pkt) {
    std::istringstream in(string_from_bytes(pkt.payload));
    std::string verdict, domain, addr_s;
    std::uint32_t txn = 0, ttl = 0;
    in >> verdict >> txn >> domain;
    pending_queries_.erase(txn);
    if (verdict == "N") return; // the retry timer re-queries with backoff
    in >> addr_s >> ttl;
    const auto addr = Address::parse(addr_s);
    if (!addr) return;
    if (ttl > 0)
        dns_cache_[domain] = {*addr, sim.now() + SimTime(ttl) * kUsPerSecond};
    backoff_s_ = world_.config().dns_backoff_base_s;

    if (domain == world_.config().cnc_domain && !registered_ &&
        (state_ == BotState::ResolvingCnc || state_ == BotState::ConnectingCnc)) {
        cnc_addr_ = *addr;
        connect_cnc(sim);
    }
    if (domain == world_.config().report_domain && !pending_reports_.empty()) {
        auto queued = std::move(pending_reports_);
        pending_reports_.clear();
        for (const auto& r : queued) send_report(sim, r.victim, r.port, r.creds);
    }
}

void BotAgent::connect_cnc(Sim& sim) {
    state_ = BotState::ConnectingCnc;
    const auto& cfg = world_.config();
    Packet syn;
    syn.src_addr = self_;
    syn.src_port = kBotCncPort;
    syn.dst_addr = cnc_addr_;
    syn.dst_port = cfg.cnc_port;
    syn.transport = Transport::Tcp;
    syn.tcp_flags = tcpflag::Syn;
    syn.tag = PacketTag::CncCommand;
    sim.send_packet(syn, device_);
    sim.schedule_timer(sim.now() + cfg.syn_timeout_us, device_,
                       {TimerCode::BotSynTimeout, session_key(cnc_addr_, cfg.cnc_port), 0});
}

void BotAgent::register_with_cnc(Sim& sim) {
    sim.send_packet(text_packet(self_, kBotCncPort, cnc_addr_, world_.config().cnc_port,
                                Transport::Tcp, PacketTag::CncCommand, "REG"),
                    device_);
}

void BotAgent::send_keepalive(Sim& sim) {
    if (!registered_) return;
    const auto& cfg = world_.config();
    if (unanswered_pings_ >= cfg.keepalive_loss_tolerance) {
        cnc_link_lost(sim);
        return;
    }
    sim.send_packet(text_packet(self_, kBotCncPort, cnc_addr_, cfg.cnc_port, Transport::Tcp,
                                PacketTag::CncKeepAlive, "PING"),
                    device_);
    ++unanswered_pings_;
    sim.schedule_timer(sim.now() + cfg.keepalive_interval_us, device_,
                       {TimerCode::BotKeepAliveTick, ka_epoch_, 0});
}

void BotAgent::cnc_link_lost(Sim& sim) {
    registered_ = false;
    unanswered_pings_ = 0;
    ++ka_epoch_;
    cnc_addr_ = Address{};
    state_ = BotState::ResolvingCnc;
    resolve(sim, world_.config().cnc_domain);
}

void BotAgent::start_scanning(Sim& sim) {
    if (scan_ticking_) return;
    scan_ticking_ = true;
    schedule_scan_tick(sim);
}

void BotAgent::schedule_scan_tick(Sim& sim) {
    const double gap_s = scan_gap_rng_.exponential(world_.config().scan_rate_pps);
    auto gap = static_cast<SimTime>(std::llround(gap_s * static_cast<double>(kUsPerSecond)));
    if (gap < 1) gap = 1;
    sim.schedule_timer(sim.now() + gap, device_, {TimerCode::BotScanTick, scan_epoch_, 0});
}

void BotAgent::emit_scan(Sim& sim) {
    const auto& cfg = world_.config();
    Address target = world_.topo().random_scan_target(scan_target_rng_);
    while (target == self_) target = world_.topo().random_scan_target(scan_target_rng_);

    if (next_port_ < kBotScanPortBase || next_port_ >= 60000) next_port_ = kBotScanPortBase;
    const std::uint16_t sport = next_port_++;

    Packet syn;
    syn.src_addr = self_;
    syn.src_port = sport;
    syn.dst_addr = target;
    syn.dst_port = cfg.telnet_port;
    syn.transport = Transport::Tcp;
    syn.tcp_flags = tcpflag::Syn;
    syn.tag = PacketTag::Scan;
    sim.send_packet(syn, device_);
    ++scans_sent_;

    const std::uint64_t key = session_key(target, cfg.telnet_port);
    pending_scans_[key] = sim.now();
    sim.schedule_timer(sim.now() + cfg.syn_timeout_us, device_,
                       {TimerCode::BotSynTimeout, key, static_cast<std::uint64_t>(sim.now())});
}

void BotAgent::begin_brute(Sim& sim, const Packet& syn_ack) {
    pending_scans_.erase(session_key(syn_ack.src_addr, syn_ack.src_port));
    if (brute_) return; // one session at a time; the rest of the fleet can have it
    if (world_.dictionary().entries.empty()) return;

    brute_ = std::make_unique<PacketLoginDriver>(
        world_.client_script(), world_.dictionary(), self_, syn_ack.dst_port, syn_ack.src_addr,
        syn_ack.src_port, world_.config().max_attempts_per_connection,
        world_.config().prompt_byte_budget);
    if (state_ != BotState::Attacking) state_ = BotState::BruteForcing;
    ++brute_epoch_;
    sim.schedule_timer(sim.now() + world_.config().session_timeout_us, device_,
                       {TimerCode::BotSessionTimeout, brute_epoch_, 0});

    const auto step = brute_->on_syn_ack();
    if (step.reply) sim.send_packet(*step.reply, device_);
}

void BotAgent::finish_brute(Sim& sim) {
    if (!brute_) return;
    const LoginOutcome outcome = brute_->outcome();
    const Address victim = brute_->peer();
    const std::uint16_t port = brute_->peer_port();
    brute_.reset();
    desyncs_ += outcome.desyncs;

    if (outcome.kind == LoginOutcome::Kind::Success) {
        ++logins_succeeded_;
        state_ = BotState::Reporting;
        send_report(sim, victim, port, *outcome.credentials);
    }
    state_ = (attack_ && attack_ends_ > sim.now()) ? BotState::Attacking : BotState::Scanning;
}

void BotAgent::send_report(Sim& sim, Address victim, std::uint16_t port, const Credentials& creds) {
    const auto& cfg = world_.config();
    const auto addr = cached(sim, cfg.report_domain);
    if (!addr) {
        pending_reports_.push_back({victim, port, creds});
        // only one resolve in flight per domain
        for (const auto& [txn, domain] : pending_queries_)
            if (domain == cfg.report_domain) return;
        resolve(sim, cfg.report_domain);
        return;
    }
    const std::string text = "RPT " + victim.str() + " " + std::to_string(port) + " " +
                             hex_from_bytes(bytes_from_string(creds.username)) + " " +
                             hex_from_bytes(bytes_from_string(creds.password));
    sim.send_packet(text_packet(self_, kBotReportPort, *addr, cfg.report_port, Transport::Udp,
                                PacketTag::ScanReport, text),
                    device_);
    ++reports_sent_;
}

void BotAgent::start_attack(Sim& sim, const AttackCommand& cmd) {
    attack_ = cmd;
    attack_started_ = sim.now();
    attack_ends_ = sim.now() + us_from_seconds(cmd.duration_s);
    ++attack_epoch_;
    state_ = BotState::Attacking;
    sim.schedule_timer(attack_ends_, device_, {TimerCode::BotAttackEnd, attack_epoch_, 0});

    // each bot starts its emission grid at a random phase; simultaneous
    // commands would otherwise synchronize every bot into lockstep bursts
    const double gap_us = static_cast<double>(kUsPerSecond) / cmd.rate_pps_per_bot;
    attack_phase_ = static_cast<SimTime>(std::llround(attack_rng_.uniform01() * gap_us));
    const double jitter = attack_rng_.uniform(-0.1, 0.1) * gap_us;
    const SimTime t0 = attack_started_ + attack_phase_ + static_cast<SimTime>(std::llround(jitter));
    sim.schedule_timer(std::max(sim.now(), t0), device_, {TimerCode::BotAttackEmit, attack_epoch_, 0});
}

void BotAgent::emit_attack_packet(Sim& sim, std::uint64_t k) {
    if (!attack_) return;
    const AttackCommand& cmd = *attack_;
    const AttackProfile& profile =
        default_attack_profiles()[static_cast<std::size_t>(cmd.attack)];

    Packet p;
    p.src_addr = self_;
    p.src_port = profile.random_src_port
                     ? static_cast<std::uint16_t>(1024 + attack_rng_.uniform_below(65536 - 1024))
                     : 40000;
    p.dst_addr = cmd.target_addr;
    p.dst_port = cmd.target_port != 0 ? cmd.target_port : profile.default_dst_port;
    p.transport = profile.transport;
    p.tcp_flags = profile.tcp_flags;
    p.tag = PacketTag::AttackFlood;
    switch (profile.transport) {
    case Transport::Tcp: p.size_bytes = kTcpHeaderBytes + profile.payload_bytes; break;
    case Transport::Udp: p.size_bytes = kUdpHeaderBytes + profile.payload_bytes; break;
    default: p.size_bytes = 24 + profile.payload_bytes; break; // IP + GRE header
    }
    sim.send_packet(p, device_);
    ++attack_packets_sent_;

    // fixed grid with per-packet jitter, so the mean rate stays exact
    const double gap_us = static_cast<double>(kUsPerSecond) / cmd.rate_pps_per_bot;
    const double grid = static_cast<double>(k + 1) * gap_us;
    const SimTime duration_us = us_from_seconds(cmd.duration_s);
    if (attack_phase_ + static_cast<SimTime>(grid) >= duration_us) return;
    const double jitter = attack_rng_.uniform(-0.1, 0.1) * gap_us;
    const SimTime t = attack_started_ + attack_phase_ + static_cast<SimTime>(grid) +
                      static_cast<SimTime>(std::llround(jitter));
    sim.schedule_timer(std::max(sim.now(), t), device_,
                       {TimerCode::BotAttackEmit, attack_epoch_, k + 1});
}

void BotAgent::end_attack(Sim& sim) {
    attack_.reset();
    ++attack_epoch_;
    state_ = brute_ ? BotState::BruteForcing : BotState::Scanning;
    if (scan_ticking_) {
        ++scan_epoch_; // the old tick chain died while the flood ran
        schedule_scan_tick(sim);
    }
}

void BotAgent::on_timer(Sim& sim, const TimerData& t) {
    switch (t.code) {
    case TimerCode::BotBoot:
        boot(sim);
        return;
    case TimerCode::BotResolveRetry: {
        const auto it = pending_queries_.find(static_cast<std::uint32_t>(t.a));
        if (it == pending_queries_.end()) return;
        const std::string domain = it->second;
        pending_queries_.erase(it);
        backoff_s_ = std::min(backoff_s_ * 2, world_.config().dns_backoff_cap_s);
        resolve(sim, domain);
        return;
    }
    case TimerCode::BotScanTick:
        if (t.a != scan_epoch_) return;
        if (state_ == BotState::Attacking) return; // end_attack restarts the chain
        emit_scan(sim);
        schedule_scan_tick(sim);
        return;
    case TimerCode::BotSynTimeout: {
        if (!registered_ && state_ == BotState::ConnectingCnc &&
            t.a == session_key(cnc_addr_, world_.config().cnc_port)) {
            state_ = BotState::ResolvingCnc;
            resolve(sim, world_.config().cnc_domain);
            return;
        }
        const auto it = pending_scans_.find(t.a);
        if (it != pending_scans_.end() && it->second == static_cast<SimTime>(t.b))
            pending_scans_.erase(it);
        return;
    }
    case TimerCode::BotKeepAliveTick:
        if (t.a != ka_epoch_) return;
        send_keepalive(sim);
        return;
    case TimerCode::BotSessionTimeout:
        if (brute_ && t.a == brute_epoch_) {
            brute_->mark_unreachable();
            finish_brute(sim);
        }
        return;
    case TimerCode::BotAttackEmit:
        if (t.a != attack_epoch_) return;
        emit_attack_packet(sim, t.b);
        return;
    case TimerCode::BotAttackEnd:
        if (t.a != attack_epoch_) return;
        end_attack(sim);
        return;
    default:
        return;
    }
}

bool BotAgent::on_packet(Sim& sim, const Packet& pkt) {
    const auto& cfg = world_.config();

    if (pkt.transport == Transport::Udp && pkt.src_port == 53 && pkt.dst_port == kBotDnsPort &&
        pkt.tag == PacketTag::DnsAnswer) {
        on_dns_answer(sim, pkt);
        return true;
    }

    if (pkt.transport == Transport::Tcp && pkt.src_addr == cnc_addr_ &&
        pkt.src_port == cfg.cnc_port && pkt.dst_port == kBotCncPort) {
        if ((pkt.tcp_flags & tcpflag::Syn) && (pkt.tcp_flags & tcpflag::Ack)) {
            if (state_ == BotState::ConnectingCnc && !registered_) register_with_cnc(sim);
            return true;
        }
        const std::string text = string_from_bytes(pkt.payload);
        if (text == "ROK") {
            if (!registered_) {
                registered_ = true;
                unanswered_pings_ = 0;
                ++ka_epoch_;
                if (state_ == BotState::ConnectingCnc) state_ = BotState::Scanning;
                send_keepalive(sim);
                start_scanning(sim);
            }
            return true;
        }
        if (text == "PONG") {
            unanswered_pings_ = 0;
            return true;
        }
        if (text.rfind("CMD ", 0) == 0) {
            std::istringstream in(text);
            std::string cmd_word, type_name, target;
            int port = 0;
            double duration = 0, rate = 0;
            in >> cmd_word >> type_name >> target >> port >> duration >> rate;
            const auto type = attack_type_from_name(type_name);
            const auto addr = Address::parse(target);
            if (!in.fail() && type && addr && duration > 0 && rate > 0) {
                AttackCommand cmd;
                cmd.attack = *type;
                cmd.target_addr = *addr;
                cmd.target_port = static_cast<std::uint16_t>(port);
                cmd.duration_s = duration;
                cmd.rate_pps_per_bot = rate;
                start_attack(sim, cmd);
            }
            return true;
        }
        return true; // other controller chatter is ours to ignore
    }

    if (pkt.transport == Transport::Tcp && pkt.src_port == cfg.telnet_port) {
        if (brute_ && pkt.src_addr == brute_->peer() && pkt.dst_port == brute_->local_port()) {
            PacketLoginDriver::Step step;
            if (pkt.tcp_flags & tcpflag::Rst) {
                brute_->mark_unreachable();
                finish_brute(sim);
                return true;
            }
            if ((pkt.tcp_flags & tcpflag::Syn) && (pkt.tcp_flags & tcpflag::Ack))
                step = brute_->on_syn_ack();
            else if (pkt.tcp_flags & tcpflag::Fin)
                step = brute_->on_fin();
            else if (!pkt.payload.empty())
                step = brute_->on_data(pkt.payload);
            else
                return true;
            if (step.reply) sim.send_packet(*step.reply, device_);
            if (step.done || brute_->finished()) finish_brute(sim);
            return true;
        }
        const std::uint64_t key = session_key(pkt.src_addr, pkt.src_port);
        const auto it = pending_scans_.find(key);
        if (it != pending_scans_.end()) {
            if ((pkt.tcp_flags & tcpflag::Syn) && (pkt.tcp_flags & tcpflag::Ack)) {
                begin_brute(sim, pkt);
            } else if (pkt.tcp_flags & tcpflag::Rst) {
                pending_scans_.erase(it);
            }
            return true;
        }
        return false;
    }

    return false;
}

} // namespace botsim
