#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "botsim/attack.hpp"
#include "botsim/event.hpp"
#include "botsim/packet.hpp"
#include "botsim/rng.hpp"
#include "botsim/session.hpp"
#include "botsim/time.hpp"

namespace botsim {

class World;
class Sim;

// Well-known bot-side source ports; the controller answers back to them.
inline constexpr std::uint16_t kBotCncPort = 15000;
inline constexpr std::uint16_t kBotReportPort = 15001;
inline constexpr std::uint16_t kBotDnsPort = 15002;
inline constexpr std::uint16_t kBotScanPortBase = 16000;

enum class BotState : std::uint8_t {
    Boot,
    ResolvingCnc,
    ConnectingCnc,
    Scanning,
    BruteForcing,
    Reporting,
    Attacking,
};

const char* bot_state_name(BotState s);

/// Per-domain resolver cache entry.
struct DnsCacheEntry {
    Address addr;
    SimTime expires_at = 0;
};

/// The malware half of an infected device: resolves the controller, keeps
/// the session alive, scans, brute-forces, reports, and floods on command.
/// Owned by the device's node; all I/O goes through World/Sim.
class BotAgent {
public:
    BotAgent(World& world, DeviceId device, Address self_addr);

    void boot(Sim& sim);
    void on_timer(Sim& sim, const TimerData& t);
    /// Returns true when the packet was consumed by bot logic.
    bool on_packet(Sim& sim, const Packet& pkt);

    DeviceId device() const { return device_; }
    BotState state() const { return state_; }
    bool registered() const { return registered_; }
    int scans_sent() const { return scans_sent_; }
    int attack_packets_sent() const { return attack_packets_sent_; }
    std::size_t pending_scan_count() const { return pending_scans_.size(); }
    int reports_sent() const { return reports_sent_; }
    int logins_succeeded() const { return logins_succeeded_; }
    int desyncs() const { return desyncs_; }

private:
    void resolve(Sim& sim, const std::string& domain);
    void on_dns_answer(Sim& sim, const Packet& pkt);
    std::optional<Address> cached(Sim& sim, const std::string& domain);
    void connect_cnc(Sim& sim);
    void register_with_cnc(Sim& sim);
    void send_keepalive(Sim& sim);
    void cnc_link_lost(Sim& sim);
    void start_scanning(Sim& sim);
    void schedule_scan_tick(Sim& sim);
    void emit_scan(Sim& sim);
    void begin_brute(Sim& sim, const Packet& syn_ack);
    void finish_brute(Sim& sim);
    void send_report(Sim& sim, Address victim, std::uint16_t port, const Credentials& creds);
    void start_attack(Sim& sim, const AttackCommand& cmd);
    void emit_attack_packet(Sim& sim, std::uint64_t k);
    void end_attack(Sim& sim);

    World& world_;
    DeviceId device_;
    Address self_;
    BotState state_ = BotState::Boot;

    // resolver
    std::map<std::string, DnsCacheEntry> dns_cache_;
    std::map<std::uint32_t, std::string> pending_queries_; // txn -> domain
    double backoff_s_;
    std::uint32_t dns_txn_ = 0;

    struct PendingReport {
        Address victim;
        std::uint16_t port = 0;
        Credentials creds;
    };
    std::vector<PendingReport> pending_reports_;

    // cnc link
    Address cnc_addr_{};
    bool registered_ = false;
    int unanswered_pings_ = 0;
    std::uint64_t ka_epoch_ = 0; // invalidates stale keepalive timers

    // scanning / brute force
    std::map<std::uint64_t, SimTime> pending_scans_; // key: target<<16|port
    std::unique_ptr<PacketLoginDriver> brute_;
    std::uint64_t scan_epoch_ = 0;
    std::uint64_t brute_epoch_ = 0;
    bool scan_ticking_ = false;
    std::uint16_t next_port_;
    int scans_sent_ = 0;
    int reports_sent_ = 0;
    int logins_succeeded_ = 0;
    int desyncs_ = 0;
    int attack_packets_sent_ = 0;

    // attack
    std::optional<AttackCommand> attack_;
    SimTime attack_started_ = 0;
    SimTime attack_ends_ = 0;
    SimTime attack_phase_ = 0; // random grid offset so bot bursts stay mixed
    std::uint64_t attack_epoch_ = 0;

    RngStream scan_gap_rng_;
    RngStream scan_target_rng_;
    RngStream attack_rng_;
};

} // namespace botsim
