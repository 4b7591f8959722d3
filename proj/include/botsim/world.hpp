#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "botsim/bot.hpp"
#include "botsim/engine.hpp"
#include "botsim/scenario.hpp"
#include "botsim/session.hpp"
#include "botsim/topology.hpp"

namespace botsim {

class World;

/// Base device behavior: closed-port RST semantics and event dispatch.
/// Routers and gateways are plain Nodes; everything else specializes.
class Node : public Entity {
public:
    Node(World& world, DeviceId id);
    void handle(Sim& sim, const Event& ev) final;

    DeviceId id() const { return id_; }
    Address addr() const { return addr_; }

protected:
    virtual void on_packet(Sim& sim, const Packet& pkt);
    virtual void on_timer(Sim& sim, const TimerData& t);
    virtual void on_control(Sim& sim, const ControlData& c);

    /// RST for TCP SYNs to ports nobody listens on. Returns true when the
    /// packet was answered (or is noise to ignore) and needs no role logic.
    bool closed_port_semantics(Sim& sim, const Packet& pkt);

    World& world_;
    DeviceId id_;
    Address addr_;
};

class DnsNode : public Node {
public:
    DnsNode(World& world, DeviceId id, std::map<std::string, Address> zone, std::uint32_t ttl_s);
    const std::map<std::string, Address>& zone() const { return zone_; }
    int queries() const { return queries_; }
    int nxdomains() const { return nxdomains_; }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;
    void on_control(Sim& sim, const ControlData& c) override;

private:
    std::map<std::string, Address> zone_;
    std::uint32_t ttl_s_;
    int queries_ = 0;
    int nxdomains_ = 0;
};

struct BotRow {
    Address addr{};
    SimTime registered_at = 0;
    SimTime last_seen = 0;
};

struct HistoryRow {
    SimTime at = 0;
    std::string account;
    AttackCommand command;
    int dispatched = 0;
};

class CncNode : public Node {
public:
    CncNode(World& world, DeviceId id);
    const std::map<Address, BotRow>& registered() const { return registered_; }
    const std::vector<HistoryRow>& history() const { return history_; }
    int deregistrations() const { return deregistrations_; }
    int rejected_commands() const { return rejected_commands_; }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;
    void on_timer(Sim& sim, const TimerData& t) override;
    void on_control(Sim& sim, const ControlData& c) override;

private:
    void dispatch_attack(Sim& sim, const std::string& account, const AttackCommand& cmd);

    std::map<Address, BotRow> registered_;
    std::vector<HistoryRow> history_;
    int deregistrations_ = 0;
    int rejected_commands_ = 0;
};

class ScanListenNode : public Node {
public:
    ScanListenNode(World& world, DeviceId id);
    int reports() const { return reports_; }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;

private:
    int reports_ = 0;
};

enum class LoaderJobState : std::uint8_t { Pending, LoggingIn, Downloading, Done, Failed };
const char* loader_job_state_name(LoaderJobState s);

struct LoaderJob {
    Address victim{};
    std::uint16_t port = 0;
    Credentials creds;
    LoaderJobState state = LoaderJobState::LoggingIn;
    SimTime started_at = 0;
    SimTime finished_at = 0;
    std::uint16_t local_port = 0;
    std::uint32_t segments_sent = 0;
    std::unique_ptr<PacketLoginDriver> login;
};

class LoaderNode : public Node {
public:
    LoaderNode(World& world, DeviceId id);
    /// Called by the report listener. Duplicate (victim, port) pairs that
    /// are in flight or already finished are ignored unless the finished
    /// job failed and retries are enabled.
    void enqueue(Sim& sim, Address victim, std::uint16_t port, const Credentials& creds);

    const std::map<std::uint64_t, LoaderJob>& jobs() const { return jobs_; }
    int duplicates_ignored() const { return duplicates_ignored_; }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;
    void on_timer(Sim& sim, const TimerData& t) override;

private:
    LoaderJob* job_by_port(std::uint16_t local_port);
    void drive(Sim& sim, LoaderJob& job, const PacketLoginDriver::Step& step);
    void begin_transfer(Sim& sim, LoaderJob& job);

    std::map<std::uint64_t, LoaderJob> jobs_; // key: victim addr << 16 | port
    std::map<std::uint16_t, std::uint64_t> port_to_job_;
    std::uint16_t next_port_ = 30000;
    int duplicates_ignored_ = 0;
};

class VictimNode : public Node {
public:
    VictimNode(World& world, DeviceId id, double capacity_pps, std::uint32_t queue_len,
               std::uint16_t service_port);
    /// Queue admission for service-port and GRE packets: false (a Drop)
    /// when the backlog is at queue_len, otherwise books a service slot
    /// that on_packet consumes.
    bool admit(Sim& sim, const Packet& pkt) override;

    std::uint64_t served() const { return served_; }
    std::uint64_t dropped() const { return dropped_; }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;
    void on_control(Sim& sim, const ControlData& c) override;

private:
    bool queue_applies(const Packet& pkt) const;

    SimTime service_us_;
    std::uint32_t queue_len_;
    std::uint16_t service_port_;
    SimTime next_free_ = 0;
    SimTime pending_serve_t_ = 0; // serve time booked by the last admit
    std::uint64_t served_ = 0;
    std::uint64_t dropped_ = 0;
};

struct ClientStats {
    std::uint64_t sent = 0;
    std::uint64_t succeeded = 0;
    std::uint64_t timed_out = 0;
    std::uint64_t dup_acks = 0;
    std::uint64_t retransmissions = 0;
    std::uint64_t resets = 0;
    std::vector<SimTime> dup_ack_times;
    std::vector<SimTime> retransmission_times;
};

/// Fire-and-forget UDP request/response client.
class UdpClientNode : public Node {
public:
    UdpClientNode(World& world, DeviceId id, const ClientTrafficSpec& spec);
    const ClientStats& stats() const { return stats_; }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;
    void on_timer(Sim& sim, const TimerData& t) override;

private:
    SimTime next_gap(); // period with +-50% jitter so phases stay mixed

    ClientTrafficSpec spec_;
    std::map<std::uint64_t, SimTime> outstanding_;
    ClientStats stats_;
    std::uint16_t port_ = 20000;
    RngStream gap_rng_;
};

/// Echo-stream TCP client: numbered segments, per-segment retransmission
/// timer, duplicate ACKs on out-of-order echoes, reset after too many
/// retransmits. Its pure-ACK packets are the only ones a client emits, so
/// loss episodes are visible in the trace.
class TcpClientNode : public Node {
public:
    TcpClientNode(World& world, DeviceId id, const ClientTrafficSpec& spec);
    const ClientStats& stats() const { return stats_; }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;
    void on_timer(Sim& sim, const TimerData& t) override;

private:
    void start_handshake(Sim& sim);
    void send_segment(Sim& sim, std::uint64_t seq, bool retransmit);
    void reset_session(Sim& sim);
    SimTime next_gap();

    RngStream gap_rng_;
    ClientTrafficSpec spec_;
    bool established_ = false;
    bool handshake_pending_ = false;
    std::uint64_t next_seq_ = 0;     // next new segment to send
    std::uint64_t expected_echo_ = 0;
    std::map<std::uint64_t, int> unacked_; // seq -> retransmit count
    int ooo_run_ = 0;
    std::uint64_t session_gen_ = 0;
    ClientStats stats_;
    std::uint16_t port_ = 21000;
};

struct ServerSession {
    std::unique_ptr<TelnetServerFsm> fsm;
    bool logged_in = false;
    std::uint32_t bytes_received = 0; // post-login payload bytes
    std::uint16_t peer_port = 0;
};

/// An IoT device: telnet service when the port is open, plus the bot agent
/// once infected (or from the start for the seed device).
class IotNode : public Node {
public:
    IotNode(World& world, DeviceId id);
    void activate_bot(Sim& sim);
    BotAgent* bot() { return bot_.get(); }
    const BotAgent* bot() const { return bot_.get(); }

protected:
    void on_packet(Sim& sim, const Packet& pkt) override;
    void on_timer(Sim& sim, const TimerData& t) override;
    void on_control(Sim& sim, const ControlData& c) override;

private:
    bool telnet_packet(Sim& sim, const Packet& pkt);

    std::map<std::uint64_t, ServerSession> sessions_; // key: src addr << 16 | src port
    std::unique_ptr<BotAgent> bot_;
};

struct InfectionRecord {
    DeviceId device = kNoEntity;
    SimTime at = 0;
    bool seeded = false; // infected at boot rather than by the loader
};

/// Owns the simulator, the topology, and one node per device; translates a
/// scenario into scheduled work and exposes the state the reporter needs.
class World {
public:
    explicit World(ScenarioConfig cfg);

    World(const World&) = delete;
    World& operator=(const World&) = delete;

    /// Schedule boots, client traffic, attacks and scripted events.
    void start();
    /// Run to the scenario duration and settle in-flight packets.
    RunStats run_to_end();

    Sim& sim() { return *sim_; }
    Topology& topo() { return topo_; }
    const ScenarioConfig& config() const { return cfg_; }

    Address dns_addr() const { return dns_addr_; }
    const NegotiationScript& client_script() const;
    const NegotiationScript& server_script_for(DeviceId id) const;
    const CredentialList& dictionary() const { return cfg_.dictionary; }

    Node* node(DeviceId id) { return nodes_.at(id).get(); }
    DnsNode* dns() { return dns_node_; }
    CncNode* cnc() { return cnc_nodes_.empty() ? nullptr : cnc_nodes_.front(); }
    const std::vector<CncNode*>& cnc_nodes() const { return cnc_nodes_; }
    ScanListenNode* scan_listen() { return scanlisten_node_; }
    LoaderNode* loader() { return loader_node_; }
    VictimNode* victim() { return victim_node_; }
    const std::vector<IotNode*>& iot_nodes() const { return iot_nodes_; }
    const std::vector<Node*>& client_nodes() const { return client_nodes_; }
    std::vector<const BotAgent*> bots() const;

    void record_infection(DeviceId device, SimTime at, bool seeded);
    const std::vector<InfectionRecord>& infections() const { return infections_; }

    /// Report listener handing a dedup-checked job to the loader.
    void forward_report(Sim& sim, Address victim, std::uint16_t port, const Credentials& creds);

private:
    ScenarioConfig cfg_;
    Topology topo_;
    std::unique_ptr<Sim> sim_;
    std::vector<std::unique_ptr<Node>> nodes_;
    std::map<std::string, NegotiationScript> scripts_;

    Address dns_addr_{};
    DnsNode* dns_node_ = nullptr;
    std::vector<CncNode*> cnc_nodes_;
    ScanListenNode* scanlisten_node_ = nullptr;
    LoaderNode* loader_node_ = nullptr;
    VictimNode* victim_node_ = nullptr;
    std::vector<IotNode*> iot_nodes_;
    std::vector<Node*> client_nodes_;
    std::vector<InfectionRecord> infections_;
};

} // namespace botsim
