#pragma once

#include <cstdint>
#include <optional>

#include "botsim/packet.hpp"
#include "botsim/telnet.hpp"

namespace botsim {

/// Drives a TelnetClientFsm over packets: the scanner and the loader both
/// run this against port 23, they only differ in what happens afterwards.
/// The owner feeds SYN+ACK / data / FIN arrivals and sends whatever packets
/// come back out.
class PacketLoginDriver {
public:
    PacketLoginDriver(const NegotiationScript& script, CredentialList creds, Address self,
                      std::uint16_t local_port, Address peer, std::uint16_t peer_port,
                      int max_attempts_per_connection, int prompt_byte_budget);

    // The FSM points into script_/creds_, so the driver must stay put.
    PacketLoginDriver(const PacketLoginDriver&) = delete;
    PacketLoginDriver& operator=(const PacketLoginDriver&) = delete;

    /// SYN for the initial (or a reconnect) connection.
    Packet syn_packet(PacketTag tag) const;
    /// Bare ACK completing the handshake.
    Packet ack_packet() const;

    struct Step {
        std::optional<Packet> reply;   // response bytes to send, if any
        bool reconnect = false;        // open a fresh connection (new SYN)
        bool done = false;             // outcome is final
    };

    Step on_syn_ack();
    Step on_data(const Bytes& payload);
    Step on_fin();
    /// Peer never answered (SYN timeout or equivalent).
    void mark_unreachable();

    bool finished() const { return finished_; }
    const LoginOutcome& outcome() const { return outcome_; }
    Address peer() const { return peer_; }
    std::uint16_t peer_port() const { return peer_port_; }
    std::uint16_t local_port() const { return local_port_; }

private:
    Packet data_packet(Bytes payload) const;
    Step finish(LoginOutcome::Kind kind);

    NegotiationScript script_;
    CredentialList creds_;
    Address self_;
    std::uint16_t local_port_;
    Address peer_;
    std::uint16_t peer_port_;
    int max_attempts_;
    int budget_;
    TelnetClientFsm fsm_;
    LoginOutcome outcome_;
    int connections_ = 0;
    bool finished_ = false;
};

} // namespace botsim
