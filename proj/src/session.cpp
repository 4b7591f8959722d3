#include "botsim/session.hpp"

namespace botsim {

PacketLoginDriver::PacketLoginDriver(const NegotiationScript& script, CredentialList creds,
                                     Address self, std::uint16_t local_port, Address peer,
                                     std::uint16_t peer_port, int max_attempts_per_connection,
                                     int prompt_byte_budget)
    : script_(script), creds_(std::move(creds)), self_(self), local_port_(local_port),
      peer_(peer), peer_port_(peer_port), max_attempts_(max_attempts_per_connection),
      budget_(prompt_byte_budget), fsm_(script_, creds_, 0, prompt_byte_budget) {
    fsm_.start_connection();
    connections_ = 1;
}

Packet PacketLoginDriver::syn_packet(PacketTag tag) const {
    Packet p;
    p.src_addr = self_;
    p.src_port = local_port_;
    p.dst_addr = peer_;
    p.dst_port = peer_port_;
    p.transport = Transport::Tcp;
    p.tcp_flags = tcpflag::Syn;
    p.size_bytes = kTcpHeaderBytes;
    p.tag = tag;
    return p;
}

Packet PacketLoginDriver::ack_packet() const {
    Packet p = syn_packet(PacketTag::TelnetData);
    p.tcp_flags = tcpflag::Ack;
    return p;
}

Packet PacketLoginDriver::data_packet(Bytes payload) const {
    Packet p = ack_packet();
    p.tcp_flags = tcpflag::Psh | tcpflag::Ack;
    p.size_bytes = kTcpHeaderBytes + static_cast<std::uint32_t>(payload.size());
    p.payload = std::move(payload);
    return p;
}

PacketLoginDriver::Step PacketLoginDriver::finish(LoginOutcome::Kind kind) {
    finished_ = true;
    outcome_.kind = kind;
    outcome_.attempts = fsm_.attempts_made();
    outcome_.connections = connections_;
    outcome_.usernames_sent = fsm_.usernames_sent();
    outcome_.desyncs = fsm_.desyncs();
    if (kind == LoginOutcome::Kind::Success) outcome_.credentials = fsm_.current_credential();
    Step s;
    s.done = true;
    return s;
}

PacketLoginDriver::Step PacketLoginDriver::on_syn_ack() {
    Step s;
    if (finished_) return s;
    fsm_.connection_up();
    s.reply = ack_packet();
    return s;
}

PacketLoginDriver::Step PacketLoginDriver::on_data(const Bytes& payload) {
    Step s;
    if (finished_ || fsm_.state() == ClientState::TcpHandshake) return s;
    const FsmOutput r = fsm_.consume(payload);
    if (r.status != TelnetStatus::Ok) {
        Step f = finish(LoginOutcome::Kind::ExhaustedFailure);
        outcome_.prompt_timeout = (r.status == TelnetStatus::PromptTimeout);
        return f;
    }
    if (r.logged_in) return finish(LoginOutcome::Kind::Success);
    if (fsm_.state() == ClientState::Failed) return finish(LoginOutcome::Kind::ExhaustedFailure);
    if (!r.response.empty()) s.reply = data_packet(r.response);
    return s;
}

PacketLoginDriver::Step PacketLoginDriver::on_fin() {
    Step s;
    if (finished_) return s;
    if (fsm_.creds_exhausted() || fsm_.state() == ClientState::Failed)
        return finish(LoginOutcome::Kind::ExhaustedFailure);
    // server hung up mid-list: reconnect and keep going down the list
    fsm_.start_connection();
    ++connections_;
    s.reconnect = true;
    s.reply = syn_packet(PacketTag::TelnetData);
    return s;
}

void PacketLoginDriver::mark_unreachable() {
    if (finished_) return;
    finish(LoginOutcome::Kind::Unreachable);
}

} // namespace botsim
