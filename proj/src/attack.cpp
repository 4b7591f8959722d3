#include "botsim/attack.hpp"

#include <map>

namespace botsim {

const char* attack_type_name(AttackType t) {
    switch (t) {
    case AttackType::UdpFlood: return "udp";
    case AttackType::SynFlood: return "syn";
    case AttackType::AckFlood: return "ack";
    case AttackType::TcpStompFlood: return "stomp";
    case AttackType::UdpPlainFlood: return "udp_plain";
    case AttackType::ValveSourceEngineFlood: return "vse";
    case AttackType::DnsResolverFlood: return "dns";
    case AttackType::GreIpFlood: return "greip";
    case AttackType::GreEthFlood: return "greeth";
    case AttackType::HttpFlood: return "http";
    }
    return "?";
}

std::optional<AttackType> attack_type_from_name(const std::string& name) {
    static const std::map<std::string, AttackType> table = {
        {"udp", AttackType::UdpFlood},
        {"syn", AttackType::SynFlood},
        {"ack", AttackType::AckFlood},
        {"stomp", AttackType::TcpStompFlood},
        {"udp_plain", AttackType::UdpPlainFlood},
        {"vse", AttackType::ValveSourceEngineFlood},
        {"dns", AttackType::DnsResolverFlood},
        {"greip", AttackType::GreIpFlood},
        {"greeth", AttackType::GreEthFlood},
        {"http", AttackType::HttpFlood},
    };
    const auto it = table.find(name);
    if (it == table.end()) return {};
    return it->second;
}

const std::array<AttackProfile, kAttackTypeCount>& default_attack_profiles() {
    static const std::array<AttackProfile, kAttackTypeCount> table = {{
        // udp: generic UDP flood, payload-heavy
        {Transport::Udp, 0, 0, 512, false},
        // syn: empty SYNs from random source ports
        {Transport::Tcp, tcpflag::Syn, 0, 0, true},
        // ack: bare ACKs
        {Transport::Tcp, tcpflag::Ack, 0, 0, false},
        // stomp: ACK flood with data after a learned sequence state
        {Transport::Tcp, tcpflag::Psh | tcpflag::Ack, 0, 768, false},
        // udp_plain: throughput-optimized UDP
        {Transport::Udp, 0, 0, 512, false},
        // vse: Valve Source Engine query
        {Transport::Udp, 0, 27015, 25, false},
        // dns: resolver query flood
        {Transport::Udp, 0, 53, 60, false},
        // greip: GRE with encapsulated IP
        {Transport::Gre, 0, 0, 512, false},
        // greeth: GRE with full ethernet frame inside
        {Transport::Gre, 0, 0, 526, false},
        // http: request flood against the app layer
        {Transport::Tcp, tcpflag::Psh | tcpflag::Ack, 80, 18, false},
    }};
    return table;
}

} // namespace botsim
