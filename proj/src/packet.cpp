#include "botsim/packet.hpp"

#include <array>
#include <cstdio>

namespace botsim {

std::string Address::str() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", (v4 >> 24) & 0xFF, (v4 >> 16) & 0xFF,
                  (v4 >> 8) & 0xFF, v4 & 0xFF);
    return buf;
}

std::optional<Address> Address::parse(const std::string& dotted) {
    unsigned a = 0, b = 0, c = 0, d = 0;
    char tail = 0;
    if (std::sscanf(dotted.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4) return {};
    if (a > 255 || b > 255 || c > 255 || d > 255) return {};
    return Address{(a << 24) | (b << 16) | (c << 8) | d};
}

std::string CidrBlock::str() const {
    return Address{base}.str() + "/" + std::to_string(prefix);
}

std::optional<CidrBlock> CidrBlock::parse(const std::string& cidr) {
    const auto slash = cidr.find('/');
    if (slash == std::string::npos) return {};
    const auto addr = Address::parse(cidr.substr(0, slash));
    if (!addr) return {};
    int prefix = 0;
    try {
        std::size_t used = 0;
        prefix = std::stoi(cidr.substr(slash + 1), &used);
        if (used != cidr.size() - slash - 1) return {};
    } catch (...) {
        return {};
    }
    if (prefix < 0 || prefix > 32) return {};
    const std::uint32_t mask = prefix == 0 ? 0 : ~std::uint32_t(0) << (32 - prefix);
    return CidrBlock{addr->v4 & mask, prefix};
}

const char* transport_name(Transport t) {
    switch (t) {
    case Transport::Tcp: return "tcp";
    case Transport::Udp: return "udp";
    case Transport::Icmp: return "icmp";
    case Transport::Gre: return "gre";
    }
    return "?";
}

std::optional<Transport> transport_from_name(const std::string& name) {
    if (name == "tcp") return Transport::Tcp;
    if (name == "udp") return Transport::Udp;
    if (name == "icmp") return Transport::Icmp;
    if (name == "gre") return Transport::Gre;
    return {};
}

const char* tag_name(PacketTag t) {
    switch (t) {
    case PacketTag::Scan: return "scan";
    case PacketTag::TelnetData: return "telnet_data";
    case PacketTag::CncKeepAlive: return "cnc_keepalive";
    case PacketTag::CncCommand: return "cnc_command";
    case PacketTag::ScanReport: return "scan_report";
    case PacketTag::LoaderData: return "loader_data";
    case PacketTag::AttackFlood: return "attack_flood";
    case PacketTag::LegitRequest: return "legit_request";
    case PacketTag::LegitResponse: return "legit_response";
    case PacketTag::DnsQuery: return "dns_query";
    case PacketTag::DnsAnswer: return "dns_answer";
    }
    return "?";
}

std::optional<PacketTag> tag_from_name(const std::string& name) {
    static constexpr std::array<PacketTag, 11> all = {
        PacketTag::Scan,         PacketTag::TelnetData,    PacketTag::CncKeepAlive,
        PacketTag::CncCommand,   PacketTag::ScanReport,    PacketTag::LoaderData,
        PacketTag::AttackFlood,  PacketTag::LegitRequest,  PacketTag::LegitResponse,
        PacketTag::DnsQuery,     PacketTag::DnsAnswer,
    };
    for (PacketTag t : all)
        if (name == tag_name(t)) return t;
    return {};
}

std::string flags_str(std::uint8_t flags) {
    std::string out;
    const auto add = [&](std::uint8_t bit, const char* name) {
        if (!(flags & bit)) return;
        if (!out.empty()) out += '|';
        out += name;
    };
    add(tcpflag::Syn, "syn");
    add(tcpflag::Ack, "ack");
    add(tcpflag::Psh, "psh");
    add(tcpflag::Rst, "rst");
    add(tcpflag::Fin, "fin");
    return out;
}

std::optional<std::uint8_t> flags_parse(const std::string& s) {
    std::uint8_t flags = 0;
    std::size_t pos = 0;
    while (pos < s.size()) {
        auto bar = s.find('|', pos);
        if (bar == std::string::npos) bar = s.size();
        const std::string part = s.substr(pos, bar - pos);
        if (part == "syn")
            flags |= tcpflag::Syn;
        else if (part == "ack")
            flags |= tcpflag::Ack;
        else if (part == "psh")
            flags |= tcpflag::Psh;
        else if (part == "rst")
            flags |= tcpflag::Rst;
        else if (part == "fin")
            flags |= tcpflag::Fin;
        else
            return {};
        pos = bar + 1;
    }
    return flags;
}

} // namespace botsim
