#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace botsim {

/// IPv4 address inside the simulated block.
struct Address {
    std::uint32_t v4 = 0;

    auto operator<=>(const Address&) const = default;

    std::string str() const;
    static std::optional<Address> parse(const std::string& dotted);
};

struct CidrBlock {
    std::uint32_t base = 0;
    int prefix = 8;

    std::uint64_t size() const { return std::uint64_t(1) << (32 - prefix); }
    bool contains(Address a) const {
        const std::uint32_t mask = prefix == 0 ? 0 : ~std::uint32_t(0) << (32 - prefix);
        return (a.v4 & mask) == (base & mask);
    }
    Address at(std::uint64_t offset) const { return Address{base + static_cast<std::uint32_t>(offset)}; }
    std::uint64_t offset_of(Address a) const { return a.v4 - base; }

    std::string str() const;
    static std::optional<CidrBlock> parse(const std::string& cidr);
};

enum class Transport : std::uint8_t { Tcp, Udp, Icmp, Gre };

namespace tcpflag {
constexpr std::uint8_t Syn = 0x01;
constexpr std::uint8_t Ack = 0x02;
constexpr std::uint8_t Psh = 0x04;
constexpr std::uint8_t Rst = 0x08;
constexpr std::uint8_t Fin = 0x10;
} // namespace tcpflag

/// Semantic label carried by every packet; the substrate of every trace
/// filter and metric series.
enum class PacketTag : std::uint8_t {
    Scan,
    TelnetData,
    CncKeepAlive,
    CncCommand,
    ScanReport,
    LoaderData,
    AttackFlood,
    LegitRequest,
    LegitResponse,
    DnsQuery,
    DnsAnswer,
};

const char* transport_name(Transport t);
std::optional<Transport> transport_from_name(const std::string& name);
const char* tag_name(PacketTag t);
std::optional<PacketTag> tag_from_name(const std::string& name);
std::string flags_str(std::uint8_t flags);
std::optional<std::uint8_t> flags_parse(const std::string& s);

/// Simulated L3/L4 datagram. size_bytes models the wire size; payload
/// carries application bytes where a protocol needs them (TELNET, DNS,
/// CnC records) and is empty for bulk traffic.
struct Packet {
    Address src_addr;
    std::uint16_t src_port = 0;
    Address dst_addr;
    std::uint16_t dst_port = 0;
    Transport transport = Transport::Tcp;
    std::uint8_t tcp_flags = 0; // empty unless TCP
    std::uint32_t size_bytes = 40;
    PacketTag tag = PacketTag::Scan;
    std::vector<std::uint8_t> payload;
    std::uint64_t session_id = 0; // 0 = none; correlates packets of one exchange
};

constexpr std::uint32_t kTcpHeaderBytes = 40; // IP + TCP, no options
constexpr std::uint32_t kUdpHeaderBytes = 28;

} // namespace botsim
