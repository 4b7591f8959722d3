#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "botsim/packet.hpp"

namespace botsim {

/// The ten flood types a CnC command can name.
enum class AttackType : std::uint8_t {
    UdpFlood,
    SynFlood,
    AckFlood,
    TcpStompFlood,
    UdpPlainFlood,
    ValveSourceEngineFlood,
    DnsResolverFlood,
    GreIpFlood,
    GreEthFlood,
    HttpFlood,
};

constexpr int kAttackTypeCount = 10;

const char* attack_type_name(AttackType t);
std::optional<AttackType> attack_type_from_name(const std::string& name);

/// Wire profile of one attack type: what each generated packet looks like.
struct AttackProfile {
    Transport transport = Transport::Udp;
    std::uint8_t tcp_flags = 0;
    std::uint16_t default_dst_port = 0;
    std::uint32_t payload_bytes = 0;
    bool random_src_port = false;
};

/// Built-in profile table; scenario files may override entries.
const std::array<AttackProfile, kAttackTypeCount>& default_attack_profiles();

/// CnC-issued flood directive.
struct AttackCommand {
    AttackType attack = AttackType::UdpFlood;
    Address target_addr;
    std::uint16_t target_port = 0; // 0 = profile default
    double duration_s = 0;
    double rate_pps_per_bot = 0;
    int bot_count = 0; // requested bots

    bool valid() const { return duration_s > 0 && rate_pps_per_bot > 0; }
};

} // namespace botsim
