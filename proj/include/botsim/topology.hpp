#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "botsim/engine.hpp"
#include "botsim/errors.hpp"
#include "botsim/packet.hpp"
#include "botsim/rng.hpp"
#include "botsim/time.hpp"

namespace botsim {

using DeviceId = EntityId;
using LinkId = std::uint32_t;

enum class DeviceRole : std::uint8_t {
    IoTDevice,
    Gateway,
    Router,
    DnsServer,
    CncServer,
    ScanListenServer,
    LoaderServer,
    VictimServer,
    LegitClient,
};

const char* device_role_name(DeviceRole r);

struct Credentials {
    std::string username;
    std::string password;
    bool operator==(const Credentials&) const = default;
};

enum class InfectionState : std::uint8_t { Clean, Infected, Unreachable };

const char* infection_name(InfectionState s);

struct Device {
    DeviceId id = 0;
    std::string name;
    DeviceRole role = DeviceRole::IoTDevice;
    Address addr;
    std::set<std::uint16_t> open_ports;
    std::optional<Credentials> credentials;
    bool vulnerable = false; // implies port 23 open and credentials present
    InfectionState infection = InfectionState::Clean;
};

struct Link {
    LinkId id = 0;
    DeviceId a = 0;
    DeviceId b = 0;
    SimTime latency_us = 1000;
    std::string cls; // lan | uplink | access | client
};

struct GatewaySpec {
    int router = 0; // index of the router this gateway attaches to
    int iot_devices = 0;
};

struct ClientSpec {
    int router = 0;
    std::string kind = "udp"; // udp | tcp | idle
};

struct VulnerableSpec {
    std::string device; // IoT device name
    Credentials credentials;
};

/// Declarative network description; the default scenario encodes the
/// three-router / two-gateway / 10-devices-per-gateway layout.
struct TopologySpec {
    CidrBlock contained_block{0x0A000000u, 8}; // 10.0.0.0/8
    int routers = 3;
    std::vector<GatewaySpec> gateways;
    std::vector<std::string> lan_servers; // dns, cnc, scanlisten, loader, victim, ...
    std::vector<ClientSpec> clients;
    std::map<std::string, double> latency_ms; // per link class
    std::vector<VulnerableSpec> vulnerable;
    std::vector<VulnerableSpec> hardened; // port 23 open, creds outside the dictionary
    std::vector<Address> scan_exclusions;
};

struct RouteResult {
    bool reachable = false;
    std::vector<LinkId> links;
    SimTime latency_us = 0;
};

/// Immutable (other than Device.infection) network graph with routing and
/// scan-target sampling.
class Topology : public PacketFabric {
public:
    const std::vector<Device>& devices() const { return devices_; }
    std::vector<Device>& devices() { return devices_; }
    const std::vector<Link>& links() const { return links_; }
    const CidrBlock& contained_block() const { return block_; }
    const std::vector<Address>& scan_exclusions() const { return exclusions_; }

    Device& device(DeviceId id) { return devices_.at(id); }
    const Device& device(DeviceId id) const { return devices_.at(id); }
    std::optional<DeviceId> find_by_addr(Address a) const;
    std::optional<DeviceId> find_by_name(const std::string& name) const;

    /// Shortest hop path, ties broken toward lowest link ids. Unreachable
    /// (empty optional) for an unallocated destination; UnknownSource for
    /// an unallocated source.
    std::optional<RouteResult> route(Address src, Address dst) const;

    /// Uniform draw over the contained block minus the exclusion list.
    Address random_scan_target(RngStream& rng) const;

    // PacketFabric
    std::optional<std::pair<EntityId, SimTime>> delivery(Address src, Address dst) override;

private:
    friend Topology build_topology(const TopologySpec& spec);

    CidrBlock block_;
    std::vector<Device> devices_;
    std::vector<Link> links_;
    std::vector<std::vector<std::pair<LinkId, DeviceId>>> adj_; // sorted by link id
    std::map<std::uint32_t, DeviceId> by_addr_;
    std::map<std::string, DeviceId> by_name_;
    std::vector<Address> exclusions_; // sorted, deduped, in-block
    mutable std::map<std::pair<std::uint32_t, std::uint32_t>, RouteResult> route_cache_;
};

/// Allocates distinct addresses inside the contained block and builds the
/// connectivity graph. Throws AddressExhaustion / TopologySpecError.
Topology build_topology(const TopologySpec& spec);

} // namespace botsim
