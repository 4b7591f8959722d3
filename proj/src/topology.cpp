#include "botsim/topology.hpp"

#include <algorithm>
#include <deque>

namespace botsim {

const char* device_role_name(DeviceRole r) {
    switch (r) {
    case DeviceRole::IoTDevice: return "iot";
    case DeviceRole::Gateway: return "gateway";
    case DeviceRole::Router: return "router";
    case DeviceRole::DnsServer: return "dns";
    case DeviceRole::CncServer: return "cnc";
    case DeviceRole::ScanListenServer: return "scanlisten";
    case DeviceRole::LoaderServer: return "loader";
    case DeviceRole::VictimServer: return "victim";
    case DeviceRole::LegitClient: return "client";
    }
    return "?";
}

const char* infection_name(InfectionState s) {
    switch (s) {
    case InfectionState::Clean: return "clean";
    case InfectionState::Infected: return "infected";
    case InfectionState::Unreachable: return "unreachable";
    }
    return "?";
}

std::optional<DeviceId> Topology::find_by_addr(Address a) const {
    const auto it = by_addr_.find(a.v4);
    if (it == by_addr_.end()) return {};
    return it->second;
}

std::optional<DeviceId> Topology::find_by_name(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) return {};
    return it->second;
}

std::optional<RouteResult> Topology::route(Address src, Address dst) const {
    const auto src_dev = find_by_addr(src);
    if (!src_dev) throw UnknownSource("route() from unallocated address " + src.str());
    const auto dst_dev = find_by_addr(dst);
    if (!dst_dev) return {};

    const auto key = std::make_pair(src.v4, dst.v4);
    if (const auto it = route_cache_.find(key); it != route_cache_.end()) return it->second;

    // BFS; neighbors are visited in ascending link id, so among equal-hop
    // paths the one through the lowest link ids wins deterministically
    std::vector<std::pair<LinkId, DeviceId>> parent(devices_.size(),
                                                    {0, static_cast<DeviceId>(-1)});
    std::vector<bool> seen(devices_.size(), false);
    std::deque<DeviceId> frontier{*src_dev};
    seen[*src_dev] = true;
    while (!frontier.empty() && !seen[*dst_dev]) {
        const DeviceId cur = frontier.front();
        frontier.pop_front();
        for (const auto& [link, next] : adj_[cur]) {
            if (seen[next]) continue;
            seen[next] = true;
            parent[next] = {link, cur};
            frontier.push_back(next);
        }
    }
    RouteResult res;
    if (!seen[*dst_dev]) {
        // allocated but disconnected; cache the negative result too
        route_cache_.emplace(key, res);
        return res;
    }
    res.reachable = true;
    for (DeviceId cur = *dst_dev; cur != *src_dev; cur = parent[cur].second) {
        res.links.push_back(parent[cur].first);
        res.latency_us += links_[parent[cur].first].latency_us;
    }
    std::reverse(res.links.begin(), res.links.end());
    route_cache_.emplace(key, res);
    return res;
}

Address Topology::random_scan_target(RngStream& rng) const {
    const std::uint64_t usable = block_.size() - exclusions_.size();
    std::uint64_t pick = rng.uniform_below(usable);
    // exclusions_ is sorted: shift the pick past every excluded offset at
    // or below it, turning a rank into a concrete block offset
    for (const Address& e : exclusions_) {
        if (pick >= block_.offset_of(e))
            ++pick;
        else
            break;
    }
    return block_.at(pick);
}

std::optional<std::pair<EntityId, SimTime>> Topology::delivery(Address src, Address dst) {
    const auto r = route(src, dst);
    if (!r || !r->reachable) return {};
    const auto dst_dev = find_by_addr(dst);
    return std::make_pair(static_cast<EntityId>(*dst_dev), r->latency_us);
}

namespace {

SimTime class_latency(const TopologySpec& spec, const std::string& cls) {
    const auto it = spec.latency_ms.find(cls);
    const double ms = it == spec.latency_ms.end() ? 1.0 : it->second;
    return us_from_seconds(ms / 1000.0);
}

DeviceRole server_role_from_name(const std::string& role_name) {
    if (role_name == "dns") return DeviceRole::DnsServer;
    if (role_name == "cnc") return DeviceRole::CncServer;
    if (role_name == "scanlisten") return DeviceRole::ScanListenServer;
    if (role_name == "loader") return DeviceRole::LoaderServer;
    if (role_name == "victim") return DeviceRole::VictimServer;
    throw TopologySpecError("unknown lan server role: " + role_name);
}

} // namespace

Topology build_topology(const TopologySpec& spec) {
    if (spec.routers < 0) throw TopologySpecError("negative router count");
    if (spec.contained_block.prefix < 0 || spec.contained_block.prefix > 30)
        throw TopologySpecError("contained block prefix out of range");

    Topology topo;
    topo.block_ = spec.contained_block;

    std::uint64_t next_offset = 1; // offset 0 stays unallocated (network address)
    const auto add_device = [&](const std::string& name, DeviceRole role) -> DeviceId {
        if (next_offset >= spec.contained_block.size())
            throw AddressExhaustion("contained block " + spec.contained_block.str() +
                                    " too small at device " + name);
        Device d;
        d.id = static_cast<DeviceId>(topo.devices_.size());
        d.name = name;
        d.role = role;
        d.addr = spec.contained_block.at(next_offset++);
        if (topo.by_name_.count(name)) throw TopologySpecError("duplicate device name: " + name);
        topo.by_name_[name] = d.id;
        topo.by_addr_[d.addr.v4] = d.id;
        topo.devices_.push_back(std::move(d));
        return topo.devices_.back().id;
    };

    std::vector<DeviceId> routers;
    for (int i = 0; i < spec.routers; ++i)
        routers.push_back(add_device("router-" + std::to_string(i), DeviceRole::Router));

    std::vector<DeviceId> gateways;
    std::vector<std::vector<DeviceId>> gateway_iot;
    for (std::size_t g = 0; g < spec.gateways.size(); ++g) {
        const auto& gw = spec.gateways[g];
        if (gw.router < 0 || gw.router >= spec.routers)
            throw TopologySpecError("gateway " + std::to_string(g) + " attaches to router " +
                                    std::to_string(gw.router) + " which does not exist");
        if (gw.iot_devices < 0) throw TopologySpecError("negative iot device count");
        gateways.push_back(add_device("gateway-" + std::to_string(g), DeviceRole::Gateway));
        gateway_iot.emplace_back();
        for (int j = 0; j < gw.iot_devices; ++j)
            gateway_iot.back().push_back(add_device(
                "iot-" + std::to_string(g) + "-" + std::to_string(j), DeviceRole::IoTDevice));
    }

    // lan server entries are "name" or "name:role"; bare names double as
    // the role (dns, cnc, scanlisten, loader, victim)
    std::vector<DeviceId> servers;
    for (const auto& entry : spec.lan_servers) {
        const auto colon = entry.find(':');
        const std::string name = colon == std::string::npos ? entry : entry.substr(0, colon);
        const std::string role = colon == std::string::npos ? entry : entry.substr(colon + 1);
        servers.push_back(add_device(name, server_role_from_name(role)));
    }

    std::vector<DeviceId> clients;
    for (std::size_t c = 0; c < spec.clients.size(); ++c) {
        const auto& cl = spec.clients[c];
        if (cl.router < 0 || cl.router >= spec.routers)
            throw TopologySpecError("client " + std::to_string(c) + " attaches to router " +
                                    std::to_string(cl.router) + " which does not exist");
        clients.push_back(add_device("client-" + std::to_string(c), DeviceRole::LegitClient));
    }

    const auto add_link = [&](DeviceId a, DeviceId b, const std::string& cls) {
        Link l;
        l.id = static_cast<LinkId>(topo.links_.size());
        l.a = a;
        l.b = b;
        l.cls = cls;
        l.latency_us = class_latency(spec, cls);
        topo.links_.push_back(std::move(l));
    };

    // single-LAN core: routers and servers fully meshed
    std::vector<DeviceId> lan_members = routers;
    lan_members.insert(lan_members.end(), servers.begin(), servers.end());
    for (std::size_t i = 0; i < lan_members.size(); ++i)
        for (std::size_t j = i + 1; j < lan_members.size(); ++j)
            add_link(lan_members[i], lan_members[j], "lan");
    for (std::size_t g = 0; g < gateways.size(); ++g) {
        add_link(gateways[g], routers[spec.gateways[g].router], "uplink");
        for (DeviceId iot : gateway_iot[g]) add_link(iot, gateways[g], "access");
    }
    for (std::size_t c = 0; c < clients.size(); ++c)
        add_link(clients[c], routers[spec.clients[c].router], "client");

    topo.adj_.assign(topo.devices_.size(), {});
    for (const Link& l : topo.links_) {
        topo.adj_[l.a].emplace_back(l.id, l.b);
        topo.adj_[l.b].emplace_back(l.id, l.a);
    }
    for (auto& neighbors : topo.adj_) std::sort(neighbors.begin(), neighbors.end());

    const auto mark = [&](const VulnerableSpec& v, bool vulnerable) {
        const auto id = topo.find_by_name(v.device);
        if (!id) throw TopologySpecError("vulnerable/hardened entry names unknown device: " +
                                         v.device);
        Device& d = topo.devices_[*id];
        d.credentials = v.credentials;
        d.vulnerable = vulnerable;
        d.open_ports.insert(23);
    };
    for (const auto& v : spec.vulnerable) mark(v, true);
    for (const auto& h : spec.hardened) mark(h, false);

    for (const Address& e : spec.scan_exclusions) {
        if (!spec.contained_block.contains(e))
            throw TopologySpecError("scan exclusion outside contained block: " + e.str());
        topo.exclusions_.push_back(e);
    }
    std::sort(topo.exclusions_.begin(), topo.exclusions_.end());
    topo.exclusions_.erase(std::unique(topo.exclusions_.begin(), topo.exclusions_.end()),
                           topo.exclusions_.end());
    if (topo.exclusions_.size() >= topo.block_.size())
        throw TopologySpecError("scan exclusions cover the whole block");

    return topo;
}

} // namespace botsim
