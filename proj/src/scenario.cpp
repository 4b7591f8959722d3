#include "botsim/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "botsim/errors.hpp"

namespace botsim {

using nlohmann::json;

namespace {

// parse-shape problems (bad types, unknown keys, malformed values)
[[noreturn]] void bad(const std::string& path, const std::string& why) {
    throw ParseError(path + ": " + why);
}

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) bad(path, "expected an object");
}

void require_keys(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    require_object(j, path);
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) bad(path + "." + item.key(), "unknown key");
}

template <typename T>
T get_number(const json& j, const std::string& path) {
    if (!j.is_number()) bad(path, "expected a number");
    return j.get<T>();
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) bad(path, "expected an integer");
    return j.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
    if (!j.is_number_unsigned()) bad(path, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path) {
    if (!j.is_string()) bad(path, "expected a string");
    return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) bad(path, "expected a boolean");
    return j.get<bool>();
}

SimTime get_seconds(const json& j, const std::string& path) {
    const double s = get_number<double>(j, path);
    if (!(s >= 0) || s > 1e9) bad(path, "seconds out of range");
    return us_from_seconds(s);
}

Bytes get_hex(const json& j, const std::string& path) {
    const auto b = bytes_from_hex(get_string(j, path));
    if (!b) bad(path, "expected hex-encoded bytes");
    return *b;
}

Address get_address(const json& j, const std::string& path) {
    const auto a = Address::parse(get_string(j, path));
    if (!a) bad(path, "expected a dotted-quad address");
    return *a;
}

ScriptStep parse_step(const json& j, const std::string& path) {
    require_keys(j, path, {"expect", "respond"});
    ScriptStep step;
    if (!j.contains("expect")) bad(path + ".expect", "required");
    step.expect = get_hex(j.at("expect"), path + ".expect");
    if (step.expect.empty()) bad(path + ".expect", "must not be empty");
    if (j.contains("respond")) step.respond = get_hex(j.at("respond"), path + ".respond");
    return step;
}

NegotiationScript parse_script(const json& j, const std::string& path) {
    require_keys(j, path,
                 {"pre_steps", "interstitial_steps", "username_prompt", "password_prompt",
                  "success_banner", "failure_banner"});
    NegotiationScript s = default_negotiation_script();
    const auto steps = [&](const char* key, std::vector<ScriptStep>& out) {
        if (!j.contains(key)) return;
        const json& arr = j.at(key);
        const std::string p = path + "." + key;
        if (!arr.is_array()) bad(p, "expected an array");
        out.clear();
        for (std::size_t i = 0; i < arr.size(); ++i)
            out.push_back(parse_step(arr[i], p + "[" + std::to_string(i) + "]"));
    };
    steps("pre_steps", s.pre_steps);
    steps("interstitial_steps", s.interstitial_steps);
    const auto marker = [&](const char* key, Bytes& out, bool allow_empty) {
        if (!j.contains(key)) return;
        out = get_hex(j.at(key), path + "." + key);
        if (out.empty() && !allow_empty) bad(path + "." + std::string(key), "must not be empty");
    };
    marker("username_prompt", s.username_prompt, false);
    marker("password_prompt", s.password_prompt, false);
    marker("success_banner", s.success_banner, false);
    marker("failure_banner", s.failure_banner, false);
    return s;
}

void parse_topology(const json& j, TopologySpec& t) {
    const std::string path = "topology";
    require_keys(j, path,
                 {"contained_block", "routers", "gateways", "lan_servers", "clients",
                  "latency_ms", "vulnerable", "hardened", "scan_exclusions"});
    if (j.contains("contained_block")) {
        const auto block = CidrBlock::parse(get_string(j.at("contained_block"), path + ".contained_block"));
        if (!block) bad(path + ".contained_block", "expected addr/prefix");
        t.contained_block = *block;
    }
    if (j.contains("routers")) {
        t.routers = get_int(j.at("routers"), path + ".routers");
        if (t.routers < 1) bad(path + ".routers", "need at least one router");
    }
    if (j.contains("gateways")) {
        const json& arr = j.at("gateways");
        if (!arr.is_array()) bad(path + ".gateways", "expected an array");
        t.gateways.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".gateways[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"router", "iot_devices"});
            GatewaySpec g;
            if (arr[i].contains("router")) g.router = get_int(arr[i].at("router"), p + ".router");
            if (!arr[i].contains("iot_devices")) bad(p + ".iot_devices", "required");
            g.iot_devices = get_int(arr[i].at("iot_devices"), p + ".iot_devices");
            if (g.iot_devices < 0) bad(p + ".iot_devices", "negative count");
            t.gateways.push_back(g);
        }
    }
    if (j.contains("lan_servers")) {
        const json& arr = j.at("lan_servers");
        if (!arr.is_array()) bad(path + ".lan_servers", "expected an array");
        t.lan_servers.clear();
        for (std::size_t i = 0; i < arr.size(); ++i)
            t.lan_servers.push_back(
                get_string(arr[i], path + ".lan_servers[" + std::to_string(i) + "]"));
    }
    if (j.contains("clients")) {
        const json& arr = j.at("clients");
        if (!arr.is_array()) bad(path + ".clients", "expected an array");
        t.clients.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".clients[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"router", "kind"});
            ClientSpec c;
            if (arr[i].contains("router")) c.router = get_int(arr[i].at("router"), p + ".router");
            if (arr[i].contains("kind")) {
                c.kind = get_string(arr[i].at("kind"), p + ".kind");
                if (c.kind != "udp" && c.kind != "tcp") bad(p + ".kind", "expected udp or tcp");
            }
            t.clients.push_back(c);
        }
    }
    if (j.contains("latency_ms")) {
        const json& obj = j.at("latency_ms");
        require_object(obj, path + ".latency_ms");
        for (const auto& item : obj.items()) {
            const std::string p = path + ".latency_ms." + item.key();
            if (item.key() != "lan" && item.key() != "uplink" && item.key() != "access" &&
                item.key() != "client")
                bad(p, "unknown link class");
            const double ms = get_number<double>(item.value(), p);
            if (!(ms > 0)) bad(p, "latency must be positive");
            t.latency_ms[item.key()] = ms;
        }
    }
    if (j.contains("vulnerable")) {
        const json& arr = j.at("vulnerable");
        if (!arr.is_array()) bad(path + ".vulnerable", "expected an array");
        t.vulnerable.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".vulnerable[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"device", "username", "password"});
            VulnerableSpec v;
            for (const char* key : {"device", "username", "password"})
                if (!arr[i].contains(key)) bad(p + "." + std::string(key), "required");
            v.device = get_string(arr[i].at("device"), p + ".device");
            v.credentials.username = get_string(arr[i].at("username"), p + ".username");
            v.credentials.password = get_string(arr[i].at("password"), p + ".password");
            t.vulnerable.push_back(v);
        }
    }
    if (j.contains("hardened")) {
        const json& arr = j.at("hardened");
        if (!arr.is_array()) bad(path + ".hardened", "expected an array");
        t.hardened.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = path + ".hardened[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"device", "username", "password"});
            for (const char* key : {"device", "username", "password"})
                if (!arr[i].contains(key)) bad(p + "." + std::string(key), "required");
            VulnerableSpec v;
            v.device = get_string(arr[i].at("device"), p + ".device");
            v.credentials.username = get_string(arr[i].at("username"), p + ".username");
            v.credentials.password = get_string(arr[i].at("password"), p + ".password");
            t.hardened.push_back(v);
        }
    }
    if (j.contains("scan_exclusions")) {
        const json& arr = j.at("scan_exclusions");
        if (!arr.is_array()) bad(path + ".scan_exclusions", "expected an array");
        t.scan_exclusions.clear();
        for (std::size_t i = 0; i < arr.size(); ++i)
            t.scan_exclusions.push_back(
                get_address(arr[i], path + ".scan_exclusions[" + std::to_string(i) + "]"));
    }
}

AttackCommand parse_attack_command(const json& j, const std::string& p, ScheduledAttack& row) {
    AttackCommand cmd;
    if (!j.contains("type")) bad(p + ".type", "required");
    const std::string type = get_string(j.at("type"), p + ".type");
    const auto parsed = attack_type_from_name(type);
    if (!parsed) bad(p + ".type", "unknown attack type: " + type);
    cmd.attack = *parsed;
    if (j.contains("target_device"))
        row.target_device = get_string(j.at("target_device"), p + ".target_device");
    if (j.contains("target")) cmd.target_addr = get_address(j.at("target"), p + ".target");
    if (row.target_device.empty() && cmd.target_addr.v4 == 0)
        bad(p, "needs target_device or target");
    if (j.contains("port")) {
        const int port = get_int(j.at("port"), p + ".port");
        if (port < 0 || port > 65535) bad(p + ".port", "port out of range");
        cmd.target_port = static_cast<std::uint16_t>(port);
    }
    if (!j.contains("duration_s")) bad(p + ".duration_s", "required");
    cmd.duration_s = get_number<double>(j.at("duration_s"), p + ".duration_s");
    if (!j.contains("rate_pps")) bad(p + ".rate_pps", "required");
    cmd.rate_pps_per_bot = get_number<double>(j.at("rate_pps"), p + ".rate_pps");
    if (j.contains("bots")) cmd.bot_count = get_int(j.at("bots"), p + ".bots");
    if (!cmd.valid()) bad(p, "duration_s and rate_pps must be positive");
    return cmd;
}

} // namespace

ScenarioConfig parse_scenario_json(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }

    ScenarioConfig cfg;
    require_keys(j, origin,
                 {"schema_version", "name", "seed", "duration_s", "series_bin_s", "topology",
                  "dns", "cnc", "loader", "bot", "dictionary", "telnet_scripts", "client_script",
                  "device_scripts", "victim", "client_traffic", "attacks", "events"});

    if (j.contains("schema_version")) {
        cfg.schema_version = get_int(j.at("schema_version"), "schema_version");
        if (cfg.schema_version != 1) bad("schema_version", "only version 1 is understood");
    }
    if (j.contains("name")) cfg.name = get_string(j.at("name"), "name");
    if (j.contains("seed")) cfg.root_seed = get_u64(j.at("seed"), "seed");
    if (j.contains("duration_s")) {
        cfg.duration_us = get_seconds(j.at("duration_s"), "duration_s");
        if (cfg.duration_us <= 0) bad("duration_s", "must be positive");
    }
    if (j.contains("series_bin_s")) {
        cfg.series_bin_s = get_number<double>(j.at("series_bin_s"), "series_bin_s");
        if (!(cfg.series_bin_s > 0)) bad("series_bin_s", "must be positive");
    }
    if (j.contains("topology")) parse_topology(j.at("topology"), cfg.topology);

    if (j.contains("dns")) {
        const json& d = j.at("dns");
        require_keys(d, "dns", {"records", "ttl_s", "backoff_base_s", "backoff_cap_s"});
        if (d.contains("records")) {
            const json& arr = d.at("records");
            if (!arr.is_array()) bad("dns.records", "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string p = "dns.records[" + std::to_string(i) + "]";
                require_keys(arr[i], p, {"domain", "device"});
                for (const char* key : {"domain", "device"})
                    if (!arr[i].contains(key)) bad(p + "." + std::string(key), "required");
                cfg.dns_records.push_back({get_string(arr[i].at("domain"), p + ".domain"),
                                           get_string(arr[i].at("device"), p + ".device")});
            }
        }
        if (d.contains("ttl_s")) {
            const int ttl = get_int(d.at("ttl_s"), "dns.ttl_s");
            if (ttl < 1) bad("dns.ttl_s", "must be at least 1");
            cfg.dns_ttl_s = static_cast<std::uint32_t>(ttl);
        }
        if (d.contains("backoff_base_s")) {
            cfg.dns_backoff_base_s = get_number<double>(d.at("backoff_base_s"), "dns.backoff_base_s");
            if (!(cfg.dns_backoff_base_s > 0)) bad("dns.backoff_base_s", "must be positive");
        }
        if (d.contains("backoff_cap_s")) {
            cfg.dns_backoff_cap_s = get_number<double>(d.at("backoff_cap_s"), "dns.backoff_cap_s");
            if (cfg.dns_backoff_cap_s < cfg.dns_backoff_base_s)
                bad("dns.backoff_cap_s", "cap below base");
        }
    }

    if (j.contains("cnc")) {
        const json& c = j.at("cnc");
        require_keys(c, "cnc",
                     {"domain", "port", "keepalive_interval_s", "keepalive_loss_tolerance",
                      "accounts", "whitelist"});
        if (c.contains("domain")) cfg.cnc_domain = get_string(c.at("domain"), "cnc.domain");
        if (c.contains("port"))
            cfg.cnc_port = static_cast<std::uint16_t>(get_int(c.at("port"), "cnc.port"));
        if (c.contains("keepalive_interval_s")) {
            cfg.keepalive_interval_us = get_seconds(c.at("keepalive_interval_s"), "cnc.keepalive_interval_s");
            if (cfg.keepalive_interval_us <= 0) bad("cnc.keepalive_interval_s", "must be positive");
        }
        if (c.contains("keepalive_loss_tolerance")) {
            cfg.keepalive_loss_tolerance =
                get_int(c.at("keepalive_loss_tolerance"), "cnc.keepalive_loss_tolerance");
            if (cfg.keepalive_loss_tolerance < 1)
                bad("cnc.keepalive_loss_tolerance", "must be at least 1");
        }
        if (c.contains("accounts")) {
            const json& arr = c.at("accounts");
            if (!arr.is_array() || arr.empty()) bad("cnc.accounts", "expected a non-empty array");
            cfg.accounts.clear();
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string p = "cnc.accounts[" + std::to_string(i) + "]";
                require_keys(arr[i], p, {"name", "max_bots"});
                CncAccountSpec a;
                if (!arr[i].contains("name")) bad(p + ".name", "required");
                a.name = get_string(arr[i].at("name"), p + ".name");
                if (arr[i].contains("max_bots"))
                    a.max_bots = get_int(arr[i].at("max_bots"), p + ".max_bots");
                cfg.accounts.push_back(a);
            }
        }
        if (c.contains("whitelist")) {
            const json& arr = c.at("whitelist");
            if (!arr.is_array()) bad("cnc.whitelist", "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i)
                cfg.cnc_whitelist.push_back(
                    get_string(arr[i], "cnc.whitelist[" + std::to_string(i) + "]"));
        }
    }

    if (j.contains("loader")) {
        const json& l = j.at("loader");
        require_keys(l, "loader",
                     {"report_domain", "report_port", "retry_failed_loads", "binary_id",
                      "binary_bytes", "segment_bytes", "download_duration_s"});
        if (l.contains("report_domain"))
            cfg.report_domain = get_string(l.at("report_domain"), "loader.report_domain");
        if (l.contains("report_port"))
            cfg.report_port =
                static_cast<std::uint16_t>(get_int(l.at("report_port"), "loader.report_port"));
        if (l.contains("retry_failed_loads"))
            cfg.retry_failed_loads = get_bool(l.at("retry_failed_loads"), "loader.retry_failed_loads");
        if (l.contains("binary_id")) cfg.binary_id = get_string(l.at("binary_id"), "loader.binary_id");
        if (l.contains("binary_bytes")) {
            const int v = get_int(l.at("binary_bytes"), "loader.binary_bytes");
            if (v < 1) bad("loader.binary_bytes", "must be positive");
            cfg.binary_bytes = static_cast<std::uint32_t>(v);
        }
        if (l.contains("segment_bytes")) {
            const int v = get_int(l.at("segment_bytes"), "loader.segment_bytes");
            if (v < 1) bad("loader.segment_bytes", "must be positive");
            cfg.segment_bytes = static_cast<std::uint32_t>(v);
        }
        if (l.contains("download_duration_s")) {
            cfg.download_duration_us =
                get_seconds(l.at("download_duration_s"), "loader.download_duration_s");
            if (cfg.download_duration_us <= 0) bad("loader.download_duration_s", "must be positive");
        }
    }

    if (j.contains("bot")) {
        const json& b = j.at("bot");
        require_keys(b, "bot",
                     {"seed_devices", "scan_rate_pps", "syn_timeout_s", "session_timeout_s",
                      "telnet_port", "max_attempts_per_connection", "prompt_byte_budget"});
        if (b.contains("seed_devices")) {
            const json& arr = b.at("seed_devices");
            if (!arr.is_array()) bad("bot.seed_devices", "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i)
                cfg.seed_devices.push_back(
                    get_string(arr[i], "bot.seed_devices[" + std::to_string(i) + "]"));
        }
        if (b.contains("scan_rate_pps")) {
            cfg.scan_rate_pps = get_number<double>(b.at("scan_rate_pps"), "bot.scan_rate_pps");
            if (!(cfg.scan_rate_pps > 0)) bad("bot.scan_rate_pps", "must be positive");
        }
        if (b.contains("syn_timeout_s"))
            cfg.syn_timeout_us = get_seconds(b.at("syn_timeout_s"), "bot.syn_timeout_s");
        if (b.contains("session_timeout_s"))
            cfg.session_timeout_us = get_seconds(b.at("session_timeout_s"), "bot.session_timeout_s");
        if (b.contains("telnet_port"))
            cfg.telnet_port = static_cast<std::uint16_t>(get_int(b.at("telnet_port"), "bot.telnet_port"));
        if (b.contains("max_attempts_per_connection")) {
            cfg.max_attempts_per_connection =
                get_int(b.at("max_attempts_per_connection"), "bot.max_attempts_per_connection");
            if (cfg.max_attempts_per_connection < 1)
                bad("bot.max_attempts_per_connection", "must be at least 1");
        }
        if (b.contains("prompt_byte_budget")) {
            cfg.prompt_byte_budget = get_int(b.at("prompt_byte_budget"), "bot.prompt_byte_budget");
            if (cfg.prompt_byte_budget < 1) bad("bot.prompt_byte_budget", "must be at least 1");
        }
    }

    if (j.contains("dictionary")) {
        const json& arr = j.at("dictionary");
        if (!arr.is_array()) bad("dictionary", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = "dictionary[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"username", "password"});
            for (const char* key : {"username", "password"})
                if (!arr[i].contains(key)) bad(p + "." + std::string(key), "required");
            cfg.dictionary.entries.push_back(
                {get_string(arr[i].at("username"), p + ".username"),
                 get_string(arr[i].at("password"), p + ".password")});
        }
    }

    cfg.scripts["default"] = default_negotiation_script();
    if (j.contains("telnet_scripts")) {
        const json& obj = j.at("telnet_scripts");
        require_object(obj, "telnet_scripts");
        for (const auto& item : obj.items())
            cfg.scripts[item.key()] = parse_script(item.value(), "telnet_scripts." + item.key());
    }
    if (j.contains("client_script"))
        cfg.client_script = get_string(j.at("client_script"), "client_script");
    if (j.contains("device_scripts")) {
        const json& obj = j.at("device_scripts");
        require_object(obj, "device_scripts");
        for (const auto& item : obj.items())
            cfg.device_scripts[item.key()] =
                get_string(item.value(), "device_scripts." + item.key());
    }

    if (j.contains("victim")) {
        const json& v = j.at("victim");
        require_keys(v, "victim", {"port", "capacity_pps", "queue_len"});
        if (v.contains("port"))
            cfg.victim_port = static_cast<std::uint16_t>(get_int(v.at("port"), "victim.port"));
        if (v.contains("capacity_pps")) {
            cfg.victim_capacity_pps = get_number<double>(v.at("capacity_pps"), "victim.capacity_pps");
            if (!(cfg.victim_capacity_pps > 0)) bad("victim.capacity_pps", "must be positive");
        }
        if (v.contains("queue_len")) {
            const int q = get_int(v.at("queue_len"), "victim.queue_len");
            if (q < 1) bad("victim.queue_len", "must be at least 1");
            cfg.victim_queue_len = static_cast<std::uint32_t>(q);
        }
    }

    if (j.contains("client_traffic")) {
        const json& c = j.at("client_traffic");
        require_keys(c, "client_traffic",
                     {"period_s", "timeout_s", "payload_bytes", "segment_bytes",
                      "dup_ack_threshold", "max_retransmits"});
        if (c.contains("period_s")) {
            cfg.client_traffic.period_us = get_seconds(c.at("period_s"), "client_traffic.period_s");
            if (cfg.client_traffic.period_us <= 0) bad("client_traffic.period_s", "must be positive");
        }
        if (c.contains("timeout_s")) {
            cfg.client_traffic.timeout_us = get_seconds(c.at("timeout_s"), "client_traffic.timeout_s");
            if (cfg.client_traffic.timeout_us <= 0) bad("client_traffic.timeout_s", "must be positive");
        }
        if (c.contains("payload_bytes"))
            cfg.client_traffic.payload_bytes = static_cast<std::uint32_t>(
                get_int(c.at("payload_bytes"), "client_traffic.payload_bytes"));
        if (c.contains("segment_bytes"))
            cfg.client_traffic.segment_bytes = static_cast<std::uint32_t>(
                get_int(c.at("segment_bytes"), "client_traffic.segment_bytes"));
        if (c.contains("dup_ack_threshold")) {
            cfg.client_traffic.dup_ack_threshold =
                get_int(c.at("dup_ack_threshold"), "client_traffic.dup_ack_threshold");
            if (cfg.client_traffic.dup_ack_threshold < 1)
                bad("client_traffic.dup_ack_threshold", "must be at least 1");
        }
        if (c.contains("max_retransmits")) {
            cfg.client_traffic.max_retransmits =
                get_int(c.at("max_retransmits"), "client_traffic.max_retransmits");
            if (cfg.client_traffic.max_retransmits < 0)
                bad("client_traffic.max_retransmits", "negative");
        }
    }

    if (j.contains("attacks")) {
        const json& arr = j.at("attacks");
        if (!arr.is_array()) bad("attacks", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = "attacks[" + std::to_string(i) + "]";
            require_keys(arr[i], p,
                         {"at_s", "account", "type", "target_device", "target", "port",
                          "duration_s", "rate_pps", "bots"});
            ScheduledAttack row;
            if (!arr[i].contains("at_s")) bad(p + ".at_s", "required");
            row.at_us = get_seconds(arr[i].at("at_s"), p + ".at_s");
            if (arr[i].contains("account"))
                row.account = get_string(arr[i].at("account"), p + ".account");
            row.command = parse_attack_command(arr[i], p, row);
            cfg.attacks.push_back(row);
        }
    }

    if (j.contains("events")) {
        const json& arr = j.at("events");
        if (!arr.is_array()) bad("events", "expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string p = "events[" + std::to_string(i) + "]";
            require_keys(arr[i], p, {"at_s", "kind", "domain", "device", "address"});
            ScheduledEvent ev;
            if (!arr[i].contains("at_s")) bad(p + ".at_s", "required");
            ev.at_us = get_seconds(arr[i].at("at_s"), p + ".at_s");
            if (!arr[i].contains("kind")) bad(p + ".kind", "required");
            ev.kind = get_string(arr[i].at("kind"), p + ".kind");
            if (arr[i].contains("domain")) ev.domain = get_string(arr[i].at("domain"), p + ".domain");
            if (arr[i].contains("device")) ev.device = get_string(arr[i].at("device"), p + ".device");
            if (arr[i].contains("address"))
                ev.address = get_string(arr[i].at("address"), p + ".address");
            if (ev.kind == "dns_remap") {
                if (ev.domain.empty() || ev.device.empty())
                    bad(p, "dns_remap needs domain and device");
            } else if (ev.kind == "set_online" || ev.kind == "set_offline") {
                if (ev.device.empty()) bad(p, ev.kind + " needs device");
            } else if (ev.kind == "inject_rogue") {
                if (!Address::parse(ev.address)) bad(p + ".address", "expected an address");
            } else {
                bad(p + ".kind", "unknown event kind: " + ev.kind);
            }
            cfg.events.push_back(ev);
        }
    }

    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open scenario file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    ScenarioConfig cfg = parse_scenario_json(buf.str(), path);
    validate_scenario(cfg);
    return cfg;
}

void validate_scenario(const ScenarioConfig& cfg) {
    // let topology construction surface its own structural errors first
    Topology topo = build_topology(cfg.topology);

    // referential problems are ValidationError, unlike the parser's shape
    // errors; shadows the file-level helper on purpose
    const auto bad = [](const std::string& field, const std::string& why) {
        throw ValidationError(field, field + ": " + why);
    };

    const auto device_exists = [&](const std::string& name) {
        return topo.find_by_name(name).has_value();
    };

    std::set<std::string> domains;
    for (std::size_t i = 0; i < cfg.dns_records.size(); ++i) {
        const auto& rec = cfg.dns_records[i];
        const std::string p = "dns.records[" + std::to_string(i) + "]";
        if (!domains.insert(rec.domain).second) bad(p + ".domain", "duplicate domain: " + rec.domain);
        if (!device_exists(rec.device)) bad(p + ".device", "no such device: " + rec.device);
    }
    if (!domains.count(cfg.cnc_domain))
        throw ValidationError("cnc_domain",
                              "cnc.domain has no dns record: " + cfg.cnc_domain);
    if (!domains.count(cfg.report_domain))
        throw ValidationError("report_domain",
                              "loader.report_domain has no dns record: " + cfg.report_domain);

    const auto role_of_domain = [&](const std::string& domain) {
        for (const auto& rec : cfg.dns_records)
            if (rec.domain == domain)
                return topo.device(*topo.find_by_name(rec.device)).role;
        return DeviceRole::IoTDevice;
    };
    bool has_dns = false;
    for (const auto& dev : topo.devices())
        if (dev.role == DeviceRole::DnsServer) has_dns = true;
    if (!has_dns) bad("topology.lan_servers", "no dns server in the topology");
    if (role_of_domain(cfg.cnc_domain) != DeviceRole::CncServer)
        throw ValidationError("cnc_domain", "cnc.domain must point at a cnc server");
    if (role_of_domain(cfg.report_domain) != DeviceRole::ScanListenServer)
        throw ValidationError("report_domain",
                              "loader.report_domain must point at a scanlisten server");

    std::set<std::string> account_names;
    for (const auto& a : cfg.accounts)
        if (!account_names.insert(a.name).second)
            bad("cnc.accounts", "duplicate account: " + a.name);
    for (std::size_t i = 0; i < cfg.cnc_whitelist.size(); ++i)
        if (!Address::parse(cfg.cnc_whitelist[i]))
            bad("cnc.whitelist[" + std::to_string(i) + "]", "expected an address");

    for (std::size_t i = 0; i < cfg.seed_devices.size(); ++i) {
        const std::string p = "bot.seed_devices[" + std::to_string(i) + "]";
        const auto dev = topo.find_by_name(cfg.seed_devices[i]);
        if (!dev) bad(p, "no such device: " + cfg.seed_devices[i]);
        if (topo.device(*dev).role != DeviceRole::IoTDevice) bad(p, "seed must be an iot device");
    }

    // "default" is always available: the run installs the stock script
    // under that name when the scenario does not define its own
    const auto script_exists = [&](const std::string& name) {
        return name == "default" || cfg.scripts.count(name) > 0;
    };
    if (!script_exists(cfg.client_script))
        bad("client_script", "no such script: " + cfg.client_script);
    for (const auto& [device, script] : cfg.device_scripts) {
        if (!device_exists(device)) bad("device_scripts." + device, "no such device");
        if (!script_exists(script)) bad("device_scripts." + device, "no such script: " + script);
    }

    if (cfg.segment_bytes > cfg.binary_bytes)
        bad("loader.segment_bytes", "segment larger than the binary");

    for (std::size_t i = 0; i < cfg.attacks.size(); ++i) {
        const auto& a = cfg.attacks[i];
        const std::string p = "attacks[" + std::to_string(i) + "]";
        if (!account_names.count(a.account)) bad(p + ".account", "no such account: " + a.account);
        if (!a.target_device.empty() && !device_exists(a.target_device))
            bad(p + ".target_device", "no such device: " + a.target_device);
        if (a.target_device.empty() &&
            !cfg.topology.contained_block.contains(a.command.target_addr))
            bad(p + ".target", "target outside the contained block");
    }

    for (std::size_t i = 0; i < cfg.events.size(); ++i) {
        const auto& ev = cfg.events[i];
        const std::string p = "events[" + std::to_string(i) + "]";
        if (ev.kind == "dns_remap") {
            if (!domains.count(ev.domain)) bad(p + ".domain", "no dns record for: " + ev.domain);
            if (!device_exists(ev.device)) bad(p + ".device", "no such device: " + ev.device);
        } else if (ev.kind == "set_online" || ev.kind == "set_offline") {
            if (!device_exists(ev.device)) bad(p + ".device", "no such device: " + ev.device);
        }
    }
}

namespace {

json topology_json(const TopologySpec& t) {
    json j;
    j["contained_block"] = t.contained_block.str();
    j["routers"] = t.routers;
    j["gateways"] = json::array();
    for (const auto& g : t.gateways)
        j["gateways"].push_back({{"router", g.router}, {"iot_devices", g.iot_devices}});
    j["lan_servers"] = t.lan_servers;
    j["clients"] = json::array();
    for (const auto& c : t.clients) j["clients"].push_back({{"router", c.router}, {"kind", c.kind}});
    j["latency_ms"] = json::object();
    for (const auto& [cls, ms] : t.latency_ms) j["latency_ms"][cls] = ms;
    j["vulnerable"] = json::array();
    for (const auto& v : t.vulnerable)
        j["vulnerable"].push_back({{"device", v.device},
                                   {"username", v.credentials.username},
                                   {"password", v.credentials.password}});
    j["hardened"] = json::array();
    for (const auto& v : t.hardened)
        j["hardened"].push_back({{"device", v.device},
                                 {"username", v.credentials.username},
                                 {"password", v.credentials.password}});
    j["scan_exclusions"] = json::array();
    for (const auto& a : t.scan_exclusions) j["scan_exclusions"].push_back(a.str());
    return j;
}

json script_json(const NegotiationScript& s) {
    json j;
    const auto steps = [](const std::vector<ScriptStep>& v) {
        json arr = json::array();
        for (const auto& step : v)
            arr.push_back({{"expect", hex_from_bytes(step.expect)},
                           {"respond", hex_from_bytes(step.respond)}});
        return arr;
    };
    j["pre_steps"] = steps(s.pre_steps);
    j["interstitial_steps"] = steps(s.interstitial_steps);
    j["username_prompt"] = hex_from_bytes(s.username_prompt);
    j["password_prompt"] = hex_from_bytes(s.password_prompt);
    j["success_banner"] = hex_from_bytes(s.success_banner);
    j["failure_banner"] = hex_from_bytes(s.failure_banner);
    return j;
}

} // namespace

std::string effective_config_json(const ScenarioConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["name"] = cfg.name;
    j["seed"] = cfg.root_seed;
    j["duration_s"] = seconds_from_us(cfg.duration_us);
    j["series_bin_s"] = cfg.series_bin_s;
    j["topology"] = topology_json(cfg.topology);

    j["dns"]["records"] = json::array();
    for (const auto& rec : cfg.dns_records)
        j["dns"]["records"].push_back({{"domain", rec.domain}, {"device", rec.device}});
    j["dns"]["ttl_s"] = cfg.dns_ttl_s;
    j["dns"]["backoff_base_s"] = cfg.dns_backoff_base_s;
    j["dns"]["backoff_cap_s"] = cfg.dns_backoff_cap_s;

    j["cnc"]["domain"] = cfg.cnc_domain;
    j["cnc"]["port"] = cfg.cnc_port;
    j["cnc"]["keepalive_interval_s"] = seconds_from_us(cfg.keepalive_interval_us);
    j["cnc"]["keepalive_loss_tolerance"] = cfg.keepalive_loss_tolerance;
    j["cnc"]["accounts"] = json::array();
    for (const auto& a : cfg.accounts)
        j["cnc"]["accounts"].push_back({{"name", a.name}, {"max_bots", a.max_bots}});
    j["cnc"]["whitelist"] = cfg.cnc_whitelist;

    j["loader"]["report_domain"] = cfg.report_domain;
    j["loader"]["report_port"] = cfg.report_port;
    j["loader"]["retry_failed_loads"] = cfg.retry_failed_loads;
    j["loader"]["binary_id"] = cfg.binary_id;
    j["loader"]["binary_bytes"] = cfg.binary_bytes;
    j["loader"]["segment_bytes"] = cfg.segment_bytes;
    j["loader"]["download_duration_s"] = seconds_from_us(cfg.download_duration_us);

    j["bot"]["seed_devices"] = cfg.seed_devices;
    j["bot"]["scan_rate_pps"] = cfg.scan_rate_pps;
    j["bot"]["syn_timeout_s"] = seconds_from_us(cfg.syn_timeout_us);
    j["bot"]["session_timeout_s"] = seconds_from_us(cfg.session_timeout_us);
    j["bot"]["telnet_port"] = cfg.telnet_port;
    j["bot"]["max_attempts_per_connection"] = cfg.max_attempts_per_connection;
    j["bot"]["prompt_byte_budget"] = cfg.prompt_byte_budget;

    j["dictionary"] = json::array();
    for (const auto& c : cfg.dictionary.entries)
        j["dictionary"].push_back({{"username", c.username}, {"password", c.password}});

    j["telnet_scripts"] = json::object();
    for (const auto& [name, script] : cfg.scripts) j["telnet_scripts"][name] = script_json(script);
    j["client_script"] = cfg.client_script;
    j["device_scripts"] = json::object();
    for (const auto& [device, script] : cfg.device_scripts) j["device_scripts"][device] = script;

    j["victim"]["port"] = cfg.victim_port;
    j["victim"]["capacity_pps"] = cfg.victim_capacity_pps;
    j["victim"]["queue_len"] = cfg.victim_queue_len;

    j["client_traffic"]["period_s"] = seconds_from_us(cfg.client_traffic.period_us);
    j["client_traffic"]["timeout_s"] = seconds_from_us(cfg.client_traffic.timeout_us);
    j["client_traffic"]["payload_bytes"] = cfg.client_traffic.payload_bytes;
    j["client_traffic"]["segment_bytes"] = cfg.client_traffic.segment_bytes;
    j["client_traffic"]["dup_ack_threshold"] = cfg.client_traffic.dup_ack_threshold;
    j["client_traffic"]["max_retransmits"] = cfg.client_traffic.max_retransmits;

    j["attacks"] = json::array();
    for (const auto& a : cfg.attacks) {
        json row;
        row["at_s"] = seconds_from_us(a.at_us);
        row["account"] = a.account;
        row["type"] = attack_type_name(a.command.attack);
        if (!a.target_device.empty()) row["target_device"] = a.target_device;
        if (a.command.target_addr.v4 != 0) row["target"] = a.command.target_addr.str();
        row["port"] = a.command.target_port;
        row["duration_s"] = a.command.duration_s;
        row["rate_pps"] = a.command.rate_pps_per_bot;
        row["bots"] = a.command.bot_count;
        j["attacks"].push_back(row);
    }

    j["events"] = json::array();
    for (const auto& ev : cfg.events) {
        json row;
        row["at_s"] = seconds_from_us(ev.at_us);
        row["kind"] = ev.kind;
        if (!ev.domain.empty()) row["domain"] = ev.domain;
        if (!ev.device.empty()) row["device"] = ev.device;
        if (!ev.address.empty()) row["address"] = ev.address;
        j["events"].push_back(row);
    }

    return j.dump();
}

} // namespace botsim
