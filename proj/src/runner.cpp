#include "botsim/runner.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "botsim/errors.hpp"
#include "botsim/trace.hpp"

namespace botsim {

namespace {

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("short write to " + path);
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

namespace {

bool address_seen(const std::vector<TraceRecord>& records, Address a) {
    for (const auto& r : records)
        if (r.src == a || r.dst == a) return true;
    return false;
}

} // namespace

TimeSeries series_bot_cnc_volume(const std::vector<TraceRecord>& records,
                                 std::optional<Address> bot, SimTime bin_us,
                                 SimTime duration_us) {
    if (bot && !address_seen(records, *bot))
        throw UnknownBot("no trace records touch " + bot->str());
    TimeSeries s = make_series("bot_cnc_volume", bin_us, duration_us);
    for (const auto& r : records) {
        if (r.event != TraceEvent::Send) continue;
        if (r.tag != PacketTag::CncKeepAlive && r.tag != PacketTag::CncCommand) continue;
        if (bot && r.src != *bot && r.dst != *bot) continue;
        series_add(s, r.t);
    }
    return s;
}

std::vector<SimTime> scan_transmission_times(const std::vector<TraceRecord>& records,
                                             Address bot) {
    if (!address_seen(records, bot))
        throw UnknownBot("no trace records touch " + bot.str());
    std::vector<SimTime> out;
    for (const auto& r : records)
        if (r.event == TraceEvent::Send && r.tag == PacketTag::Scan && r.src == bot)
            out.push_back(r.t);
    return out;
}

std::map<std::string, TimeSeries> build_series(const World& world,
                                               const std::vector<TraceRecord>& records) {
    const auto& cfg = world.config();
    const SimTime bin = us_from_seconds(cfg.series_bin_s);
    const SimTime dur = cfg.duration_us;

    std::map<std::string, TimeSeries> out;
    auto& cnc_volume = out["bot_cnc_volume"] = make_series("bot_cnc_volume", bin, dur);
    auto& scan_sends = out["scan_sends"] = make_series("scan_sends", bin, dur);
    auto& victim_arrivals = out["victim_arrivals"] = make_series("victim_arrivals", bin, dur);
    auto& victim_served = out["victim_served"] = make_series("victim_served", bin, dur);
    auto& victim_dropped = out["victim_dropped"] = make_series("victim_dropped", bin, dur);
    auto& legit_success = out["legit_success"] = make_series("legit_success", bin, dur);
    auto& attack_sends = out["attack_sends"] = make_series("attack_sends", bin, dur);

    const VictimNode* victim = const_cast<World&>(world).victim();
    const Address victim_addr = victim ? victim->addr() : Address{};
    const std::uint16_t victim_port = cfg.victim_port;

    // request send time by session id, resolved when the response lands
    std::map<std::uint64_t, SimTime> udp_requests;

    for (const auto& r : records) {
        if (r.event == TraceEvent::Send &&
            (r.tag == PacketTag::CncKeepAlive || r.tag == PacketTag::CncCommand))
            series_add(cnc_volume, r.t);

        if (r.event == TraceEvent::Send && r.tag == PacketTag::Scan)
            series_add(scan_sends, r.t);

        if (r.event == TraceEvent::Send && r.tag == PacketTag::AttackFlood)
            series_add(attack_sends, r.t);

        if (victim && r.dst == victim_addr &&
            (r.transport == Transport::Gre || r.dst_port == victim_port)) {
            if (r.event == TraceEvent::Deliver) {
                series_add(victim_arrivals, r.t);
                series_add(victim_served, r.t);
            } else if (r.event == TraceEvent::Drop) {
                series_add(victim_arrivals, r.t);
                series_add(victim_dropped, r.t);
            }
        }

        if (r.event == TraceEvent::Send && r.tag == PacketTag::LegitRequest &&
            r.transport == Transport::Udp && r.session_id != 0)
            udp_requests[r.session_id] = r.t;

        if (r.event == TraceEvent::Deliver && r.tag == PacketTag::LegitResponse &&
            r.transport == Transport::Udp && r.session_id != 0) {
            const auto it = udp_requests.find(r.session_id);
            if (it != udp_requests.end()) {
                series_add(legit_success, it->second);
                udp_requests.erase(it);
            }
        }
    }
    return out;
}

std::string build_summary(const World& world, const RunStats& stats) {
    const auto& cfg = world.config();
    World& w = const_cast<World&>(world);
    std::ostringstream out;

    out << "[run]\n";
    out << "name = " << cfg.name << "\n";
    out << "seed = " << cfg.root_seed << "\n";
    out << "duration_s = " << seconds_from_us(cfg.duration_us) << "\n";
    out << "events_processed = " << stats.events_processed << "\n";
    out << "packets_sent = " << stats.packets_sent << "\n";
    out << "packets_delivered = " << stats.packets_delivered << "\n";
    out << "packets_dropped = " << stats.packets_dropped << "\n";
    out << "wall_ms = " << stats.wall_ms << "\n";

    out << "\n[infections]\n";
    std::size_t seeded = 0;
    for (const auto& rec : world.infections())
        if (rec.seeded) ++seeded;
    out << "count = " << world.infections().size() << "\n";
    out << "seeded = " << seeded << "\n";
    for (const auto& rec : world.infections()) {
        out << "infected " << w.topo().device(rec.device).name << " at_us " << rec.at
            << (rec.seeded ? " seeded" : "") << "\n";
    }

    for (CncNode* cnc : w.cnc_nodes()) {
        out << "\n[cnc " << w.topo().device(cnc->id()).name << "]\n";
        out << "registered = " << cnc->registered().size() << "\n";
        out << "deregistrations = " << cnc->deregistrations() << "\n";
        out << "rejected_commands = " << cnc->rejected_commands() << "\n";
        for (const auto& [addr, row] : cnc->registered())
            out << "bot " << addr.str() << " registered_at_us " << row.registered_at
                << " last_seen_us " << row.last_seen << "\n";
        for (const auto& h : cnc->history())
            out << "attack at_us " << h.at << " account " << h.account << " type "
                << attack_type_name(h.command.attack) << " target " << h.command.target_addr.str()
                << ":" << h.command.target_port << " duration_s " << h.command.duration_s
                << " rate " << h.command.rate_pps_per_bot << " dispatched " << h.dispatched
                << "\n";
    }

    if (w.scan_listen()) {
        out << "\n[reports]\n";
        out << "received = " << w.scan_listen()->reports() << "\n";
    }

    if (w.loader()) {
        out << "\n[loader]\n";
        const auto& jobs = w.loader()->jobs();
        std::map<LoaderJobState, int> by_state;
        for (const auto& [key, job] : jobs) ++by_state[job.state];
        out << "jobs = " << jobs.size() << "\n";
        out << "done = " << by_state[LoaderJobState::Done] << "\n";
        out << "failed = " << by_state[LoaderJobState::Failed] << "\n";
        out << "duplicates_ignored = " << w.loader()->duplicates_ignored() << "\n";
        for (const auto& [key, job] : jobs)
            out << "job " << job.victim.str() << ":" << job.port << " state "
                << loader_job_state_name(job.state) << " started_us " << job.started_at
                << " finished_us " << job.finished_at << "\n";
    }

    if (w.victim()) {
        out << "\n[victim]\n";
        out << "served = " << w.victim()->served() << "\n";
        out << "dropped = " << w.victim()->dropped() << "\n";
    }

    if (!w.client_nodes().empty()) {
        out << "\n[clients]\n";
        for (Node* node : w.client_nodes()) {
            const ClientStats* cs = nullptr;
            const char* kind = "idle";
            if (auto* udp = dynamic_cast<UdpClientNode*>(node)) {
                cs = &udp->stats();
                kind = "udp";
            } else if (auto* tcp = dynamic_cast<TcpClientNode*>(node)) {
                cs = &tcp->stats();
                kind = "tcp";
            }
            out << "client " << w.topo().device(node->id()).name << " kind " << kind;
            if (cs)
                out << " sent " << cs->sent << " succeeded " << cs->succeeded << " timed_out "
                    << cs->timed_out << " dup_acks " << cs->dup_acks << " retransmissions "
                    << cs->retransmissions << " resets " << cs->resets;
            out << "\n";
        }
    }

    out << "\n[bots]\n";
    for (const BotAgent* bot : world.bots()) {
        out << "bot " << w.topo().device(bot->device()).name << " state "
            << bot_state_name(bot->state()) << " scans " << bot->scans_sent() << " logins "
            << bot->logins_succeeded() << " reports " << bot->reports_sent() << " attacks "
            << bot->attack_packets_sent() << " desyncs " << bot->desyncs() << "\n";
    }

    out << "\n[effective_config]\n";
    out << effective_config_json(world.config()) << "\n";
    return out.str();
}

RunResult run_scenario(const ScenarioConfig& cfg) {
    validate_scenario(cfg);
    RunResult result;
    result.world = std::make_unique<World>(cfg);
    result.world->start();
    result.stats = result.world->run_to_end();
    result.series = build_series(*result.world, result.world->sim().trace().records());
    result.summary = build_summary(*result.world, result.stats);
    return result;
}

RunResult run_scenario_to_dir(const ScenarioConfig& cfg, const std::string& out_dir) {
    validate_scenario(cfg);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

    RunResult result;
    result.world = std::make_unique<World>(cfg);
    result.world->sim().trace().open_file(out_dir + "/trace.jsonl");
    result.world->start();
    result.stats = result.world->run_to_end();
    result.world->sim().trace().close();

    result.series = build_series(*result.world, result.world->sim().trace().records());
    result.summary = build_summary(*result.world, result.stats);

    write_text_file(out_dir + "/summary.txt", result.summary);
    for (const auto& [name, series] : result.series)
        write_text_file(out_dir + "/series_" + name + ".csv", series_csv(series));
    return result;
}

std::size_t export_trace(const std::string& in_path, const std::string& out_path) {
    std::vector<TraceRecord> records;
    if (ends_with(in_path, ".jsonl")) {
        records = load_trace_jsonl(in_path);
    } else if (ends_with(in_path, ".csv")) {
        std::ifstream in(in_path, std::ios::binary);
        if (!in) throw IoError("cannot read " + in_path);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (first && line == trace_csv_header()) {
                first = false;
                continue;
            }
            first = false;
            records.push_back(trace_parse_csv_line(line));
        }
    } else {
        throw ValidationError("export", "input must end in .jsonl or .csv: " + in_path);
    }

    std::ostringstream out;
    if (ends_with(out_path, ".jsonl")) {
        for (const auto& r : records) out << trace_jsonl_line(r) << "\n";
    } else if (ends_with(out_path, ".csv")) {
        out << trace_csv_header() << "\n";
        for (const auto& r : records) out << trace_csv_line(r) << "\n";
    } else {
        throw ValidationError("export", "output must end in .jsonl or .csv: " + out_path);
    }
    write_text_file(out_path, out.str());
    return records.size();
}

} // namespace botsim
