// botsim: run contained botnet scenarios and export their telemetry.
//
// Verbs:
//   validate <scenario.json>             check a scenario and exit
//   run      <scenario.json> [opts]      run, writing trace/summary/series
//   series   <scenario.json> [opts]      run, writing only the series files
//   export   <in> <out>                  convert a trace (.jsonl <-> .csv)
//
// Exit codes: 0 ok, 2 scenario/validation error, 3 containment violation,
// 1 anything else.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <system_error>

#include <CLI11.hpp>

#include "botsim/errors.hpp"
#include "botsim/runner.hpp"

namespace {

struct RunOptions {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> until_s;
    std::string out_dir;
};

botsim::ScenarioConfig load_with_overrides(const RunOptions& opt) {
    botsim::ScenarioConfig cfg = botsim::load_scenario(opt.scenario_path);
    if (opt.seed) cfg.root_seed = *opt.seed;
    if (opt.until_s) {
        if (*opt.until_s <= 0)
            throw botsim::ValidationError("--until", "duration must be positive");
        cfg.duration_us = botsim::us_from_seconds(*opt.until_s);
    }
    return cfg;
}

int cmd_validate(const std::string& path) {
    const botsim::ScenarioConfig cfg = botsim::load_scenario(path);
    std::printf("ok: %s (seed %llu, duration %.3fs)\n", cfg.name.c_str(),
                static_cast<unsigned long long>(cfg.root_seed),
                botsim::seconds_from_us(cfg.duration_us));
    return 0;
}

int cmd_run(const RunOptions& opt) {
    const botsim::ScenarioConfig cfg = load_with_overrides(opt);
    const std::string out_dir = opt.out_dir.empty() ? "out/" + cfg.name : opt.out_dir;
    const botsim::RunResult result = botsim::run_scenario_to_dir(cfg, out_dir);
    std::printf("run %s: %llu events, %llu sent / %llu delivered / %llu dropped, %lld ms\n",
                cfg.name.c_str(),
                static_cast<unsigned long long>(result.stats.events_processed),
                static_cast<unsigned long long>(result.stats.packets_sent),
                static_cast<unsigned long long>(result.stats.packets_delivered),
                static_cast<unsigned long long>(result.stats.packets_dropped),
                static_cast<long long>(result.stats.wall_ms));
    std::printf("wrote %s/trace.jsonl, summary.txt and %zu series files\n", out_dir.c_str(),
                result.series.size());
    return 0;
}

int cmd_series(const RunOptions& opt, const std::string& bot_name) {
    const botsim::ScenarioConfig cfg = load_with_overrides(opt);
    const std::string out_dir = opt.out_dir.empty() ? "out/" + cfg.name : opt.out_dir;
    botsim::RunResult result = botsim::run_scenario(cfg);

    if (!bot_name.empty()) {
        const auto dev = result.world->topo().find_by_name(bot_name);
        if (!dev) throw botsim::UnknownBot("no such device: " + bot_name);
        const botsim::Address addr = result.world->topo().device(*dev).addr;
        result.series["bot_cnc_volume"] = botsim::series_bot_cnc_volume(
            result.world->sim().trace().records(), addr,
            botsim::us_from_seconds(cfg.series_bin_s), cfg.duration_us);
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw botsim::IoError("cannot create " + out_dir + ": " + ec.message());
    for (const auto& [name, series] : result.series) {
        std::ofstream out(out_dir + "/series_" + name + ".csv", std::ios::binary);
        if (!out) throw botsim::IoError("cannot write series_" + name + ".csv");
        out << botsim::series_csv(series);
        std::printf("series %-16s total %llu\n", name.c_str(),
                    static_cast<unsigned long long>(series.total()));
    }
    return 0;
}

int cmd_export(const std::string& in_path, const std::string& out_path) {
    const std::size_t n = botsim::export_trace(in_path, out_path);
    std::printf("exported %zu records to %s\n", n, out_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"contained botnet scenario simulator"};
    app.require_subcommand(1);

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("scenario", validate_path, "scenario JSON file")->required();

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "run a scenario, writing all outputs");
    run->add_option("scenario", run_opt.scenario_path, "scenario JSON file")->required();
    run->add_option("--seed", run_opt.seed, "override the root seed");
    run->add_option("--until", run_opt.until_s, "override the run duration (seconds)");
    run->add_option("--out-dir", run_opt.out_dir, "output directory (default out/<name>)");

    RunOptions series_opt;
    std::string series_bot;
    CLI::App* series = app.add_subcommand("series", "run a scenario, writing only series files");
    series->add_option("scenario", series_opt.scenario_path, "scenario JSON file")->required();
    series->add_option("--seed", series_opt.seed, "override the root seed");
    series->add_option("--until", series_opt.until_s, "override the run duration (seconds)");
    series->add_option("--out-dir", series_opt.out_dir, "output directory (default out/<name>)");
    series->add_option("--bot", series_bot, "restrict bot_cnc_volume to one device");

    std::string export_in, export_out;
    CLI::App* exp = app.add_subcommand("export", "convert a trace between jsonl and csv");
    exp->add_option("input", export_in, "input trace (.jsonl or .csv)")->required();
    exp->add_option("output", export_out, "output trace (.jsonl or .csv)")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(validate_path);
        if (run->parsed()) return cmd_run(run_opt);
        if (series->parsed()) return cmd_series(series_opt, series_bot);
        if (exp->parsed()) return cmd_export(export_in, export_out);
    } catch (const botsim::ContainmentViolation& e) {
        std::fprintf(stderr, "containment violation: %s\n", e.what());
        return 3;
    } catch (const botsim::ValidationError& e) {
        std::fprintf(stderr, "validation error (%s): %s\n", e.field.c_str(), e.what());
        return 2;
    } catch (const botsim::ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return 2;
    } catch (const botsim::TopologySpecError& e) {
        std::fprintf(stderr, "topology error: %s\n", e.what());
        return 2;
    } catch (const botsim::AddressExhaustion& e) {
        std::fprintf(stderr, "address exhaustion: %s\n", e.what());
        return 2;
    } catch (const botsim::UnknownBot& e) {
        std::fprintf(stderr, "unknown bot: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
