#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "botsim/engine.hpp"
#include "botsim/scenario.hpp"
#include "botsim/series.hpp"
#include "botsim/world.hpp"

namespace botsim {

struct RunResult {
    RunStats stats;
    std::string summary;
    std::map<std::string, TimeSeries> series;
    std::unique_ptr<World> world; // kept alive so callers can inspect state
};

/// Run a scenario entirely in memory (tests, bindings).
RunResult run_scenario(const ScenarioConfig& cfg);

/// Run a scenario and write trace.jsonl (streamed during the run),
/// summary.txt and series_*.csv into out_dir. Creates the directory.
RunResult run_scenario_to_dir(const ScenarioConfig& cfg, const std::string& out_dir);

/// Derive the standard time series from a finished trace.
std::map<std::string, TimeSeries> build_series(const World& world,
                                               const std::vector<TraceRecord>& records);

/// Keep-alive/command packet sends per bin, optionally restricted to one
/// bot's address. Throws UnknownBot when the address never appears in the
/// trace at all.
TimeSeries series_bot_cnc_volume(const std::vector<TraceRecord>& records,
                                 std::optional<Address> bot, SimTime bin_us,
                                 SimTime duration_us);

/// Send times of the bot's scan packets, in trace order. Throws UnknownBot
/// when the address never appears in the trace.
std::vector<SimTime> scan_transmission_times(const std::vector<TraceRecord>& records,
                                             Address bot);

/// Human-readable run report: engine stats, controller tables, infections,
/// loader jobs, client stats, and the effective configuration echo.
std::string build_summary(const World& world, const RunStats& stats);

/// Re-emit a trace file in the other format (jsonl <-> csv), returning the
/// number of records converted. Format picked from the file extensions.
std::size_t export_trace(const std::string& in_path, const std::string& out_path);

} // namespace botsim
