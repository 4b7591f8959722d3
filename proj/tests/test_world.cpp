#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>
#include <vector>

#include "botsim/errors.hpp"
#include "botsim/runner.hpp"
#include "botsim/scenario.hpp"
#include "botsim/world.hpp"

using namespace botsim;

namespace {

const std::string kDir = BOTSIM_SCENARIO_DIR;

ScenarioConfig shipped(const std::string& name) { return load_scenario(kDir + "/" + name); }

} // namespace

TEST_CASE("the stock scenario propagates to every vulnerable device") {
    const ScenarioConfig cfg = shipped("propagation.json");
    const RunResult res = run_scenario(cfg);

    std::set<std::string> vulnerable;
    for (const auto& v : cfg.topology.vulnerable) vulnerable.insert(v.device);
    REQUIRE(vulnerable.size() == 6);

    std::set<std::string> infected;
    for (const InfectionRecord& rec : res.world->infections())
        infected.insert(res.world->topo().device(rec.device).name);
    CHECK(infected == vulnerable);

    // every infected device checked in with the controller
    CHECK(res.world->cnc()->registered().size() == infected.size());

    // and the load pipeline worked each non-seed exactly once
    const LoaderNode* loader = res.world->loader();
    std::size_t done = 0;
    for (const auto& [key, job] : loader->jobs())
        if (job.state == LoaderJobState::Done) ++done;
    CHECK(done == vulnerable.size() - 1);
}

TEST_CASE("identical seeds replay identical traces") {
    const ScenarioConfig cfg = shipped("propagation.json");
    const RunResult a = run_scenario(cfg);
    const RunResult b = run_scenario(cfg);

    const auto& ra = a.world->sim().trace().records();
    const auto& rb = b.world->sim().trace().records();
    REQUIRE(ra.size() == rb.size());
    std::size_t diffs = 0;
    for (std::size_t i = 0; i < ra.size(); ++i)
        if (trace_jsonl_line(ra[i]) != trace_jsonl_line(rb[i])) ++diffs;
    CHECK(diffs == 0);

    CHECK(a.stats.events_processed == b.stats.events_processed);
    CHECK(a.stats.packets_sent == b.stats.packets_sent);
}

TEST_CASE("conservation and containment hold across the shipped scenarios") {
    const std::vector<std::string> names = {
        "propagation.json", "keepalive.json",  "scan-times.json",    "udp-flood.json",
        "syn-flood.json",   "dns-remap.json",  "telnet-desync.json",
    };
    for (const std::string& name : names) {
        CAPTURE(name);
        const ScenarioConfig cfg = shipped(name);
        const RunResult res = run_scenario(cfg);

        CHECK(res.stats.packets_sent ==
              res.stats.packets_delivered + res.stats.packets_dropped);

        const CidrBlock block = cfg.topology.contained_block;
        std::size_t outside = 0;
        for (const TraceRecord& r : res.world->sim().trace().records())
            if (!block.contains(r.src) || !block.contains(r.dst)) ++outside;
        CHECK(outside == 0);
    }
}

TEST_CASE("a packet addressed outside the block aborts the run") {
    const ScenarioConfig cfg = shipped("containment-violation.json");
    CHECK_THROWS_AS(run_scenario(cfg), ContainmentViolation);
}

TEST_CASE("the summary snapshots the controller tables in a stable order") {
    const RunResult res = run_scenario(shipped("keepalive.json"));

    CHECK(res.summary.find("[run]") != std::string::npos);
    CHECK(res.summary.find("name = keepalive") != std::string::npos);
    CHECK(res.summary.find("[infections]") != std::string::npos);
    CHECK(res.summary.find("[cnc ") != std::string::npos);
    CHECK(res.summary.find("registered = 1") != std::string::npos);
    CHECK(res.summary.find("[reports]") != std::string::npos);

    // the summary embeds the effective configuration, which reparses
    const std::string marker = "[effective_config]\n";
    const std::size_t at = res.summary.find(marker);
    REQUIRE(at != std::string::npos);
    const std::string body = res.summary.substr(at + marker.size());
    const ScenarioConfig echo = parse_scenario_json(body, "summary-echo");
    CHECK(echo.name == "keepalive");
}
