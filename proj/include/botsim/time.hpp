#pragma once

#include <cmath>
#include <cstdint>

namespace botsim {

/// Virtual time in integer microseconds since run start.
using SimTime = std::int64_t;

constexpr SimTime kUsPerSecond = 1'000'000;

constexpr SimTime us_from_seconds(double s) {
    return static_cast<SimTime>(std::llround(s * static_cast<double>(kUsPerSecond)));
}

constexpr double seconds_from_us(SimTime t) {
    return static_cast<double>(t) / static_cast<double>(kUsPerSecond);
}

/// Packets-per-second rate converted to an inter-event gap in us, rounded
/// to nearest. Rates above 1e6 pps clamp to a 1 us gap.
constexpr SimTime gap_us_from_pps(double pps) {
    if (pps <= 0.0) return kUsPerSecond;
    const auto gap = static_cast<SimTime>(std::llround(static_cast<double>(kUsPerSecond) / pps));
    return gap < 1 ? 1 : gap;
}

} // namespace botsim
