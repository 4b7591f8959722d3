#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "botsim/time.hpp"
#include "botsim/trace.hpp"

namespace botsim {

/// Raw event counts per fixed-width bin over [0, duration). Bin i covers
/// [i*bin_us, (i+1)*bin_us); the last bin absorbs t == duration.
struct TimeSeries {
    std::string name;
    SimTime bin_us = us_from_seconds(1.0);
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const;
    bool operator==(const TimeSeries&) const = default;
};

TimeSeries make_series(const std::string& name, SimTime bin_us, SimTime duration_us);
void series_add(TimeSeries& s, SimTime t);

std::string series_csv(const TimeSeries& s);
TimeSeries series_from_csv(const std::string& text, const std::string& name);

/// Sample autocorrelation of a counts vector at the given lag (bins),
/// normalized by the lag-0 variance.
double autocorrelation(const std::vector<std::uint64_t>& counts, std::size_t lag);

/// Lag in [min_lag, max_lag] with the highest autocorrelation.
std::size_t dominant_lag(const std::vector<std::uint64_t>& counts, std::size_t min_lag,
                         std::size_t max_lag);

/// Kolmogorov-Smirnov distance between a sample and Exponential(rate).
double ks_statistic_exponential(std::vector<double> sample, double rate);

/// Coefficient of variation (stddev / mean) of a sample.
double coefficient_of_variation(const std::vector<double>& sample);

} // namespace botsim
