#include "botsim/series.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "botsim/errors.hpp"

namespace botsim {

std::uint64_t TimeSeries::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

TimeSeries make_series(const std::string& name, SimTime bin_us, SimTime duration_us) {
    if (bin_us <= 0) throw ValidationError("series_bin_s", "bin width must be positive");
    TimeSeries s;
    s.name = name;
    s.bin_us = bin_us;
    const SimTime bins = (duration_us + bin_us - 1) / bin_us;
    s.counts.assign(static_cast<std::size_t>(std::max<SimTime>(bins, 1)), 0);
    return s;
}

void series_add(TimeSeries& s, SimTime t) {
    if (t < 0 || s.counts.empty()) return;
    auto bin = static_cast<std::size_t>(t / s.bin_us);
    if (bin >= s.counts.size()) bin = s.counts.size() - 1;
    ++s.counts[bin];
}

std::string series_csv(const TimeSeries& s) {
    std::string out = "t_s,count\n";
    char line[64];
    for (std::size_t i = 0; i < s.counts.size(); ++i) {
        const double t = seconds_from_us(static_cast<SimTime>(i) * s.bin_us);
        std::snprintf(line, sizeof(line), "%.6f,%llu\n", t,
                      static_cast<unsigned long long>(s.counts[i]));
        out += line;
    }
    return out;
}

TimeSeries series_from_csv(const std::string& text, const std::string& name) {
    TimeSeries s;
    s.name = name;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line.rfind("t_s,count", 0) != 0)
        throw ParseError("series csv: bad header");
    double t0 = 0, t1 = 0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double t = 0;
        unsigned long long count = 0;
        if (std::sscanf(line.c_str(), "%lf,%llu", &t, &count) != 2)
            throw ParseError("series csv: bad row: " + line);
        if (row == 0) t0 = t;
        if (row == 1) t1 = t;
        s.counts.push_back(count);
        ++row;
    }
    s.bin_us = row >= 2 ? us_from_seconds(t1 - t0) : us_from_seconds(1.0);
    return s;
}

double autocorrelation(const std::vector<std::uint64_t>& counts, std::size_t lag) {
    const std::size_t n = counts.size();
    if (n == 0 || lag >= n) return 0.0;
    const double mean =
        std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (std::uint64_t c : counts) {
        const double d = static_cast<double>(c) - mean;
        var += d * d;
    }
    if (var == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i)
        acc += (static_cast<double>(counts[i]) - mean) *
               (static_cast<double>(counts[i + lag]) - mean);
    return acc / var;
}

std::size_t dominant_lag(const std::vector<std::uint64_t>& counts, std::size_t min_lag,
                         std::size_t max_lag) {
    std::size_t best = min_lag;
    double best_val = -2.0;
    for (std::size_t lag = min_lag; lag <= max_lag && lag < counts.size(); ++lag) {
        const double v = autocorrelation(counts, lag);
        if (v > best_val) {
            best_val = v;
            best = lag;
        }
    }
    return best;
}

double ks_statistic_exponential(std::vector<double> sample, double rate) {
    if (sample.empty() || rate <= 0) return 1.0;
    std::sort(sample.begin(), sample.end());
    const auto n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = 1.0 - std::exp(-rate * sample[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, cdf - lo, hi - cdf});
    }
    return d;
}

double coefficient_of_variation(const std::vector<double>& sample) {
    if (sample.size() < 2) return 0.0;
    const double mean =
        std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
    if (mean == 0.0) return 0.0;
    double var = 0.0;
    for (double v : sample) var += (v - mean) * (v - mean);
    var /= static_cast<double>(sample.size() - 1);
    return std::sqrt(var) / mean;
}

} // namespace botsim
