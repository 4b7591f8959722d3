#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace botsim {

/// Seeded substream of the run's root generator. Streams are derived from
/// (root_seed, stream_id); equal inputs give identical draw sequences,
/// distinct stream ids give independent sequences. xoshiro256** state is
/// expanded from the pair with splitmix64, so draws do not depend on any
/// global generator order.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t root_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    /// Uniform double in [0, 1).
    double uniform01();

    /// Uniform integer in [0, bound); bound 0 yields 0.
    std::uint64_t uniform_below(std::uint64_t bound);

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

    /// Exponential variate with the given rate (mean 1/rate).
    double exponential(double rate);

    std::uint64_t root_seed() const { return root_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::array<std::uint64_t, 4> s_{};
    std::uint64_t root_seed_ = 0;
    std::uint64_t stream_id_ = 0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// FNV-1a over a label, used to turn entity/purpose names into stream ids.
std::uint64_t stream_label(std::string_view purpose, std::uint64_t entity = 0);

} // namespace botsim
