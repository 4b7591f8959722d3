#include "botsim/rng.hpp"

#include <cmath>

namespace botsim {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t stream_label(std::string_view purpose, std::uint64_t entity) {
    std::uint64_t h = 0xCBF29CE484222325ull; // FNV-1a offset basis
    for (char c : purpose) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    // fold the entity id in byte by byte so adjacent ids diverge fully
    for (int i = 0; i < 8; ++i) {
        h ^= (entity >> (8 * i)) & 0xFF;
        h *= 0x100000001B3ull;
    }
    return h;
}

namespace {
inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
} // namespace

RngStream::RngStream(std::uint64_t root_seed, std::uint64_t stream_id)
    : root_seed_(root_seed), stream_id_(stream_id) {
    std::uint64_t st = root_seed ^ (0xA0761D6478BD642Full * (stream_id + 1));
    for (auto& w : s_) w = splitmix64(st);
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1; // xoshiro forbids the zero state
}

std::uint64_t RngStream::next_u64() {
    // xoshiro256**
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_below(std::uint64_t bound) {
    if (bound == 0) return 0;
    // modulo with rejection of the uneven top remainder, exactly uniform
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % bound;
    }
}

double RngStream::uniform(double lo, double hi) {
    return lo + uniform01() * (hi - lo);
}

double RngStream::exponential(double rate) {
    // inverse CDF; log1p keeps precision for small draws
    return -std::log1p(-uniform01()) / rate;
}

} // namespace botsim
