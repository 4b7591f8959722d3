#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "botsim/rng.hpp"

using namespace botsim;

TEST_CASE("splitmix64 matches the published reference sequence") {
    // first outputs for state 0 and state 1234567, computed with an
    // independent implementation of the reference algorithm
    std::uint64_t st = 0;
    CHECK(splitmix64(st) == 0xE220A8397B1DCDAFull);
    CHECK(splitmix64(st) == 0x6E789E6AA1B965F4ull);
    CHECK(splitmix64(st) == 0x06C45D188009454Full);
    CHECK(splitmix64(st) == 0xF88BB8A8724C81ECull);

    st = 1234567;
    CHECK(splitmix64(st) == 0x599ED017FB08FC85ull);
    CHECK(splitmix64(st) == 0x2C73F08458540FA5ull);
    CHECK(splitmix64(st) == 0x883EBCE5A3F27C77ull);
    CHECK(splitmix64(st) == 0x3FBEF740E9177B3Full);
}

TEST_CASE("stream output is pinned for a fixed (seed, stream) pair") {
    // frozen against an out-of-tree reimplementation of the state
    // expansion + xoshiro256**; catches accidental algorithm drift
    RngStream r(42, 7);
    CHECK(r.next_u64() == 0xE49D171A2AD1DE89ull);
    CHECK(r.next_u64() == 0x6F2C5F9AC0C75CF5ull);
    CHECK(r.next_u64() == 0xFDC8A5DD54F3E5E8ull);
    CHECK(r.next_u64() == 0x693CC67AA8BE175Full);
}

TEST_CASE("equal seeds give equal sequences, different streams diverge") {
    RngStream a(99, 3);
    RngStream b(99, 3);
    RngStream c(99, 4);
    RngStream d(100, 3);
    bool c_differs = false;
    bool d_differs = false;
    for (int i = 0; i < 256; ++i) {
        const std::uint64_t va = a.next_u64();
        CHECK(va == b.next_u64());
        c_differs |= (va != c.next_u64());
        d_differs |= (va != d.next_u64());
    }
    CHECK(c_differs);
    CHECK(d_differs);
}

TEST_CASE("uniform01 stays inside [0, 1)") {
    RngStream r(1, 1);
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    // with 1e5 draws the extremes should approach the interval ends
    CHECK(lo < 0.001);
    CHECK(hi > 0.999);
}

TEST_CASE("uniform_below respects the bound and covers small ranges") {
    RngStream r(5, 2);
    CHECK(r.uniform_below(0) == 0);
    CHECK(r.uniform_below(1) == 0);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t v = r.uniform_below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("uniform(lo, hi) maps into the requested interval") {
    RngStream r(8, 8);
    for (int i = 0; i < 10000; ++i) {
        const double v = r.uniform(-2.5, 4.0);
        CHECK(v >= -2.5);
        CHECK(v < 4.0);
    }
}

TEST_CASE("exponential draws have the requested mean") {
    RngStream r(21, 0);
    const double rate = 10.0;
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double v = r.exponential(rate);
        CHECK(v >= 0.0);
        sum += v;
    }
    const double mean = sum / n;
    // standard error of the mean is (1/rate)/sqrt(n) ~ 0.00022
    CHECK(mean == doctest::Approx(1.0 / rate).epsilon(0.02));
}

TEST_CASE("stream labels separate purposes and entities") {
    std::set<std::uint64_t> ids;
    for (const char* purpose : {"scan", "attack", "client-traffic"})
        for (std::uint64_t entity = 0; entity < 64; ++entity)
            ids.insert(stream_label(purpose, entity));
    CHECK(ids.size() == 3 * 64);
    CHECK(stream_label("scan", 1) == stream_label("scan", 1));
}
