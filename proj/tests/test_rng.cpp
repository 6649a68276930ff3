#include <doctest.h>

#include <cmath>
#include <set>

#include "bpsre/rng.hpp"

using namespace bpsre;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using C = Philox::Counter;
    CHECK(Philox::rounds(C{0, 0, 0, 0}, {0, 0}) ==
          C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(Philox::rounds(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                         {0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(Philox::rounds(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                         {0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and addressed by replicate and role") {
    const StreamFactory f(42, "survival");
    auto a = f.stream(7, StreamRole::population);
    auto b = f.stream(7, StreamRole::population);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a() == b());
    }
    std::set<std::uint64_t> firsts;
    for (std::uint64_t r = 0; r < 100; ++r) {
        for (auto role : {StreamRole::gaps, StreamRole::laws, StreamRole::population,
                          StreamRole::auxiliary}) {
            firsts.insert(f.stream(r, role)());
        }
    }
    CHECK(firsts.size() == 400);
    CHECK(StreamFactory(42, "survival").key() != StreamFactory(42, "yaglom").key());
    CHECK(StreamFactory(42, "survival").key() != StreamFactory(43, "survival").key());
}

TEST_CASE("uniform variates lie in range with the right mean") {
    auto rng = StreamFactory(1, "u").stream(0, StreamRole::auxiliary);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const double v = rng.uniform_open();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
        sum += u;
    }
    // sd of the mean is 1/sqrt(12 n) ~ 2.9e-4
    CHECK(std::abs(sum / n - 0.5) < 1.5e-3);
}

TEST_CASE("standard normal moments") {
    auto rng = StreamFactory(2, "n").stream(0, StreamRole::auxiliary);
    const int n = 1'000'000;
    double s1 = 0.0;
    double s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = standard_normal(rng);
        s1 += z;
        s2 += z * z;
    }
    CHECK(std::abs(s1 / n) < 5e-3);
    CHECK(std::abs(s2 / n - 1.0) < 7e-3);
}
