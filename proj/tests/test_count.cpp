#include <doctest.h>

#include <cmath>

#include "bpsre/count.hpp"

using namespace bpsre;

TEST_CASE("small counts stay in a machine word") {
    const Count c{12345};
    CHECK(c.fits_u64());
    CHECK(c.u64() == 12345);
    CHECK(c.to_string() == "12345");
    CHECK(Count{}.is_zero());
    CHECK(std::isinf(Count{}.log()));
}

TEST_CASE("big counts normalise and compare structurally") {
    const BigInt small = 99;
    CHECK(Count{small}.fits_u64());
    CHECK(Count{small} == Count{99});

    BigInt big = 1;
    big <<= 200;
    const Count c{big};
    CHECK_FALSE(c.fits_u64());
    CHECK(c.big() == big);
    CHECK(c.to_string() ==
          "1606938044258990275541962092341162602522202993782792835301376");
    CHECK(c.log() == doctest::Approx(200.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(c.to_double() == doctest::Approx(std::ldexp(1.0, 200)));
    CHECK(Count{UINT64_MAX} < c);
    CHECK(c > Count{5});
}

TEST_CASE("negative big integers are rejected") {
    CHECK_THROWS_AS(Count{BigInt(-1)}, std::domain_error);
}

TEST_CASE("log keeps full precision for large non-powers of two") {
    BigInt v = 3;
    for (int i = 0; i < 80; ++i) {
        v *= 7;
    }
    const double expected = std::log(3.0) + 80.0 * std::log(7.0);
    CHECK(Count{v}.log() == doctest::Approx(expected).epsilon(1e-14));
}
