#include <doctest.h>

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/stats.hpp"

using namespace fragcoag;

// Reference values computed with mpmath at 50 digits:
//   igamc(a, x) = mp.gammainc(a, x, mp.inf, regularized=True)
TEST_CASE("upper regularized incomplete gamma against high-precision references") {
    CHECK(igamc(0.5, 0.5) == doctest::Approx(0.3173105078629141).epsilon(1e-12));
    CHECK(igamc(1.0, 1.0) == doctest::Approx(0.36787944117144232).epsilon(1e-12));
    CHECK(igamc(2.5, 0.3) == doctest::Approx(0.98800324279409373).epsilon(1e-12));
    CHECK(igamc(2.5, 7.0) == doctest::Approx(0.015609416100266915).epsilon(1e-12));
    CHECK(igamc(5.0, 5.0) == doctest::Approx(0.44049328506521241).epsilon(1e-12));
    CHECK(igamc(10.0, 3.0) == doctest::Approx(0.99889751186988452).epsilon(1e-12));
    CHECK(igamc(10.0, 20.0) == doctest::Approx(0.0049954123083075872).epsilon(1e-12));
    CHECK(igamc(0.5, 1e-8) == doctest::Approx(0.99988716208366658).epsilon(1e-12));
    CHECK(igamc(30.0, 30.0) == doctest::Approx(0.47571698610631993).epsilon(1e-12));
    CHECK(igamc(3.0, 0.0) == 1.0);
}

TEST_CASE("incomplete gamma structural identities") {
    // igamc(1, x) = exp(-x) exactly in formula
    for (double x : {0.1, 0.7, 2.0, 9.0})
        CHECK(igamc(1.0, x) == doctest::Approx(std::exp(-x)).epsilon(1e-14));
    // monotone decreasing in x
    CHECK(igamc(2.0, 1.0) > igamc(2.0, 1.5));
    CHECK(igamc(2.0, 1.5) > igamc(2.0, 4.0));
    // bounded in [0, 1]
    for (double a : {0.3, 1.0, 4.0, 25.0})
        for (double x : {0.0, 0.5, 3.0, 40.0}) {
            double q = igamc(a, x);
            CHECK(q >= 0.0);
            CHECK(q <= 1.0);
        }
    CHECK_THROWS_AS(igamc(0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(igamc(-1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(igamc(1.0, -0.5), ConfigError);
}

// chi_square_sf(x, k) = igamc(k/2, x/2); references from mpmath
TEST_CASE("chi-square survival function") {
    CHECK(chi_square_sf(3.84, 1) == doctest::Approx(0.050043521248705103).epsilon(1e-12));
    CHECK(chi_square_sf(5.99, 2) == doctest::Approx(0.050036627086586283).epsilon(1e-12));
    CHECK(chi_square_sf(0.0, 4) == 1.0);
    CHECK(chi_square_sf(10.0, 4) == doctest::Approx(0.040427681994512803).epsilon(1e-12));
    CHECK(chi_square_sf(27.2, 13) == doctest::Approx(0.011679340271505834).epsilon(1e-12));
    CHECK_THROWS_AS(chi_square_sf(1.0, 0), ConfigError);
    CHECK_THROWS_AS(chi_square_sf(-1.0, 3), ConfigError);
}

TEST_CASE("Pearson goodness-of-fit p-value") {
    // perfect fit: statistic 0, p = 1
    CHECK(chi_square_p({10.0, 20.0, 30.0}, {10.0, 20.0, 30.0}) == 1.0);

    // hand-computed statistic: obs (12, 8), exp (10, 10) -> chi2 = 0.4+0.4 = 0.8, dof 1
    CHECK(chi_square_p({12.0, 8.0}, {10.0, 10.0}) ==
          doctest::Approx(chi_square_sf(0.8, 1)).epsilon(1e-14));

    // extra constraint reduces dof: 3 cells, 1 extra -> dof 1
    const std::vector<double> obs{18.0, 30.0, 52.0};
    const std::vector<double> expd{20.0, 30.0, 50.0};
    // chi2 = 4/20 + 0 + 4/50 = 0.28
    CHECK(chi_square_p(obs, expd, 1) == doctest::Approx(chi_square_sf(0.28, 1)).epsilon(1e-14));

    // gross mismatch is detected
    CHECK(chi_square_p({100.0, 0.0}, {50.0, 50.0}) < 1e-20);

    CHECK_THROWS_AS(chi_square_p({1.0}, {1.0, 2.0}), ConfigError);     // length mismatch
    CHECK_THROWS_AS(chi_square_p({1.0, 2.0}, {1.0, 0.0}), ConfigError); // nonpositive expected
    CHECK_THROWS_AS(chi_square_p({1.0}, {1.0}), ConfigError);           // dof would be 0
    CHECK_THROWS_AS(chi_square_p({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, 2), ConfigError);
}
