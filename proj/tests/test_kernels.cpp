#include <doctest.h>

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/kernels.hpp"

using namespace fragcoag;

TEST_CASE("interval control space") {
    const ControlSpace E = ControlSpace::interval();
    CHECK(E.is_interval());
    CHECK(E.validate(0.0) == 0.0);
    CHECK(E.validate(1.0) == 1.0);
    CHECK(E.validate(0.37) == 0.37);
    CHECK_THROWS_AS(E.validate(-0.01), ConfigError);
    CHECK_THROWS_AS(E.validate(1.01), ConfigError);
    CHECK(E.distance(0.2, 0.9) == doctest::Approx(0.7));
    CHECK(E.distance(0.9, 0.2) == doctest::Approx(0.7));
}

TEST_CASE("finite control space carries its own metric") {
    const ControlSpace E = ControlSpace::finite({0.0, 0.5, 1.0},
                                                {{0.0, 1.0, 2.0},
                                                 {1.0, 0.0, 1.0},
                                                 {2.0, 1.0, 0.0}});
    CHECK(!E.is_interval());
    CHECK(E.size() == 3);
    CHECK(E.validate(0.5) == 0.5);
    CHECK_THROWS_AS(E.validate(0.25), ConfigError); // between labels is not a label
    CHECK(E.distance(0.0, 1.0) == 2.0);
    CHECK(E.distance(0.5, 0.0) == 1.0);
    CHECK_THROWS_AS(E.distance(0.25, 0.0), ConfigError);

    CHECK_THROWS_AS(ControlSpace::finite({}, {}), ConfigError);
    CHECK_THROWS_AS(ControlSpace::finite({0.0, 1.0}, {{0.0, 1.0}}), ConfigError); // not square
    CHECK_THROWS_AS(ControlSpace::finite({0.0, 1.0}, {{0.0, 1.0}, {2.0, 0.0}}),
                    ConfigError); // asymmetric
    CHECK_THROWS_AS(ControlSpace::finite({0.0, 1.0}, {{0.5, 1.0}, {1.0, 0.0}}),
                    ConfigError); // nonzero diagonal
    CHECK_THROWS_AS(ControlSpace::finite({0.0, 1.0}, {{0.0, -1.0}, {-1.0, 0.0}}),
                    ConfigError); // negative entry
}

// The baseline family: merging at rate b for every pair, splitting uniformly
// over the i-1 cut points at total rate 1-b per coalition.
TEST_CASE("constant kernel rates") {
    const RateKernel k = RateKernel::constant_example();
    CHECK(k.uniform());
    CHECK(k.type() == "constant");
    CHECK(k.coag(1, 1, 0.3, 0.7) == 0.7);
    CHECK(k.coag(5, 2, 9.0, 0.7) == 0.7);  // no size dependence
    CHECK(k.frag(1, 1, 0.3, 0.7) == 0.0);  // singletons have no cut points
    CHECK(k.frag(4, 1, 0.3, 0.25) == doctest::Approx(0.75 / 3.0));
    CHECK(k.frag(4, 3, 0.3, 0.25) == doctest::Approx(0.75 / 3.0)); // mirror cut, same rate
    CHECK(k.coag_uniform(2.0, 0.4) == doctest::Approx(0.4));
    CHECK(k.frag_row_uniform(2.0, 0.4) == doctest::Approx(0.6));
    CHECK(k.frag_row_sum(6, 2.0, 0.4) == doctest::Approx(0.6)); // row sum independent of i
    CHECK(k.frag_row_sum(1, 2.0, 0.4) == 0.0);
    CHECK(k.bounds().C == 1.0);
    CHECK(k.bounds().F == 1.0);

    CHECK_THROWS_AS(k.coag(0, 1, 0.0, 0.5), ConfigError);
    CHECK_THROWS_AS(k.frag(3, 3, 0.0, 0.5), ConfigError);
    CHECK_THROWS_AS(k.frag(3, 0, 0.0, 0.5), ConfigError);
}

TEST_CASE("norm-dependent kernel modulates both channels by the volume") {
    const KernelBounds bounds{2.0, 2.0, 2.0, 2.0, 0.0, 0.0};
    const RateKernel k = RateKernel::norm_dependent_expr("2-m", "m", bounds);
    CHECK(k.uniform());
    // C_ij = b*(2-m)
    CHECK(k.coag(3, 4, 0.5, 1.0) == doctest::Approx(1.5));
    CHECK(k.coag_uniform(1.0, 0.5) == doctest::Approx(0.5));
    // F_ij = (1-b)*m/(i-1), row sum (1-b)*m
    CHECK(k.frag(5, 2, 0.8, 0.0) == doctest::Approx(0.2));
    CHECK(k.frag_row_uniform(0.8, 0.25) == doctest::Approx(0.6));

    // negative rates are a kernel bug, reported as numerical corruption
    CHECK_THROWS_AS(k.coag(1, 1, 3.0, 1.0), NumericalError); // 2-m < 0
    CHECK_THROWS_AS(RateKernel::norm_dependent(nullptr, nullptr, bounds), ConfigError);
}

TEST_CASE("free-form kernel in (i, j, m, b)") {
    const KernelBounds bounds{1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    const RateKernel k = RateKernel::expr_kernel("b/(i+j)", "(1-b)/i", bounds);
    CHECK(!k.uniform());
    CHECK(k.coag(2, 3, 0.0, 1.0) == doctest::Approx(0.2));
    CHECK(k.coag(3, 2, 0.0, 1.0) == doctest::Approx(0.2));
    CHECK(k.frag(4, 1, 0.0, 0.0) == doctest::Approx(0.25));
    // row sum falls back to explicit summation: (i-1) cuts at (1-b)/i each
    CHECK(k.frag_row_sum(4, 0.0, 0.0) == doctest::Approx(0.75));
    CHECK_THROWS_AS(k.coag_uniform(0.0, 0.5), ConfigError);
    CHECK_THROWS_AS(k.frag_row_uniform(0.0, 0.5), ConfigError);

    // symmetry is checked at construction: C must be i<->j symmetric, F must be
    // invariant under j -> i-j (a cut and its mirror are the same physical split)
    CHECK_THROWS_AS(RateKernel::expr_kernel("b*i", "(1-b)/i", bounds), ConfigError);
    CHECK_THROWS_AS(RateKernel::expr_kernel("b", "(1-b)*j/i", bounds), ConfigError);
    CHECK_NOTHROW(RateKernel::expr_kernel("b", "(1-b)*j*(i-j)", bounds));
}

TEST_CASE("kernel json round trips") {
    const RateKernel c = RateKernel::from_json(RateKernel::constant_example().to_json());
    CHECK(c.type() == "constant");
    CHECK(c.coag(1, 1, 0.0, 0.5) == 0.5);

    const KernelBounds bounds{2.0, 1.0, 1.0, 1.0, 0.0, 0.0};
    const RateKernel nd = RateKernel::norm_dependent_expr("2-m", "1", bounds);
    const RateKernel nd2 = RateKernel::from_json(nd.to_json());
    CHECK(nd2.type() == "norm_dependent");
    CHECK(nd2.coag(1, 1, 0.5, 1.0) == nd.coag(1, 1, 0.5, 1.0));
    CHECK(nd2.bounds().C == 2.0);

    const RateKernel ex = RateKernel::expr_kernel("b/(i+j)", "(1-b)/i", KernelBounds{1, 1, 0, 0, 0, 0});
    const RateKernel ex2 = RateKernel::from_json(ex.to_json());
    CHECK(ex2.frag(4, 2, 0.0, 0.25) == ex.frag(4, 2, 0.0, 0.25));

    CHECK_THROWS_AS(RateKernel::from_json(nlohmann::json{{"type", "unknown"}}), ConfigError);
    CHECK_THROWS_AS(RateKernel::from_json(nlohmann::json{{"type", "expr"}}), ConfigError);
    // bounds must be complete
    nlohmann::json j = ex.to_json();
    j["bounds"].erase("C2");
    CHECK_THROWS_AS(RateKernel::from_json(j), ConfigError);
    j = ex.to_json();
    j["bounds"]["F1"] = -0.5;
    CHECK_THROWS_AS(RateKernel::from_json(j), ConfigError);
    // opaque callables cannot be serialized
    const RateKernel opaque =
        RateKernel::norm_dependent([](double) { return 1.0; }, [](double) { return 1.0; }, bounds);
    CHECK_THROWS_AS(opaque.to_json(), ConfigError);
}
