#include <doctest.h>

#include <cmath>
#include <vector>

#include "fragcoag/coupling.hpp"
#include "fragcoag/errors.hpp"
#include "fragcoag/stats.hpp"

using namespace fragcoag;

namespace {

const JointRate* find_row(const std::vector<JointRate>& rows, EventKind kind, std::int64_t i,
                          std::int64_t j) {
    for (const JointRate& r : rows)
        if (r.kind == kind && r.i == i && r.j == j) return &r;
    return nullptr;
}

} // namespace

TEST_CASE("joint rate table on a minimal disjoint pair") {
    // two singletons vs singleton+pair under full pressure: each side enables
    // exactly one merge, and they are different events
    const RateKernel kernel = RateKernel::constant_example();
    const CoupledState s{Composition(1.0, {{1, 2}}), Composition(1.0, {{1, 1}, {2, 1}})};
    const std::vector<JointRate> rows = joint_rate_table(s, kernel, 1.0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].kind == EventKind::merge);
    CHECK(rows[0].i == 1);
    CHECK(rows[0].j == 1);
    CHECK(rows[0].joint == 0.0);
    CHECK(rows[0].lone == 2.0);
    CHECK(rows[0].lone_on_x);
    CHECK(rows[1].kind == EventKind::merge);
    CHECK(rows[1].i == 1);
    CHECK(rows[1].j == 2);
    CHECK(rows[1].joint == 0.0);
    CHECK(rows[1].lone == 2.0);
    CHECK_FALSE(rows[1].lone_on_x);
    double total = 0.0;
    for (const JointRate& r : rows) total += r.joint + r.lone;
    CHECK(total == 4.0);
}

TEST_CASE("joint rate table merges overlapping event keys") {
    // dyadic rates make every min/surplus split exact
    const RateKernel kernel = RateKernel::constant_example();
    const CoupledState s{Composition(0.25, {{1, 2}, {2, 1}}), Composition(0.25, {{2, 2}})};
    const std::vector<JointRate> rows = joint_rate_table(s, kernel, 0.5);
    REQUIRE(rows.size() == 4);
    // canonical order: merges ascending, then splits
    CHECK(rows[0].kind == EventKind::merge);
    CHECK(rows[1].kind == EventKind::merge);
    CHECK(rows[2].kind == EventKind::merge);
    CHECK(rows[3].kind == EventKind::split);

    const JointRate* m11 = find_row(rows, EventKind::merge, 1, 1);
    REQUIRE(m11 != nullptr);
    CHECK(m11->joint == 0.0);
    CHECK(m11->lone == 0.25); // h*n(n-1)*b = 0.25*2*0.5
    CHECK(m11->lone_on_x);
    const JointRate* m12 = find_row(rows, EventKind::merge, 1, 2);
    REQUIRE(m12 != nullptr);
    CHECK(m12->lone == 0.5); // 2*h*n1*n2*b
    CHECK(m12->lone_on_x);
    const JointRate* m22 = find_row(rows, EventKind::merge, 2, 2);
    REQUIRE(m22 != nullptr);
    CHECK(m22->lone == 0.25);
    CHECK_FALSE(m22->lone_on_x);
    // the split is enabled on both sides: joint at the min, surplus on the
    // side with two pairs
    const JointRate* s21 = find_row(rows, EventKind::split, 2, 1);
    REQUIRE(s21 != nullptr);
    CHECK(s21->joint == 0.5);
    CHECK(s21->lone == 0.5);
    CHECK_FALSE(s21->lone_on_x);

    // each marginal rate reconstructs as joint + its side's surplus
    double back_x = 0.0, back_y = 0.0;
    for (const JointRate& r : rows) {
        back_x += r.joint + (r.lone_on_x ? r.lone : 0.0);
        back_y += r.joint + (r.lone_on_x ? 0.0 : r.lone);
    }
    CHECK(back_x == total_rate(s.X, kernel, 0.5));
    CHECK(back_y == total_rate(s.Y, kernel, 0.5));
}

TEST_CASE("identical components stay glued under the marching coupling") {
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.25, {{1, 4}, {3, 2}});
    CoupledState s{x0, x0};
    for (const JointRate& r : joint_rate_table(s, kernel, 0.4)) {
        CHECK(r.lone == 0.0);
        CHECK(r.joint > 0.0);
    }
    Rng rng(2025);
    for (int step = 0; step < 60; ++step) {
        const CoupledStepResult res = coupled_step(s, kernel, 0.4, rng);
        REQUIRE_FALSE(res.absorbed);
        CHECK(res.wait > 0.0);
        CHECK(s.X.key() == s.Y.key());
        CHECK(s.X.total_mass() == 10);
        CHECK(s.Y.total_mass() == 10);
    }
    CHECK(Composition::dist_l2sq(s.X, s.Y) == 0.0);
}

TEST_CASE("full pressure absorbs both components into one coalition") {
    const RateKernel kernel = RateKernel::constant_example();
    CoupledState s{Composition(0.25, {{1, 4}}), Composition(0.25, {{2, 2}})};
    Rng rng(7);
    int steps = 0;
    for (;;) {
        const CoupledStepResult res = coupled_step(s, kernel, 1.0, rng);
        if (res.absorbed) break;
        REQUIRE(++steps < 100);
    }
    // 3 merges on X and 1 on Y, minus one when they meet at {2:2} and share it
    CHECK(steps >= 3);
    CHECK(steps <= 4);
    CHECK(s.X.counts() == Composition::Counts{{4, 1}});
    CHECK(s.Y.counts() == Composition::Counts{{4, 1}});
    // absorbed steps consume no time and report no wait
    const CoupledStepResult idle = coupled_step(s, kernel, 1.0, rng);
    CHECK(idle.absorbed);
    CHECK(idle.wait == 0.0);
}

TEST_CASE("running the coupling to a horizon") {
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(1.0 / 3.0, {{1, 3}});
    const Composition y0(1.0 / 3.0, {{3, 1}});
    Rng rng(99);
    // b = 1 and a long horizon: X must coagulate onto the absorbing Y
    const CoupledState fin = run_coupling(x0, y0, kernel, 1.0, 100.0, rng);
    CHECK(fin.X.counts() == Composition::Counts{{3, 1}});
    CHECK(fin.Y.counts() == Composition::Counts{{3, 1}});
    // a zero horizon changes nothing
    Rng rng2(99);
    const CoupledState same = run_coupling(x0, y0, kernel, 1.0, 0.0, rng2);
    CHECK(same.X.key() == x0.key());
    CHECK(same.Y.key() == y0.key());
    CHECK_THROWS_AS(run_coupling(x0, y0, kernel, 1.0, -1.0, rng), ConfigError);
    // mismatched scalings are refused everywhere
    const Composition other_h(0.5, {{1, 3}});
    CoupledState bad{x0, other_h};
    CHECK_THROWS_AS(joint_rate_table(bad, kernel, 0.5), ConfigError);
    CHECK_THROWS_AS(coupled_step(bad, kernel, 0.5, rng), ConfigError);
    CHECK_THROWS_AS(run_coupling(x0, other_h, kernel, 0.5, 1.0, rng), ConfigError);
}

TEST_CASE("coupled marginals keep the right law") {
    // mass-2 pair: each marginal is the two-state chain {1:2} <-> {2:1} with
    // rates 1/2 both ways, so P(split at t=1 | split at 0) = 1/2 + e^{-1}/2
    const RateKernel kernel = RateKernel::constant_example();
    const Composition split(0.5, {{1, 2}});
    const Composition merged(0.5, {{2, 1}});
    const int M = 2000;
    double x_split = 0.0, y_split = 0.0;
    for (int r = 0; r < M; ++r) {
        Rng rng(derive_seed(612, static_cast<std::uint64_t>(r)));
        const CoupledState fin = run_coupling(split, merged, kernel, 0.5, 1.0, rng);
        if (fin.X.counts() == split.counts()) x_split += 1.0;
        if (fin.Y.counts() == split.counts()) y_split += 1.0;
    }
    const double p_stay = 0.5 + 0.5 * std::exp(-1.0);
    const double p_flip = 0.5 - 0.5 * std::exp(-1.0);
    CHECK(chi_square_p({x_split, M - x_split}, {M * p_stay, M * p_flip}) > 1e-3);
    CHECK(chi_square_p({y_split, M - y_split}, {M * p_flip, M * p_stay}) > 1e-3);
}

TEST_CASE("contraction experiment bookkeeping") {
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.25, {{1, 4}});
    const Composition y0(0.25, {{2, 2}});
    SUBCASE("identical starts never separate") {
        const ContractionReport rep =
            contraction_experiment(x0, x0, kernel, 0.5, 1.0, 4, 16, 42, 5.0);
        CHECK(rep.initial_dist == 0.0);
        CHECK(rep.times == std::vector<double>{0.25, 0.5, 0.75, 1.0});
        for (std::size_t g = 0; g < 4; ++g) {
            CHECK(rep.mean_dist[g] == 0.0);
            CHECK(rep.se[g] == 0.0);
            CHECK(rep.envelope[g] == 0.0);
        }
        CHECK(rep.violations == 0);
    }
    SUBCASE("a generous envelope is respected") {
        const ContractionReport rep =
            contraction_experiment(x0, y0, kernel, 0.5, 1.0, 5, 200, 2024, 12.0);
        CHECK(rep.initial_dist == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
        for (std::size_t g = 0; g < 5; ++g) {
            CHECK(rep.mean_dist[g] >= 0.0);
            CHECK(rep.se[g] >= 0.0);
            CHECK(rep.envelope[g] >= rep.initial_dist);
        }
        CHECK(rep.violations == 0);
    }
    SUBCASE("a nonsense envelope is flagged") {
        // decaying envelope while independent copies keep their distance
        const ContractionReport rep = contraction_experiment(
            x0, y0, kernel, 0.5, 1.0, 5, 200, 2024, -50.0, CouplingKind::independent);
        CHECK(rep.violations > 0);
    }
    SUBCASE("guards") {
        Rng rng(1);
        CHECK_THROWS_AS(contraction_experiment(x0, Composition(0.25, {{1, 3}}), kernel, 0.5, 1.0,
                                               4, 16, 1, 5.0),
                        ConfigError); // unequal mass
        CHECK_THROWS_AS(contraction_experiment(x0, y0, kernel, 0.5, 0.0, 4, 16, 1, 5.0),
                        ConfigError);
        CHECK_THROWS_AS(contraction_experiment(x0, y0, kernel, 0.5, 1.0, 0, 16, 1, 5.0),
                        ConfigError);
        CHECK_THROWS_AS(contraction_experiment(x0, y0, kernel, 0.5, 1.0, 4, 1, 1, 5.0),
                        ConfigError);
    }
}

TEST_CASE("independent coupling still preserves the marginals") {
    // same two-state closed form as the marching case
    const RateKernel kernel = RateKernel::constant_example();
    const Composition split(0.5, {{1, 2}});
    const Composition merged(0.5, {{2, 1}});
    const int M = 2000;
    double x_split = 0.0;
    for (int r = 0; r < M; ++r) {
        Rng rng(derive_seed(613, static_cast<std::uint64_t>(r)));
        const CoupledState fin =
            run_coupling(split, merged, kernel, 0.5, 1.0, rng, CouplingKind::independent);
        if (fin.X.counts() == split.counts()) x_split += 1.0;
    }
    const double p_stay = 0.5 + 0.5 * std::exp(-1.0);
    CHECK(chi_square_p({x_split, M - x_split}, {M * p_stay, M * (1.0 - p_stay)}) > 1e-3);
}
