#include <doctest.h>

#include <cmath>
#include <vector>

#include "fragcoag/control.hpp"
#include "fragcoag/errors.hpp"

using namespace fragcoag;

TEST_CASE("partition counting") {
    CHECK(partition_count(0) == 1);
    CHECK(partition_count(1) == 1);
    CHECK(partition_count(2) == 2);
    CHECK(partition_count(3) == 3);
    CHECK(partition_count(4) == 5);
    CHECK(partition_count(5) == 7);
    CHECK(partition_count(6) == 11);
    CHECK(partition_count(10) == 42);
    CHECK(partition_count(20) == 627);
    CHECK(partition_count(50) == 204226);
    CHECK(partition_count(100) == 190569292);
    CHECK(partition_count(300) == 9253082936723602ull);
    // beyond ~10^18 the count saturates instead of wrapping
    CHECK(partition_count(400) == 1000000000000000000ull);
    CHECK_THROWS_AS(partition_count(-1), ConfigError);
}

TEST_CASE("state space enumeration") {
    const StateSpace space = StateSpace::enumerate(4, 0.5);
    REQUIRE(space.states.size() == 5);
    CHECK(space.N == 4);
    CHECK(space.h == 0.5);
    // descending lexicographic by largest part
    CHECK(space.states[0].counts() == Composition::Counts{{4, 1}});
    CHECK(space.states[1].counts() == Composition::Counts{{1, 1}, {3, 1}});
    CHECK(space.states[2].counts() == Composition::Counts{{2, 2}});
    CHECK(space.states[3].counts() == Composition::Counts{{1, 2}, {2, 1}});
    CHECK(space.states[4].counts() == Composition::Counts{{1, 4}});
    for (std::size_t i = 0; i < space.states.size(); ++i) {
        CHECK(space.states[i].total_mass() == 4);
        CHECK(space.states[i].h() == 0.5);
        CHECK(space.find(space.states[i]) == i);
    }
    CHECK_THROWS_AS(space.find(Composition(0.5, {{5, 1}})), ConfigError);
    CHECK(StateSpace::enumerate(1, 1.0).states.size() == 1);
    // the cap refuses with the offending count
    CHECK_THROWS_WITH_AS(StateSpace::enumerate(10, 1.0, 41), doctest::Contains("42"), ConfigError);
    CHECK_NOTHROW(StateSpace::enumerate(10, 1.0, 42));
    CHECK_THROWS_AS(StateSpace::enumerate(0, 1.0), ConfigError);
}

TEST_CASE("dense matrix exponential") {
    SUBCASE("scalar decay") {
        const std::vector<double> E = expm_dense({-2.0}, 1, 0.5);
        CHECK(E[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    }
    SUBCASE("two-state generator against its spectral form") {
        const std::vector<double> Q{-1.0, 1.0, 2.0, -2.0};
        const double t = 0.7;
        const std::vector<double> P = expm_dense(Q, 2, t);
        const double e = std::exp(-3.0 * t);
        CHECK(P[0] == doctest::Approx((2.0 + e) / 3.0).epsilon(1e-10));
        CHECK(P[1] == doctest::Approx((1.0 - e) / 3.0).epsilon(1e-10));
        CHECK(P[2] == doctest::Approx((2.0 - 2.0 * e) / 3.0).epsilon(1e-10));
        CHECK(P[3] == doctest::Approx((1.0 + 2.0 * e) / 3.0).epsilon(1e-10));
        // doubling time equals doubling the generator
        const std::vector<double> P2 = expm_dense(Q, 2, 2.0 * t);
        std::vector<double> Q2(Q);
        for (double& v : Q2) v *= 2.0;
        const std::vector<double> P2b = expm_dense(Q2, 2, t);
        for (int i = 0; i < 4; ++i) CHECK(P2[i] == doctest::Approx(P2b[i]).epsilon(1e-10));
    }
    SUBCASE("nilpotent matrix is reproduced exactly") {
        const std::vector<double> E = expm_dense({0.0, 1.0, 0.0, 0.0}, 2, 1.0);
        CHECK(E == std::vector<double>{1.0, 1.0, 0.0, 1.0});
    }
    SUBCASE("zero time gives the identity exactly") {
        const std::vector<double> E = expm_dense({-3.0, 3.0, 1.0, -1.0}, 2, 0.0);
        CHECK(E == std::vector<double>{1.0, 0.0, 0.0, 1.0});
    }
    SUBCASE("guards") {
        CHECK_THROWS_AS(expm_dense({1.0, 2.0}, 2, 1.0), ConfigError);
        CHECK_THROWS_AS(expm_dense({1.0}, 1, 1.0, 0.0), ConfigError);
    }
}

TEST_CASE("generator matrix on an enumerated space") {
    const RateKernel kernel = RateKernel::constant_example();
    SUBCASE("two-state rates by hand") {
        const StateSpace space = StateSpace::enumerate(2, 0.5);
        // states: [{2:1}, {1:2}]
        const std::vector<double> Q = build_generator(space, kernel, 0.25);
        CHECK(Q[0 * 2 + 1] == 0.75); // split at (1-b)
        CHECK(Q[0 * 2 + 0] == -0.75);
        CHECK(Q[1 * 2 + 0] == 0.25); // merge at b*h*n(n-1) = 0.25*0.5*2
        CHECK(Q[1 * 2 + 1] == -0.25);
        // the literal self-pair convention doubles the merge weight to h*n^2
        SimOptions opts;
        opts.literal_self_pairs = true;
        const std::vector<double> Ql = build_generator(space, kernel, 0.25, opts);
        CHECK(Ql[1 * 2 + 0] == 0.5);
        CHECK(Ql[0 * 2 + 1] == 0.75); // splits are unaffected
    }
    SUBCASE("three-state rates by hand") {
        const StateSpace space = StateSpace::enumerate(3, 1.0 / 3.0);
        // states: [{3:1}, {2:1,1:1}, {1:3}]
        const std::vector<double> Q = build_generator(space, kernel, 0.5);
        CHECK(Q[0 * 3 + 1] == doctest::Approx(0.5).epsilon(1e-15));       // split 3 -> 2+1
        CHECK(Q[0 * 3 + 2] == 0.0);                                       // no direct 3 -> 1+1+1
        CHECK(Q[1 * 3 + 0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15)); // merge 1+2
        CHECK(Q[1 * 3 + 2] == doctest::Approx(0.5).epsilon(1e-15));       // split 2 -> 1+1
        CHECK(Q[2 * 3 + 1] == doctest::Approx(1.0).epsilon(1e-15));       // merge 1+1, 3 pairs... h*3*2*b
    }
    SUBCASE("rows sum to zero with nonnegative off-diagonals") {
        const StateSpace space = StateSpace::enumerate(6, 1.0 / 6.0);
        const std::size_t S = space.states.size();
        for (double b : {0.0, 0.3, 1.0}) {
            const std::vector<double> Q = build_generator(space, kernel, b);
            for (std::size_t s = 0; s < S; ++s) {
                double row = 0.0;
                for (std::size_t d = 0; d < S; ++d) {
                    row += Q[s * S + d];
                    if (d != s) CHECK(Q[s * S + d] >= 0.0);
                }
                CHECK(std::fabs(row) <= 1e-12);
            }
        }
    }
}

namespace {

// value lattice for the two-state mass-2 space: V0 = m picks 1/2 on {2:1}
// and 1 on {1:2}
struct TwoState {
    StateSpace space = StateSpace::enumerate(2, 0.5);
    RateKernel kernel = RateKernel::constant_example();
    RewardModel hold_norm = RewardModel::norm_reduced("0", "m", 0.0, 3.0);
    Composition split_state{0.5, {{1, 2}}};
    Composition merged_state{0.5, {{2, 1}}};
};

} // namespace

TEST_CASE("backward recursion on the two-state space") {
    TwoState ts;
    const std::vector<double> E_grid{0.0, 1.0};
    const DpResult res = shapley_dp(ts.space, E_grid, ts.hold_norm, ts.kernel, 1.0, 2);
    CHECK(res.n == 2);
    CHECK(res.tau == 1.0);
    REQUIRE(res.V.size() == 3);
    REQUIRE(res.argmax.size() == 2);
    // V[0] tabulates the terminal reward
    CHECK(res.V[0] == std::vector<double>{0.5, 1.0});
    // from {1:2}: b = 0 freezes the chain at the maximum of V0
    CHECK(res.V[1][1] == 1.0);
    CHECK(res.V[2][1] == 1.0);
    CHECK(res.value_at(ts.split_state) == 1.0);
    // from {2:1}: b = 0 rides the unit-rate split upward
    CHECK(res.V[1][0] == doctest::Approx(1.0 - 0.5 * std::exp(-1.0)).epsilon(1e-9));
    CHECK(res.V[1][0] > 0.5);            // strictly better than the b = 1 freeze
    CHECK(res.argmax[0] == std::vector<int>{0, 0});
    CHECK(res.argmax[1] == std::vector<int>{0, 0});
    // the lookup policy reads the argmax rows in forward time
    const Policy pi = res.policy();
    CHECK(pi.steps() == 2);
    CHECK_FALSE(pi.state_independent());
    CHECK(pi.decide(0, ts.split_state) == 0.0);
    CHECK(pi.decide(1, ts.merged_state) == 0.0);
    CHECK_THROWS_AS(res.value_at(Composition(0.5, {{3, 1}})), ConfigError);
}

TEST_CASE("control-dependent running reward accumulates per step") {
    TwoState ts;
    const RewardModel pay_b = RewardModel::norm_reduced("b", "0", 1.0, 1.0);
    const DpResult res = shapley_dp(ts.space, {0.0, 1.0}, pay_b, ts.kernel, 0.5, 2);
    // V0 = 0, B = b: each step banks tau * 1 under full pressure
    CHECK(res.V[1][0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(res.V[1][1] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(res.V[2][0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(res.argmax[0] == std::vector<int>{1, 1});
    CHECK(res.argmax[1] == std::vector<int>{1, 1});
}

TEST_CASE("ties in the recursion keep the smallest control index") {
    TwoState ts;
    const RewardModel flat = RewardModel::norm_reduced("0", "0", 0.0, 1.0);
    const DpResult res = shapley_dp(ts.space, {0.3, 0.7}, flat, ts.kernel, 0.5, 3);
    for (const std::vector<int>& row : res.argmax)
        CHECK(row == std::vector<int>{0, 0});
    for (double v : res.V[3]) CHECK(v == 0.0);
}

TEST_CASE("recursion guards") {
    TwoState ts;
    CHECK_THROWS_AS(shapley_dp(ts.space, {}, ts.hold_norm, ts.kernel, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(shapley_dp(ts.space, {0.0, 1.5}, ts.hold_norm, ts.kernel, 1.0, 1),
                    ConfigError);
    CHECK_THROWS_AS(shapley_dp(ts.space, {0.5}, ts.hold_norm, ts.kernel, 0.0, 1), ConfigError);
    CHECK_THROWS_AS(shapley_dp(ts.space, {0.5}, ts.hold_norm, ts.kernel, 1.0, -1), ConfigError);
    CHECK_THROWS_AS(shapley_dp(StateSpace{}, {0.5}, ts.hold_norm, ts.kernel, 1.0, 1), ConfigError);
}

TEST_CASE("exhaustive open-loop search against the recursion") {
    const StateSpace space = StateSpace::enumerate(3, 1.0 / 3.0);
    const RateKernel kernel = RateKernel::constant_example();
    const RewardModel reward = RewardModel::norm_reduced("m*b", "-(m-1)*(m-1)", 2.0, 4.0);
    const Composition x0(1.0 / 3.0, {{1, 3}});
    const std::vector<double> E_grid{0.0, 0.5, 1.0};
    SUBCASE("one step: feedback adds nothing, the values agree") {
        const DpResult dp = shapley_dp(space, E_grid, reward, kernel, 0.7, 1);
        const BruteResult brute = openloop_brute_exact(x0, space, E_grid, reward, kernel, 0.7, 1);
        CHECK(brute.candidates == 3);
        CHECK(brute.best_controls.size() == 1);
        CHECK(dp.value_at(x0) == doctest::Approx(brute.best_value).epsilon(1e-12));
    }
    SUBCASE("two steps: feedback can only improve on open loop") {
        const DpResult dp = shapley_dp(space, E_grid, reward, kernel, 0.7, 2);
        const BruteResult brute = openloop_brute_exact(x0, space, E_grid, reward, kernel, 0.7, 2);
        CHECK(brute.candidates == 9);
        CHECK(dp.value_at(x0) >= brute.best_value - 1e-10);
    }
    SUBCASE("a single-point control grid forces equality at any depth") {
        const DpResult dp = shapley_dp(space, {0.5}, reward, kernel, 0.4, 3);
        const BruteResult brute = openloop_brute_exact(x0, space, {0.5}, reward, kernel, 0.4, 3);
        CHECK(brute.candidates == 1);
        CHECK(dp.value_at(x0) == doctest::Approx(brute.best_value).epsilon(1e-12));
    }
    SUBCASE("zero steps collapse to the terminal reward") {
        const BruteResult brute = openloop_brute_exact(x0, space, E_grid, reward, kernel, 0.7, 0);
        CHECK(brute.candidates == 1);
        CHECK(brute.best_value == reward.terminal(x0));
        CHECK(brute.best_controls.empty());
    }
    SUBCASE("guards") {
        CHECK_THROWS_AS(openloop_brute_exact(x0, space, {0.0, 1.0}, reward, kernel, 0.7, 17),
                        ConfigError); // 2^17 sequences over the default cap
        CHECK_THROWS_AS(openloop_brute_exact(Composition(0.5, {{2, 1}}), space, E_grid, reward,
                                             kernel, 0.7, 1),
                        ConfigError); // wrong mass: not in the space
        CHECK_THROWS_AS(openloop_brute_exact(x0, space, E_grid, reward, kernel, 0.0, 1),
                        ConfigError);
    }
}

TEST_CASE("exhaustive open-loop search on the limiting system") {
    const RateKernel kernel = RateKernel::constant_example();
    // B = m*b, V0 = 0: only sustained pressure pays, so (1,1) wins with
    // integral of 1/(1+t) = log 2
    const RewardModel reward = RewardModel::norm_reduced("m*b", "0", 1.0, 3.0);
    MeanFieldState x0(32, 0.0);
    x0[0] = 1.0;
    OdeConfig cfg;
    cfg.dt = 1e-3;
    const BruteResult best =
        openloop_brute_meanfield(x0, {0.0, 1.0}, reward, kernel, 0.5, 2, cfg);
    CHECK(best.candidates == 4);
    CHECK(best.best_controls == std::vector<double>{1.0, 1.0});
    CHECK(best.best_value == doctest::Approx(std::log(2.0)).epsilon(1e-6));
    CHECK_THROWS_AS(openloop_brute_meanfield(x0, {0.0, 1.0}, reward, kernel, 0.5, 18, cfg),
                    ConfigError);
    CHECK_THROWS_AS(openloop_brute_meanfield(x0, {0.0, 1.0}, reward, kernel, 0.5, 0, cfg),
                    ConfigError);
}

TEST_CASE("simulation estimate agrees with the exact recursion") {
    // single-control grid: the chain under the constant policy is exactly the
    // process the recursion exponentiates
    TwoState ts;
    const RewardModel reward = RewardModel::norm_reduced("m*b", "m", 1.0, 3.0);
    const DpResult dp = shapley_dp(ts.space, {0.6}, reward, ts.kernel, 0.5, 3);
    const ValueEstimate mc =
        value_mc(ts.split_state, Policy::constant(0.6, 3), reward, ts.kernel, 0.5, 3, 40000, 321);
    CHECK(mc.se > 0.0);
    CHECK(std::fabs(mc.mean - dp.value_at(ts.split_state)) < 4.0 * mc.se);
}
