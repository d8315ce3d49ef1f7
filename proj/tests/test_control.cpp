#include <doctest.h>

#include <cmath>
#include <vector>

#include "fragcoag/control.hpp"
#include "fragcoag/errors.hpp"

using namespace fragcoag;

namespace {

// ramp 0 -> 1 on [0, 1), then hold 0.25 on [1, 2]
ActionFunction ramp_then_hold() {
    return ActionFunction::from_pieces(
        {ActionPiece{0.0, 1.0, ActionPiece::Kind::linear, 0.0, 1.0},
         ActionPiece{1.0, 2.0, ActionPiece::Kind::constant, 0.25, 0.25}});
}

} // namespace

TEST_CASE("constant policy") {
    const Policy p = Policy::constant(0.3, 4);
    CHECK(p.steps() == 4);
    CHECK(p.state_independent());
    const Composition x(1.0, {{1, 2}});
    for (int k = 0; k < 4; ++k) CHECK(p.decide(k, x) == 0.3);
    CHECK(p.sampled_controls() == std::vector<double>(4, 0.3));
    CHECK_THROWS_AS(p.decide(4, x), ConfigError);
    CHECK_THROWS_AS(p.decide(-1, x), ConfigError);
    // the degenerate zero-step policy still answers at k = 0
    const Policy p0 = Policy::constant(0.7, 0);
    CHECK(p0.steps() == 0);
    CHECK(p0.state_independent());
    CHECK(p0.decide(0, x) == 0.7);
    CHECK_THROWS_AS(Policy::constant(1.2, 3), ConfigError);
    CHECK_THROWS_AS(Policy::constant(-0.1, 3), ConfigError);
    CHECK_THROWS_AS(Policy::constant(0.5, -1), ConfigError);
}

TEST_CASE("sampling an open-loop action at the step times") {
    const Policy p = Policy::from_action(ramp_then_hold(), 0.5, 4);
    CHECK(p.steps() == 4);
    CHECK(p.state_independent());
    CHECK(p.sampled_controls() == std::vector<double>{0.0, 0.5, 0.25, 0.25});
    const Composition x(1.0, {{3, 1}});
    CHECK(p.decide(2, x) == 0.25);
    // the action must cover every step time
    CHECK_THROWS_AS(Policy::from_action(ActionFunction::constant(0.5, 1.0), 0.5, 4), ConfigError);
    CHECK_NOTHROW(Policy::from_action(ActionFunction::constant(0.5, 1.0), 0.5, 3));
    CHECK_THROWS_AS(Policy::from_action(ramp_then_hold(), 0.0, 4), ConfigError);
    CHECK_THROWS_AS(Policy::from_action(ramp_then_hold(), -0.5, 4), ConfigError);
    // the limit-optimal wrapper is the same sampling plus a provenance note
    const Policy lim = construct_policy_from_limit(ramp_then_hold(), 0.5, 4);
    CHECK(lim.sampled_controls() == p.sampled_controls());
    CHECK_FALSE(lim.note().empty());
    CHECK(p.note().empty());
}

TEST_CASE("feedback rules see the step index and the state") {
    const Policy p = Policy::from_rule(
        [](int k, const Composition& x) {
            return 0.1 * static_cast<double>(k) + (x.total_mass() > 2 ? 0.05 : 0.0);
        },
        5);
    CHECK(p.steps() == 5);
    CHECK_FALSE(p.state_independent());
    CHECK_THROWS_AS(p.sampled_controls(), ConfigError);
    CHECK(p.decide(3, Composition(1.0, {{1, 2}})) == doctest::Approx(0.3));
    CHECK(p.decide(3, Composition(1.0, {{4, 1}})) == doctest::Approx(0.35));
    CHECK_THROWS_AS(Policy::from_rule(nullptr, 5), ConfigError);
    CHECK_THROWS_AS(Policy::from_rule([](int, const Composition&) { return 0.5; }, -2),
                    ConfigError);
}

TEST_CASE("value estimate is exact when the reward ignores the state") {
    // B = b and V0 = 2: every replica collects tau*sum(b_k) + 2 regardless of
    // what the chain does, so the estimator has literally zero variance
    const RewardModel reward = RewardModel::norm_reduced("b", "2", 1.0, 2.0);
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.25, {{1, 4}, {2, 2}});
    const Policy pi = Policy::from_action(ramp_then_hold(), 0.5, 4);
    const ValueEstimate est = value_mc(x0, pi, reward, kernel, 0.5, 4, 3, 99);
    CHECK(est.mean == 0.5 * (0.0 + 0.5 + 0.25 + 0.25) + 2.0);
    CHECK(est.se == 0.0);
    CHECK(est.replicas == 3);
    // a replica count that fills whole chunks keeps the reduction exact too
    const ValueEstimate wide = value_mc(x0, pi, reward, kernel, 0.5, 4, 128, 7);
    CHECK(wide.mean == 2.5);
    CHECK(wide.se == 0.0);
}

TEST_CASE("value estimate matches a two-state closed form") {
    // two singletons with h = 1/2 under full pressure: one merge at rate
    // h*n(n-1)=1, after which nothing moves.  V0 = m pays 1 before the merge
    // and 1/2 after, so E[V0(T)] = 1/2 + e^{-T}/2
    const RewardModel reward = RewardModel::norm_reduced("0", "m", 0.0, 3.0);
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.5, {{1, 2}});
    const Policy pi = Policy::constant(1.0, 2);
    const ValueEstimate est = value_mc(x0, pi, reward, kernel, 0.5, 2, 20000, 20240915);
    const double exact = 0.5 + 0.5 * std::exp(-1.0);
    CHECK(est.se > 1e-3);
    CHECK(est.se < 2.5e-3);
    CHECK(std::fabs(est.mean - exact) < 4.0 * est.se);
}

TEST_CASE("value estimate guards") {
    const RewardModel reward = RewardModel::norm_reduced("0", "m", 0.0, 3.0);
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.5, {{1, 2}});
    CHECK_THROWS_AS(value_mc(x0, Policy::constant(0.5, 3), reward, kernel, 0.5, 2, 10, 1),
                    ConfigError);
    CHECK_THROWS_AS(value_mc(x0, Policy::constant(0.5, 2), reward, kernel, 0.5, 2, 0, 1),
                    ConfigError);
    CHECK_THROWS_AS(value_mc(x0, Policy::constant(0.5, 2), reward, kernel, 0.0, 2, 10, 1),
                    ConfigError);
    // zero steps: the terminal reward, deterministically
    const ValueEstimate est = value_mc(x0, Policy::constant(0.5, 0), reward, kernel, 0.5, 0, 5, 1);
    CHECK(est.mean == 1.0);
    CHECK(est.se == 0.0);
}

TEST_CASE("replaying a trajectory's controls as an action") {
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.25, {{1, 8}});
    const ControlSchedule sched = ControlSchedule::from_action(ramp_then_hold(), 0.5);
    const Trajectory traj = simulate(x0, kernel, sched, 2.0, {}, 4321);
    REQUIRE(traj.window_controls.size() == 4);
    const ActionFunction a = trajectory_to_action(traj, 0.5, 4);
    CHECK(a.pieces().size() == 4);
    for (int k = 0; k < 4; ++k)
        CHECK(a(0.5 * k + 0.25) == traj.window_controls[static_cast<std::size_t>(k)]);
    CHECK(a(0.0) == 0.0);         // the ramp starts at zero
    CHECK(a(1.999) == 0.25);      // and the hold is sampled at t = 1.5
    CHECK_THROWS_AS(trajectory_to_action(traj, 0.5, 5), ConfigError);
    CHECK_THROWS_AS(trajectory_to_action(traj, 0.4, 4), ConfigError); // horizon 1.6 != 2.0
    CHECK_THROWS_AS(trajectory_to_action(traj, 0.5, 0), ConfigError);
    CHECK_THROWS_AS(trajectory_to_action(traj, -0.5, 4), ConfigError);
}

TEST_CASE("replayed deterministic value under a constant policy has no spread") {
    // a state-independent constant policy realizes the same window controls in
    // every replica, so each one replays the identical action
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.5, {{1, 2}});
    MeanFieldState x0_limit(64, 0.0);
    x0_limit[0] = 1.0;
    const RewardModel reward = RewardModel::norm_reduced("m*b", "m", 1.0, 3.0);
    OdeConfig cfg;
    cfg.dt = 1e-3;
    const ValueEstimate est = replayed_action_value(x0, x0_limit, Policy::constant(1.0, 4), reward,
                                                    kernel, 0.25, 4, 4, 11, cfg);
    CHECK(est.se == 0.0);
    // ... and the common value is the closed-form one for the limiting system
    CHECK(est.mean == doctest::Approx(std::log(2.0) + 0.5).epsilon(1e-8));
    // it coincides with integrating the constant action directly
    CHECK(est.mean ==
          value_deterministic(x0_limit, kernel, ActionFunction::constant(1.0, 1.0), 1.0, reward,
                              cfg));
}

TEST_CASE("replayed value spreads once the policy reacts to the state") {
    const RateKernel kernel = RateKernel::constant_example();
    const Composition x0(0.5, {{1, 2}});
    MeanFieldState x0_limit(16, 0.0);
    x0_limit[0] = 1.0;
    const RewardModel reward = RewardModel::norm_reduced("m*b", "m", 1.0, 3.0);
    OdeConfig cfg;
    cfg.dt = 1e-3;
    // full pressure while fragmented, none once merged: replicas that merge at
    // different windows replay different actions
    const Policy pi = Policy::from_rule(
        [](int, const Composition& x) { return x.coalition_count() > 1 ? 1.0 : 0.0; }, 4);
    const ValueEstimate est =
        replayed_action_value(x0, x0_limit, pi, reward, kernel, 0.25, 4, 64, 5, cfg);
    CHECK(est.se > 0.0);
    CHECK(est.replicas == 64);
    CHECK_THROWS_AS(replayed_action_value(x0, x0_limit, pi, reward, kernel, 0.25, 0, 4, 5, cfg),
                    ConfigError);
    CHECK_THROWS_AS(replayed_action_value(x0, x0_limit, pi, reward, kernel, 0.25, 4, 0, 5, cfg),
                    ConfigError);
}
