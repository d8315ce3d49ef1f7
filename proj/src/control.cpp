#include "fragcoag/control.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/parallel.hpp"
#include "fragcoag/rng.hpp"

namespace fragcoag {

namespace {

void check_steps(double tau, int n) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("policy: tau must be positive");
    if (n < 0) throw ConfigError("policy: step count must be >= 0");
}

// mean and standard error from per-chunk partial sums, reduced in chunk order
ValueEstimate reduce_moments(const std::vector<double>& sum, const std::vector<double>& sumsq,
                             std::int64_t replicas) {
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t c = 0; c < sum.size(); ++c) {
        s1 += sum[c];
        s2 += sumsq[c];
    }
    const double M = static_cast<double>(replicas);
    ValueEstimate est;
    est.replicas = replicas;
    est.mean = s1 / M;
    est.se = replicas > 1 ? std::sqrt(std::fmax((s2 - M * est.mean * est.mean) / (M - 1.0), 0.0) / M)
                          : 0.0;
    return est;
}

} // namespace

Policy Policy::constant(double b, int n) {
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("policy: control outside [0, 1]");
    if (n < 0) throw ConfigError("policy: step count must be >= 0");
    Policy p;
    p.n_ = n;
    p.sampled_.assign(static_cast<std::size_t>(n), b);
    if (n == 0) p.sampled_.assign(1, b); // keep state-independence visible
    return p;
}

Policy Policy::from_action(const ActionFunction& alpha, double tau, int n) {
    check_steps(tau, n);
    if (alpha.pieces().empty()) throw ConfigError("policy: action has no pieces");
    if (alpha.t_begin() > 1e-9 || alpha.t_end() < static_cast<double>(n - 1) * tau - 1e-9)
        throw ConfigError("policy: action does not cover the step times");
    Policy p;
    p.n_ = n;
    p.sampled_.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) p.sampled_.push_back(alpha(static_cast<double>(k) * tau));
    if (n == 0) p.sampled_.push_back(alpha(0.0));
    return p;
}

Policy Policy::from_rule(std::function<double(int, const Composition&)> rule, int n) {
    if (!rule) throw ConfigError("policy: missing decision rule");
    if (n < 0) throw ConfigError("policy: step count must be >= 0");
    Policy p;
    p.n_ = n;
    p.rule_ = std::move(rule);
    return p;
}

double Policy::decide(int k, const Composition& x) const {
    if (k < 0 || k >= n_) {
        if (!(n_ == 0 && k == 0)) throw ConfigError("policy: step index out of range");
    }
    if (!sampled_.empty()) return sampled_[static_cast<std::size_t>(k)];
    return rule_(k, x);
}

const std::vector<double>& Policy::sampled_controls() const {
    if (sampled_.empty()) throw ConfigError("policy: feedback policies have no sampled controls");
    return sampled_;
}

Policy construct_policy_from_limit(const ActionFunction& alpha_star, double tau, int n) {
    Policy p = Policy::from_action(alpha_star, tau, n);
    p.set_note("limit-optimal action sampled at step times; optimality is asymptotic in N");
    return p;
}

ValueEstimate value_mc(const Composition& x0, const Policy& pi, const RewardModel& reward,
                       const RateKernel& kernel, double tau, int n, std::int64_t replicas,
                       std::uint64_t seed, const SimOptions& opts) {
    check_steps(tau, n);
    if (pi.steps() != n) throw ConfigError("value_mc: policy step count does not match n");
    if (replicas < 1) throw ConfigError("value_mc: needs at least 1 replica");
    if (n == 0) return {reward.terminal(x0), 0.0, replicas};

    const double T = static_cast<double>(n) * tau;
    std::vector<double> grid(static_cast<std::size_t>(n) + 1);
    for (int k = 0; k <= n; ++k) grid[static_cast<std::size_t>(k)] = std::fmin(k * tau, T);

    ControlSchedule sched = ControlSchedule::from_feedback(
        [&pi](int k, const Composition& x) { return pi.decide(k, x); }, tau);

    const std::size_t M = static_cast<std::size_t>(replicas);
    const std::size_t chunks = chunk_count(M, kReplicaChunk);
    std::vector<double> sum(chunks, 0.0), sumsq(chunks, 0.0);
    parallel_chunks(M, kReplicaChunk, [&](std::size_t begin, std::size_t end, std::size_t slot) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t r = begin; r < end; ++r) {
            Trajectory traj = simulate(x0, kernel, sched, T, grid, derive_seed(seed, r), opts);
            double v = 0.0;
            for (int k = 0; k < n; ++k)
                v += tau * reward.running(traj.states[static_cast<std::size_t>(k)],
                                          traj.window_controls[static_cast<std::size_t>(k)]);
            v += reward.terminal(traj.states[static_cast<std::size_t>(n)]);
            s1 += v;
            s2 += v * v;
        }
        sum[slot] = s1;
        sumsq[slot] = s2;
    });
    return reduce_moments(sum, sumsq, replicas);
}

ActionFunction trajectory_to_action(const Trajectory& traj, double tau, int n) {
    check_steps(tau, n);
    if (n < 1) throw ConfigError("trajectory_to_action: needs at least one window");
    if (traj.window_controls.size() != static_cast<std::size_t>(n))
        throw ConfigError("trajectory_to_action: trajectory window count does not match n");
    if (std::fabs(traj.horizon - static_cast<double>(n) * tau) > 1e-9)
        throw ConfigError("trajectory_to_action: trajectory horizon does not match n*tau");
    std::vector<ActionPiece> pieces;
    pieces.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        ActionPiece p;
        p.t0 = static_cast<double>(k) * tau;
        p.t1 = (k + 1 == n) ? traj.horizon : static_cast<double>(k + 1) * tau;
        p.kind = ActionPiece::Kind::constant;
        p.b0 = traj.window_controls[static_cast<std::size_t>(k)];
        p.b1 = p.b0;
        pieces.push_back(p);
    }
    return ActionFunction::from_pieces(std::move(pieces));
}

ValueEstimate replayed_action_value(const Composition& x0, const MeanFieldState& x0_limit,
                                    const Policy& pi, const RewardModel& reward,
                                    const RateKernel& kernel, double tau, int n,
                                    std::int64_t replicas, std::uint64_t seed,
                                    const OdeConfig& ode_cfg, const SimOptions& opts) {
    check_steps(tau, n);
    if (n < 1) throw ConfigError("replayed_action_value: needs at least one window");
    if (replicas < 1) throw ConfigError("replayed_action_value: needs at least 1 replica");
    const double T = static_cast<double>(n) * tau;
    ControlSchedule sched = ControlSchedule::from_feedback(
        [&pi](int k, const Composition& x) { return pi.decide(k, x); }, tau);

    const std::size_t M = static_cast<std::size_t>(replicas);
    const std::size_t chunks = chunk_count(M, kReplicaChunk);
    std::vector<double> sum(chunks, 0.0), sumsq(chunks, 0.0);
    parallel_chunks(M, kReplicaChunk, [&](std::size_t begin, std::size_t end, std::size_t slot) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t r = begin; r < end; ++r) {
            Trajectory traj = simulate(x0, kernel, sched, T, {}, derive_seed(seed, r), opts);
            ActionFunction a = trajectory_to_action(traj, tau, n);
            double v = value_deterministic(x0_limit, kernel, a, T, reward, ode_cfg);
            s1 += v;
            s2 += v * v;
        }
        sum[slot] = s1;
        sumsq[slot] = s2;
    });
    return reduce_moments(sum, sumsq, replicas);
}

} // namespace fragcoag
