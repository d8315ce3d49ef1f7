#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fragcoag/action.hpp"
#include "fragcoag/composition.hpp"
#include "fragcoag/ctmc.hpp"
#include "fragcoag/kernels.hpp"
#include "fragcoag/meanfield.hpp"
#include "fragcoag/rewards.hpp"

namespace fragcoag {

// n decision rules k -> (state -> b), either state-independent (a sampled
// action function) or genuine feedback (DP lookup tables / arbitrary rules).
class Policy {
public:
    Policy() = default;

    static Policy constant(double b, int n);
    // pi_k := alpha(k*tau) — the action sampled at step times, state-independent
    static Policy from_action(const ActionFunction& alpha, double tau, int n);
    static Policy from_rule(std::function<double(int, const Composition&)> rule, int n);

    double decide(int k, const Composition& x) const;
    int steps() const { return n_; }
    bool state_independent() const { return static_cast<bool>(sampled_.size()); }
    // the per-step controls of a state-independent policy
    const std::vector<double>& sampled_controls() const;

    const std::string& note() const { return note_; }
    void set_note(std::string note) { note_ = std::move(note); }

private:
    int n_ = 0;
    std::vector<double> sampled_;
    std::function<double(int, const Composition&)> rule_;
    std::string note_;
};

inline Policy action_to_policy(const ActionFunction& alpha, double tau, int n) {
    return Policy::from_action(alpha, tau, n);
}

// static policy replaying an action that is optimal for the limiting system;
// its optimality for the chain is only asymptotic, which the note records
Policy construct_policy_from_limit(const ActionFunction& alpha_star, double tau, int n);

struct ValueEstimate {
    double mean;
    double se;
    std::int64_t replicas;
};

// Monte-Carlo estimate of E[sum_k tau*B(x_k, pi_k(x_k)) + V0(x_n)] with x_k
// the chain at time k*tau; replicas fan out over the deterministic chunk pool
ValueEstimate value_mc(const Composition& x0, const Policy& pi, const RewardModel& reward,
                       const RateKernel& kernel, double tau, int n, std::int64_t replicas,
                       std::uint64_t seed, const SimOptions& opts = {});

// piecewise-constant action replaying the controls a trajectory realized;
// requires the trajectory to have exactly n windows of width tau
ActionFunction trajectory_to_action(const Trajectory& traj, double tau, int n);

// mean over replicas of v_{A}(x0_limit), where A replays the controls realized
// by the chain under pi started from x0 (the deterministic system driven by the
// chain's empirical action)
ValueEstimate replayed_action_value(const Composition& x0, const MeanFieldState& x0_limit,
                                    const Policy& pi, const RewardModel& reward,
                                    const RateKernel& kernel, double tau, int n,
                                    std::int64_t replicas, std::uint64_t seed,
                                    const OdeConfig& ode_cfg, const SimOptions& opts = {});

// number of integer partitions of N, saturating at 10^18
std::uint64_t partition_count(std::int64_t N);

// Enumerated state space: every composition with total mass N, i.e. the
// integer partitions of N, in a fixed (descending lexicographic) order with a
// key -> row index map.
struct StateSpace {
    double h = 1.0;
    std::int64_t N = 0;
    std::vector<Composition> states;
    std::unordered_map<std::string, std::size_t> index;

    // refuses (with the count) when the partition number exceeds cap
    static StateSpace enumerate(std::int64_t N, double h, std::size_t cap = 20000);
    std::size_t find(const Composition& c) const;
};

// dense row-major e^{tQ} by scaling-and-squaring with a truncated series,
// stopped when the term norm falls below tol
std::vector<double> expm_dense(const std::vector<double>& Q, std::size_t n, double t,
                               double tol = 1e-10);

// generator matrix of the chain on an enumerated space at a fixed control
std::vector<double> build_generator(const StateSpace& space, const RateKernel& kernel, double b,
                                    const SimOptions& opts = {});

struct DpResult {
    StateSpace space;
    std::vector<double> E_grid;
    double tau = 0.0;
    int n = 0;
    // V[k][s] = optimal value with k steps to go; V[0] tabulates V0
    std::vector<std::vector<double>> V;
    // argmax[k-1][s] = E_grid index chosen when building V[k]; ties take the
    // smallest index
    std::vector<std::vector<int>> argmax;

    double value_at(const Composition& x0) const;
    // feedback lookup policy for the n-step problem
    Policy policy() const;
};

// exact backward recursion V_k = max_b [tau*B + e^{tau*Q_b} V_{k-1}] on the
// enumerated space; transition operators are matrix exponentials per control
DpResult shapley_dp(const StateSpace& space, const std::vector<double>& E_grid,
                    const RewardModel& reward, const RateKernel& kernel, double tau, int n,
                    const SimOptions& opts = {});

struct BruteResult {
    std::vector<double> best_controls; // the best open-loop sequence
    double best_value;
    std::size_t candidates; // |E_grid|^n sequences evaluated
};

// exact value of every open-loop control sequence over E_grid^n (distribution
// propagation through the same matrix exponentials), returning the maximum;
// refuses when the family exceeds max_candidates
BruteResult openloop_brute_exact(const Composition& x0, const StateSpace& space,
                                 const std::vector<double>& E_grid, const RewardModel& reward,
                                 const RateKernel& kernel, double tau, int n,
                                 std::size_t max_candidates = 100000,
                                 const SimOptions& opts = {});

// same family ranked by the deterministic limit value instead (meanfield side)
BruteResult openloop_brute_meanfield(const MeanFieldState& x0, const std::vector<double>& E_grid,
                                     const RewardModel& reward, const RateKernel& kernel,
                                     double tau, int n, const OdeConfig& ode_cfg,
                                     std::size_t max_candidates = 100000);

} // namespace fragcoag
