#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fragcoag/action.hpp"
#include "fragcoag/composition.hpp"
#include "fragcoag/kernels.hpp"
#include "fragcoag/rng.hpp"

namespace fragcoag {

enum class EventKind { merge, split };

struct EventLogEntry {
    double time;
    EventKind kind;
    std::int64_t i; // merge: one partner / split: the splitting size
    std::int64_t j; // merge: other partner / split: one fragment (the other is i-j)
    std::int64_t pre_count; // total coalition count before the event
};

struct SimOptions {
    // Self-pair merge convention.  Default weights an i=i merge by n_i(n_i-1)
    // (a pair of distinct coalitions).  literal_self_pairs = true restores the
    // generator's literal n_i^2 weight, except that a lone coalition (n_i = 1)
    // still cannot merge with itself -- that event has no target state.
    bool literal_self_pairs = false;
    bool log_events = false;
};

// Control evaluated once per decision window [k*tau, (k+1)*tau): a constant, an
// open-loop action sampled at k*tau, or a feedback rule on the window-start state.
struct ControlSchedule {
    double tau = 0.0; // <= 0 means a single window covering [0, T]
    std::function<double(int k, const Composition& state)> pick;

    static ControlSchedule constant(double b, double tau = 0.0);
    static ControlSchedule from_action(const ActionFunction& alpha, double tau);
    static ControlSchedule from_feedback(std::function<double(int, const Composition&)> rule,
                                         double tau);
};

struct Trajectory {
    std::vector<double> times;           // observation grid actually emitted
    std::vector<Composition> states;     // state at each observation time
    std::vector<double> window_controls; // b applied on window k
    std::vector<std::int64_t> window_events; // jump count Delta(k) per window
    std::vector<EventLogEntry> events;   // full log when SimOptions.log_events
    std::uint64_t seed = 0;
    double horizon = 0.0;

    const Composition& final_state() const { return states.back(); }
};

// one enabled transition with its total rate; merges carry i <= j (unordered pair),
// splits carry j <= i-j (unordered fragment pair), so the (kind,i,j) triple is a
// canonical event key shared with the coupling module
struct EventRate {
    EventKind kind;
    std::int64_t i;
    std::int64_t j;
    double rate;
};

// s(x,b): sum of h*C_ij-weighted merge pairs and F_ij-weighted splits, under the
// configured self-pair convention
double total_rate(const Composition& c, const RateKernel& kernel, double b,
                  const SimOptions& opts = {});

// all enabled events in canonical order with exact rates; sums to total_rate
// (up to reassociation of the same terms)
std::vector<EventRate> event_rates(const Composition& c, const RateKernel& kernel, double b,
                                   const SimOptions& opts = {});

struct StepResult {
    double wait;
    EventLogEntry event;
    bool absorbed = false; // total rate was zero; no event, wait undefined
};

// one jump of the chain: exponential waiting time at total_rate, event sampled
// proportionally to its rate, composition updated in place
StepResult step(Composition& c, const RateKernel& kernel, double b, Rng& rng,
                const SimOptions& opts = {});

// exact event-driven trajectory on [0, T]; control re-evaluated at window starts
// only; obs_grid must be ascending within [0, T]
Trajectory simulate(const Composition& x0, const RateKernel& kernel,
                    const ControlSchedule& control, double T, const std::vector<double>& obs_grid,
                    std::uint64_t seed, const SimOptions& opts = {});

struct DriftEstimate {
    std::vector<double> mean; // slot k-1: mean of h*(n_k(tau) - n_k(0)), size = max reachable size
    std::vector<double> se;   // componentwise standard error of the mean
    std::int64_t replicas = 0;
};

// empirical one-window drift F^h(x,b) = E[X(tau)] - x over M independent replicas
DriftEstimate drift_estimate(const Composition& x, const RateKernel& kernel, double b, double tau,
                             std::int64_t replicas, std::uint64_t seed,
                             const SimOptions& opts = {});

} // namespace fragcoag
