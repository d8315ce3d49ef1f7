#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fragcoag/action.hpp"
#include "fragcoag/composition.hpp"
#include "fragcoag/kernels.hpp"
#include "fragcoag/rewards.hpp"

namespace fragcoag {

struct OdeConfig {
    std::int64_t K_max = 0; // 0: use the state length as the truncation index
    double dt = 1e-3;
    double clip_tol = 1e-8; // total clipped mass beyond this aborts the run
};

struct RhsResult {
    MeanFieldState f;
    // mass flux into sizes above the truncation index: the gain terms the
    // truncated system drops while keeping the matching loss terms
    double leak;
};

// d/dt x_i = sum_{j<i} C_{j,i-j} x_j x_{i-j} - 2 x_i sum_j C_ij x_j
//            + 2 sum_{j>i} F_ji x_j - x_i sum_{j<i} F_ij,  truncated at K_max = len(x)
RhsResult smoluchowski_rhs(const MeanFieldState& x, const RateKernel& kernel, double b);

// sum_k k*f_k(x,b): zero up to rounding whenever the truncation does not bite
double mass_drift(const MeanFieldState& x, const RateKernel& kernel, double b);

struct IntegrateResult {
    std::vector<double> times;       // the requested record grid
    std::vector<MeanFieldState> path;
    MeanFieldState final_state;
    double running_reward = 0.0;     // integral of B(X(s), alpha(s)) ds
    double clipped_total = 0.0;      // total mass clipped away at negative components
    double max_leak = 0.0;           // worst truncation leak seen at any stage
};

// Fixed-step 4th-order integration of the truncated system under the open-loop
// control alpha, with steps split at alpha's piece boundaries and at record
// times.  The running reward is integrated alongside the state by the same
// stages, so its error matches the state's order.  reward may be null when only
// the path is wanted.
IntegrateResult integrate(const MeanFieldState& x0, const RateKernel& kernel,
                          const ActionFunction& alpha, double T, const OdeConfig& cfg,
                          const RewardModel* reward = nullptr,
                          const std::vector<double>& record_grid = {});

// v_alpha(x0) = integral of B(X(s),alpha(s)) ds + V0(X(T))
double value_deterministic(const MeanFieldState& x0, const RateKernel& kernel,
                           const ActionFunction& alpha, double T, const RewardModel& reward,
                           const OdeConfig& cfg);

// generator action on a C^1 scalar: Lambda_b G(x) = sum_i f_i(x,b) dG/dx_i,
// with dG(x, i) the partial in slot i (0-based)
double generator_apply(const std::function<double(const MeanFieldState&, std::size_t)>& dG,
                       const MeanFieldState& x, const RateKernel& kernel, double b);

} // namespace fragcoag
