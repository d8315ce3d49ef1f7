#pragma once

#include <cstdint>
#include <vector>

#include "fragcoag/composition.hpp"
#include "fragcoag/ctmc.hpp"
#include "fragcoag/kernels.hpp"
#include "fragcoag/rng.hpp"

namespace fragcoag {

// two copies of the chain driven by one clock; same h and same total mass
struct CoupledState {
    Composition X;
    Composition Y;
};

enum class CouplingKind {
    marching,   // every event fires jointly at the min of the marginal rates,
                // the richer side alone at the surplus
    independent // the two copies race independent clocks
};

// one row of the coupled rate table for event (kind, i, j): the joint rate and
// the lone surplus (at most one side is nonzero, on the side named by lone_on_x)
struct JointRate {
    EventKind kind;
    std::int64_t i;
    std::int64_t j;
    double joint;
    double lone;
    bool lone_on_x;
};

// the marching-soldiers rate table over the union of both components' enabled
// events, in canonical event order; marginal rates reconstruct as joint + lone
std::vector<JointRate> joint_rate_table(const CoupledState& s, const RateKernel& kernel, double b,
                                        const SimOptions& opts = {});

struct CoupledStepResult {
    double wait = 0.0;
    bool absorbed = false;
};

// advance the pair by one coupled event (two RNG draws: wait, then slot)
CoupledStepResult coupled_step(CoupledState& s, const RateKernel& kernel, double b, Rng& rng,
                               CouplingKind kind = CouplingKind::marching,
                               const SimOptions& opts = {});

// run the coupling to the horizon under a fixed control
CoupledState run_coupling(const Composition& x, const Composition& y, const RateKernel& kernel,
                          double b, double horizon, Rng& rng,
                          CouplingKind kind = CouplingKind::marching, const SimOptions& opts = {});

struct ContractionReport {
    std::vector<double> times;
    std::vector<double> mean_dist; // E ||X(t) - Y(t)||_2 over replicas
    std::vector<double> se;
    std::vector<double> envelope;  // exp(envelope_rate * t) * ||x - y||_2
    double initial_dist = 0.0;
    int violations = 0;            // grid points with mean > envelope + 3*se
};

// empirical l2 contraction under a fixed control on an evenly spaced time grid
// spanning (0, horizon]; envelope_rate is the drift-Lipschitz exponent the
// bound ledger supplies (M2*sqrt(N))
ContractionReport contraction_experiment(const Composition& x, const Composition& y,
                                         const RateKernel& kernel, double b, double horizon,
                                         int grid_points, std::int64_t replicas,
                                         std::uint64_t seed, double envelope_rate,
                                         CouplingKind kind = CouplingKind::marching,
                                         const SimOptions& opts = {});

} // namespace fragcoag
