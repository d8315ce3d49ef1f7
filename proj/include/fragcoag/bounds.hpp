#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "fragcoag/kernels.hpp"

namespace fragcoag {

// Everything the error-bound ledger needs to evaluate one (h, tau, N) working
// point: the kernel bound constants, the reward constants, and the action
// metadata.  hN <= R is the state-space radius constraint.
struct ScalingConfig {
    double h;
    double tau;
    double N;
    double T;
    double R;
    KernelBounds kb;
    double K_B = 0.0;
    double Binf = 0.0;
    double K_alpha = 0.0;
    double alpha_sup = 0.0; // sup_t of the control's distance from 0
    double p = 0.0;         // number of control discontinuities

    std::int64_t n() const; // floor(T/tau)

    nlohmann::json to_json() const;
    static ScalingConfig from_json(const nlohmann::json& j);
};

// The explicit constants controlling every convergence statement, evaluated
// literally from the config.  Exponentials are computed in extended precision;
// entries that still overflow are reported as +inf with the flag set.
struct BoundsLedger {
    double K;
    double L2;
    double M2;
    double R1;
    double R2;
    double I0;
    double I1;
    double I2;
    double L1;
    double s_h;   // total-rate ceiling (C R^2 + F)/h
    double J;
    double I0p;   // I0 plus the control-sampling surcharge
    double B;     // value-gap bound at the given delta
    double Bp;    // same with I0 -> I0'
    double delta; // the initial-state gap the B column was evaluated at
    bool overflowed = false;

    nlohmann::json to_json() const;
};

BoundsLedger compute_ledger(const ScalingConfig& cfg, double delta = 0.0);

// One row of the admissibility report for a sequence of configs ordered by
// decreasing h.  The verdict tracks the three quantities that must vanish:
// tau, tau*sqrt(N), tau*N^2.  h*N^2 is tabulated for reference but does not
// enter the verdict (it cannot vanish on the natural N = R/h family).
struct ScalingCheck {
    double h;
    double tau;
    double N;
    double tau_sqrtN;
    double tau_N2;
    double h_N2;
    bool pass;
    std::string offender; // first verdict quantity that failed to decrease
};

std::vector<ScalingCheck> validate_scaling(const std::vector<ScalingConfig>& seq);

} // namespace fragcoag
