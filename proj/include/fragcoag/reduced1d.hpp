#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fragcoag/action.hpp"

namespace fragcoag {

// Closed-form solution of mdot = -b*m^2 + (1-b)*m: logistic decay toward the
// equilibrium (1-b)/b for b in (0,1), with the pure-growth (b=0) and
// pure-merging (b=1) ends special-cased.
double m_flow(double t, double m0, double b);

// A commonly mis-stated variant of the same closed form that drops the factor
// b on the last denominator term.  Kept only so the regression suite can
// demonstrate that it disagrees with the integrated ODE at b = 0.
double m_flow_uncorrected(double t, double m0, double b);

// Terminal reward as a function of the norm m: strictly concave with maximizer
// mstar.  Both properties are spot-checked at construction.
class TerminalSpec {
public:
    TerminalSpec(double mstar, std::function<double(double)> V0, std::string source = "");

    static TerminalSpec quadratic(double mstar); // -(m - mstar)^2
    static TerminalSpec from_expr(const std::string& V0_src, double mstar);

    double mstar() const { return mstar_; }
    double operator()(double m) const { return V0_(m); }
    const std::string& source() const { return source_; } // empty for opaque V0

private:
    double mstar_;
    std::function<double(double)> V0_;
    std::string source_;
};

// The unique b in [0,1] with m_flow(T, m0, b) = mstar, by bisection on the
// strict monotonicity of the flow in b; |m_flow(T,m0,b) - mstar| <= 1e-10.
// Throws ConfigError when mstar lies outside [m_flow(T,m0,1), m_flow(T,m0,0)],
// saying which constant control to use instead.
double bstar(double T, double m0, double mstar);

enum class ActionBranch {
    grow,       // mstar above reach: full growth, b = 0
    hold_bstar, // mstar reachable: the constant b* hitting it exactly at T
    shrink      // mstar below reach: full merging, b = 1
};

struct OptimalAction {
    ActionFunction alpha; // constant on [0, T]
    double b;
    ActionBranch branch;
};

// Constant action maximizing V0(m(T)) for the norm flow: steer to mstar when
// the horizon allows, otherwise run the extreme control toward it.
OptimalAction optimal_action(double m0, double T, const TerminalSpec& spec);

// V(t,m) = V0 evaluated at the best reachable terminal norm: mstar inside the
// reachable band [m/(1+(T-t)m), m e^{T-t}], the nearer band edge outside.
double value_closed_form(double t, double m, double T, const TerminalSpec& spec);

struct GridDpConfig {
    double m_min = 0.0;
    double m_max;
    int m_points;
    std::vector<double> b_grid; // ascending values in [0,1]
    double dt;                  // must satisfy the upwind CFL bound
};

struct GridDpResult {
    std::vector<double> m_grid;
    std::vector<double> t_grid;                // ascending, t_grid.front()=0, back()=T
    std::vector<std::vector<double>> value;    // value[ti][mj]
    std::vector<std::vector<double>> action;   // argmax b, rows ti = 0..n_t-1
    double dt_used;
};

// Backward explicit-Euler / first-order-upwind solve of
//   du/dt + max_b { (-b f_C(m) m^2 + (1-b) f_B(m) m) du/dm + B(m,b) } = 0,
// u(T,.) = V0.  Ties in the max go to the smallest b-grid index.  A dt above
// the CFL bound is refused with the required value in the message.
GridDpResult grid_dp_generalized(const std::function<double(double)>& f_C,
                                 const std::function<double(double)>& f_B,
                                 const TerminalSpec& spec,
                                 const std::function<double(double, double)>& B, double T,
                                 const GridDpConfig& cfg);

} // namespace fragcoag
