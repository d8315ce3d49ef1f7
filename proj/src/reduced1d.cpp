#include "fragcoag/reduced1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "fragcoag/errors.hpp"
#include "fragcoag/expr.hpp"
#include "fragcoag/vecops.hpp"

namespace fragcoag {

namespace {

void check_flow_args(double t, double m0, double b) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("m_flow: t must be >= 0");
    if (!(m0 >= 0.0) || !std::isfinite(m0)) throw ConfigError("m_flow: m0 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("m_flow: b outside [0, 1]");
}

} // namespace

double m_flow(double t, double m0, double b) {
    check_flow_args(t, m0, b);
    if (b == 1.0) return m0 / (1.0 + t * m0);
    if (b == 0.0) return m0 * std::exp(t);
    // logistic toward (1-b)/b, written with the decaying exponential so the
    // denominator stays positive for every t
    const double e = 1.0 - b;
    return m0 * e / ((e - m0 * b) * std::exp(-e * t) + m0 * b);
}

double m_flow_uncorrected(double t, double m0, double b) {
    check_flow_args(t, m0, b);
    if (b == 1.0) return m0 / (1.0 + t * m0);
    const double e = 1.0 - b;
    return m0 * e * std::exp(e * t) / (e - m0 * b + m0 * std::exp(e * t));
}

TerminalSpec::TerminalSpec(double mstar, std::function<double(double)> V0, std::string source)
    : mstar_(mstar), V0_(std::move(V0)), source_(std::move(source)) {
    if (!(mstar_ > 0.0) || !std::isfinite(mstar_))
        throw ConfigError("terminal spec: mstar must be a positive real");
    if (!V0_) throw ConfigError("terminal spec: missing V0");
    // spot checks: mstar maximizes V0 and V0 is concave on sample triples
    // (weak concavity, so flat rewards pass; the band-edge argmax logic below
    // needs nothing stronger)
    const double hi = std::max(2.0 * mstar_, 3.0);
    const int n = 41;
    const double vstar = V0_(mstar_);
    double prev2 = 0.0, prev1 = 0.0;
    for (int k = 0; k < n; ++k) {
        const double m = hi * static_cast<double>(k) / (n - 1);
        const double v = V0_(m);
        if (!std::isfinite(v)) throw ConfigError("terminal spec: V0 not finite on samples");
        if (v > vstar + 1e-12) throw ConfigError("terminal spec: mstar does not maximize V0");
        if (k >= 2) {
            const double avg = 0.5 * (prev2 + v);
            const double scale = std::max({1.0, std::fabs(prev2), std::fabs(v)});
            if (!(prev1 >= avg - 1e-12 * scale))
                throw ConfigError("terminal spec: V0 not concave on sample triples");
        }
        prev2 = prev1;
        prev1 = v;
    }
}

TerminalSpec TerminalSpec::quadratic(double mstar) {
    return TerminalSpec(
        mstar, [mstar](double m) { return -(m - mstar) * (m - mstar); },
        "-(m-" + std::to_string(mstar) + ")*(m-" + std::to_string(mstar) + ")");
}

TerminalSpec TerminalSpec::from_expr(const std::string& V0_src, double mstar) {
    Expr e = Expr::parse(V0_src, Expr::VarM);
    return TerminalSpec(mstar, [e](double m) { return e.eval_m(m); }, V0_src);
}

double bstar(double T, double m0, double mstar) {
    if (!(T > 0.0)) throw ConfigError("bstar: needs a positive horizon");
    if (!(m0 > 0.0)) throw ConfigError("bstar: needs m0 > 0");
    const double lo_reach = m_flow(T, m0, 1.0);
    const double hi_reach = m_flow(T, m0, 0.0);
    if (mstar < lo_reach)
        throw ConfigError("bstar: target below reach at this horizon; use b = 1");
    if (mstar > hi_reach)
        throw ConfigError("bstar: target above reach at this horizon; use b = 0");
    double lo = 0.0, hi = 1.0; // m_flow strictly decreasing in b
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = m_flow(T, m0, mid);
        if (std::fabs(v - mstar) <= 1e-12) return mid;
        (v > mstar ? lo : hi) = mid;
    }
    const double b = 0.5 * (lo + hi);
    if (std::fabs(m_flow(T, m0, b) - mstar) > 1e-10)
        throw NumericalError("bstar: bisection failed to meet tolerance");
    return b;
}

OptimalAction optimal_action(double m0, double T, const TerminalSpec& spec) {
    if (!(m0 > 0.0)) throw ConfigError("optimal_action: needs m0 > 0");
    if (!(T > 0.0)) throw ConfigError("optimal_action: needs a positive horizon");
    const double lo_reach = m_flow(T, m0, 1.0);
    const double hi_reach = m_flow(T, m0, 0.0);
    OptimalAction out;
    if (spec.mstar() > hi_reach) {
        out.b = 0.0; // even full growth falls short: grow all the way
        out.branch = ActionBranch::grow;
    } else if (spec.mstar() < lo_reach) {
        out.b = 1.0; // even full merging stays above: shrink all the way
        out.branch = ActionBranch::shrink;
    } else {
        out.b = bstar(T, m0, spec.mstar());
        out.branch = ActionBranch::hold_bstar;
    }
    out.alpha = ActionFunction::constant(out.b, T);
    return out;
}

double value_closed_form(double t, double m, double T, const TerminalSpec& spec) {
    if (!(m >= 0.0)) throw ConfigError("value_closed_form: m must be >= 0");
    if (!(t >= 0.0 && t <= T)) throw ConfigError("value_closed_form: t outside [0, T]");
    const double s = T - t;
    if (s <= 0.0) return spec(m);
    const double grow = m_flow(s, m, 0.0);
    const double shrink = m_flow(s, m, 1.0);
    if (spec.mstar() > grow) return spec(grow);
    if (spec.mstar() < shrink) return spec(shrink);
    return spec(spec.mstar());
}

GridDpResult grid_dp_generalized(const std::function<double(double)>& f_C,
                                 const std::function<double(double)>& f_B,
                                 const TerminalSpec& spec,
                                 const std::function<double(double, double)>& B, double T,
                                 const GridDpConfig& cfg) {
    if (!f_C || !f_B || !B) throw ConfigError("grid dp: missing f_C, f_B, or B");
    if (!(T > 0.0)) throw ConfigError("grid dp: needs a positive horizon");
    if (cfg.m_points < 3) throw ConfigError("grid dp: needs at least 3 m-grid points");
    if (!(cfg.m_max > cfg.m_min) || !(cfg.m_min >= 0.0))
        throw ConfigError("grid dp: need 0 <= m_min < m_max");
    if (cfg.b_grid.empty()) throw ConfigError("grid dp: empty b-grid");
    for (std::size_t i = 0; i < cfg.b_grid.size(); ++i) {
        if (!(cfg.b_grid[i] >= 0.0 && cfg.b_grid[i] <= 1.0))
            throw ConfigError("grid dp: b-grid values outside [0, 1]");
        if (i > 0 && !(cfg.b_grid[i] > cfg.b_grid[i - 1]))
            throw ConfigError("grid dp: b-grid must be strictly ascending");
    }
    if (!(cfg.dt > 0.0)) throw ConfigError("grid dp: dt must be positive");

    const std::size_t M = static_cast<std::size_t>(cfg.m_points);
    const std::size_t NB = cfg.b_grid.size();
    const double dm = (cfg.m_max - cfg.m_min) / static_cast<double>(M - 1);
    const double inv_dm = 1.0 / dm;

    GridDpResult res;
    res.m_grid.resize(M);
    for (std::size_t j = 0; j < M; ++j)
        res.m_grid[j] = cfg.m_min + dm * static_cast<double>(j);

    // drift and running reward per control, frozen over the backward march
    std::vector<std::vector<double>> f(NB, std::vector<double>(M));
    std::vector<std::vector<double>> badd(NB, std::vector<double>(M));
    double fmax = 0.0;
    for (std::size_t bi = 0; bi < NB; ++bi) {
        const double b = cfg.b_grid[bi];
        for (std::size_t j = 0; j < M; ++j) {
            const double m = res.m_grid[j];
            const double v = -b * f_C(m) * m * m + (1.0 - b) * f_B(m) * m;
            if (!std::isfinite(v)) throw ConfigError("grid dp: drift not finite on the grid");
            f[bi][j] = v;
            badd[bi][j] = B(m, b);
            fmax = std::fmax(fmax, std::fabs(v));
        }
    }
    const double dt_cfl = fmax > 0.0 ? dm / fmax : cfg.dt;
    if (cfg.dt > dt_cfl) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "grid dp: dt %.6g violates the upwind stability bound; need dt <= %.6g",
                      cfg.dt, dt_cfl);
        throw ConfigError(msg);
    }

    const std::size_t n_t =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(T / cfg.dt - 1e-9)));
    res.dt_used = T / static_cast<double>(n_t);
    res.t_grid.resize(n_t + 1);
    for (std::size_t k = 0; k <= n_t; ++k)
        res.t_grid[k] = res.dt_used * static_cast<double>(k);
    res.t_grid[n_t] = T;

    res.value.assign(n_t + 1, std::vector<double>(M));
    res.action.assign(n_t, std::vector<double>(M));
    for (std::size_t j = 0; j < M; ++j) res.value[n_t][j] = spec(res.m_grid[j]);

    std::vector<double> best(M), prev(M), arg(M);
    for (std::size_t k = n_t; k-- > 0;) {
        const std::vector<double>& u = res.value[k + 1];
        std::fill(best.begin(), best.end(), -HUGE_VAL);
        std::fill(arg.begin(), arg.end(), cfg.b_grid[0]);
        for (std::size_t bi = 0; bi < NB; ++bi) {
            std::copy(best.begin(), best.end(), prev.begin());
            vec::hjb_best(u.data(), f[bi].data(), badd[bi].data(), inv_dm, best.data(), M);
            // one-sided stencils at the ends, same max/argmax semantics
            const double d_lo = (u[1] - u[0]) * inv_dm;
            const double c_lo = f[bi][0] * d_lo + badd[bi][0];
            if (c_lo > best[0]) best[0] = c_lo;
            const double d_hi = (u[M - 1] - u[M - 2]) * inv_dm;
            const double c_hi = f[bi][M - 1] * d_hi + badd[bi][M - 1];
            if (c_hi > best[M - 1]) best[M - 1] = c_hi;
            if (bi > 0) {
                for (std::size_t j = 0; j < M; ++j)
                    if (best[j] > prev[j]) arg[j] = cfg.b_grid[bi];
            }
        }
        std::vector<double>& unew = res.value[k];
        for (std::size_t j = 0; j < M; ++j) unew[j] = u[j] + res.dt_used * best[j];
        res.action[k] = arg;
    }
    return res;
}

} // namespace fragcoag
