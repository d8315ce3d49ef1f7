#include "fragcoag/bounds.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"

namespace fragcoag {

namespace {

void validate(const ScalingConfig& c) {
    if (!(c.h > 0.0) || !std::isfinite(c.h)) throw ConfigError("scaling: h must be positive");
    if (!(c.tau >= 0.0) || !std::isfinite(c.tau)) throw ConfigError("scaling: tau must be >= 0");
    if (!(c.N >= 0.0) || !std::isfinite(c.N)) throw ConfigError("scaling: N must be >= 0");
    if (!(c.T > 0.0) || !std::isfinite(c.T)) throw ConfigError("scaling: T must be positive");
    if (!(c.R > 0.0) || !std::isfinite(c.R)) throw ConfigError("scaling: R must be positive");
    if (c.h * c.N > c.R * (1.0 + 1e-12))
        throw ConfigError("scaling: hN exceeds the state-space radius R");
    if (!(c.K_B >= 0.0) || !(c.Binf >= 0.0) || !(c.K_alpha >= 0.0) || !(c.alpha_sup >= 0.0) ||
        !(c.p >= 0.0))
        throw ConfigError("scaling: reward/action constants must be nonnegative");
}

double fin(long double v, bool& overflowed) {
    if (!std::isfinite(static_cast<double>(v))) {
        overflowed = true;
        return HUGE_VAL;
    }
    return static_cast<double>(v);
}

} // namespace

std::int64_t ScalingConfig::n() const {
    if (!(tau > 0.0)) throw ConfigError("scaling: n undefined for tau = 0");
    return static_cast<std::int64_t>(std::floor(T / tau));
}

nlohmann::json ScalingConfig::to_json() const {
    return {{"h", h},
            {"tau", tau},
            {"N", N},
            {"T", T},
            {"R", R},
            {"kernel_bounds",
             {{"C", kb.C}, {"F", kb.F}, {"C1", kb.C1}, {"F1", kb.F1}, {"C2", kb.C2}, {"F2", kb.F2}}},
            {"K_B", K_B},
            {"Binf", Binf},
            {"K_alpha", K_alpha},
            {"alpha_sup", alpha_sup},
            {"p", p}};
}

ScalingConfig ScalingConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("scaling: expected an object");
    ScalingConfig c;
    try {
        c.h = j.at("h").get<double>();
        c.tau = j.at("tau").get<double>();
        c.N = j.at("N").get<double>();
        c.T = j.at("T").get<double>();
        c.R = j.at("R").get<double>();
        const nlohmann::json& kb = j.at("kernel_bounds");
        c.kb.C = kb.at("C").get<double>();
        c.kb.F = kb.at("F").get<double>();
        c.kb.C1 = kb.value("C1", 0.0);
        c.kb.F1 = kb.value("F1", 0.0);
        c.kb.C2 = kb.value("C2", 0.0);
        c.kb.F2 = kb.value("F2", 0.0);
        c.K_B = j.value("K_B", 0.0);
        c.Binf = j.value("Binf", 0.0);
        c.K_alpha = j.value("K_alpha", 0.0);
        c.alpha_sup = j.value("alpha_sup", 0.0);
        c.p = j.value("p", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scaling: ") + e.what());
    }
    validate(c);
    return c;
}

nlohmann::json BoundsLedger::to_json() const {
    return {{"K", K},       {"L2", L2}, {"M2", M2},   {"R1", R1}, {"R2", R2},
            {"I0", I0},     {"I1", I1}, {"I2", I2},   {"L1", L1}, {"s_h", s_h},
            {"J", J},       {"I0p", I0p}, {"B", B},   {"Bp", Bp}, {"delta", delta},
            {"overflowed", overflowed}};
}

BoundsLedger compute_ledger(const ScalingConfig& cfg, double delta) {
    validate(cfg);
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw ConfigError("ledger: delta must be a nonnegative real");
    const double C = cfg.kb.C, F = cfg.kb.F, C1 = cfg.kb.C1, F1 = cfg.kb.F1, C2 = cfg.kb.C2;
    const double R = cfg.R, tau = cfg.tau, h = cfg.h, N = cfg.N, T = cfg.T;

    BoundsLedger d;
    d.delta = delta;
    d.K = 6.0 * C * R + 3.0 * F + 3.0 * R * (C1 * R + F1);
    d.L2 = 3.0 * C * R * R + 3.0 * F * R;
    d.M2 = 3.0 * (C1 * R * R + 2.0 * C * R + F1 * R + F);
    d.R1 = 3.0 * (C * R * R + F * R) * (6.0 * C * R + 3.0 * F + 3.0 * C1 * R * R + F1 * R);
    d.R2 = 54.0 * (C * R * R + F * R) * (C + F1 + C1 * R + F1 * R + C2 * R * R);
    d.I0 = std::sqrt(N) * 0.5 * tau * (d.R1 + h * d.R2);
    const double cf = C * R * R + F;
    d.I1 = tau * cf;
    d.I2 = cf * (tau * cf + h);
    d.s_h = cf / h;

    bool of = false;
    const long double L1l = static_cast<long double>(d.K) *
                            std::exp(static_cast<long double>(d.M2) * std::sqrt((long double)N) *
                                     static_cast<long double>(tau));
    d.L1 = fin(L1l, of);
    const long double Jl =
        8.0L * T *
        (L1l * L1l * (static_cast<long double>(d.I2) * tau * tau +
                      static_cast<long double>(d.I1) * d.I1 * (T + tau)) +
         static_cast<long double>(N) * N * (2.0L * d.I2 + tau * static_cast<long double>(d.L2) * d.L2));
    d.J = fin(Jl, of);

    // control-sampling surcharge on I0; min{1/tau, p} read literally (p = 0
    // kills the discontinuity factor, tau = 0 kills the whole term)
    const double min_term = std::fmin(tau > 0.0 ? 1.0 / tau : HUGE_VAL, cfg.p);
    const long double surcharge =
        static_cast<long double>(tau) * d.K *
        std::exp((static_cast<long double>(d.K) - L1l) * T) *
        (cfg.K_alpha / 2.0L + 2.0L * (1.0L + min_term) * cfg.alpha_sup);
    d.I0p = fin(d.I0 + surcharge, of);

    const long double eL1T = std::exp(L1l * static_cast<long double>(T));
    const long double growth =
        L1l > 0.0L ? eL1T + (eL1T - 1.0L) / L1l : 1.0L + static_cast<long double>(T);
    const long double bracket =
        L1l > 0.0L ? eL1T + (eL1T - 1.0L + tau / 2.0L) / L1l
                   : 1.0L + static_cast<long double>(T) + (L1l == 0.0L && tau > 0.0 ? HUGE_VAL : 0.0L);
    auto value_gap = [&](long double i0) {
        return static_cast<long double>(tau) * cfg.Binf +
               static_cast<long double>(cfg.K_B) * std::sqrt(2.0L) * d.I1 +
               static_cast<long double>(cfg.K_B) * (delta + i0 * T) * growth +
               (3.0L / std::cbrt(2.0L)) * std::pow(bracket, 2.0L / 3.0L) *
                   std::pow((long double)cfg.K_B, 2.0L / 3.0L) *
                   std::cbrt((long double)cfg.Binf) * std::cbrt(Jl) *
                   std::pow(1.0L + T, 2.0L / 3.0L);
    };
    d.B = fin(value_gap(d.I0), of);
    d.Bp = fin(value_gap(static_cast<long double>(d.I0p)), of);
    d.overflowed = of;
    return d;
}

std::vector<ScalingCheck> validate_scaling(const std::vector<ScalingConfig>& seq) {
    if (seq.size() < 2) throw ConfigError("scaling: need at least 2 configs to judge a trend");
    std::vector<ScalingCheck> out;
    out.reserve(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const ScalingConfig& c = seq[i];
        validate(c);
        if (i > 0 && !(c.h < seq[i - 1].h))
            throw ConfigError("scaling: sequence must be ordered by decreasing h");
        ScalingCheck row;
        row.h = c.h;
        row.tau = c.tau;
        row.N = c.N;
        row.tau_sqrtN = c.tau * std::sqrt(c.N);
        row.tau_N2 = c.tau * c.N * c.N;
        row.h_N2 = c.h * c.N * c.N;
        row.pass = true;
        if (i > 0) {
            const ScalingCheck& prev = out[i - 1];
            const double shrink = 1.0 - 1e-9; // constants must not masquerade as decreasing
            if (!(row.tau <= prev.tau * shrink)) {
                row.pass = false;
                row.offender = "tau";
            } else if (!(row.tau_sqrtN <= prev.tau_sqrtN * shrink)) {
                row.pass = false;
                row.offender = "tau*sqrt(N)";
            } else if (!(row.tau_N2 <= prev.tau_N2 * shrink)) {
                row.pass = false;
                row.offender = "tau*N^2";
            }
        }
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace fragcoag
