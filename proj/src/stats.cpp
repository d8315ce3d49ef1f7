#include "fragcoag/stats.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"

namespace fragcoag {

namespace {

// lower regularized incomplete gamma by its power series; valid for x < a + 1
double igam_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double denom = a;
    for (int n = 0; n < 500; ++n) {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if (term < sum * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// upper regularized incomplete gamma by its continued fraction (modified
// Lentz); valid for x >= a + 1
double igamc_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double f = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        f *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) break;
    }
    return f * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double igamc(double a, double x) {
    if (!(a > 0.0)) throw ConfigError("igamc: a must be positive");
    if (!(x >= 0.0)) throw ConfigError("igamc: x must be >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - igam_series(a, x);
    return igamc_cf(a, x);
}

double chi_square_sf(double chi2, int dof) {
    if (dof < 1) throw ConfigError("chi_square_sf: dof must be >= 1");
    if (!(chi2 >= 0.0)) throw ConfigError("chi_square_sf: statistic must be >= 0");
    return igamc(0.5 * static_cast<double>(dof), 0.5 * chi2);
}

double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected,
                    int extra_constraints) {
    if (observed.size() != expected.size() || observed.empty())
        throw ConfigError("chi_square_p: mismatched or empty count vectors");
    const int dof = static_cast<int>(observed.size()) - 1 - extra_constraints;
    if (dof < 1) throw ConfigError("chi_square_p: no degrees of freedom left");
    double chi2 = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (!(expected[i] > 0.0)) throw ConfigError("chi_square_p: expected counts must be > 0");
        const double d = observed[i] - expected[i];
        chi2 += d * d / expected[i];
    }
    return chi_square_sf(chi2, dof);
}

} // namespace fragcoag
