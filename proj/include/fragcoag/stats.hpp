#pragma once

#include <vector>

namespace fragcoag {

// upper regularized incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a), a > 0, x >= 0
double igamc(double a, double x);

// survival function of the chi-square law: P(X > chi2) with dof degrees of freedom
double chi_square_sf(double chi2, int dof);

// Pearson chi-square p-value of observed counts against expected counts
// (same length, expected all positive); dof = cells - 1 - extra_constraints
double chi_square_p(const std::vector<double>& observed, const std::vector<double>& expected,
                    int extra_constraints = 0);

} // namespace fragcoag
