#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fragcoag/expr.hpp"

namespace fragcoag {

// Compact control space E: either the interval [0,1] with d(a,b) = |a-b|, or a
// finite label set with an explicit metric table.  Construction of points
// validates membership; everything downstream can then treat b as a plain double.
class ControlSpace {
public:
    static ControlSpace interval();
    static ControlSpace finite(std::vector<double> values,
                               std::vector<std::vector<double>> metric);

    bool is_interval() const { return values_.empty(); }
    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }

    // throws ConfigError when v is outside [0,1] / not a listed label value
    double validate(double v) const;
    double distance(double a, double b) const;

private:
    ControlSpace() = default;
    std::vector<double> values_;              // empty => interval [0,1]
    std::vector<std::vector<double>> metric_; // finite set only
    int index_of(double v) const;
};

struct ControlPoint {
    double value;
    int label_index = -1; // >= 0 when drawn from a finite control set
};

// sup bounds declared by the kernel author: C, F bound the rates (F bounds the
// fragmentation row sum), C1/F1 and C2/F2 bound first and second x-derivatives
struct KernelBounds {
    double C = 0.0;
    double F = 0.0;
    double C1 = 0.0;
    double F1 = 0.0;
    double C2 = 0.0;
    double F2 = 0.0;
};

// Controlled rate family.  coag(i,j,m,b) is the merge rate C_ij of a size-i and a
// size-j coalition; frag(i,j,m,b) the rate F_ij at which a size-i coalition splits
// off a size-j piece (1 <= j < i).  State dependence enters only through
// m = l1 norm of x (total coalition volume), which is all the built-in families use.
//
// Built-ins:
//   constant_example:  C_ij = b,            F_ij = (1-b)/(i-1)
//   norm_dependent:    C_ij = b*f_C(m),     F_ij = (1-b)/(i-1)*f_B(m)
//   expr:              C_ij, F_ij free-form in (i,j,m,b), symmetry-checked on a sample grid
//
// The first two are "uniform": C_ij does not depend on (i,j) and the fragmentation
// row sum sum_{j<i} F_ij does not depend on i, which the simulator exploits.
class RateKernel {
public:
    static RateKernel constant_example();
    static RateKernel norm_dependent(std::function<double(double)> f_C,
                                     std::function<double(double)> f_B, KernelBounds bounds,
                                     std::string f_C_src = "", std::string f_B_src = "");
    static RateKernel norm_dependent_expr(const std::string& f_C, const std::string& f_B,
                                          KernelBounds bounds);
    static RateKernel expr_kernel(const std::string& coag_expr, const std::string& frag_expr,
                                  KernelBounds bounds);

    // merge rate; i, j >= 1
    double coag(std::int64_t i, std::int64_t j, double m, double b) const;
    // split rate; i = 1 has an empty split set and returns 0, otherwise 1 <= j < i is enforced
    double frag(std::int64_t i, std::int64_t j, double m, double b) const;

    bool uniform() const { return uniform_; }
    // uniform families only: the common pair rate c(m,b) and row sum g(m,b) = sum_{j<i} F_ij
    double coag_uniform(double m, double b) const;
    double frag_row_uniform(double m, double b) const;
    // fragmentation row sum sum_{j<i} F_ij for any kernel (0 for i = 1)
    double frag_row_sum(std::int64_t i, double m, double b) const;

    const KernelBounds& bounds() const { return bounds_; }
    const std::string& type() const { return type_; }

    nlohmann::json to_json() const;
    static RateKernel from_json(const nlohmann::json& j);

private:
    RateKernel() = default;

    std::string type_; // "constant" | "norm_dependent" | "expr"
    bool uniform_ = false;
    std::function<double(double)> f_C_, f_B_; // uniform families
    std::string f_C_src_, f_B_src_;
    Expr coag_expr_, frag_expr_; // expr family
    KernelBounds bounds_;

    double checked(double v, const char* what, std::int64_t i, std::int64_t j) const;
    void check_symmetry_sampled() const;
};

} // namespace fragcoag
