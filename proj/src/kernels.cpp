#include "fragcoag/kernels.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"

namespace fragcoag {

// --- ControlSpace ---

ControlSpace ControlSpace::interval() { return ControlSpace(); }

ControlSpace ControlSpace::finite(std::vector<double> values,
                                  std::vector<std::vector<double>> metric) {
    if (values.empty()) throw ConfigError("control space: finite set needs at least one label");
    if (metric.size() != values.size())
        throw ConfigError("control space: metric table must be square of the label count");
    for (std::size_t r = 0; r < metric.size(); ++r) {
        if (metric[r].size() != values.size())
            throw ConfigError("control space: metric table must be square of the label count");
        if (metric[r][r] != 0.0)
            throw ConfigError("control space: metric diagonal must be zero");
        for (std::size_t c = 0; c < metric[r].size(); ++c) {
            if (metric[r][c] < 0.0) throw ConfigError("control space: metric entries must be >= 0");
            if (metric[r][c] != metric[c][r])
                throw ConfigError("control space: metric table must be symmetric");
        }
    }
    ControlSpace s;
    s.values_ = std::move(values);
    s.metric_ = std::move(metric);
    return s;
}

int ControlSpace::index_of(double v) const {
    for (std::size_t k = 0; k < values_.size(); ++k)
        if (values_[k] == v) return static_cast<int>(k);
    return -1;
}

double ControlSpace::validate(double v) const {
    if (is_interval()) {
        if (!(v >= 0.0 && v <= 1.0) || !std::isfinite(v))
            throw ConfigError("control value " + std::to_string(v) + " outside [0,1]");
        return v;
    }
    if (index_of(v) < 0)
        throw ConfigError("control value " + std::to_string(v) + " is not a declared label");
    return v;
}

double ControlSpace::distance(double a, double b) const {
    if (is_interval()) return std::fabs(a - b);
    int ia = index_of(a), ib = index_of(b);
    if (ia < 0 || ib < 0) throw ConfigError("control distance: value is not a declared label");
    return metric_[static_cast<std::size_t>(ia)][static_cast<std::size_t>(ib)];
}

// --- RateKernel ---

RateKernel RateKernel::constant_example() {
    RateKernel k;
    k.type_ = "constant";
    k.uniform_ = true;
    k.f_C_ = [](double) { return 1.0; };
    k.f_B_ = [](double) { return 1.0; };
    k.f_C_src_ = "1";
    k.f_B_src_ = "1";
    // sup over b in [0,1]: C_ij = b <= 1 and sum_{j<i} (1-b)/(i-1) = 1-b <= 1
    k.bounds_ = KernelBounds{1.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    return k;
}

RateKernel RateKernel::norm_dependent(std::function<double(double)> f_C,
                                      std::function<double(double)> f_B, KernelBounds bounds,
                                      std::string f_C_src, std::string f_B_src) {
    if (!f_C || !f_B) throw ConfigError("norm_dependent kernel: both f_C and f_B are required");
    RateKernel k;
    k.type_ = "norm_dependent";
    k.uniform_ = true;
    k.f_C_ = std::move(f_C);
    k.f_B_ = std::move(f_B);
    k.f_C_src_ = std::move(f_C_src);
    k.f_B_src_ = std::move(f_B_src);
    k.bounds_ = bounds;
    return k;
}

RateKernel RateKernel::norm_dependent_expr(const std::string& f_C, const std::string& f_B,
                                           KernelBounds bounds) {
    Expr ec = Expr::parse(f_C, Expr::VarM);
    Expr eb = Expr::parse(f_B, Expr::VarM);
    return norm_dependent([ec](double m) { return ec.eval_m(m); },
                          [eb](double m) { return eb.eval_m(m); }, bounds, f_C, f_B);
}

RateKernel RateKernel::expr_kernel(const std::string& coag_expr, const std::string& frag_expr,
                                   KernelBounds bounds) {
    RateKernel k;
    k.type_ = "expr";
    k.uniform_ = false;
    k.coag_expr_ = Expr::parse(coag_expr, Expr::VarI | Expr::VarJ | Expr::VarM | Expr::VarB);
    k.frag_expr_ = Expr::parse(frag_expr, Expr::VarI | Expr::VarJ | Expr::VarM | Expr::VarB);
    k.bounds_ = bounds;
    k.check_symmetry_sampled();
    return k;
}

double RateKernel::checked(double v, const char* what, std::int64_t i, std::int64_t j) const {
    if (!(v >= 0.0) || !std::isfinite(v))
        throw NumericalError(std::string("invalid kernel: ") + what + "(" + std::to_string(i) +
                             "," + std::to_string(j) + ") evaluated to " + std::to_string(v));
    return v;
}

double RateKernel::coag(std::int64_t i, std::int64_t j, double m, double b) const {
    if (i < 1 || j < 1) throw ConfigError("coag rate: sizes must be >= 1");
    if (uniform_) return checked(b * f_C_(m), "C", i, j);
    return checked(coag_expr_.eval(static_cast<double>(i), static_cast<double>(j), m, b), "C", i, j);
}

double RateKernel::frag(std::int64_t i, std::int64_t j, double m, double b) const {
    if (i == 1) return 0.0; // a singleton has nothing to split off
    if (i < 1 || j < 1 || j >= i)
        throw ConfigError("frag rate: need 1 <= j < i, got i = " + std::to_string(i) +
                          ", j = " + std::to_string(j));
    if (uniform_)
        return checked((1.0 - b) * f_B_(m) / static_cast<double>(i - 1), "F", i, j);
    return checked(frag_expr_.eval(static_cast<double>(i), static_cast<double>(j), m, b), "F", i, j);
}

double RateKernel::coag_uniform(double m, double b) const {
    if (!uniform_) throw ConfigError("coag_uniform: kernel is not uniform");
    return checked(b * f_C_(m), "C", 0, 0);
}

double RateKernel::frag_row_uniform(double m, double b) const {
    if (!uniform_) throw ConfigError("frag_row_uniform: kernel is not uniform");
    return checked((1.0 - b) * f_B_(m), "F-row", 0, 0);
}

double RateKernel::frag_row_sum(std::int64_t i, double m, double b) const {
    if (i <= 1) return 0.0;
    if (uniform_) return frag_row_uniform(m, b);
    double s = 0.0;
    for (std::int64_t j = 1; j < i; ++j) s += frag(i, j, m, b);
    return s;
}

void RateKernel::check_symmetry_sampled() const {
    const double ms[] = {0.1, 0.7, 1.5};
    const double bs[] = {0.0, 0.37, 1.0};
    const double tol = 1e-12;
    for (double m : ms) {
        for (double b : bs) {
            for (std::int64_t i = 1; i <= 8; ++i) {
                for (std::int64_t j = 1; j <= 8; ++j) {
                    double cij = coag(i, j, m, b);
                    double cji = coag(j, i, m, b);
                    if (std::fabs(cij - cji) > tol * std::fmax(1.0, std::fabs(cij)))
                        throw ConfigError("expr kernel: C(i,j) != C(j,i) at i=" + std::to_string(i) +
                                          ", j=" + std::to_string(j));
                }
            }
            for (std::int64_t i = 2; i <= 9; ++i) {
                for (std::int64_t j = 1; j < i; ++j) {
                    double fij = frag(i, j, m, b);
                    double fmir = frag(i, i - j, m, b);
                    if (std::fabs(fij - fmir) > tol * std::fmax(1.0, std::fabs(fij)))
                        throw ConfigError("expr kernel: F(i,j) != F(i,i-j) at i=" +
                                          std::to_string(i) + ", j=" + std::to_string(j));
                }
            }
        }
    }
}

static KernelBounds bounds_from_json(const nlohmann::json& j) {
    KernelBounds b;
    if (!j.is_object()) throw ConfigError("kernel json: bounds must be an object");
    auto get = [&](const char* name) -> double {
        if (!j.contains(name))
            throw ConfigError(std::string("kernel json: bounds missing \"") + name + "\"");
        if (!j[name].is_number())
            throw ConfigError(std::string("kernel json: bound \"") + name + "\" must be a number");
        double v = j[name].get<double>();
        if (v < 0.0) throw ConfigError(std::string("kernel json: bound \"") + name + "\" is negative");
        return v;
    };
    b.C = get("C");
    b.F = get("F");
    b.C1 = get("C1");
    b.F1 = get("F1");
    b.C2 = get("C2");
    b.F2 = get("F2");
    return b;
}

nlohmann::json RateKernel::to_json() const {
    nlohmann::json j;
    j["type"] = type_;
    if (type_ != "constant") {
        if (type_ == "norm_dependent") {
            if (f_C_src_.empty() || f_B_src_.empty())
                throw ConfigError("kernel to_json: norm_dependent kernel built from opaque "
                                  "functions has no expression form");
            j["f_C"] = f_C_src_;
            j["f_B"] = f_B_src_;
        } else {
            j["f_C"] = coag_expr_.source();
            j["f_B"] = frag_expr_.source();
        }
        j["bounds"] = {{"C", bounds_.C},   {"F", bounds_.F},   {"C1", bounds_.C1},
                       {"F1", bounds_.F1}, {"C2", bounds_.C2}, {"F2", bounds_.F2}};
    }
    return j;
}

RateKernel RateKernel::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("type"))
        throw ConfigError("kernel json: expected an object with a \"type\" field");
    std::string type = j["type"].get<std::string>();
    if (type == "constant") return constant_example();
    if (!j.contains("f_C") || !j.contains("f_B") || !j["f_C"].is_string() || !j["f_B"].is_string())
        throw ConfigError("kernel json: type \"" + type + "\" needs string fields f_C and f_B");
    if (!j.contains("bounds")) throw ConfigError("kernel json: type \"" + type + "\" needs bounds");
    KernelBounds b = bounds_from_json(j["bounds"]);
    if (type == "norm_dependent")
        return norm_dependent_expr(j["f_C"].get<std::string>(), j["f_B"].get<std::string>(), b);
    if (type == "expr")
        return expr_kernel(j["f_C"].get<std::string>(), j["f_B"].get<std::string>(), b);
    throw ConfigError("kernel json: unknown type \"" + type + "\"");
}

} // namespace fragcoag
