#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fragcoag {

// Tiny arithmetic expressions used in config files for kernels and rewards,
// e.g. "0.5*m*(2-m)" or "1/(i+j)".  Grammar: + - * /, unary minus, parentheses,
// decimal literals, and a caller-chosen subset of the variables {i, j, m, b}.
// Parsed once into postfix form; evaluation is a small stack walk.
class Expr {
public:
    enum Var : unsigned { VarI = 1u << 0, VarJ = 1u << 1, VarM = 1u << 2, VarB = 1u << 3 };

    Expr() = default;

    // throws ConfigError on syntax errors or variables outside `allowed`
    static Expr parse(const std::string& source, unsigned allowed);

    double eval(double i, double j, double m, double b) const;

    // convenience for expressions over m / (m, b) only
    double eval_m(double m) const { return eval(0.0, 0.0, m, 0.0); }
    double eval_mb(double m, double b) const { return eval(0.0, 0.0, m, b); }

    const std::string& source() const { return source_; }
    bool empty() const { return ops_.empty(); }
    unsigned vars_used() const { return vars_used_; }

private:
    enum class OpKind : std::uint8_t { PushConst, PushVar, Add, Sub, Mul, Div, Neg };
    struct Op {
        OpKind kind;
        double value;   // PushConst
        int var;        // PushVar: 0=i 1=j 2=m 3=b
    };

    std::vector<Op> ops_;
    std::string source_;
    unsigned vars_used_ = 0;

    friend class ExprParser;
};

} // namespace fragcoag
