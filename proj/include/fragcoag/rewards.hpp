#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "fragcoag/composition.hpp"
#include "fragcoag/expr.hpp"

namespace fragcoag {

// Running reward B(x,b) plus terminal reward V0(x), with the declared
// l2-Lipschitz constant K_B and sup bound Binf consumed by the error-bound
// ledger.  The workhorse family is norm-reduced (B and V0 depend on x only
// through m = sum_i x_i); it is the class the 1-D solver can certify and the
// only one that round-trips through JSON, as expressions in m and b.
class RewardModel {
public:
    RewardModel(); // B = 0, V0 = 0

    static RewardModel norm_reduced(const std::string& B_src, const std::string& V0_src,
                                    double K_B, double Binf);
    // arbitrary vector-state rewards for tests and cross-checks; not serializable
    static RewardModel general(std::function<double(const MeanFieldState&, double)> B,
                               std::function<double(const MeanFieldState&)> V0, double K_B,
                               double Binf);

    double running(const MeanFieldState& x, double b) const;
    double terminal(const MeanFieldState& x) const;
    // chain-side evaluation on the rescaled composition
    double running(const Composition& x, double b) const;
    double terminal(const Composition& x) const;
    // norm-reduced fast path; rejects opaque models
    double running_m(double m, double b) const;
    double terminal_m(double m) const;

    bool norm_reduced_form() const { return !opaque_; }
    double lipschitz() const { return K_B_; }
    double sup_bound() const { return Binf_; }

    nlohmann::json to_json() const;
    static RewardModel from_json(const nlohmann::json& j);

private:
    bool opaque_ = false;
    Expr B_;  // vars m, b
    Expr V0_; // var m
    std::function<double(const MeanFieldState&, double)> Bfn_;
    std::function<double(const MeanFieldState&)> V0fn_;
    double K_B_ = 0.0;
    double Binf_ = 0.0;
};

} // namespace fragcoag
