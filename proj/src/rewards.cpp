#include "fragcoag/rewards.hpp"

#include <cmath>

#include "fragcoag/errors.hpp"
#include "fragcoag/vecops.hpp"

namespace fragcoag {

namespace {

void check_declared(double K_B, double Binf) {
    if (!(K_B >= 0.0) || !std::isfinite(K_B))
        throw ConfigError("reward: K_B must be a finite nonnegative real");
    if (!(Binf >= 0.0) || !std::isfinite(Binf))
        throw ConfigError("reward: Binf must be a finite nonnegative real");
}

} // namespace

RewardModel::RewardModel()
    : B_(Expr::parse("0", Expr::VarM | Expr::VarB)), V0_(Expr::parse("0", Expr::VarM)) {}

RewardModel RewardModel::norm_reduced(const std::string& B_src, const std::string& V0_src,
                                      double K_B, double Binf) {
    check_declared(K_B, Binf);
    RewardModel r;
    r.B_ = Expr::parse(B_src, Expr::VarM | Expr::VarB);
    r.V0_ = Expr::parse(V0_src, Expr::VarM);
    r.K_B_ = K_B;
    r.Binf_ = Binf;
    // the declared sup bound must hold on the working range; spot-check a lattice
    for (int mi = 0; mi <= 12; ++mi) {
        double m = 0.25 * mi;
        if (std::fabs(r.V0_.eval_m(m)) > Binf + 1e-9)
            throw ConfigError("reward: declared Binf violated by V0 on the sample lattice");
        for (double b : {0.0, 0.5, 1.0})
            if (std::fabs(r.B_.eval_mb(m, b)) > Binf + 1e-9)
                throw ConfigError("reward: declared Binf violated by B on the sample lattice");
    }
    return r;
}

RewardModel RewardModel::general(std::function<double(const MeanFieldState&, double)> B,
                                 std::function<double(const MeanFieldState&)> V0, double K_B,
                                 double Binf) {
    check_declared(K_B, Binf);
    if (!B || !V0) throw ConfigError("reward: general form needs both B and V0 callables");
    RewardModel r;
    r.opaque_ = true;
    r.Bfn_ = std::move(B);
    r.V0fn_ = std::move(V0);
    r.K_B_ = K_B;
    r.Binf_ = Binf;
    return r;
}

double RewardModel::running(const MeanFieldState& x, double b) const {
    if (opaque_) return Bfn_(x, b);
    return B_.eval_mb(vec::sum(x.data(), x.size()), b);
}

double RewardModel::terminal(const MeanFieldState& x) const {
    if (opaque_) return V0fn_(x);
    return V0_.eval_m(vec::sum(x.data(), x.size()));
}

double RewardModel::running(const Composition& x, double b) const {
    if (!opaque_) return B_.eval_mb(x.l1_norm(), b);
    return Bfn_(x.to_mean_field(x.total_mass()), b);
}

double RewardModel::terminal(const Composition& x) const {
    if (!opaque_) return V0_.eval_m(x.l1_norm());
    return V0fn_(x.to_mean_field(x.total_mass()));
}

double RewardModel::running_m(double m, double b) const {
    if (opaque_) throw ConfigError("reward: norm-reduced evaluation on an opaque model");
    return B_.eval_mb(m, b);
}

double RewardModel::terminal_m(double m) const {
    if (opaque_) throw ConfigError("reward: norm-reduced evaluation on an opaque model");
    return V0_.eval_m(m);
}

nlohmann::json RewardModel::to_json() const {
    if (opaque_) throw ConfigError("reward: opaque models cannot be serialized");
    return {{"B", B_.source()}, {"V0", V0_.source()}, {"K_B", K_B_}, {"Binf", Binf_}};
}

RewardModel RewardModel::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("B") || !j.contains("V0"))
        throw ConfigError("reward: expected an object with B and V0 expressions");
    return norm_reduced(j.at("B").get<std::string>(), j.at("V0").get<std::string>(),
                        j.value("K_B", 0.0), j.value("Binf", 0.0));
}

} // namespace fragcoag
