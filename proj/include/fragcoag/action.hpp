#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace fragcoag {

// One Lipschitz piece of an open-loop control: either a constant value or a
// linear ramp from b0 at t0 to b1 at t1.  Pieces are left-closed: the piece
// owns [t0, t1).
struct ActionPiece {
    double t0;
    double t1;
    enum class Kind { constant, linear } kind;
    double b0;
    double b1; // linear only; ignored for constant pieces
};

// Piecewise-Lipschitz open-loop control alpha: [0,T] -> [0,1], with the declared
// global Lipschitz constant K_alpha and interior discontinuity count p that the
// error-bound ledger consumes.  When a config omits them they are computed from
// the pieces (max ramp slope; count of jumps at piece joints).
class ActionFunction {
public:
    ActionFunction() = default;
    ActionFunction(std::vector<ActionPiece> pieces, double lipschitz, int discontinuities);

    static ActionFunction constant(double b, double T);
    // pieces cover [0,T] contiguously; K_alpha and p derived from the pieces
    static ActionFunction from_pieces(std::vector<ActionPiece> pieces);

    double operator()(double t) const;

    double t_begin() const { return pieces_.front().t0; }
    double t_end() const { return pieces_.back().t1; }
    double lipschitz() const { return lipschitz_; }
    int discontinuities() const { return discontinuities_; }
    // sup_t |alpha(t)|; attained at a piece endpoint since pieces are affine
    double sup_norm() const;
    const std::vector<ActionPiece>& pieces() const { return pieces_; }
    // piece boundaries, ascending, including both ends of [0,T]
    std::vector<double> breakpoints() const;

    nlohmann::json to_json() const;
    static ActionFunction from_json(const nlohmann::json& j);

private:
    std::vector<ActionPiece> pieces_;
    double lipschitz_ = 0.0;
    int discontinuities_ = 0;

    void validate() const;
};

} // namespace fragcoag
