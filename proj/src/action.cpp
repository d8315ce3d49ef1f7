#include "fragcoag/action.hpp"

#include <algorithm>
#include <cmath>

#include "fragcoag/errors.hpp"

namespace fragcoag {

static void check_value(double b) {
    if (!(b >= 0.0 && b <= 1.0) || !std::isfinite(b))
        throw ConfigError("action: control value " + std::to_string(b) + " outside [0,1]");
}

void ActionFunction::validate() const {
    if (pieces_.empty()) throw ConfigError("action: needs at least one piece");
    for (std::size_t p = 0; p < pieces_.size(); ++p) {
        const ActionPiece& pc = pieces_[p];
        if (!(pc.t1 > pc.t0))
            throw ConfigError("action: piece " + std::to_string(p) + " has t1 <= t0");
        check_value(pc.b0);
        if (pc.kind == ActionPiece::Kind::linear) check_value(pc.b1);
        if (p > 0 && std::fabs(pc.t0 - pieces_[p - 1].t1) > 1e-12)
            throw ConfigError("action: pieces must tile [0,T] without gaps or overlap");
    }
    if (lipschitz_ < 0.0 || discontinuities_ < 0)
        throw ConfigError("action: K_alpha and discontinuity count must be >= 0");
}

ActionFunction::ActionFunction(std::vector<ActionPiece> pieces, double lipschitz,
                               int discontinuities)
    : pieces_(std::move(pieces)), lipschitz_(lipschitz), discontinuities_(discontinuities) {
    validate();
}

ActionFunction ActionFunction::constant(double b, double T) {
    if (!(T > 0.0)) throw ConfigError("action: horizon must be positive");
    return ActionFunction({ActionPiece{0.0, T, ActionPiece::Kind::constant, b, b}}, 0.0, 0);
}

static double piece_end_value(const ActionPiece& pc) {
    return pc.kind == ActionPiece::Kind::constant ? pc.b0 : pc.b1;
}

ActionFunction ActionFunction::from_pieces(std::vector<ActionPiece> pieces) {
    double lip = 0.0;
    int disc = 0;
    for (std::size_t p = 0; p < pieces.size(); ++p) {
        const ActionPiece& pc = pieces[p];
        if (pc.kind == ActionPiece::Kind::linear && pc.t1 > pc.t0)
            lip = std::fmax(lip, std::fabs(pc.b1 - pc.b0) / (pc.t1 - pc.t0));
        if (p > 0 && std::fabs(pc.b0 - piece_end_value(pieces[p - 1])) > 1e-12) ++disc;
    }
    return ActionFunction(std::move(pieces), lip, disc);
}

double ActionFunction::operator()(double t) const {
    const double lo = t_begin(), hi = t_end();
    const double slack = 1e-9 * std::fmax(1.0, std::fabs(hi));
    if (t < lo - slack || t > hi + slack)
        throw ConfigError("action: evaluation time " + std::to_string(t) + " outside [" +
                          std::to_string(lo) + "," + std::to_string(hi) + "]");
    t = std::fmin(std::fmax(t, lo), hi);
    // last piece also owns its right endpoint so alpha(T) is defined
    std::size_t p = pieces_.size() - 1;
    if (t < pieces_.back().t0) {
        // first piece whose t1 exceeds t
        std::size_t lo_i = 0, hi_i = pieces_.size() - 1;
        while (lo_i < hi_i) {
            std::size_t mid = (lo_i + hi_i) / 2;
            if (pieces_[mid].t1 > t)
                hi_i = mid;
            else
                lo_i = mid + 1;
        }
        p = lo_i;
    }
    const ActionPiece& pc = pieces_[p];
    if (pc.kind == ActionPiece::Kind::constant) return pc.b0;
    double w = (t - pc.t0) / (pc.t1 - pc.t0);
    return pc.b0 + w * (pc.b1 - pc.b0);
}

double ActionFunction::sup_norm() const {
    double s = 0.0;
    for (const ActionPiece& pc : pieces_) {
        s = std::fmax(s, std::fabs(pc.b0));
        if (pc.kind == ActionPiece::Kind::linear) s = std::fmax(s, std::fabs(pc.b1));
    }
    return s;
}

std::vector<double> ActionFunction::breakpoints() const {
    std::vector<double> bp;
    bp.reserve(pieces_.size() + 1);
    bp.push_back(pieces_.front().t0);
    for (const ActionPiece& pc : pieces_) bp.push_back(pc.t1);
    return bp;
}

nlohmann::json ActionFunction::to_json() const {
    nlohmann::json pieces = nlohmann::json::array();
    for (const ActionPiece& pc : pieces_) {
        nlohmann::json jp{{"t0", pc.t0},
                          {"t1", pc.t1},
                          {"kind", pc.kind == ActionPiece::Kind::constant ? "const" : "linear"},
                          {"b0", pc.b0}};
        if (pc.kind == ActionPiece::Kind::linear) jp["b1"] = pc.b1;
        pieces.push_back(std::move(jp));
    }
    return nlohmann::json{
        {"pieces", pieces}, {"lipschitz", lipschitz_}, {"discontinuities", discontinuities_}};
}

ActionFunction ActionFunction::from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("pieces") || !j["pieces"].is_array())
        throw ConfigError("action json: expected {\"pieces\": [...]}");
    std::vector<ActionPiece> pieces;
    for (const auto& jp : j["pieces"]) {
        if (!jp.contains("t0") || !jp.contains("t1") || !jp.contains("kind") || !jp.contains("b0"))
            throw ConfigError("action json: each piece needs t0, t1, kind, b0");
        ActionPiece pc;
        pc.t0 = jp["t0"].get<double>();
        pc.t1 = jp["t1"].get<double>();
        std::string kind = jp["kind"].get<std::string>();
        if (kind == "const") {
            pc.kind = ActionPiece::Kind::constant;
            pc.b0 = jp["b0"].get<double>();
            pc.b1 = pc.b0;
        } else if (kind == "linear") {
            if (!jp.contains("b1")) throw ConfigError("action json: linear piece needs b1");
            pc.kind = ActionPiece::Kind::linear;
            pc.b0 = jp["b0"].get<double>();
            pc.b1 = jp["b1"].get<double>();
        } else {
            throw ConfigError("action json: unknown piece kind \"" + kind + "\"");
        }
        pieces.push_back(pc);
    }
    ActionFunction derived = from_pieces(std::move(pieces));
    double lip = j.contains("lipschitz") ? j["lipschitz"].get<double>() : derived.lipschitz_;
    int disc = j.contains("discontinuities") ? j["discontinuities"].get<int>()
                                             : derived.discontinuities_;
    return ActionFunction(derived.pieces_, lip, disc);
}

} // namespace fragcoag
