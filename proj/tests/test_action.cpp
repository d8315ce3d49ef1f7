#include <doctest.h>

#include <vector>

#include "fragcoag/action.hpp"
#include "fragcoag/errors.hpp"

using namespace fragcoag;

namespace {

ActionFunction ramp_then_hold() {
    // ramp 0 -> 1 on [0, 0.5), jump to 0.25, hold on [0.5, 2]
    return ActionFunction::from_pieces(
        {ActionPiece{0.0, 0.5, ActionPiece::Kind::linear, 0.0, 1.0},
         ActionPiece{0.5, 2.0, ActionPiece::Kind::constant, 0.25, 0.0}});
}

} // namespace

TEST_CASE("constant control") {
    const ActionFunction a = ActionFunction::constant(0.4, 2.0);
    CHECK(a(0.0) == 0.4);
    CHECK(a(1.37) == 0.4);
    CHECK(a(2.0) == 0.4); // right endpoint is owned
    CHECK(a.lipschitz() == 0.0);
    CHECK(a.discontinuities() == 0);
    CHECK(a.sup_norm() == 0.4);
    CHECK(a.t_begin() == 0.0);
    CHECK(a.t_end() == 2.0);
    CHECK(a.breakpoints() == std::vector<double>{0.0, 2.0});
    CHECK_THROWS_AS(a(-0.1), ConfigError);
    CHECK_THROWS_AS(a(2.1), ConfigError);
    CHECK_THROWS_AS(ActionFunction::constant(0.4, 0.0), ConfigError);
    CHECK_THROWS_AS(ActionFunction::constant(1.4, 1.0), ConfigError);
}

TEST_CASE("piecewise control evaluates by piece, left-closed") {
    const ActionFunction a = ramp_then_hold();
    CHECK(a(0.0) == 0.0);
    CHECK(a(0.25) == doctest::Approx(0.5));
    CHECK(a(0.5) == 0.25);   // the jump point belongs to the right piece
    CHECK(a(1.9) == 0.25);
    CHECK(a(2.0) == 0.25);
    // derived metadata: steepest ramp slope and one interior jump (1 -> 0.25)
    CHECK(a.lipschitz() == doctest::Approx(2.0));
    CHECK(a.discontinuities() == 1);
    CHECK(a.sup_norm() == 1.0);
    CHECK(a.breakpoints() == std::vector<double>{0.0, 0.5, 2.0});

    // continuous joint is not counted as a jump
    const ActionFunction c = ActionFunction::from_pieces(
        {ActionPiece{0.0, 1.0, ActionPiece::Kind::linear, 0.0, 0.8},
         ActionPiece{1.0, 2.0, ActionPiece::Kind::constant, 0.8, 0.0}});
    CHECK(c.discontinuities() == 0);
    CHECK(c.lipschitz() == doctest::Approx(0.8));
}

TEST_CASE("piece validation") {
    using K = ActionPiece::Kind;
    CHECK_THROWS_AS(ActionFunction::from_pieces({}), ConfigError);
    // zero-length piece
    CHECK_THROWS_AS(ActionFunction::from_pieces({ActionPiece{0.0, 0.0, K::constant, 0.5, 0.0}}),
                    ConfigError);
    // gap between pieces
    CHECK_THROWS_AS(ActionFunction::from_pieces({ActionPiece{0.0, 0.5, K::constant, 0.5, 0.0},
                                                 ActionPiece{0.6, 1.0, K::constant, 0.5, 0.0}}),
                    ConfigError);
    // value outside [0,1] on either end of a ramp
    CHECK_THROWS_AS(ActionFunction::from_pieces({ActionPiece{0.0, 1.0, K::linear, 0.0, 1.5}}),
                    ConfigError);
    // negative declared metadata
    CHECK_THROWS_AS(ActionFunction({ActionPiece{0.0, 1.0, K::constant, 0.5, 0.0}}, -1.0, 0),
                    ConfigError);
}

TEST_CASE("action json round trip preserves shape and metadata") {
    const ActionFunction a = ramp_then_hold();
    const ActionFunction back = ActionFunction::from_json(a.to_json());
    CHECK(back.pieces().size() == 2);
    CHECK(back(0.25) == a(0.25));
    CHECK(back(1.0) == a(1.0));
    CHECK(back.lipschitz() == a.lipschitz());
    CHECK(back.discontinuities() == a.discontinuities());

    // declared metadata overrides the derived values
    nlohmann::json j = a.to_json();
    j["lipschitz"] = 7.0;
    j["discontinuities"] = 4;
    const ActionFunction declared = ActionFunction::from_json(j);
    CHECK(declared.lipschitz() == 7.0);
    CHECK(declared.discontinuities() == 4);

    // omitted metadata falls back to the derived values
    j.erase("lipschitz");
    j.erase("discontinuities");
    const ActionFunction derived = ActionFunction::from_json(j);
    CHECK(derived.lipschitz() == doctest::Approx(2.0));
    CHECK(derived.discontinuities() == 1);

    CHECK_THROWS_AS(ActionFunction::from_json(nlohmann::json::object()), ConfigError);
    CHECK_THROWS_AS(ActionFunction::from_json(nlohmann::json{{"pieces", nlohmann::json::array(
                        {{{"t0", 0.0}, {"t1", 1.0}, {"kind", "cubic"}, {"b0", 0.0}}})}}),
                    ConfigError);
}
