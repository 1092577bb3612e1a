#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cml/maps.hpp"
#include "cml/rng.hpp"

using namespace cml;
using Catch::Approx;

TEST_CASE("standard map branch tables") {
    SECTION("doubling2") {
        const auto m = make_standard_map(MapKind::doubling2);
        REQUIRE(m.branches.size() == 2);
        CHECK(m.branches[0].slope == 2.0);
        CHECK(m.branches[1].slope == 2.0);
        CHECK(m.branches[0].intercept == 0.0);
        CHECK(m.branches[1].intercept == -1.0);
        CHECK(m.branches[0].lo == 0.0);
        CHECK(m.branches[1].lo == 0.5);
        CHECK_FALSE(m.branches[0].hi_closed);
        CHECK(m.branches[1].lo_closed);
    }
    SECTION("triple3") {
        const auto m = make_standard_map(MapKind::triple3);
        REQUIRE(m.branches.size() == 3);
        for (const auto& b : m.branches) CHECK(b.slope == 3.0);
        CHECK(m.branches[0].intercept == 0.0);
        CHECK(m.branches[1].intercept == -1.0);
        CHECK(m.branches[2].intercept == -2.0);
    }
    SECTION("neg_triple3") {
        const auto m = make_standard_map(MapKind::neg_triple3);
        REQUIRE(m.branches.size() == 3);
        for (const auto& b : m.branches) CHECK(b.slope == -3.0);
        CHECK(m.branches[0].intercept == 1.0);
        CHECK(m.branches[1].intercept == 2.0);
        CHECK(m.branches[2].intercept == 3.0);
        // first branch is right-closed, the rest left-open
        CHECK(m.branches[0].hi_closed);
        CHECK_FALSE(m.branches[1].lo_closed);
    }
    SECTION("unknown kind is a configuration error") {
        CHECK_THROWS_AS(make_standard_map("lorenz96"), config_error);
    }
}

TEST_CASE("map evaluation") {
    const auto d2 = make_standard_map(MapKind::doubling2);
    const auto t3 = make_standard_map(MapKind::triple3);
    const auto n3 = make_standard_map(MapKind::neg_triple3);
    const auto tent = make_standard_map(MapKind::tent2);

    CHECK(evaluate(d2, 0.75) == Approx(0.5).margin(1e-15));
    CHECK(evaluate(t3, 0.5) == Approx(0.5).margin(1e-15));
    CHECK(evaluate(n3, 1.0 / 3.0) == Approx(0.0).margin(1e-15));
    CHECK(evaluate(tent, 0.75) == Approx(0.5).margin(1e-15));
    CHECK(evaluate(d2, 1.0) == 1.0);
    CHECK(evaluate(d2, 0.0) == 0.0);
    CHECK_THROWS_AS(evaluate(d2, -0.1), domain_error);
    CHECK_THROWS_AS(evaluate(d2, 1.1), domain_error);
}

TEST_CASE("branch selection conventions") {
    const auto d2 = make_standard_map(MapKind::doubling2);
    const auto t3 = make_standard_map(MapKind::triple3);
    const auto n3 = make_standard_map(MapKind::neg_triple3);

    CHECK(branch_index(d2, 0.5) == 1);  // left-closed at 1/2
    CHECK(branch_index(t3, 0.0) == 0);
    CHECK(branch_index(n3, 1.0 / 3.0) == 0);  // first branch right-closed
    CHECK(branch_index(n3, std::nextafter(1.0 / 3.0, 1.0)) == 1);
    CHECK(branch_index(d2, 1.0) == 1);
}

TEST_CASE("derivatives are the constant branch slopes") {
    const auto d2 = make_standard_map(MapKind::doubling2);
    const auto n3 = make_standard_map(MapKind::neg_triple3);
    const auto tent = make_standard_map(MapKind::tent2);
    CHECK(derivative(d2, 0.123) == 2.0);
    CHECK(derivative(d2, 0.9) == 2.0);
    CHECK(derivative(n3, 0.9) == -3.0);
    CHECK(derivative(tent, 0.75) == -2.0);
    CHECK(derivative(tent, 0.25) == 2.0);
}

TEST_CASE("branch intervals partition [0,1]") {
    // Every random x lies in exactly one branch, the image stays in [0,1],
    // and |f'| is the map's constant slope magnitude.
    for (MapKind kind : {MapKind::doubling2, MapKind::triple3, MapKind::neg_triple3, MapKind::tent2}) {
        const auto m = make_standard_map(kind);
        Rng rng = make_rng(20240601, static_cast<std::uint64_t>(kind));
        const double k = m.slope_magnitude();
        REQUIRE((k == 2.0 || k == 3.0));
        for (int i = 0; i < 1000000; ++i) {
            const double x = uniform01(rng);
            int hits = 0;
            for (const auto& b : m.branches) hits += b.contains(x) ? 1 : 0;
            if (hits != 1) {
                CAPTURE(to_string(kind), x);
                REQUIRE(hits == 1);
            }
            const double y = evaluate(m, x);
            if (!(y >= 0.0 && y <= 1.0)) {
                CAPTURE(to_string(kind), x, y);
                REQUIRE(false);
            }
        }
        // breakpoints themselves
        for (double cut : m.breakpoints()) {
            int hits = 0;
            for (const auto& b : m.branches) hits += b.contains(cut) ? 1 : 0;
            CHECK(hits == 1);
        }
    }
}
