#include <catch2/catch_amalgamated.hpp>

#include "runoff/chain_ladder.hpp"
#include "runoff/rng.hpp"

using namespace runoff;

namespace {

LossTriangle toy_3x3() {
    SquareGrid g(3);
    g.at(1, 1) = 100;
    g.at(1, 2) = 150;
    g.at(1, 3) = 180;
    g.at(2, 1) = 110;
    g.at(2, 2) = 165;
    g.at(3, 1) = 120;
    return LossTriangle(std::move(g), Kind::cumulative);
}

}  // namespace

TEST_CASE("constant-ratio triangle gives constant factors") {
    SquareGrid g(4);
    for (int i = 1; i <= 4; ++i) {
        double v = 10.0 * i;
        for (int j = 1; j + i <= 5; ++j) {
            g.at(i, j) = v;
            v *= 2.0;
        }
    }
    const DevFactors f = dev_factors(LossTriangle(g, Kind::cumulative));
    CHECK(f.at(1) == 1.0);
    for (int j = 2; j <= 4; ++j) CHECK(f.at(j) == Catch::Approx(2.0));
}

TEST_CASE("3x3 toy factors match the hand computation") {
    const DevFactors f = dev_factors(toy_3x3());
    CHECK(f.at(1) == 1.0);
    CHECK(f.at(2) == Catch::Approx(1.5));  // (150+165)/(100+110)
    CHECK(f.at(3) == Catch::Approx(1.2));
}

TEST_CASE("projection completes the toy rectangle") {
    const LossTriangle tri = toy_3x3();
    const SquareGrid full = project(tri, dev_factors(tri));
    CHECK(full.at(3, 3) == Catch::Approx(120.0 * 1.5 * 1.2));
    CHECK(full.at(2, 3) == Catch::Approx(165.0 * 1.2));
    // observed cells unchanged
    CHECK(full.at(1, 2) == 150.0);
    CHECK(full.at(3, 1) == 120.0);
}

TEST_CASE("unit factors carry the diagonal forward") {
    const LossTriangle tri = toy_3x3();
    DevFactors ones;
    ones.lambda = {1.0, 1.0, 1.0};
    const SquareGrid full = project(tri, ones);
    CHECK(full.at(2, 3) == 165.0);
    CHECK(full.at(3, 2) == 120.0);
    CHECK(full.at(3, 3) == 120.0);
}

TEST_CASE("scale equivariance of factors and projection") {
    Rng rng(99);
    SquareGrid g(5);
    for (int i = 1; i <= 5; ++i) {
        double acc = 0.0;
        for (int j = 1; j + i <= 6; ++j) {
            acc += 1.0 + static_cast<double>(rng.index(500));
            g.at(i, j) = acc;
        }
    }
    const LossTriangle tri(g, Kind::cumulative);
    const double c = 3.25;
    SquareGrid scaled_grid(5);
    for (int i = 1; i <= 5; ++i)
        for (int j = 1; j + i <= 6; ++j) scaled_grid.at(i, j) = c * g.at(i, j);
    const LossTriangle scaled(scaled_grid, Kind::cumulative);

    const DevFactors f1 = dev_factors(tri);
    const DevFactors f2 = dev_factors(scaled);
    for (int j = 1; j <= 5; ++j) CHECK(f2.at(j) == Catch::Approx(f1.at(j)));

    const SquareGrid p1 = project(tri, f1);
    const SquareGrid p2 = project(scaled, f2);
    for (int i = 1; i <= 5; ++i)
        for (int j = 1; j <= 5; ++j) CHECK(p2.at(i, j) == Catch::Approx(c * p1.at(i, j)));
}

TEST_CASE("projection restricted to observed cells is the identity") {
    const LossTriangle tri = toy_3x3();
    const SquareGrid full = project(tri, dev_factors(tri));
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j + i <= 4; ++j) CHECK(full.at(i, j) == tri.at(i, j));
}

TEST_CASE("reserve is invariant to the upstream representation") {
    const LossTriangle tri = toy_3x3();
    const LossTriangle via_incremental = convert(convert(tri, Kind::incremental), Kind::cumulative);
    CHECK(chain_ladder_reserve(via_incremental) == Catch::Approx(chain_ladder_reserve(tri)));
}

TEST_CASE("zero denominator raises a degenerate-column error naming the lag") {
    SquareGrid g(3);
    g.at(1, 1) = 0;
    g.at(1, 2) = 0;
    g.at(1, 3) = 5;
    g.at(2, 1) = 0;
    g.at(2, 2) = 4;
    g.at(3, 1) = 3;
    try {
        dev_factors(LossTriangle(g, Kind::cumulative));
        FAIL("expected DegenerateColumnError");
    } catch (const DegenerateColumnError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}
