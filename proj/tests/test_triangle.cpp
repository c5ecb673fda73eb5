#include <catch2/catch_amalgamated.hpp>

#include "runoff/rng.hpp"
#include "runoff/triangle.hpp"

using namespace runoff;

namespace {

LossTriangle upper_from_rows(const std::vector<std::vector<double>>& rows, Kind kind) {
    const int n = static_cast<int>(rows.size());
    SquareGrid grid(n);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= static_cast<int>(rows[static_cast<std::size_t>(i - 1)].size()); ++j)
            grid.at(i, j) = rows[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
    return LossTriangle(std::move(grid), kind);
}

CompanyDataset toy_dataset_3x3() {
    CompanyDataset ds;
    ds.group_id = "toy";
    ds.line = Line::CA;
    ds.rectangle = SquareGrid(3);
    const double rows[3][3] = {{100, 150, 180}, {110, 165, 198}, {120, 180, 216}};
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) ds.rectangle.at(i, j) = rows[i - 1][j - 1];
    ds.premiums = {200, 220, 240};
    return ds;
}

}  // namespace

TEST_CASE("cumulative to incremental is the first difference") {
    const LossTriangle cum = upper_from_rows({{10, 15, 18}, {20, 30}, {5}}, Kind::cumulative);
    const LossTriangle inc = convert(cum, Kind::incremental);
    CHECK(inc.at(1, 1) == 10.0);
    CHECK(inc.at(1, 2) == 5.0);
    CHECK(inc.at(1, 3) == 3.0);
    CHECK(inc.at(2, 2) == 10.0);
}

TEST_CASE("incremental to cumulative is the prefix sum") {
    const LossTriangle inc = upper_from_rows({{10, 5, 3}, {20, 10}, {5}}, Kind::incremental);
    const LossTriangle cum = convert(inc, Kind::cumulative);
    CHECK(cum.at(1, 1) == 10.0);
    CHECK(cum.at(1, 2) == 15.0);
    CHECK(cum.at(1, 3) == 18.0);
    CHECK(cum.at(2, 2) == 30.0);
}

TEST_CASE("conversion round trip is exact on monetary triangles") {
    // Integer-valued cells (as in the source data) make prefix sums exact.
    Rng rng(20240101);
    for (int rep = 0; rep < 20; ++rep) {
        SquareGrid grid(10);
        for (int i = 1; i <= 10; ++i)
            for (int j = 1; j + i <= 11; ++j) grid.at(i, j) = static_cast<double>(rng.index(1000000));
        const LossTriangle inc(grid, Kind::incremental);
        const LossTriangle round = convert(convert(inc, Kind::cumulative), Kind::incremental);
        REQUIRE(round.cells() == inc.cells());
    }
}

TEST_CASE("convert to the same kind returns the input") {
    const LossTriangle cum = upper_from_rows({{10, 15}, {20}}, Kind::cumulative);
    CHECK(convert(cum, Kind::cumulative).cells() == cum.cells());
}

TEST_CASE("non-square construction fails") {
    CHECK_THROWS_AS(SquareGrid(0), StructuralError);
    CHECK_THROWS_AS(LossTriangle(SquareGrid(1), Kind::cumulative), StructuralError);
}

TEST_CASE("feature scaling bounds and test split") {
    CompanyDataset ds;
    ds.group_id = "g";
    ds.rectangle = SquareGrid(10, 1.0);
    ds.premiums.assign(10, 100.0);
    const auto cells = build_features(ds);
    REQUIRE(cells.size() == 55);

    const auto find = [&](int i, int j) {
        for (const auto& c : cells)
            if (c.i == i && c.j == j) return c;
        FAIL("cell not found");
        return cells.front();
    };
    const CellFeatures first = find(1, 1);
    CHECK(first.ay_star == 0.0);
    CHECK(first.dy_star == 0.0);
    const CellFeatures last_row = find(10, 1);
    CHECK(last_row.ay_star == 1.0);
    CHECK(last_row.dy_star == 0.0);
    CHECK(last_row.split == Split::test);

    int test_count = 0;
    for (const auto& c : cells) {
        CHECK((c.split == Split::test) == (c.i + c.j == 11));
        if (c.split == Split::test) ++test_count;
    }
    CHECK(test_count == 10);
}

TEST_CASE("feature scaling is strictly increasing in both axes") {
    for (int n : {3, 7, 10}) {
        for (int i = 2; i <= n; ++i) CHECK(ay_star(i, n) > ay_star(i - 1, n));
        for (int j = 2; j <= n; ++j) CHECK(dy_star(j, n) > dy_star(j - 1, n));
    }
}

TEST_CASE("3x3 toy features: scaled payment and split on the diagonal") {
    const CompanyDataset ds = toy_dataset_3x3();
    const auto cells = build_features(ds);
    REQUIRE(cells.size() == 6);
    for (const auto& c : cells) {
        if (c.i == 1 && c.j == 3) {
            CHECK(c.d_star == Catch::Approx(0.9));
            CHECK(c.split == Split::test);
        }
    }
}

TEST_CASE("zero premium raises an exposure error naming the year") {
    CompanyDataset ds = toy_dataset_3x3();
    ds.premiums[1] = 0.0;
    try {
        build_features(ds);
        FAIL("expected ExposureError");
    } catch (const ExposureError& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("actuals of the 3x3 toy rectangle") {
    const CompanyDataset ds = toy_dataset_3x3();
    const Actuals a = compute_actuals(ds);
    CHECK(a.reserve == Catch::Approx(129.0));           // (198-165) + (216-120)
    CHECK(a.next_year_payments == Catch::Approx(93.0)); // (198-165) + (180-120)
    CHECK(a.ultimate == Catch::Approx(180.0 + 198.0 + 216.0));
}

TEST_CASE("settled rectangle has zero reserve") {
    CompanyDataset ds;
    ds.group_id = "settled";
    ds.rectangle = SquareGrid(3);
    const double rows[3][3] = {{100, 150, 150}, {110, 165, 165}, {120, 120, 120}};
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) ds.rectangle.at(i, j) = rows[i - 1][j - 1];
    ds.premiums = {1, 1, 1};
    CHECK(compute_actuals(ds).reserve == 0.0);
}

TEST_CASE("monetary closure: ultimate minus paid-to-date equals the reserve") {
    Rng rng(7);
    for (int rep = 0; rep < 10; ++rep) {
        CompanyDataset ds;
        ds.group_id = "r";
        ds.rectangle = SquareGrid(6);
        for (int i = 1; i <= 6; ++i) {
            double acc = 0.0;
            for (int j = 1; j <= 6; ++j) {
                acc += static_cast<double>(rng.index(1000));
                ds.rectangle.at(i, j) = acc;
            }
        }
        ds.premiums.assign(6, 50.0);
        const Actuals a = compute_actuals(ds);
        CHECK(a.ultimate - ds.paid_to_date() == Catch::Approx(a.reserve).margin(1e-9));
    }
}

TEST_CASE("missing cells raise an incomplete-data error") {
    CompanyDataset ds = toy_dataset_3x3();
    ds.rectangle.at(3, 3) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(compute_actuals(ds), IncompleteDataError);
}
