#include <catch2/catch_amalgamated.hpp>

#include "runoff/stacking.hpp"

using namespace runoff;

namespace {

CompanyDataset toy_dataset() {
    CompanyDataset ds;
    ds.group_id = "toy";
    ds.rectangle = SquareGrid(3);
    const double rows[3][3] = {{100, 150, 180}, {110, 165, 198}, {120, 180, 216}};
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) ds.rectangle.at(i, j) = rows[i - 1][j - 1];
    ds.premiums = {200, 220, 240};
    return ds;
}

Level1Grids constant_grids(int n, double c, const DevFactors& cl) {
    Level1Grids g{SquareGrid(n, c), SquareGrid(n, c), SquareGrid(n, c), SquareGrid(n, c), cl};
    return g;
}

}  // namespace

TEST_CASE("development-factor feature is one at the first lag") {
    const CompanyDataset ds = toy_dataset();
    DevFactors cl;
    cl.lambda = {1.0, 1.5, 1.2};
    const auto cells = assemble_features(constant_grids(3, 0.4, cl), ds);
    REQUIRE(cells.size() == 9);
    for (const auto& c : cells) {
        if (c.j == 1) CHECK(c.x[3] == 1.0);
        if (c.j == 2) CHECK(c.x[3] == 1.5);
        if (c.j == 3) CHECK(c.x[3] == 1.2);
    }
}

TEST_CASE("constant sources pass through positionally") {
    const CompanyDataset ds = toy_dataset();
    DevFactors cl;
    cl.lambda = {1.0, 1.5, 1.2};
    const auto cells = assemble_features(constant_grids(3, 0.7, cl), ds);
    int train = 0, test = 0, lower = 0;
    for (const auto& c : cells) {
        CHECK(c.x[0] == 0.7);
        CHECK(c.x[1] == 0.7);
        CHECK(c.x[2] == 0.7);
        CHECK(c.x[4] == 0.7);
        switch (c.split) {
            case Split::train: ++train; break;
            case Split::test: ++test; break;
            case Split::lower: ++lower; break;
        }
        if (c.split != Split::lower)
            CHECK(c.target == Catch::Approx(ds.rectangle.at(c.i, c.j) / ds.premiums[c.i - 1]));
    }
    CHECK(train == 3);
    CHECK(test == 3);
    CHECK(lower == 3);
}

TEST_CASE("mis-sized inputs raise an assembly error naming the source") {
    const CompanyDataset ds = toy_dataset();
    DevFactors cl;
    cl.lambda = {1.0, 1.5, 1.2};
    Level1Grids g = constant_grids(3, 0.5, cl);
    g.csr = SquareGrid(2, 0.5);
    try {
        assemble_features(g, ds);
        FAIL("expected AssemblyError");
    } catch (const AssemblyError& e) {
        CHECK(std::string(e.what()).find("csr") != std::string::npos);
    }
    g = constant_grids(3, 0.5, cl);
    g.cl.lambda.resize(2);
    CHECK_THROWS_AS(assemble_features(g, ds), AssemblyError);
}

TEST_CASE("toy pipeline: records equal the level-1 predictions cell by cell") {
    const CompanyDataset ds = toy_dataset();
    const auto features = build_features(ds);
    std::vector<Sample> train;
    for (const auto& c : features)
        if (c.split == Split::train) train.push_back(Sample{{c.ay_star, c.dy_star}, c.d_star});

    const ForestModel rf = fit_rf(train, 5, 1, 1, 11);
    const BoostModel gb = fit_gb(train, 5, 1, 12);
    Level1Grids grids{predict_grid(rf, 3), predict_grid(gb, 3), SquareGrid(3, 0.25), SquareGrid(3, 0.5),
                      DevFactors{{1.0, 1.5, 1.2}}};
    const auto cells = assemble_features(grids, ds);
    for (const auto& c : cells) {
        const std::vector<double> x{ay_star(c.i, 3), dy_star(c.j, 3)};
        CHECK(c.x[0] == Catch::Approx(rf.predict(x)));
        CHECK(c.x[1] == Catch::Approx(gb.predict(x)));
        CHECK(c.x[2] == 0.25);
        CHECK(c.x[4] == 0.5);
    }
}

TEST_CASE("zero-weight stacking net: constant surface and its reserve") {
    const CompanyDataset ds = toy_dataset();
    DevFactors cl;
    cl.lambda = {1.0, 1.5, 1.2};
    const auto cells = assemble_features(constant_grids(3, 0.6, cl), ds);

    NeuralNet net(std::vector<int>{5, 5, 5, 1});
    net.layer_biases(2)[0] = 0.9;
    const StackedPrediction pred = predict_rectangle(net, cells, ds);
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) CHECK(pred.scaled.at(i, j) == Catch::Approx(0.9));

    // Reserve = sum_i P_i * (bias - paid_star_i).
    double expected = 0.0;
    for (int i = 1; i <= 3; ++i) {
        const double paid_star = ds.rectangle.at(i, 4 - i) / ds.premiums[i - 1];
        expected += ds.premiums[i - 1] * (0.9 - paid_star);
    }
    CHECK(pred.reserve == Catch::Approx(expected));
    // Upper-triangle observed cells are untouched by prediction: the paid
    // diagonal in the reserve formula comes from the dataset itself.
    CHECK(pred.ultimate == Catch::Approx(0.9 * (200.0 + 220.0 + 240.0)));
}

TEST_CASE("level-2 fit selects the only point of a singleton grid") {
    const CompanyDataset ds = toy_dataset();
    DevFactors cl;
    cl.lambda = {1.0, 1.5, 1.2};
    // Informative features: use the scaled truth as every source.
    SquareGrid truth(3);
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) truth.at(i, j) = ds.rectangle.at(i, j) / ds.premiums[i - 1];
    Level1Grids grids{truth, truth, truth, truth, cl};
    const auto cells = assemble_features(grids, ds);
    const Level2Fit fit = fit_level2(cells, {0.1}, 2, 77, /*epochs=*/50);
    CHECK(fit.theta == 0.1);
    CHECK(fit.grid_index == 0);
}

TEST_CASE("prediction is deterministic once fitted") {
    const CompanyDataset ds = toy_dataset();
    DevFactors cl;
    cl.lambda = {1.0, 1.5, 1.2};
    const auto cells = assemble_features(constant_grids(3, 0.45, cl), ds);
    const Level2Fit fit = fit_level2(cells, {0.0, 0.2}, 2, 13, /*epochs=*/100);
    const StackedPrediction p1 = predict_rectangle(fit.net, cells, ds);
    const StackedPrediction p2 = predict_rectangle(fit.net, cells, ds);
    CHECK(p1.scaled == p2.scaled);
    CHECK(p1.reserve == p2.reserve);
}
