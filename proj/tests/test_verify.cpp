#include "doctest.h"
#include "test_support.hpp"

#include "ltsf/training.hpp"
#include "ltsf/verify.hpp"

using namespace ltsf;
using namespace ltsf::verify;

TEST_CASE("ols on an identity design") {
    const Matrix design = Matrix::Identity(4, 4);
    Matrix targets(4, 1);
    targets << 1, 2, 3, 4;
    const auto sol = ols_solve(design, targets, 0.0);
    CHECK(sol.residual_mse == doctest::Approx(0.0).epsilon(1e-20));
    CHECK((sol.predict(design) - targets).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("ols recovers a noiseless affine map") {
    Matrix x(5, 1), y(5, 1);
    x << -2, 0, 1, 3, 7;
    y = 3.0 * x.array() + 1.0;
    const auto sol = ols_solve(x, y);
    CHECK(sol.weight(0, 0) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(sol.bias[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sol.residual_mse < 1e-15);

    CHECK_THROWS_AS(ols_solve(x, Matrix::Zero(4, 1)), ShapeError);
}

TEST_CASE("ols is the minimum of the training MSE") {
    Rng rng(6);
    const Matrix x = testing::random_matrix(rng, 60, 5);
    const Matrix y = testing::random_matrix(rng, 60, 3);
    const auto sol = ols_solve(x, y);
    CHECK(sol.residual_mse == doctest::Approx(testing::naive_mse(sol.predict(x), y)).epsilon(1e-12));
    for (int trial = 0; trial < 30; ++trial) {
        OlsSolution moved = sol;
        moved.weight += testing::random_matrix(rng, 3, 5, 1e-3);
        moved.bias += testing::random_matrix(rng, 3, 1, 1e-3).col(0);
        CHECK(testing::naive_mse(moved.predict(x), y) >= sol.residual_mse);
    }
}

TEST_CASE("central differences") {
    const ScalarFunction square = [](std::span<const double> v) { return v[0] * v[0]; };
    const std::vector<double> at3{3.0};
    CHECK(finite_diff_grad(square, at3)[0] == doctest::Approx(6.0).epsilon(1e-8));

    const ScalarFunction constant = [](std::span<const double>) { return 7.0; };
    const std::vector<double> point{1.0, -2.0, 0.5};
    for (double g : finite_diff_grad(constant, point)) CHECK(g == 0.0);

    const ScalarFunction bilinear = [](std::span<const double> v) { return v[0] * v[1] + 2.0 * v[1]; };
    const std::vector<double> xy{2.0, 5.0};
    const auto g = finite_diff_grad(bilinear, xy);
    CHECK(g[0] == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(g[1] == doctest::Approx(4.0).epsilon(1e-9));

    CHECK_THROWS_AS(finite_diff_grad(square, at3, 0.0), Error);
}

TEST_CASE("finite differences over model parameters") {
    Rng rng(12);
    const auto params = testing::random_params(rng, models::ModelKind::Linear, 2, 2, 1);
    const ParamsLoss norm = [](const models::ModelParams& p) {
        double s = 0.0;
        for (double v : models::flatten(p)) s += v * v;
        return s;
    };
    const auto grad = finite_diff_grad(norm, params);
    const auto flat = models::flatten(params);
    const auto flat_grad = models::flatten(grad);
    REQUIRE(flat_grad.size() == flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) CHECK(flat_grad[i] == doctest::Approx(2.0 * flat[i]).epsilon(1e-8));
}

TEST_CASE("max_relative_error") {
    const std::vector<double> a{1.0, 0.0, -2.0};
    const std::vector<double> b{1.1, 0.0, -2.0};
    CHECK(max_relative_error(a, b) == doctest::Approx(0.1 / 1.1));
    CHECK(max_relative_error(a, a) == 0.0);
    const std::vector<double> shorter{1.0};
    CHECK_THROWS_AS(max_relative_error(a, shorter), ShapeError);
}
