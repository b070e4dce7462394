#pragma once

#include "ltsf/models.hpp"

#include <functional>

namespace ltsf::verify {

inline constexpr double kOlsRidge = 1e-9;
inline constexpr double kFiniteDiffStep = 1e-5;

struct OlsSolution {
    Matrix weight; // [horizon, features]
    Vector bias;   // [horizon]
    double residual_mse = 0.0;

    Matrix predict(const Matrix& design) const;
};

/// Least-squares affine fit of targets [N, H] on design [N, D] through the
/// ridge-regularized normal equations (ridge on the weights only).
OlsSolution ols_solve(const Matrix& design, const Matrix& targets, double ridge = kOlsRidge);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for every coordinate.
std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> point,
                                     double step = kFiniteDiffStep);

using ParamsLoss = std::function<double(const models::ModelParams&)>;

/// Finite-difference gradient over every learnable scalar of `params`,
/// returned in the same structure.
models::ModelParams finite_diff_grad(const ParamsLoss& loss, const models::ModelParams& params,
                                     double step = kFiniteDiffStep);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|), with 0/0 taken as 0.
double max_relative_error(std::span<const double> a, std::span<const double> b);

} // namespace ltsf::verify
