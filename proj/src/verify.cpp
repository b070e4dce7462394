#include "ltsf/verify.hpp"

namespace ltsf::verify {

Matrix OlsSolution::predict(const Matrix& design) const {
    Matrix out = design * weight.transpose();
    out.rowwise() += bias.transpose();
    return out;
}

OlsSolution ols_solve(const Matrix& design, const Matrix& targets, double ridge) {
    if (design.rows() < 1 || design.rows() != targets.rows()) {
        throw ShapeError("ols_solve: design has " + std::to_string(design.rows()) + " rows, targets " +
                         std::to_string(targets.rows()));
    }
    if (!design.allFinite() || !targets.allFinite()) throw NumericError("ols_solve: non-finite input");

    const Index n = design.rows();
    const Index d = design.cols();
    Eigen::MatrixXd augmented(n, d + 1);
    augmented.leftCols(d) = design;
    augmented.col(d).setOnes();

    Eigen::MatrixXd gram = augmented.transpose() * augmented;
    gram.diagonal().head(d).array() += ridge;
    const Eigen::MatrixXd rhs = augmented.transpose() * targets;
    const Eigen::MatrixXd coef = gram.ldlt().solve(rhs); // [d + 1, H]

    OlsSolution solution;
    solution.weight = coef.topRows(d).transpose();
    solution.bias = coef.row(d).transpose();
    const Matrix residual = solution.predict(design) - targets;
    solution.residual_mse = residual.squaredNorm() / static_cast<double>(residual.size());
    return solution;
}

std::vector<double> finite_diff_grad(const ScalarFunction& f, std::span<const double> point, double step) {
    if (!(step > 0.0)) throw Error("finite_diff_grad: step must be positive");
    std::vector<double> probe(point.begin(), point.end());
    std::vector<double> grad(point.size());
    for (std::size_t i = 0; i < probe.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + step;
        const double plus = f(probe);
        probe[i] = saved - step;
        const double minus = f(probe);
        probe[i] = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw NumericError("finite_diff_grad: non-finite loss probing coordinate " + std::to_string(i));
        }
        grad[i] = (plus - minus) / (2.0 * step);
    }
    return grad;
}

models::ModelParams finite_diff_grad(const ParamsLoss& loss, const models::ModelParams& params, double step) {
    models::ModelParams scratch = params;
    const auto grad = finite_diff_grad(
        [&](std::span<const double> values) {
            models::unflatten(values, scratch);
            return loss(scratch);
        },
        models::flatten(params), step);
    models::ModelParams out = params;
    models::unflatten(grad, out);
    return out;
}

double max_relative_error(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ShapeError("max_relative_error: size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
        if (scale == 0.0) continue;
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

} // namespace ltsf::verify
