#include "ltsf/metrics.hpp"

namespace ltsf::metrics {

namespace {

void check_pair(const Matrix& pred, const Matrix& target, const char* what) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ShapeError(std::string(what) + ": prediction is " + std::to_string(pred.rows()) + "x" +
                         std::to_string(pred.cols()) + ", target " + std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()));
    }
    if (pred.size() == 0) throw ShapeError(std::string(what) + ": empty input");
}

struct ResidualSums {
    double abs = 0.0;
    double sq = 0.0;
    std::size_t count = 0;

    void add(const Matrix& pred, const Matrix& target) {
        for (Index i = 0; i < pred.rows(); ++i) {
            for (Index j = 0; j < pred.cols(); ++j) {
                const double r = target(i, j) - pred(i, j);
                abs += std::abs(r);
                sq += r * r;
            }
        }
        count += static_cast<std::size_t>(pred.size());
    }
};

} // namespace

double mae(const Matrix& pred, const Matrix& target) {
    check_pair(pred, target, "mae");
    ResidualSums sums;
    sums.add(pred, target);
    return sums.abs / static_cast<double>(sums.count);
}

double mse(const Matrix& pred, const Matrix& target) {
    check_pair(pred, target, "mse");
    ResidualSums sums;
    sums.add(pred, target);
    return sums.sq / static_cast<double>(sums.count);
}

double gaussian_kl(const GaussianForecast& p, const GaussianForecast& q) {
    check_pair(p.mean, q.mean, "gaussian_kl");
    check_pair(p.mean, p.std, "gaussian_kl");
    check_pair(q.mean, q.std, "gaussian_kl");
    double total = 0.0;
    for (Index i = 0; i < p.mean.rows(); ++i) {
        for (Index j = 0; j < p.mean.cols(); ++j) {
            const double sp = p.std(i, j);
            const double sq = q.std(i, j);
            if (!(sp > 0.0) || !(sq > 0.0)) throw NumericError("gaussian_kl: standard deviations must be positive");
            const double dm = p.mean(i, j) - q.mean(i, j);
            total += std::log(sq / sp) + (sp * sp + dm * dm) / (2.0 * sq * sq) - 0.5;
        }
    }
    return total / static_cast<double>(p.mean.size());
}

std::string_view direction_name(KlDirection direction) {
    return direction == KlDirection::PredictedToTrue ? "predicted||true" : "true||predicted";
}

KlDirection parse_direction(std::string_view name) {
    if (name == "predicted||true") return KlDirection::PredictedToTrue;
    if (name == "true||predicted") return KlDirection::TrueToPredicted;
    throw Error("unknown KL direction '" + std::string(name) + "'");
}

double forecast_kl(const GaussianForecast& predicted, const GaussianForecast& truth, KlDirection direction) {
    return direction == KlDirection::PredictedToTrue ? gaussian_kl(predicted, truth) : gaussian_kl(truth, predicted);
}

MetricReport evaluate(const Forecaster& forecaster, const data::WindowSource& source, std::string model_name,
                      std::string split_name, std::size_t batch_size) {
    if (source.size() == 0) throw DataError("evaluate: split has no windows");
    ResidualSums sums;
    for (const auto& batch : source.batches(batch_size)) {
        const Matrix pred = forecaster(batch);
        check_pair(pred, batch.targets, "evaluate");
        sums.add(pred, batch.targets);
    }
    const auto n = static_cast<double>(sums.count);
    MetricReport report;
    report.model_name = std::move(model_name);
    report.split_name = std::move(split_name);
    report.n_samples = source.size();
    report.mae = sums.abs / n;
    report.mse = sums.sq / n;
    if (!std::isfinite(*report.mae) || !std::isfinite(report.mse)) {
        throw NumericError("evaluate: non-finite metric for " + report.model_name + " on " + report.split_name);
    }
    return report;
}

MetricReport evaluate_split(const models::ModelParams& params, const data::WindowSource& source,
                            std::string model_name, std::string split_name) {
    return evaluate([&](const data::WindowBatch& batch) { return models::forward(params, batch.inputs); }, source,
                    std::move(model_name), std::move(split_name));
}

MetricReport evaluate_split(const models::ModelParams& params, const data::SplitView& view,
                            const data::NormStats& stats, std::string model_name) {
    const data::SplitWindows windows(view, stats, static_cast<std::size_t>(models::lookback_of(params)),
                                     static_cast<std::size_t>(models::horizon_of(params)));
    return evaluate_split(params, windows, std::move(model_name), std::string(data::split_label(view.kind())));
}

Forecaster persistence_forecaster(models::Anchor anchor) {
    return [anchor](const data::WindowBatch& batch) {
        Matrix pred = Matrix::Zero(batch.size(), batch.targets.cols());
        if (anchor) {
            if (*anchor < 0 || *anchor >= batch.inputs.channels()) {
                throw ShapeError("persistence: anchor channel out of range");
            }
            const Index last = batch.inputs.lookback() - 1;
            for (Index b = 0; b < batch.size(); ++b) pred.row(b).setConstant(batch.inputs(b, last, *anchor));
        }
        return pred;
    };
}

} // namespace ltsf::metrics
