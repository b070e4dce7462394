#pragma once

#include "ltsf/dataio.hpp"
#include "ltsf/models.hpp"

#include <functional>
#include <optional>

namespace ltsf::metrics {

double mae(const Matrix& pred, const Matrix& target);
double mse(const Matrix& pred, const Matrix& target);

/// Per-step univariate Gaussian forecast.
struct GaussianForecast {
    Matrix mean; // [batch, horizon]
    Matrix std;  // [batch, horizon], strictly positive
};

/// KL(p || q) per step in closed form, averaged over batch and horizon.
double gaussian_kl(const GaussianForecast& p, const GaussianForecast& q);

enum class KlDirection {
    PredictedToTrue, // KL(predicted || true)
    TrueToPredicted, // KL(true || predicted)
};

std::string_view direction_name(KlDirection direction);
KlDirection parse_direction(std::string_view name);

double forecast_kl(const GaussianForecast& predicted, const GaussianForecast& truth, KlDirection direction);

struct MetricReport {
    std::string model_name;
    std::string split_name;
    std::size_t n_samples = 0; // evaluated windows
    std::optional<double> mae; // absent where only MSE is reported
    double mse = 0.0;
    std::optional<double> kl;
    std::optional<KlDirection> kl_direction;
};

/// Point forecaster evaluated batch by batch.
using Forecaster = std::function<Matrix(const data::WindowBatch&)>;

/// Streams every window of `source` through `forecaster` and accumulates the
/// absolute and squared residuals over all window x horizon elements, in
/// window order. Values stay in normalized units.
MetricReport evaluate(const Forecaster& forecaster, const data::WindowSource& source, std::string model_name,
                      std::string split_name, std::size_t batch_size = 256);

/// evaluate() with a model forward pass as the forecaster.
MetricReport evaluate_split(const models::ModelParams& params, const data::WindowSource& source,
                            std::string model_name, std::string split_name);

/// Builds the stride-1 windows of `view` (lookback and horizon taken from the
/// parameters) and evaluates them.
MetricReport evaluate_split(const models::ModelParams& params, const data::SplitView& view,
                            const data::NormStats& stats, std::string model_name);

/// Predicts the anchor channel's last lookback value for every horizon step,
/// or zero (the training mean in normalized units) when there is no anchor.
Forecaster persistence_forecaster(models::Anchor anchor);

} // namespace ltsf::metrics
