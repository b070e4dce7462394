#pragma once

#include "ltsf/common.hpp"
#include "ltsf/tensor.hpp"

#include <optional>
#include <string_view>
#include <variant>

namespace ltsf::models {

enum class ModelKind { Linear, NLinear, DLinear };

std::string_view kind_name(ModelKind kind);         // "linear", "nlinear", "dlinear"
std::string_view kind_display_name(ModelKind kind); // "Linear", "NLinear", "DLinear"
ModelKind parse_kind(std::string_view name);

/// Channel whose last lookback value NLinear adds back to every horizon step.
/// nullopt means no anchor: predictions are W x' + b only.
using Anchor = std::optional<Index>;

inline constexpr int kDefaultKernel = 25;

/// y = W x + b with W of shape [horizon, lookback * channels].
struct AffineMap {
    Matrix weight;
    Vector bias;

    Index horizon() const { return weight.rows(); }
    Index width() const { return weight.cols(); }
};

struct LinearParams {
    AffineMap map;
    Index lookback = 0;
    Index channels = 0;
};

struct NLinearParams {
    AffineMap map;
    Index lookback = 0;
    Index channels = 0;
    Anchor anchor;
};

struct DLinearParams {
    AffineMap trend;
    AffineMap seasonal;
    Index lookback = 0;
    Index channels = 0;
    int kernel = kDefaultKernel;
};

using ModelParams = std::variant<LinearParams, NLinearParams, DLinearParams>;

ModelKind kind_of(const ModelParams& params);
Index lookback_of(const ModelParams& params);
Index channels_of(const ModelParams& params);
Index horizon_of(const ModelParams& params);

/// The learnable blocks of a parameter set in a fixed order (trend before
/// seasonal for DLinear). Optimizers and gradient checks iterate these.
std::vector<AffineMap*> affine_blocks(ModelParams& params);
std::vector<const AffineMap*> affine_blocks(const ModelParams& params);

/// All learnable scalars, block by block, weights row-major then bias.
std::vector<double> flatten(const ModelParams& params);
/// Inverse of flatten; `params` supplies the shapes.
void unflatten(std::span<const double> values, ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

struct DecomposedWindow {
    WindowTensor trend;
    WindowTensor seasonal;
};

/// Length-preserving moving average along time, per sample and channel. The
/// sequence is padded by repeating its first value (k-1)/2 times in front and
/// its last value (k-1)/2 times at the back. `kernel` must be odd and positive.
WindowTensor moving_average(const WindowTensor& window, int kernel);

/// trend = moving_average(window), seasonal = window - trend, with seasonal
/// nudged by at most a couple of ulps so that trend + seasonal rounds back to
/// the window value whenever such a double exists.
DecomposedWindow decompose(const WindowTensor& window, int kernel);

Matrix linear_forward(const LinearParams& params, const WindowTensor& inputs);
Matrix nlinear_forward(const NLinearParams& params, const WindowTensor& inputs);
Matrix dlinear_forward(const DLinearParams& params, const WindowTensor& inputs);
Matrix forward(const ModelParams& params, const WindowTensor& inputs);

/// Inputs minus each channel's last lookback value.
WindowTensor center_on_last(const WindowTensor& inputs);

struct Gradient {
    ModelParams grad; // same alternative and shapes as the parameters
    double loss = 0.0;
};

/// Exact gradient of the mean (over batch and horizon) squared error.
Gradient model_grad(const ModelParams& params, const WindowTensor& inputs, const Matrix& target);

struct InitSpec {
    ModelKind kind = ModelKind::Linear;
    Index lookback = 96;
    Index horizon = 96;
    Index channels = 1;
    int kernel = kDefaultKernel;
    Anchor anchor;
    std::uint64_t seed = 0;
};

/// Weights uniform in [-1/sqrt(L*C), 1/sqrt(L*C)], biases zero.
ModelParams init_params(const InitSpec& spec);

} // namespace ltsf::models
