#include "ltsf/models.hpp"

#include <algorithm>

namespace ltsf::models {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_kernel(int kernel) {
    if (kernel < 1 || kernel % 2 == 0) {
        throw ShapeError("moving average kernel must be odd and positive, got " + std::to_string(kernel));
    }
}

void check_map(const AffineMap& map, Index width, const char* what) {
    if (map.weight.cols() != width || map.bias.size() != map.weight.rows() || map.weight.rows() <= 0) {
        throw ShapeError(std::string(what) + ": weight is " + std::to_string(map.weight.rows()) + "x" +
                         std::to_string(map.weight.cols()) + " with bias of " + std::to_string(map.bias.size()) +
                         ", expected width " + std::to_string(width));
    }
}

void check_inputs(const WindowTensor& inputs, Index lookback, Index channels, const char* what) {
    if (inputs.lookback() != lookback || inputs.channels() != channels) {
        throw ShapeError(std::string(what) + ": inputs are [" + std::to_string(inputs.lookback()) + " x " +
                         std::to_string(inputs.channels()) + "], model expects [" + std::to_string(lookback) +
                         " x " + std::to_string(channels) + "]");
    }
}

void check_anchor(const Anchor& anchor, Index channels) {
    if (anchor && (*anchor < 0 || *anchor >= channels)) {
        throw ShapeError("nlinear: anchor channel " + std::to_string(*anchor) + " is not among " +
                         std::to_string(channels) + " input channels");
    }
}

Matrix apply(const AffineMap& map, const Matrix& flat) {
    Matrix out = flat * map.weight.transpose();
    out.rowwise() += map.bias.transpose();
    return out;
}

AffineMap map_grad(const Matrix& residual_grad, const Matrix& flat) {
    return AffineMap{residual_grad.transpose() * flat, residual_grad.colwise().sum().transpose()};
}

AffineMap random_map(Rng& rng, Index horizon, Index width) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    AffineMap map{Matrix(horizon, width), Vector::Zero(horizon)};
    for (Index i = 0; i < horizon; ++i) {
        for (Index j = 0; j < width; ++j) map.weight(i, j) = rng.uniform(-bound, bound);
    }
    return map;
}

} // namespace

std::string_view kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Linear: return "linear";
        case ModelKind::NLinear: return "nlinear";
        case ModelKind::DLinear: return "dlinear";
    }
    return "?";
}

std::string_view kind_display_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Linear: return "Linear";
        case ModelKind::NLinear: return "NLinear";
        case ModelKind::DLinear: return "DLinear";
    }
    return "?";
}

ModelKind parse_kind(std::string_view name) {
    for (auto kind : {ModelKind::Linear, ModelKind::NLinear, ModelKind::DLinear}) {
        if (name == kind_name(kind)) return kind;
    }
    throw Error("unknown model kind '" + std::string(name) + "'");
}

ModelKind kind_of(const ModelParams& params) {
    return std::visit(overloaded{[](const LinearParams&) { return ModelKind::Linear; },
                                 [](const NLinearParams&) { return ModelKind::NLinear; },
                                 [](const DLinearParams&) { return ModelKind::DLinear; }},
                      params);
}

Index lookback_of(const ModelParams& params) {
    return std::visit([](const auto& p) { return p.lookback; }, params);
}

Index channels_of(const ModelParams& params) {
    return std::visit([](const auto& p) { return p.channels; }, params);
}

Index horizon_of(const ModelParams& params) { return affine_blocks(params).front()->horizon(); }

std::vector<AffineMap*> affine_blocks(ModelParams& params) {
    return std::visit(overloaded{[](LinearParams& p) { return std::vector<AffineMap*>{&p.map}; },
                                 [](NLinearParams& p) { return std::vector<AffineMap*>{&p.map}; },
                                 [](DLinearParams& p) { return std::vector<AffineMap*>{&p.trend, &p.seasonal}; }},
                      params);
}

std::vector<const AffineMap*> affine_blocks(const ModelParams& params) {
    auto blocks = affine_blocks(const_cast<ModelParams&>(params));
    return {blocks.begin(), blocks.end()};
}

std::size_t parameter_count(const ModelParams& params) {
    std::size_t n = 0;
    for (const auto* block : affine_blocks(params)) {
        n += static_cast<std::size_t>(block->weight.size() + block->bias.size());
    }
    return n;
}

std::vector<double> flatten(const ModelParams& params) {
    std::vector<double> out;
    out.reserve(parameter_count(params));
    for (const auto* block : affine_blocks(params)) {
        out.insert(out.end(), block->weight.data(), block->weight.data() + block->weight.size());
        out.insert(out.end(), block->bias.data(), block->bias.data() + block->bias.size());
    }
    return out;
}

void unflatten(std::span<const double> values, ModelParams& params) {
    if (values.size() != parameter_count(params)) {
        throw ShapeError("unflatten: got " + std::to_string(values.size()) + " values for " +
                         std::to_string(parameter_count(params)) + " parameters");
    }
    std::size_t pos = 0;
    for (auto* block : affine_blocks(params)) {
        std::copy_n(values.begin() + pos, block->weight.size(), block->weight.data());
        pos += static_cast<std::size_t>(block->weight.size());
        std::copy_n(values.begin() + pos, block->bias.size(), block->bias.data());
        pos += static_cast<std::size_t>(block->bias.size());
    }
}

WindowTensor moving_average(const WindowTensor& window, int kernel) {
    check_kernel(kernel);
    const Index half = (kernel - 1) / 2;
    const Index last = window.lookback() - 1;
    const double inv = 1.0 / static_cast<double>(kernel);
    WindowTensor out(window.batch(), window.lookback(), window.channels());
    for (Index b = 0; b < window.batch(); ++b) {
        for (Index c = 0; c < window.channels(); ++c) {
            for (Index t = 0; t <= last; ++t) {
                // Averaging offsets from the centre value keeps constants (and
                // kernel 1) exact.
                const double centre = window(b, t, c);
                double offset = 0.0;
                for (Index j = t - half; j <= t + half; ++j) {
                    offset += window(b, std::clamp<Index>(j, 0, last), c) - centre;
                }
                out(b, t, c) = centre + offset * inv;
            }
        }
    }
    return out;
}

DecomposedWindow decompose(const WindowTensor& window, int kernel) {
    WindowTensor trend = moving_average(window, kernel);
    WindowTensor seasonal(window.batch(), window.lookback(), window.channels());
    const Matrix& x = window.flat();
    const Matrix& tr = trend.flat();
    Matrix& s = seasonal.flat();
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index j = 0; j < x.cols(); ++j) {
            double best = x(i, j) - tr(i, j);
            double best_err = std::abs((tr(i, j) + best) - x(i, j));
            double up = best;
            double down = best;
            for (int step = 0; step < 2 && best_err != 0.0; ++step) {
                up = std::nextafter(up, inf);
                down = std::nextafter(down, -inf);
                for (const double candidate : {up, down}) {
                    const double err = std::abs((tr(i, j) + candidate) - x(i, j));
                    if (err < best_err) {
                        best = candidate;
                        best_err = err;
                    }
                }
            }
            s(i, j) = best;
        }
    }
    return {std::move(trend), std::move(seasonal)};
}

WindowTensor center_on_last(const WindowTensor& inputs) {
    WindowTensor out(inputs.batch(), inputs.lookback(), inputs.channels());
    const Index last = inputs.lookback() - 1;
    for (Index b = 0; b < inputs.batch(); ++b) {
        for (Index c = 0; c < inputs.channels(); ++c) {
            const double anchor = inputs(b, last, c);
            for (Index t = 0; t <= last; ++t) out(b, t, c) = inputs(b, t, c) - anchor;
        }
    }
    return out;
}

Matrix linear_forward(const LinearParams& params, const WindowTensor& inputs) {
    check_inputs(inputs, params.lookback, params.channels, "linear");
    check_map(params.map, inputs.width(), "linear");
    return apply(params.map, inputs.flat());
}

Matrix nlinear_forward(const NLinearParams& params, const WindowTensor& inputs) {
    check_inputs(inputs, params.lookback, params.channels, "nlinear");
    check_map(params.map, inputs.width(), "nlinear");
    check_anchor(params.anchor, params.channels);
    Matrix out = apply(params.map, center_on_last(inputs).flat());
    if (params.anchor) {
        const Index last = inputs.lookback() - 1;
        for (Index b = 0; b < inputs.batch(); ++b) out.row(b).array() += inputs(b, last, *params.anchor);
    }
    return out;
}

Matrix dlinear_forward(const DLinearParams& params, const WindowTensor& inputs) {
    check_inputs(inputs, params.lookback, params.channels, "dlinear");
    check_map(params.trend, inputs.width(), "dlinear trend");
    check_map(params.seasonal, inputs.width(), "dlinear seasonal");
    if (params.trend.horizon() != params.seasonal.horizon()) throw ShapeError("dlinear: horizon mismatch");
    const auto parts = decompose(inputs, params.kernel);
    return apply(params.trend, parts.trend.flat()) + apply(params.seasonal, parts.seasonal.flat());
}

Matrix forward(const ModelParams& params, const WindowTensor& inputs) {
    return std::visit(overloaded{[&](const LinearParams& p) { return linear_forward(p, inputs); },
                                 [&](const NLinearParams& p) { return nlinear_forward(p, inputs); },
                                 [&](const DLinearParams& p) { return dlinear_forward(p, inputs); }},
                      params);
}

Gradient model_grad(const ModelParams& params, const WindowTensor& inputs, const Matrix& target) {
    const Matrix pred = forward(params, inputs);
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ShapeError("model_grad: predictions are " + std::to_string(pred.rows()) + "x" +
                         std::to_string(pred.cols()) + ", targets " + std::to_string(target.rows()) + "x" +
                         std::to_string(target.cols()));
    }
    const Matrix residual = pred - target;
    const double count = static_cast<double>(residual.size());
    const double loss = residual.squaredNorm() / count;
    // d loss / d pred
    const Matrix g = residual * (2.0 / count);

    Gradient out{params, loss};
    std::visit(overloaded{[&](LinearParams& p) { p.map = map_grad(g, inputs.flat()); },
                          [&](NLinearParams& p) { p.map = map_grad(g, center_on_last(inputs).flat()); },
                          [&](DLinearParams& p) {
                              const auto parts = decompose(inputs, p.kernel);
                              p.trend = map_grad(g, parts.trend.flat());
                              p.seasonal = map_grad(g, parts.seasonal.flat());
                          }},
               out.grad);
    return out;
}

ModelParams init_params(const InitSpec& spec) {
    if (spec.lookback <= 0 || spec.horizon <= 0 || spec.channels <= 0) {
        throw ShapeError("init_params: lookback, horizon and channels must be positive");
    }
    const Index width = spec.lookback * spec.channels;
    Rng rng(spec.seed);
    switch (spec.kind) {
        case ModelKind::Linear:
            return LinearParams{random_map(rng, spec.horizon, width), spec.lookback, spec.channels};
        case ModelKind::NLinear:
            check_anchor(spec.anchor, spec.channels);
            return NLinearParams{random_map(rng, spec.horizon, width), spec.lookback, spec.channels, spec.anchor};
        case ModelKind::DLinear: {
            check_kernel(spec.kernel);
            auto trend = random_map(rng, spec.horizon, width);
            auto seasonal = random_map(rng, spec.horizon, width);
            return DLinearParams{std::move(trend), std::move(seasonal), spec.lookback, spec.channels, spec.kernel};
        }
    }
    throw Error("init_params: unknown model kind");
}

} // namespace ltsf::models
