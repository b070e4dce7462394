#pragma once

#include "ltsf/common.hpp"

namespace ltsf {

/// A batch of windows with shape [batch, lookback, channels].
///
/// Storage is one row per sample, flattened time-major: element (t, c) of a
/// sample lives at column t * channels + c. Model weights are laid out against
/// the same order, so `flat()` can be fed straight into an affine map.
class WindowTensor {
public:
    WindowTensor() = default;
    WindowTensor(Index batch, Index lookback, Index channels)
        : data_(Matrix::Zero(batch, lookback * channels)), lookback_(lookback), channels_(channels) {}
    WindowTensor(Matrix flat, Index lookback, Index channels)
        : data_(std::move(flat)), lookback_(lookback), channels_(channels) {
        if (lookback <= 0 || channels <= 0 || data_.cols() != lookback * channels) {
            throw ShapeError("window tensor: flat width " + std::to_string(data_.cols()) +
                             " does not match lookback " + std::to_string(lookback) + " x channels " +
                             std::to_string(channels));
        }
    }

    Index batch() const { return data_.rows(); }
    Index lookback() const { return lookback_; }
    Index channels() const { return channels_; }
    Index width() const { return lookback_ * channels_; }

    double& operator()(Index b, Index t, Index c) { return data_(b, t * channels_ + c); }
    double operator()(Index b, Index t, Index c) const { return data_(b, t * channels_ + c); }

    const Matrix& flat() const { return data_; }
    Matrix& flat() { return data_; }

private:
    Matrix data_;
    Index lookback_ = 0;
    Index channels_ = 0;
};

} // namespace ltsf
