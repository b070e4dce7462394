#pragma once

#include "ltsf/common.hpp"
#include "ltsf/tensor.hpp"

#include <atomic>
#include <filesystem>
#include <iosfwd>
#include <iterator>
#include <optional>
#include <string_view>

namespace ltsf::data {

/// Parses an ISO-8601 date-time ("2024-01-31T12:00:00Z", "2024-01-31 12:00",
/// "2024-01-31T12:00:00.250+01:00", or a bare date) into milliseconds since
/// the Unix epoch. Returns nullopt when the text is not a valid timestamp.
std::optional<std::int64_t> parse_iso8601(std::string_view text);

/// Raw multivariate series: one row per time step, one column per channel.
class SeriesFrame {
public:
    /// Validates every invariant: increasing timestamps, consistent shapes,
    /// unique channel names, finite values and an in-range target.
    SeriesFrame(std::vector<std::string> timestamps, Matrix values, std::vector<std::string> channel_names,
                std::size_t target_index);

    std::size_t rows() const { return timestamps_.size(); }
    std::size_t channels() const { return channel_names_.size(); }
    std::size_t target_index() const { return target_index_; }
    const std::string& target_name() const { return channel_names_[target_index_]; }

    const std::vector<std::string>& timestamps() const { return timestamps_; }
    const std::vector<std::string>& channel_names() const { return channel_names_; }
    const Matrix& values() const { return values_; }

    /// Column index of a named channel; throws DataError if absent.
    std::size_t channel_index(std::string_view name) const;

private:
    std::vector<std::string> timestamps_;
    Matrix values_;
    std::vector<std::string> channel_names_;
    std::size_t target_index_;
};

/// Reads a CSV whose first column is an ISO-8601 timestamp and whose other
/// columns are numeric channels. Errors carry 1-based data-row numbers (the
/// header is not counted) and the column name.
SeriesFrame load_csv(const std::filesystem::path& path, std::string_view target_name);
SeriesFrame parse_csv(std::istream& in, std::string_view target_name, std::string_view source = "<stream>");

struct SplitSpec {
    std::size_t n_train = 0;
    std::size_t n_val = 0;
    std::size_t n_test = 0;
};

enum class SplitKind { Train, Validation, Test };

/// Report label for a split, in the order used by the comparison table.
std::string_view split_label(SplitKind kind);

/// A contiguous row range [begin, end) of a frame. The frame must outlive it.
class SplitView {
public:
    SplitView(const SeriesFrame& frame, std::size_t begin, std::size_t end, SplitKind kind);

    const SeriesFrame& frame() const { return *frame_; }
    std::size_t begin() const { return begin_; }
    std::size_t end() const { return end_; }
    std::size_t rows() const { return end_ - begin_; }
    SplitKind kind() const { return kind_; }

    /// The rows of this split, all channels.
    Matrix values() const;

private:
    const SeriesFrame* frame_;
    std::size_t begin_;
    std::size_t end_;
    SplitKind kind_;
};

struct Splits {
    SplitView train;
    SplitView validation;
    SplitView test;

    const SplitView& get(SplitKind kind) const;
};

/// train = [0, n_train), validation = next n_val rows, test = next n_test rows.
Splits make_splits(const SeriesFrame& frame, const SplitSpec& spec);

/// Per-channel z-score parameters. std is strictly positive.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;

    std::size_t channels() const { return mean.size(); }
};

/// Population mean / std over the training rows; zero std is clamped to 1.
NormStats fit_norm_stats(const SplitView& train);

Matrix normalize(const Matrix& values, const NormStats& stats);
Matrix denormalize(const Matrix& values, const NormStats& stats);

/// Number of stride-1 windows in a sequence of `rows` steps; throws
/// DataError when rows < lookback + horizon.
std::size_t window_count(std::size_t rows, std::size_t lookback, std::size_t horizon);

struct WindowDims {
    Index lookback = 0;
    Index horizon = 0;
    Index channels = 0;
};

/// (input window, target horizon) pairs.
struct WindowBatch {
    WindowTensor inputs;                    // [batch, lookback, exogenous channels]
    Matrix targets;                         // [batch, horizon]
    std::vector<std::size_t> origins;       // per-sample start row within the split
    std::vector<std::size_t> input_channels; // frame channel feeding each input channel

    Index size() const { return targets.rows(); }
};

/// Counts every batch handed to a model and rejects any batch whose inputs
/// were drawn from the target channel. Safe to share across threads.
class ExogenousAudit {
public:
    explicit ExogenousAudit(std::size_t target_index) : target_index_(target_index) {}

    /// Throws Error if the batch carries target-channel inputs.
    void check(const WindowBatch& batch);

    std::size_t target_index() const { return target_index_; }
    std::uint64_t batches_checked() const { return batches_.load(); }
    std::uint64_t windows_checked() const { return windows_.load(); }

private:
    std::size_t target_index_;
    std::atomic<std::uint64_t> batches_{0};
    std::atomic<std::uint64_t> windows_{0};
};

class WindowSource;

/// Consecutive batches of a source, last batch possibly short.
class BatchRange {
public:
    class iterator {
    public:
        using iterator_category = std::input_iterator_tag;
        using value_type = WindowBatch;
        using difference_type = std::ptrdiff_t;

        iterator(const BatchRange* range, std::size_t first) : range_(range), first_(first) {}
        WindowBatch operator*() const;
        iterator& operator++();
        bool operator==(const iterator& other) const { return first_ == other.first_; }

    private:
        const BatchRange* range_;
        std::size_t first_;
    };

    BatchRange(const WindowSource& source, std::size_t batch_size);

    iterator begin() const { return {this, 0}; }
    iterator end() const;
    std::size_t size() const;

private:
    const WindowSource* source_;
    std::size_t batch_size_;
};

/// Anything that can serve indexed (input, target) windows.
class WindowSource {
public:
    virtual ~WindowSource() = default;

    virtual std::size_t size() const = 0;
    virtual WindowDims dims() const = 0;
    /// Assembles the windows whose indices are given, in that order.
    virtual WindowBatch gather(std::span<const std::size_t> indices) const = 0;

    WindowBatch range(std::size_t first, std::size_t count) const;
    BatchRange batches(std::size_t batch_size) const { return {*this, batch_size}; }
};

/// Stride-1 windows over one split. Inputs are the normalized exogenous
/// channels (every channel except the target) over rows [t, t+L); targets are
/// the normalized target channel over rows [t+L, t+L+H). Windows never leave
/// the split.
class SplitWindows : public WindowSource {
public:
    SplitWindows(const SplitView& view, const NormStats& stats, std::size_t lookback, std::size_t horizon,
                 ExogenousAudit* audit = nullptr);

    std::size_t size() const override { return count_; }
    WindowDims dims() const override { return dims_; }
    WindowBatch gather(std::span<const std::size_t> indices) const override;

    const std::vector<std::size_t>& input_channels() const { return exogenous_; }
    SplitKind kind() const { return kind_; }
    std::size_t split_rows() const { return static_cast<std::size_t>(normalized_.rows()); }

private:
    Matrix normalized_;
    std::vector<std::size_t> exogenous_;
    std::size_t target_;
    WindowDims dims_;
    std::size_t count_;
    SplitKind kind_;
    ExogenousAudit* audit_;
};

/// Independent samples held in memory (inputs flattened time-major).
class SampleWindows : public WindowSource {
public:
    SampleWindows(Matrix inputs, Matrix targets, Index lookback, Index channels);

    std::size_t size() const override { return static_cast<std::size_t>(targets_.rows()); }
    WindowDims dims() const override { return dims_; }
    WindowBatch gather(std::span<const std::size_t> indices) const override;

private:
    Matrix inputs_;
    Matrix targets_;
    WindowDims dims_;
};

/// Every stride-1 window of a split grouped into consecutive batches.
std::vector<WindowBatch> window_iter(const SplitView& view, const NormStats& stats, std::size_t lookback,
                                     std::size_t horizon, std::size_t batch_size);

} // namespace ltsf::data
