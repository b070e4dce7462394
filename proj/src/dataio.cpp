#include "ltsf/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

namespace ltsf::data {

namespace {

bool read_digits(std::string_view text, std::size_t& pos, std::size_t count, int& out) {
    if (pos + count > text.size()) return false;
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = text[pos + i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    pos += count;
    out = value;
    return true;
}

bool expect(std::string_view text, std::size_t& pos, char c) {
    if (pos < text.size() && text[pos] == c) {
        ++pos;
        return true;
    }
    return false;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    for (auto& f : fields) {
        if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
    }
    return fields;
}

} // namespace

std::optional<std::int64_t> parse_iso8601(std::string_view text) {
    using namespace std::chrono;
    text = trim(text);
    std::size_t pos = 0;
    int y = 0, mo = 0, d = 0;
    if (!read_digits(text, pos, 4, y) || !expect(text, pos, '-') || !read_digits(text, pos, 2, mo) ||
        !expect(text, pos, '-') || !read_digits(text, pos, 2, d)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;

    int hh = 0, mm = 0, ss = 0;
    std::int64_t millis = 0;
    std::int64_t offset_minutes = 0;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') return std::nullopt;
        ++pos;
        if (!read_digits(text, pos, 2, hh) || !expect(text, pos, ':') || !read_digits(text, pos, 2, mm)) {
            return std::nullopt;
        }
        if (expect(text, pos, ':')) {
            if (!read_digits(text, pos, 2, ss)) return std::nullopt;
            if (expect(text, pos, '.')) {
                int scale = 100;
                bool any = false;
                while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
                    millis += (text[pos] - '0') * scale;
                    scale /= 10;
                    ++pos;
                    any = true;
                }
                if (!any) return std::nullopt;
            }
        }
        if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
        if (pos < text.size()) {
            const char zone = text[pos++];
            if (zone == 'Z') {
                // UTC
            } else if (zone == '+' || zone == '-') {
                int oh = 0, om = 0;
                if (!read_digits(text, pos, 2, oh)) return std::nullopt;
                expect(text, pos, ':');
                if (!read_digits(text, pos, 2, om)) return std::nullopt;
                offset_minutes = (zone == '+' ? 1 : -1) * (oh * 60 + om);
            } else {
                return std::nullopt;
            }
        }
        if (pos != text.size()) return std::nullopt;
    }
    const auto day_ms = duration_cast<milliseconds>(sys_days{ymd}.time_since_epoch()).count();
    return day_ms + ((hh * 60 + mm - offset_minutes) * 60 + ss) * 1000 + millis;
}

SeriesFrame::SeriesFrame(std::vector<std::string> timestamps, Matrix values, std::vector<std::string> channel_names,
                         std::size_t target_index)
    : timestamps_(std::move(timestamps)),
      values_(std::move(values)),
      channel_names_(std::move(channel_names)),
      target_index_(target_index) {
    if (static_cast<std::size_t>(values_.rows()) != timestamps_.size()) {
        throw ShapeError("series frame: " + std::to_string(values_.rows()) + " value rows for " +
                         std::to_string(timestamps_.size()) + " timestamps");
    }
    if (static_cast<std::size_t>(values_.cols()) != channel_names_.size()) {
        throw ShapeError("series frame: " + std::to_string(values_.cols()) + " value columns for " +
                         std::to_string(channel_names_.size()) + " channel names");
    }
    if (target_index_ >= channel_names_.size()) {
        throw DataError("series frame: target index " + std::to_string(target_index_) + " out of range");
    }
    std::unordered_set<std::string> seen;
    for (const auto& name : channel_names_) {
        if (!seen.insert(name).second) throw DataError("series frame: duplicate channel name '" + name + "'");
    }
    std::optional<std::int64_t> previous;
    for (std::size_t r = 0; r < timestamps_.size(); ++r) {
        const auto t = parse_iso8601(timestamps_[r]);
        if (!t) throw DataError("row " + std::to_string(r + 1) + ": invalid timestamp '" + timestamps_[r] + "'");
        if (previous && *t <= *previous) {
            throw DataError("row " + std::to_string(r + 1) + ": timestamp '" + timestamps_[r] +
                            "' is not after the previous row");
        }
        previous = t;
        for (Index c = 0; c < values_.cols(); ++c) {
            if (!std::isfinite(values_(static_cast<Index>(r), c))) {
                throw DataError("row " + std::to_string(r + 1) + ", column '" + channel_names_[c] +
                                "': non-finite value");
            }
        }
    }
}

std::size_t SeriesFrame::channel_index(std::string_view name) const {
    const auto it = std::find(channel_names_.begin(), channel_names_.end(), name);
    if (it == channel_names_.end()) throw DataError("unknown channel '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - channel_names_.begin());
}

SeriesFrame parse_csv(std::istream& in, std::string_view target_name, std::string_view source) {
    const std::string where(source);
    std::string line;
    if (!std::getline(in, line)) throw DataError(where + ": empty file");
    const auto header = split_fields(line);
    if (header.size() < 2) throw DataError(where + ": need a timestamp column and at least one channel");

    std::vector<std::string> names;
    for (std::size_t i = 1; i < header.size(); ++i) names.emplace_back(header[i]);
    const auto target_it = std::find(names.begin(), names.end(), target_name);
    if (target_it == names.end()) {
        throw DataError(where + ": unknown target column '" + std::string(target_name) + "'");
    }

    std::vector<std::string> timestamps;
    std::vector<double> cells;
    std::optional<std::int64_t> previous;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto fields = split_fields(line);
        const std::string at = where + ": row " + std::to_string(row);
        if (fields.size() != header.size()) {
            throw DataError(at + ": expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }
        const auto t = parse_iso8601(fields[0]);
        if (!t) throw DataError(at + ", column '" + std::string(header[0]) + "': invalid timestamp");
        if (previous && *t <= *previous) throw DataError(at + ": timestamps are not strictly increasing");
        previous = t;
        timestamps.emplace_back(fields[0]);

        for (std::size_t c = 1; c < fields.size(); ++c) {
            const auto cell = fields[c];
            double value = 0.0;
            const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (cell.empty() || ec != std::errc{} || end != cell.data() + cell.size()) {
                throw DataError(at + ", column '" + names[c - 1] + "': non-numeric value '" + std::string(cell) +
                                "'");
            }
            if (!std::isfinite(value)) {
                throw DataError(at + ", column '" + names[c - 1] + "': non-finite value '" + std::string(cell) +
                                "'");
            }
            cells.push_back(value);
        }
    }
    if (timestamps.empty()) throw DataError(where + ": no data rows");

    const auto cols = static_cast<Index>(names.size());
    Matrix values = Eigen::Map<Matrix>(cells.data(), static_cast<Index>(timestamps.size()), cols);
    const auto target = static_cast<std::size_t>(target_it - names.begin());
    return SeriesFrame(std::move(timestamps), std::move(values), std::move(names), target);
}

SeriesFrame load_csv(const std::filesystem::path& path, std::string_view target_name) {
    std::ifstream in(path);
    if (!in) throw DataError(path.string() + ": cannot open file");
    return parse_csv(in, target_name, path.string());
}

std::string_view split_label(SplitKind kind) {
    switch (kind) {
        case SplitKind::Train: return "Training";
        case SplitKind::Validation: return "Validation";
        case SplitKind::Test: return "Official Test";
    }
    return "?";
}

SplitView::SplitView(const SeriesFrame& frame, std::size_t begin, std::size_t end, SplitKind kind)
    : frame_(&frame), begin_(begin), end_(end), kind_(kind) {
    if (begin > end || end > frame.rows()) throw ShapeError("split view: row range out of bounds");
}

Matrix SplitView::values() const {
    return frame_->values().middleRows(static_cast<Index>(begin_), static_cast<Index>(rows()));
}

const SplitView& Splits::get(SplitKind kind) const {
    switch (kind) {
        case SplitKind::Train: return train;
        case SplitKind::Validation: return validation;
        case SplitKind::Test: return test;
    }
    throw Error("unknown split kind");
}

Splits make_splits(const SeriesFrame& frame, const SplitSpec& spec) {
    if (spec.n_train == 0 || spec.n_val == 0 || spec.n_test == 0) {
        throw DataError("split counts must all be positive");
    }
    const std::size_t needed = spec.n_train + spec.n_val + spec.n_test;
    if (needed > frame.rows()) {
        throw DataError("splits need " + std::to_string(needed) + " rows but the frame has " +
                        std::to_string(frame.rows()));
    }
    const std::size_t val_begin = spec.n_train;
    const std::size_t test_begin = val_begin + spec.n_val;
    return Splits{SplitView(frame, 0, val_begin, SplitKind::Train),
                  SplitView(frame, val_begin, test_begin, SplitKind::Validation),
                  SplitView(frame, test_begin, needed, SplitKind::Test)};
}

NormStats fit_norm_stats(const SplitView& train) {
    if (train.rows() == 0) throw DataError("cannot fit normalization on an empty split");
    const auto& values = train.frame().values();
    const auto n = static_cast<double>(train.rows());
    NormStats stats;
    for (Index c = 0; c < values.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = train.begin(); r < train.end(); ++r) sum += values(static_cast<Index>(r), c);
        const double mean = sum / n;
        double sq = 0.0;
        for (std::size_t r = train.begin(); r < train.end(); ++r) {
            const double d = values(static_cast<Index>(r), c) - mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / n);
        stats.mean.push_back(mean);
        stats.std.push_back(sd > 0.0 ? sd : 1.0);
    }
    return stats;
}

namespace {

void check_columns(const Matrix& values, const NormStats& stats) {
    if (static_cast<std::size_t>(values.cols()) != stats.channels()) {
        throw ShapeError("normalization: " + std::to_string(values.cols()) + " columns but stats cover " +
                         std::to_string(stats.channels()) + " channels");
    }
}

} // namespace

Matrix normalize(const Matrix& values, const NormStats& stats) {
    check_columns(values, stats);
    Matrix out(values.rows(), values.cols());
    for (Index r = 0; r < values.rows(); ++r) {
        for (Index c = 0; c < values.cols(); ++c) out(r, c) = (values(r, c) - stats.mean[c]) / stats.std[c];
    }
    return out;
}

Matrix denormalize(const Matrix& values, const NormStats& stats) {
    check_columns(values, stats);
    Matrix out(values.rows(), values.cols());
    for (Index r = 0; r < values.rows(); ++r) {
        for (Index c = 0; c < values.cols(); ++c) out(r, c) = values(r, c) * stats.std[c] + stats.mean[c];
    }
    return out;
}

std::size_t window_count(std::size_t rows, std::size_t lookback, std::size_t horizon) {
    if (lookback == 0 || horizon == 0) throw ShapeError("lookback and horizon must be positive");
    if (rows < lookback + horizon) {
        throw DataError("split of " + std::to_string(rows) + " rows cannot hold a window of " +
                        std::to_string(lookback) + " + " + std::to_string(horizon) + " steps");
    }
    return rows - lookback - horizon + 1;
}

void ExogenousAudit::check(const WindowBatch& batch) {
    for (const auto channel : batch.input_channels) {
        if (channel == target_index_) {
            throw Error("exogenous-only audit: target channel " + std::to_string(target_index_) +
                        " reached model inputs");
        }
    }
    batches_.fetch_add(1);
    windows_.fetch_add(static_cast<std::uint64_t>(batch.size()));
}

BatchRange::BatchRange(const WindowSource& source, std::size_t batch_size)
    : source_(&source), batch_size_(batch_size) {
    if (batch_size == 0) throw ShapeError("batch size must be at least 1");
}

std::size_t BatchRange::size() const { return (source_->size() + batch_size_ - 1) / batch_size_; }

BatchRange::iterator BatchRange::end() const { return {this, size() * batch_size_}; }

WindowBatch BatchRange::iterator::operator*() const {
    const std::size_t count = std::min(range_->batch_size_, range_->source_->size() - first_);
    return range_->source_->range(first_, count);
}

BatchRange::iterator& BatchRange::iterator::operator++() {
    first_ += range_->batch_size_;
    return *this;
}

WindowBatch WindowSource::range(std::size_t first, std::size_t count) const {
    if (first + count > size()) throw ShapeError("window range out of bounds");
    std::vector<std::size_t> indices(count);
    for (std::size_t i = 0; i < count; ++i) indices[i] = first + i;
    return gather(indices);
}

SplitWindows::SplitWindows(const SplitView& view, const NormStats& stats, std::size_t lookback,
                           std::size_t horizon, ExogenousAudit* audit)
    : normalized_(normalize(view.values(), stats)),
      target_(view.frame().target_index()),
      count_(window_count(view.rows(), lookback, horizon)),
      kind_(view.kind()),
      audit_(audit) {
    for (std::size_t c = 0; c < view.frame().channels(); ++c) {
        if (c != target_) exogenous_.push_back(c);
    }
    if (exogenous_.empty()) throw DataError("no exogenous channels besides the target");
    dims_ = {static_cast<Index>(lookback), static_cast<Index>(horizon), static_cast<Index>(exogenous_.size())};
}

WindowBatch SplitWindows::gather(std::span<const std::size_t> indices) const {
    const auto n = static_cast<Index>(indices.size());
    WindowBatch batch{WindowTensor(n, dims_.lookback, dims_.channels), Matrix(n, dims_.horizon), {}, exogenous_};
    batch.origins.assign(indices.begin(), indices.end());
    for (Index b = 0; b < n; ++b) {
        const auto start = static_cast<Index>(indices[b]);
        if (indices[b] >= count_) throw ShapeError("window index out of range");
        for (Index t = 0; t < dims_.lookback; ++t) {
            for (Index j = 0; j < dims_.channels; ++j) {
                batch.inputs(b, t, j) = normalized_(start + t, static_cast<Index>(exogenous_[j]));
            }
        }
        for (Index h = 0; h < dims_.horizon; ++h) {
            batch.targets(b, h) = normalized_(start + dims_.lookback + h, static_cast<Index>(target_));
        }
    }
    if (audit_ != nullptr) audit_->check(batch);
    return batch;
}

SampleWindows::SampleWindows(Matrix inputs, Matrix targets, Index lookback, Index channels)
    : inputs_(std::move(inputs)), targets_(std::move(targets)), dims_{lookback, targets_.cols(), channels} {
    if (inputs_.rows() != targets_.rows()) throw ShapeError("samples: input and target counts differ");
    if (inputs_.cols() != lookback * channels) throw ShapeError("samples: input width != lookback x channels");
    if (targets_.cols() <= 0) throw ShapeError("samples: empty horizon");
}

WindowBatch SampleWindows::gather(std::span<const std::size_t> indices) const {
    const auto n = static_cast<Index>(indices.size());
    Matrix in(n, inputs_.cols());
    Matrix out(n, targets_.cols());
    for (Index b = 0; b < n; ++b) {
        const auto i = static_cast<Index>(indices[b]);
        if (indices[b] >= size()) throw ShapeError("sample index out of range");
        in.row(b) = inputs_.row(i);
        out.row(b) = targets_.row(i);
    }
    WindowBatch batch{WindowTensor(std::move(in), dims_.lookback, dims_.channels), std::move(out), {}, {}};
    batch.origins.assign(indices.begin(), indices.end());
    return batch;
}

std::vector<WindowBatch> window_iter(const SplitView& view, const NormStats& stats, std::size_t lookback,
                                     std::size_t horizon, std::size_t batch_size) {
    const SplitWindows windows(view, stats, lookback, horizon);
    std::vector<WindowBatch> out;
    for (auto batch : windows.batches(batch_size)) out.push_back(std::move(batch));
    return out;
}

} // namespace ltsf::data
