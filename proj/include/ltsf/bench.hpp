#pragma once

#include "ltsf/dataio.hpp"
#include "ltsf/metrics.hpp"
#include "ltsf/models.hpp"
#include "ltsf/serialize.hpp"
#include "ltsf/training.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>

namespace ltsf::bench {

inline constexpr int kRunSchemaVersion = 1;
inline constexpr const char* kPersistence = "persistence";

/// Benchmark configuration, read from a flat `key = value` file:
///
///   data = series.csv          # relative paths resolve against the config file
///   target = temp
///   split.train = 36105
///   split.val = 10275
///   split.test = 10563
///   lookback = 96
///   horizon = 96
///   models = linear, nlinear, dlinear, persistence
///   kernel = 25                # dlinear moving-average length (odd)
///   anchor = none              # or an exogenous channel name
///   out = runs/example
///   seed = 7
///   train.learning_rate = 1e-4 # also weight_decay, batch_size, patience,
///                              # max_epochs, beta1, beta2, epsilon
///   nlinear.learning_rate = 5e-4   # per-model override of any train.* key
struct BenchConfig {
    std::filesystem::path data_path;
    std::string target;
    data::SplitSpec split;
    std::size_t lookback = 96;
    std::size_t horizon = 96;
    std::vector<std::string> models;
    training::TrainConfig train;
    std::map<std::string, std::map<std::string, std::string>> overrides;
    int kernel = models::kDefaultKernel;
    std::string anchor = "none";
    std::filesystem::path out_dir = "runs";
    std::uint64_t seed = 0;
    std::string source_text; // the config file, byte for byte

    /// Global TrainConfig with the model's overrides and the global seed applied.
    training::TrainConfig train_config_for(const std::string& model) const;
    void validate() const;
};

BenchConfig parse_config(std::string_view text,
                         const std::filesystem::path& base_dir = std::filesystem::current_path());
BenchConfig load_config(const std::filesystem::path& path);

struct SplitInfo {
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t windows = 0;

    std::size_t rows() const { return end - begin; }
};

struct AuditSummary {
    std::size_t target_index = 0;
    std::string target_name;
    std::vector<std::string> input_channels;
    std::uint64_t batches_checked = 0;
    std::uint64_t windows_checked = 0;
};

struct ModelRun {
    std::string model;      // config name, e.g. "nlinear"
    std::string display;    // table name, e.g. "NLinear"
    bool extension = false; // not one of the trained forecasters
    std::string status = "ok";
    std::optional<std::string> error;
    std::optional<training::TrainReport> train;
    std::vector<metrics::MetricReport> metrics;
    std::optional<models::ModelParams> params;
};

struct RunRecord {
    int schema_version = kRunSchemaVersion;
    std::string library_version = kLibraryVersion;
    std::string config_snapshot;
    std::uint64_t seed = 0;
    std::string data_path;
    std::vector<SplitInfo> splits;
    AuditSummary audit;
    std::vector<ModelRun> runs;
    std::string started_at;
    std::string finished_at;

    bool ok() const;
    const ModelRun* find(std::string_view model) const;
};

/// Loaded series, splits, normalization and windows for one configuration.
class Pipeline {
public:
    explicit Pipeline(const BenchConfig& config);

    const BenchConfig& config() const { return config_; }
    const data::SeriesFrame& frame() const { return *frame_; }
    const data::Splits& splits() const { return *splits_; }
    const data::NormStats& stats() const { return stats_; }
    const data::SplitWindows& windows(data::SplitKind kind) const;
    const data::ExogenousAudit& audit() const { return *audit_; }
    models::Anchor anchor() const { return anchor_; }

    std::vector<SplitInfo> split_info() const;
    AuditSummary audit_summary() const;

    models::InitSpec init_spec(models::ModelKind kind) const;
    training::FitResult train(const std::string& model) const;
    /// Training split: MSE only. Validation and test: MAE and MSE. Pass
    /// nullopt for the persistence baseline.
    std::vector<metrics::MetricReport> evaluate(const std::string& model,
                                                const std::optional<models::ModelParams>& params) const;

private:
    BenchConfig config_;
    std::unique_ptr<data::SeriesFrame> frame_;
    std::unique_ptr<data::Splits> splits_;
    data::NormStats stats_;
    std::unique_ptr<data::ExogenousAudit> audit_;
    std::vector<data::SplitWindows> windows_;
    models::Anchor anchor_;
};

/// split -> normalize -> train -> evaluate for every configured model. Errors
/// inside one model are captured in its ModelRun (status "failed") and the
/// remaining models still run.
RunRecord run_bench(const BenchConfig& config);

io::json run_to_json(const RunRecord& record);
RunRecord run_from_json(const io::json& j);

/// The reproducible part of a run: metrics and training curves without
/// timestamps or wall-clock times.
io::json metrics_json(const RunRecord& record);

/// Writes run.json, metrics.json and <model>.params.json into `dir`.
void write_run(const RunRecord& record, const std::filesystem::path& dir);

enum class ReportFormat { Markdown, Csv };
ReportFormat parse_format(std::string_view name);

/// Model / Split / Size / MAE / MSE table grouped Training, Validation,
/// Official Test. Size is the split's row count; missing values print as
/// "--"; the lowest test MAE is emphasized.
std::string render_report(const RunRecord& record, ReportFormat format);

struct ReportRow {
    std::string model;
    std::string split;
    std::size_t size = 0;
    std::optional<double> mae;
    std::optional<double> mse;
    bool best = false;
    bool extension = false;
};

std::vector<ReportRow> parse_report_csv(std::string_view text);

/// UTC wall-clock time as ISO-8601.
std::string utc_now();

} // namespace ltsf::bench
