#include "ltsf/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace ltsf::bench {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
    T out{};
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || end != value.data() + value.size()) {
        throw Error("config: '" + std::string(key) + "' expects a number, got '" + std::string(value) + "'");
    }
    return out;
}

const std::set<std::string, std::less<>> kTrainKeys{"learning_rate", "weight_decay", "batch_size", "patience",
                                                     "max_epochs",    "beta1",        "beta2",      "epsilon"};

void apply_train_key(training::TrainConfig& cfg, std::string_view key, std::string_view value) {
    if (key == "learning_rate") cfg.learning_rate = parse_number<double>(key, value);
    else if (key == "weight_decay") cfg.weight_decay = parse_number<double>(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_number<std::size_t>(key, value);
    else if (key == "patience") cfg.patience = parse_number<std::size_t>(key, value);
    else if (key == "max_epochs") cfg.max_epochs = parse_number<std::size_t>(key, value);
    else if (key == "beta1") cfg.beta1 = parse_number<double>(key, value);
    else if (key == "beta2") cfg.beta2 = parse_number<double>(key, value);
    else if (key == "epsilon") cfg.epsilon = parse_number<double>(key, value);
    else throw Error("config: unknown training key '" + std::string(key) + "'");
}

bool is_known_model(std::string_view name) {
    return name == "linear" || name == "nlinear" || name == "dlinear" || name == kPersistence;
}

std::string display_name(const std::string& model) {
    if (model == kPersistence) return "Persistence";
    return std::string(models::kind_display_name(models::parse_kind(model)));
}

std::string group_thousands(std::size_t n) {
    std::string digits = std::to_string(n);
    std::string out;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
        out.push_back(digits[i]);
    }
    return out;
}

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr data::SplitKind kSplitOrder[] = {data::SplitKind::Train, data::SplitKind::Validation,
                                           data::SplitKind::Test};

} // namespace

training::TrainConfig BenchConfig::train_config_for(const std::string& model) const {
    training::TrainConfig cfg = train;
    if (const auto it = overrides.find(model); it != overrides.end()) {
        for (const auto& [key, value] : it->second) apply_train_key(cfg, key, value);
    }
    cfg.seed = seed;
    return cfg;
}

void BenchConfig::validate() const {
    if (data_path.empty()) throw Error("config: 'data' is required");
    if (target.empty()) throw Error("config: 'target' is required");
    if (models.empty()) throw Error("config: 'models' must name at least one model");
    if (lookback == 0 || horizon == 0) throw Error("config: lookback and horizon must be positive");
    if (kernel < 1 || kernel % 2 == 0) throw Error("config: kernel must be odd and positive");
    std::set<std::string> seen;
    for (const auto& m : models) {
        if (!is_known_model(m)) throw Error("config: unknown model '" + m + "'");
        if (!seen.insert(m).second) throw Error("config: model '" + m + "' listed twice");
    }
    for (const auto& [model, keys] : overrides) {
        if (!is_known_model(model) || model == kPersistence) {
            throw Error("config: overrides for '" + model + "' do not name a trainable model");
        }
        train_config_for(model).validate();
    }
    train.validate();
}

BenchConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
    BenchConfig cfg;
    cfg.source_text = std::string(text);
    std::set<std::string> seen;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw Error("config line " + std::to_string(line_no) + ": empty key or value");
        }
        if (!seen.insert(key).second) throw Error("config: duplicate key '" + key + "'");

        if (key == "data") {
            std::filesystem::path p{std::string(value)};
            cfg.data_path = p.is_absolute() ? p : base_dir / p;
        } else if (key == "target") {
            cfg.target = value;
        } else if (key == "split.train") {
            cfg.split.n_train = parse_number<std::size_t>(key, value);
        } else if (key == "split.val") {
            cfg.split.n_val = parse_number<std::size_t>(key, value);
        } else if (key == "split.test") {
            cfg.split.n_test = parse_number<std::size_t>(key, value);
        } else if (key == "lookback") {
            cfg.lookback = parse_number<std::size_t>(key, value);
        } else if (key == "horizon") {
            cfg.horizon = parse_number<std::size_t>(key, value);
        } else if (key == "models") {
            std::string_view rest = value;
            while (!rest.empty()) {
                const auto comma = rest.find(',');
                const auto item = trim(rest.substr(0, comma));
                if (!item.empty()) cfg.models.emplace_back(item);
                rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            }
        } else if (key == "kernel") {
            cfg.kernel = parse_number<int>(key, value);
        } else if (key == "anchor") {
            cfg.anchor = value;
        } else if (key == "out") {
            std::filesystem::path p{std::string(value)};
            cfg.out_dir = p.is_absolute() ? p : base_dir / p;
        } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(key, value);
        } else if (const auto dot = key.find('.'); dot != std::string::npos) {
            const std::string scope = key.substr(0, dot);
            const std::string field = key.substr(dot + 1);
            if (!kTrainKeys.contains(field)) throw Error("config: unknown key '" + key + "'");
            if (scope == "train") apply_train_key(cfg.train, field, value);
            else cfg.overrides[scope][field] = std::string(value);
        } else {
            throw Error("config: unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

BenchConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(path.string() + ": cannot open config");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.parent_path().empty() ? std::filesystem::current_path() : path.parent_path());
}

bool RunRecord::ok() const {
    return std::all_of(runs.begin(), runs.end(), [](const ModelRun& r) { return r.status == "ok"; });
}

const ModelRun* RunRecord::find(std::string_view model) const {
    for (const auto& run : runs) {
        if (run.model == model) return &run;
    }
    return nullptr;
}

Pipeline::Pipeline(const BenchConfig& config) : config_(config) {
    config_.validate();
    frame_ = std::make_unique<data::SeriesFrame>(data::load_csv(config_.data_path, config_.target));
    splits_ = std::make_unique<data::Splits>(data::make_splits(*frame_, config_.split));
    stats_ = data::fit_norm_stats(splits_->train);
    audit_ = std::make_unique<data::ExogenousAudit>(frame_->target_index());
    windows_.reserve(3);
    for (auto kind : kSplitOrder) {
        windows_.emplace_back(splits_->get(kind), stats_, config_.lookback, config_.horizon, audit_.get());
    }
    if (config_.anchor != "none") {
        const auto channel = frame_->channel_index(config_.anchor);
        const auto& inputs = windows_.front().input_channels();
        const auto it = std::find(inputs.begin(), inputs.end(), channel);
        if (it == inputs.end()) throw Error("config: anchor '" + config_.anchor + "' is not an exogenous channel");
        anchor_ = static_cast<Index>(it - inputs.begin());
    }
}

const data::SplitWindows& Pipeline::windows(data::SplitKind kind) const {
    return windows_.at(static_cast<std::size_t>(kind));
}

std::vector<SplitInfo> Pipeline::split_info() const {
    std::vector<SplitInfo> out;
    for (auto kind : kSplitOrder) {
        const auto& view = splits_->get(kind);
        out.push_back({std::string(data::split_label(kind)), view.begin(), view.end(), windows(kind).size()});
    }
    return out;
}

AuditSummary Pipeline::audit_summary() const {
    AuditSummary summary;
    summary.target_index = frame_->target_index();
    summary.target_name = frame_->target_name();
    for (auto c : windows_.front().input_channels()) summary.input_channels.push_back(frame_->channel_names()[c]);
    summary.batches_checked = audit_->batches_checked();
    summary.windows_checked = audit_->windows_checked();
    return summary;
}

models::InitSpec Pipeline::init_spec(models::ModelKind kind) const {
    const auto dims = windows_.front().dims();
    return models::InitSpec{kind, dims.lookback, dims.horizon, dims.channels, config_.kernel, anchor_, config_.seed};
}

training::FitResult Pipeline::train(const std::string& model) const {
    const auto kind = models::parse_kind(model);
    return training::fit(init_spec(kind), windows(data::SplitKind::Train), windows(data::SplitKind::Validation),
                         config_.train_config_for(model));
}

std::vector<metrics::MetricReport> Pipeline::evaluate(const std::string& model,
                                                      const std::optional<models::ModelParams>& params) const {
    const metrics::Forecaster forecaster =
        params ? metrics::Forecaster([&p = *params](const data::WindowBatch& b) { return models::forward(p, b.inputs); })
               : metrics::persistence_forecaster(anchor_);
    std::vector<metrics::MetricReport> out;
    for (auto kind : kSplitOrder) {
        try {
            auto report = metrics::evaluate(forecaster, windows(kind), model, std::string(data::split_label(kind)));
            if (kind == data::SplitKind::Train) report.mae.reset();
            out.push_back(std::move(report));
        } catch (const std::exception& e) {
            throw Error("split=" + std::string(data::split_label(kind)) + ": " + e.what());
        }
    }
    return out;
}

RunRecord run_bench(const BenchConfig& config) {
    RunRecord record;
    record.started_at = utc_now();
    record.config_snapshot = config.source_text;
    record.seed = config.seed;
    record.data_path = config.data_path.string();

    const Pipeline pipeline(config);
    record.splits = pipeline.split_info();

    for (const auto& model : config.models) {
        ModelRun run;
        run.model = model;
        run.display = display_name(model);
        run.extension = model == kPersistence;
        try {
            if (!run.extension) {
                try {
                    auto fitted = pipeline.train(model);
                    run.train = std::move(fitted.report);
                    run.params = std::move(fitted.params);
                } catch (const std::exception& e) {
                    throw Error("split=Training (fit): " + std::string(e.what()));
                }
            }
            run.metrics = pipeline.evaluate(model, run.params);
        } catch (const std::exception& e) {
            run.status = "failed";
            run.error = "model=" + model + " " + e.what();
        }
        record.runs.push_back(std::move(run));
    }
    record.audit = pipeline.audit_summary();
    record.finished_at = utc_now();
    return record;
}

namespace {

io::json model_run_json(const ModelRun& run, bool with_timing) {
    io::json metrics = io::json::array();
    for (const auto& m : run.metrics) metrics.push_back(io::metric_report_to_json(m));
    return {{"model", run.model},
            {"display", run.display},
            {"extension", run.extension},
            {"status", run.status},
            {"error", run.error ? io::json(*run.error) : io::json(nullptr)},
            {"train_report", run.train ? io::train_report_to_json(*run.train, with_timing) : io::json(nullptr)},
            {"metrics", std::move(metrics)}};
}

} // namespace

io::json run_to_json(const RunRecord& record) {
    io::json splits = io::json::array();
    for (const auto& s : record.splits) {
        splits.push_back({{"name", s.name}, {"begin", s.begin}, {"end", s.end}, {"rows", s.rows()},
                          {"windows", s.windows}});
    }
    io::json runs = io::json::array();
    for (const auto& run : record.runs) runs.push_back(model_run_json(run, true));
    return {{"schema", "ltsf-run"},
            {"schema_version", record.schema_version},
            {"library_version", record.library_version},
            {"config", record.config_snapshot},
            {"seed", record.seed},
            {"data_path", record.data_path},
            {"splits", std::move(splits)},
            {"audit",
             {{"target_index", record.audit.target_index},
              {"target_name", record.audit.target_name},
              {"input_channels", record.audit.input_channels},
              {"batches_checked", record.audit.batches_checked},
              {"windows_checked", record.audit.windows_checked}}},
            {"runs", std::move(runs)},
            {"started_at", record.started_at},
            {"finished_at", record.finished_at}};
}

RunRecord run_from_json(const io::json& j) {
    if (j.value("schema", std::string()) != "ltsf-run") throw Error("run record: not an ltsf-run document");
    RunRecord record;
    record.schema_version = j.at("schema_version").get<int>();
    if (record.schema_version != kRunSchemaVersion) {
        throw Error("run record: unsupported schema version " + std::to_string(record.schema_version));
    }
    record.library_version = j.at("library_version").get<std::string>();
    record.config_snapshot = j.at("config").get<std::string>();
    record.seed = j.at("seed").get<std::uint64_t>();
    record.data_path = j.at("data_path").get<std::string>();
    for (const auto& s : j.at("splits")) {
        record.splits.push_back({s.at("name").get<std::string>(), s.at("begin").get<std::size_t>(),
                                 s.at("end").get<std::size_t>(), s.at("windows").get<std::size_t>()});
    }
    const auto& audit = j.at("audit");
    record.audit.target_index = audit.at("target_index").get<std::size_t>();
    record.audit.target_name = audit.at("target_name").get<std::string>();
    record.audit.input_channels = audit.at("input_channels").get<std::vector<std::string>>();
    record.audit.batches_checked = audit.at("batches_checked").get<std::uint64_t>();
    record.audit.windows_checked = audit.at("windows_checked").get<std::uint64_t>();
    for (const auto& r : j.at("runs")) {
        ModelRun run;
        run.model = r.at("model").get<std::string>();
        run.display = r.at("display").get<std::string>();
        run.extension = r.at("extension").get<bool>();
        run.status = r.at("status").get<std::string>();
        if (!r.at("error").is_null()) run.error = r.at("error").get<std::string>();
        if (!r.at("train_report").is_null()) run.train = io::train_report_from_json(r.at("train_report"));
        for (const auto& m : r.at("metrics")) run.metrics.push_back(io::metric_report_from_json(m));
        record.runs.push_back(std::move(run));
    }
    record.started_at = j.at("started_at").get<std::string>();
    record.finished_at = j.at("finished_at").get<std::string>();
    return record;
}

io::json metrics_json(const RunRecord& record) {
    io::json runs = io::json::array();
    for (const auto& run : record.runs) runs.push_back(model_run_json(run, false));
    return {{"schema", "ltsf-metrics"},
            {"schema_version", record.schema_version},
            {"seed", record.seed},
            {"runs", std::move(runs)}};
}

void write_run(const RunRecord& record, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto write = [&](const std::string& name, const io::json& doc) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error((dir / name).string() + ": cannot write");
        out << doc.dump(2) << '\n';
    };
    write("run.json", run_to_json(record));
    write("metrics.json", metrics_json(record));
    for (const auto& run : record.runs) {
        if (run.params) write(run.model + ".params.json", io::params_to_json(*run.params));
    }
}

ReportFormat parse_format(std::string_view name) {
    if (name == "markdown" || name == "md") return ReportFormat::Markdown;
    if (name == "csv") return ReportFormat::Csv;
    throw Error("unknown report format '" + std::string(name) + "'");
}

std::string render_report(const RunRecord& record, ReportFormat format) {
    if (record.runs.empty()) throw Error("report: run record has no models");

    std::vector<ReportRow> rows;
    for (auto kind : kSplitOrder) {
        const std::string label(data::split_label(kind));
        std::size_t size = 0;
        for (const auto& s : record.splits) {
            if (s.name == label) size = s.rows();
        }
        for (const auto& run : record.runs) {
            ReportRow row{run.display, label, size, std::nullopt, std::nullopt, false, run.extension};
            for (const auto& m : run.metrics) {
                if (m.split_name == label) {
                    row.mae = m.mae;
                    row.mse = m.mse;
                }
            }
            rows.push_back(std::move(row));
        }
    }
    const std::string test_label(data::split_label(data::SplitKind::Test));
    ReportRow* best = nullptr;
    for (auto& row : rows) {
        if (row.split == test_label && row.mae && (best == nullptr || *row.mae < *best->mae)) best = &row;
    }
    if (best != nullptr) best->best = true;

    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        out << "model,split,size,mae,mse,best,extension\n";
        for (const auto& row : rows) {
            out << row.model << ',' << row.split << ',' << row.size << ','
                << (row.mae ? exact(*row.mae) : "--") << ',' << (row.mse ? exact(*row.mse) : "--") << ','
                << (row.best ? 1 : 0) << ',' << (row.extension ? 1 : 0) << '\n';
        }
        return out.str();
    }

    out << "| Model | Split | Size | MAE | MSE |\n";
    out << "|:--|:--|--:|--:|--:|\n";
    std::string current;
    for (const auto& row : rows) {
        if (!current.empty() && row.split != current) out << "| | | | | |\n";
        current = row.split;
        const auto cell = [&](const std::string& text) { return row.best ? "**" + text + "**" : text; };
        out << "| " << cell(row.model + (row.extension ? "\xE2\x80\xA0" : "")) << " | " << cell(row.split) << " | "
            << cell(group_thousands(row.size)) << " | " << cell(row.mae ? fixed4(*row.mae) : "--") << " | "
            << cell(row.mse ? fixed4(*row.mse) : "--") << " |\n";
    }
    out << "\nValues are in normalized (z-score) units. Bold: lowest Official Test MAE.";
    if (std::any_of(record.runs.begin(), record.runs.end(), [](const ModelRun& r) { return r.extension; })) {
        out << "\n\xE2\x80\xA0 Baseline extension, evaluated without training.";
    }
    for (const auto& run : record.runs) {
        if (run.status != "ok") out << "\n" << run.display << " failed: " << run.error.value_or("unknown error");
    }
    out << '\n';
    return out.str();
}

std::vector<ReportRow> parse_report_csv(std::string_view text) {
    std::vector<ReportRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != "model,split,size,mae,mse,best,extension") {
        throw Error("report csv: unexpected header");
    }
    const auto optional_number = [](std::string_view cell) -> std::optional<double> {
        if (cell == "--") return std::nullopt;
        return parse_number<double>("cell", cell);
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::string_view rest = line;
        while (true) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (cells.size() != 7) throw Error("report csv: expected 7 cells, got " + std::to_string(cells.size()));
        rows.push_back({std::string(cells[0]), std::string(cells[1]), parse_number<std::size_t>("size", cells[2]),
                        optional_number(cells[3]), optional_number(cells[4]), cells[5] == "1", cells[6] == "1"});
    }
    return rows;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace ltsf::bench
