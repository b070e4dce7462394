#include "ltsf/bench.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using ltsf::io::json;

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string run;
    std::string format = "markdown";
};

ltsf::bench::BenchConfig load(const Options& opts) {
    auto cfg = ltsf::bench::load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    if (!opts.out.empty()) cfg.out_dir = opts.out;
    return cfg;
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ltsf::Error(path.string() + ": cannot write");
    out << doc.dump(2) << '\n';
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ltsf::Error(path.string() + ": cannot open");
    return json::parse(in);
}

int split_info(const Options& opts) {
    const ltsf::bench::Pipeline pipeline(load(opts));
    json splits = json::array();
    for (const auto& s : pipeline.split_info()) {
        splits.push_back({{"name", s.name}, {"begin", s.begin}, {"end", s.end}, {"rows", s.rows()},
                          {"windows", s.windows}});
    }
    const auto audit = pipeline.audit_summary();
    std::cout << json{{"rows", pipeline.frame().rows()},
                      {"channels", pipeline.frame().channel_names()},
                      {"target", audit.target_name},
                      {"input_channels", audit.input_channels},
                      {"lookback", pipeline.config().lookback},
                      {"horizon", pipeline.config().horizon},
                      {"splits", std::move(splits)}}
                     .dump(2)
              << '\n';
    return 0;
}

int train(const Options& opts) {
    const auto cfg = load(opts);
    const ltsf::bench::Pipeline pipeline(cfg);
    for (const auto& model : cfg.models) {
        if (model == ltsf::bench::kPersistence) continue;
        const auto fitted = pipeline.train(model);
        write_json(cfg.out_dir / (model + ".params.json"), ltsf::io::params_to_json(fitted.params));
        write_json(cfg.out_dir / (model + ".train.json"),
                   {{"model", model},
                    {"config", cfg.source_text},
                    {"train_config", ltsf::io::train_config_to_json(cfg.train_config_for(model))},
                    {"report", ltsf::io::train_report_to_json(fitted.report)}});
        std::cerr << model << ": best epoch " << fitted.report.best_epoch << " of " << fitted.report.stop_epoch
                  << ", validation MAE " << fitted.report.best_val_mae() << '\n';
    }
    return 0;
}

int evaluate(const Options& opts) {
    const auto cfg = load(opts);
    const ltsf::bench::Pipeline pipeline(cfg);
    json all = json::array();
    for (const auto& model : cfg.models) {
        std::optional<ltsf::models::ModelParams> params;
        if (model != ltsf::bench::kPersistence) {
            params = ltsf::io::params_from_json(read_json(cfg.out_dir / (model + ".params.json")));
        }
        json reports = json::array();
        for (const auto& r : pipeline.evaluate(model, params)) reports.push_back(ltsf::io::metric_report_to_json(r));
        write_json(cfg.out_dir / (model + ".metrics.json"), reports);
        for (auto& r : reports) all.push_back(std::move(r));
    }
    std::cout << all.dump(2) << '\n';
    return 0;
}

int bench(const Options& opts) {
    const auto cfg = load(opts);
    const auto record = ltsf::bench::run_bench(cfg);
    ltsf::bench::write_run(record, cfg.out_dir);
    std::cout << ltsf::bench::render_report(record, ltsf::bench::ReportFormat::Markdown);
    if (!record.ok()) {
        for (const auto& run : record.runs) {
            if (run.status != "ok") throw ltsf::Error(run.error.value_or("model failed"));
        }
    }
    return 0;
}

int report(const Options& opts) {
    std::filesystem::path path = opts.run;
    if (path.empty()) {
        if (!opts.out.empty()) {
            path = std::filesystem::path(opts.out) / "run.json";
        } else if (!opts.config.empty()) {
            path = ltsf::bench::load_config(opts.config).out_dir / "run.json";
        } else {
            throw ltsf::Error("report: pass --run, --out or --config");
        }
    }
    const auto record = ltsf::bench::run_from_json(read_json(path));
    std::cout << ltsf::bench::render_report(record, ltsf::bench::parse_format(opts.format));
    return 0;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ltsf::DataError*>(&e)) return "data_error";
    if (dynamic_cast<const ltsf::ShapeError*>(&e)) return "shape_error";
    if (dynamic_cast<const ltsf::NumericError*>(&e)) return "numeric_error";
    if (dynamic_cast<const ltsf::Error*>(&e)) return "error";
    if (dynamic_cast<const json::exception*>(&e)) return "json_error";
    return "internal_error";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear / NLinear / DLinear long-horizon forecasting benchmark"};
    app.require_subcommand(1);
    Options opts;

    const auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* option = cmd->add_option("--config", opts.config, "benchmark config file");
        if (config_required) option->required()->check(CLI::ExistingFile);
        cmd->add_option("--out", opts.out, "output directory (overrides the config)");
    };

    auto* info_cmd = app.add_subcommand("split-info", "print split boundaries and window counts");
    add_common(info_cmd, true);
    auto* train_cmd = app.add_subcommand("train", "fit every trainable model and save parameters");
    add_common(train_cmd, true);
    train_cmd->add_option("--seed", opts.seed, "global seed (overrides the config)");
    auto* eval_cmd = app.add_subcommand("evaluate", "evaluate saved parameters on every split");
    add_common(eval_cmd, true);
    auto* bench_cmd = app.add_subcommand("bench", "train, evaluate and report every model");
    add_common(bench_cmd, true);
    bench_cmd->add_option("--seed", opts.seed, "global seed (overrides the config)");
    auto* report_cmd = app.add_subcommand("report", "render a stored run as a table");
    add_common(report_cmd, false);
    report_cmd->add_option("--run", opts.run, "run.json to render");
    report_cmd->add_option("--format", opts.format, "markdown or csv")->check(CLI::IsMember({"markdown", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << json{{"error", {{"type", "usage_error"}, {"message", e.what()}}}}.dump() << '\n';
        return 2;
    }

    try {
        if (*info_cmd) return split_info(opts);
        if (*train_cmd) return train(opts);
        if (*eval_cmd) return evaluate(opts);
        if (*bench_cmd) return bench(opts);
        if (*report_cmd) return report(opts);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"type", error_type(e)}, {"message", e.what()}}}}.dump() << '\n';
        return 1;
    }
    return 1;
}
