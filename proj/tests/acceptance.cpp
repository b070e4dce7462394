// Acceptance suite: one [PASS]/[FAIL] line per criterion. Exit status is the
// number of failed criteria.

#include "test_support.hpp"

#include "ltsf/bench.hpp"
#include "ltsf/metrics.hpp"
#include "ltsf/training.hpp"
#include "ltsf/verify.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace ltsf;
using models::ModelKind;

namespace {

constexpr ModelKind kKinds[] = {ModelKind::Linear, ModelKind::NLinear, ModelKind::DLinear};

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

Outcome gradient_correctness() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    int instances = 0;
    for (auto kind : kKinds) {
        for (int i = 0; i < 50; ++i) {
            const Index lookback = 1 + static_cast<Index>(rng.below(8));
            const Index channels = 1 + static_cast<Index>(rng.below(3));
            const Index horizon = 1 + static_cast<Index>(rng.below(4));
            const Index batch = 1 + static_cast<Index>(rng.below(4));
            const int kernel = 1 + 2 * static_cast<int>(rng.below(3));
            const models::Anchor anchor = rng.below(2) == 0 ? models::Anchor{} : models::Anchor{static_cast<Index>(rng.below(static_cast<std::uint64_t>(channels)))};
            const auto params = testing::random_params(rng, kind, lookback, horizon, channels, kernel, anchor);
            const auto x = testing::random_window(rng, batch, lookback, channels);
            const Matrix y = testing::random_matrix(rng, batch, horizon);

            const auto analytic = models::model_grad(params, x, y).grad;
            const auto numeric = verify::finite_diff_grad(
                [&](const models::ModelParams& p) { return metrics::mse(models::forward(p, x), y); }, params, 1e-5);
            worst = std::max(worst, verify::max_relative_error(models::flatten(analytic), models::flatten(numeric)));
            ++instances;
        }
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-6 && elapsed < 10.0,
            fmt("%d instances, max relative error %.3e (<= 1e-6), %.2f s (< 10 s)", instances, worst, elapsed)};
}

Outcome ols_equivalence() {
    const auto start = std::chrono::steady_clock::now();
    const Index n = 500, lookback = 4, channels = 2, horizon = 2, width = lookback * channels;
    Rng rng(202);
    const Matrix A = testing::random_matrix(rng, horizon, width, 0.5);
    const Matrix c = testing::random_matrix(rng, 1, horizon);
    const auto make = [&](Index rows) {
        Matrix x = testing::random_matrix(rng, rows, width);
        Matrix y = x * A.transpose();
        y.rowwise() += c.row(0);
        return std::pair{x, y};
    };
    const auto [tx, ty] = make(n);
    const auto [vx, vy] = make(125);
    const auto [hx, hy] = make(200);
    const data::SampleWindows train(tx, ty, lookback, channels);
    const data::SampleWindows validation(vx, vy, lookback, channels);

    training::TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.weight_decay = 0.0;
    cfg.batch_size = 32;
    cfg.max_epochs = 600;
    cfg.patience = 600;
    cfg.seed = 5;
    const auto fitted =
        training::fit({ModelKind::Linear, lookback, horizon, channels, 1, std::nullopt, 11}, train, validation, cfg);

    const auto ols = verify::ols_solve(tx, ty);
    const double train_mse = metrics::mse(models::forward(fitted.params, WindowTensor(tx, lookback, channels)), ty);
    const double gap = std::fabs(train_mse - ols.residual_mse);
    const Matrix held_fit = models::forward(fitted.params, WindowTensor(hx, lookback, channels));
    const double held_diff = (held_fit - ols.predict(hx)).cwiseAbs().maxCoeff();
    const double elapsed = seconds_since(start);
    return {gap <= 1e-6 && held_diff <= 1e-3 && elapsed < 60.0,
            fmt("|train MSE - OLS MSE| %.3e (<= 1e-6), held-out max diff %.3e (<= 1e-3), %d epochs, %.2f s (< 60 s)",
                gap, held_diff, static_cast<int>(fitted.report.epochs()), elapsed)};
}

Outcome decomposition_identity() {
    Rng rng(303);
    double worst = 0.0;
    std::size_t elements = 0, exact = 0;
    for (int i = 0; i < 1000; ++i) {
        const int kernel = std::array{1, 3, 25}[static_cast<std::size_t>(i % 3)];
        const Index lookback = 1 + static_cast<Index>(rng.below(96));
        const Index channels = 1 + static_cast<Index>(rng.below(4));
        const double scale = std::pow(10.0, static_cast<double>(rng.below(7)) - 3.0);
        const auto x = testing::random_window(rng, 1, lookback, channels, scale);
        const auto d = models::decompose(x, kernel);
        for (Index k = 0; k < x.flat().size(); ++k) {
            const double t = d.trend.flat().data()[k];
            const double s = d.seasonal.flat().data()[k];
            const double v = x.flat().data()[k];
            worst = std::max(worst, testing::reconstruction_ulps(t, s, v));
            exact += (t + s == v) ? 1 : 0;
            ++elements;
        }
    }
    return {worst <= 1.0, fmt("1000 windows, kernels {1,3,25}: max error %.2f ulp (<= 1), %.2f%% bit-exact", worst,
                              100.0 * static_cast<double>(exact) / static_cast<double>(elements))};
}

Outcome nlinear_equivariance() {
    Rng rng(404);
    double anchored = 0.0, unanchored = 0.0;
    for (int i = 0; i < 200; ++i) {
        const Index lookback = 2 + static_cast<Index>(rng.below(95));
        const Index channels = 1 + static_cast<Index>(rng.below(4));
        const Index horizon = 1 + static_cast<Index>(rng.below(96));
        const auto a = static_cast<Index>(rng.below(static_cast<std::uint64_t>(channels)));
        const auto with_anchor = testing::random_params(rng, ModelKind::NLinear, lookback, horizon, channels, 3, a);
        const auto no_anchor = testing::random_params(rng, ModelKind::NLinear, lookback, horizon, channels);
        const auto x = testing::random_window(rng, 3, lookback, channels);
        const Matrix base_a = models::forward(with_anchor, x);
        const Matrix base_n = models::forward(no_anchor, x);
        for (double c : {-5.0, 0.1, 1e3}) {
            WindowTensor shifted = x;
            shifted.flat().array() += c;
            anchored = std::max(anchored, (models::forward(with_anchor, shifted).array() - base_a.array() - c).abs().maxCoeff());
            unanchored = std::max(unanchored, (models::forward(no_anchor, shifted) - base_n).cwiseAbs().maxCoeff());
        }
    }
    return {anchored <= 1e-9 && unanchored <= 1e-9,
            fmt("c in {-5, 0.1, 1e3}: anchored shift error %.3e, unanchored change %.3e (<= 1e-9)", anchored,
                unanchored)};
}

Outcome metric_oracles(const std::vector<metrics::MetricReport>& reports) {
    Rng rng(505);
    double worst = 0.0;
    std::size_t violations = 0, checked = 0;
    for (int i = 0; i < 100; ++i) {
        const Index rows = 1 + static_cast<Index>(rng.below(64));
        const Index cols = 1 + static_cast<Index>(rng.below(96));
        const Matrix p = testing::random_matrix(rng, rows, cols, 2.0);
        const Matrix t = testing::random_matrix(rng, rows, cols, 2.0);
        const double mae = metrics::mae(p, t), mse = metrics::mse(p, t);
        const double naive_mae = testing::naive_mae(p, t), naive_mse = testing::naive_mse(p, t);
        worst = std::max({worst, std::fabs(mae - naive_mae), std::fabs(mse - naive_mse)});
        violations += mae * mae > mse ? 1 : 0;
        ++checked;
    }
    for (const auto& r : reports) {
        if (!r.mae) continue;
        violations += *r.mae * *r.mae > r.mse ? 1 : 0;
        ++checked;
    }
    const auto constant = [](double mean, double sd) {
        return metrics::GaussianForecast{Matrix::Constant(4, 4, mean), Matrix::Constant(4, 4, sd)};
    };
    const double kl0 = metrics::gaussian_kl(constant(0, 1), constant(0, 1));
    const double kl1 = metrics::gaussian_kl(constant(1, 1), constant(0, 1));
    const double kl2 = metrics::gaussian_kl(constant(0, 2), constant(0, 1));
    const double kl_err = std::max({std::fabs(kl0), std::fabs(kl1 - 0.5), std::fabs(kl2 - (std::log(0.5) + 2.0 - 0.5))});
    return {worst <= 1e-12 && kl_err <= 1e-9 && violations == 0,
            fmt("naive-loop gap %.2e (<= 1e-12); KL %.4f %.4f %.4f, max error %.2e (<= 1e-9); "
                "mae^2 > mse on %zu of %zu reports",
                worst, kl0, kl1, kl2, kl_err, violations, checked)};
}

data::SeriesFrame protocol_frame(std::size_t rows, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::string> ts;
    ts.reserve(rows);
    Matrix v(static_cast<Index>(rows), 4);
    for (std::size_t r = 0; r < rows; ++r) {
        ts.push_back(testing::iso_timestamp(r));
        const auto i = static_cast<Index>(r);
        v(i, 0) = 10.0 + 0.001 * static_cast<double>(r) + rng.normal();
        v(i, 1) = 20.0 + rng.normal();
        v(i, 2) = 50.0 * rng.uniform();
        v(i, 3) = -20.0 + rng.normal();
    }
    return data::SeriesFrame(std::move(ts), std::move(v), {"outdoor", "temp", "solar", "wind"}, 1);
}

Outcome protocol_fidelity() {
    const data::SplitSpec spec{36'105, 10'275, 10'563};
    const auto frame = protocol_frame(56'943, 606);
    const auto splits = data::make_splits(frame, spec);
    std::vector<std::string> problems;
    const auto expect = [&](bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    };
    expect(splits.train.begin() == 0 && splits.train.end() == 36'105, "train bounds");
    expect(splits.validation.begin() == 36'105 && splits.validation.end() == 46'380, "validation bounds");
    expect(splits.test.begin() == 46'380 && splits.test.end() == 56'943, "test bounds");

    const auto stats = data::fit_norm_stats(splits.train);
    data::ExogenousAudit audit(frame.target_index());
    std::size_t total_windows = 0;
    std::string counts;
    for (auto kind : {data::SplitKind::Train, data::SplitKind::Validation, data::SplitKind::Test}) {
        const auto& view = splits.get(kind);
        const data::SplitWindows windows(view, stats, 96, 96, &audit);
        const std::size_t expected = view.rows() - 96 - 96 + 1;
        expect(windows.size() == expected, std::string(data::split_label(kind)) + " window count");
        expect(windows.input_channels() == std::vector<std::size_t>{0, 2, 3}, "input channels");
        // Every input value must be the normalized exogenous column it claims to be.
        bool inputs_match = true;
        for (const auto& batch : windows.batches(1024)) {
            for (Index b = 0; b < batch.size(); ++b) {
                const auto row0 = static_cast<Index>(view.begin() + batch.origins[static_cast<std::size_t>(b)]);
                for (Index t = 0; t < 96; ++t) {
                    for (Index k = 0; k < 3; ++k) {
                        const auto c = static_cast<Index>(batch.input_channels[static_cast<std::size_t>(k)]);
                        const double z = (frame.values()(row0 + t, c) - stats.mean[c]) / stats.std[c];
                        inputs_match = inputs_match && std::fabs(batch.inputs(b, t, k) - z) <= 1e-12;
                    }
                }
            }
        }
        expect(inputs_match, std::string(data::split_label(kind)) + " inputs are not the exogenous channels");
        total_windows += windows.size();
        counts += (counts.empty() ? "" : "/") + std::to_string(windows.size());
    }
    expect(audit.windows_checked() == total_windows, "audit coverage");

    Matrix perturbed = frame.values();
    Rng rng(607);
    for (Index r = 36'105; r < perturbed.rows(); ++r) {
        for (Index c = 0; c < perturbed.cols(); ++c) perturbed(r, c) = 1e4 * rng.normal();
    }
    const data::SeriesFrame other(frame.timestamps(), perturbed, frame.channel_names(), frame.target_index());
    const auto other_stats = data::fit_norm_stats(data::make_splits(other, spec).train);
    expect(other_stats.mean == stats.mean && other_stats.std == stats.std, "normalization leakage");

    std::string detail = "windows " + counts + ", audit checked " + std::to_string(audit.windows_checked()) +
                         " windows, stats invariant to val/test perturbation";
    for (const auto& p : problems) detail += "; FAILED " + p;
    return {problems.empty(), detail};
}

Outcome early_stopping_semantics() {
    Rng rng(707);
    const Matrix x = testing::random_matrix(rng, 64, 6);
    const Matrix y = testing::random_matrix(rng, 64, 2);
    const data::SampleWindows source(x, y, 3, 2);
    training::TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.patience = 3;

    std::vector<std::string> problems;
    const auto run = [&](const std::vector<double>& scripted, std::size_t stop, std::size_t best, bool early) {
        std::vector<std::vector<double>> snapshots;
        training::FitOptions options;
        options.validation_score = [&](const models::ModelParams&, std::size_t epoch) { return scripted.at(epoch - 1); };
        options.on_epoch_end = [&](std::size_t, const models::ModelParams& p) { snapshots.push_back(models::flatten(p)); };
        auto local = cfg;
        local.max_epochs = scripted.size();
        const auto result =
            training::fit({ModelKind::Linear, 3, 2, 2, 1, std::nullopt, 1}, source, source, local, options);
        const auto& r = result.report;
        if (r.stop_epoch != stop || r.best_epoch != best || r.early_stopped != early ||
            snapshots.size() != stop || models::flatten(result.params) != snapshots.at(best - 1)) {
            problems.push_back(fmt("sequence of %zu: stop %zu best %zu", scripted.size(), r.stop_epoch, r.best_epoch));
        }
    };
    run({1.0, 0.9, 0.95, 0.96, 0.97, 0.1, 0.1}, 5, 2, true);
    run({1.0, 0.9, 0.8, 0.7}, 4, 4, false);
    run({0.5, 0.6, 0.4, 0.45, 0.46, 0.3, 0.2}, 7, 7, false);
    run({0.5, 0.5, 0.5, 0.5}, 4, 1, true);

    std::string detail = "[1.0, 0.9, 0.95, 0.96, 0.97] stops after epoch 5 with epoch-2 parameters restored";
    for (const auto& p : problems) detail += "; FAILED " + p;
    return {problems.empty(), detail};
}

struct DeskBench {
    testing::ScratchDir dir{"acceptance"};
    bench::BenchConfig config;
    bench::RunRecord first;
    bench::RunRecord second;
    double first_seconds = 0.0;

    DeskBench() {
        testing::write_file(dir.path / "building.csv", testing::synthetic_building_csv(10'000, 808));
        config = bench::parse_config("data = building.csv\n"
                                     "target = temp\n"
                                     "split.train = 7000\nsplit.val = 1500\nsplit.test = 1500\n"
                                     "lookback = 96\nhorizon = 96\n"
                                     "models = linear, nlinear, dlinear, persistence\n"
                                     "kernel = 25\n"
                                     "anchor = outdoor\n"
                                     "seed = 2024\n",
                                     dir.path);
        const auto start = std::chrono::steady_clock::now();
        first = bench::run_bench(config);
        first_seconds = seconds_since(start);
        second = bench::run_bench(config);
    }
};

Outcome qualitative_ordering(const DeskBench& desk) {
    const auto test_mae = [&](const std::string& model) -> std::optional<double> {
        const auto* run = desk.first.find(model);
        if (run == nullptr || run->status != "ok") return std::nullopt;
        for (const auto& m : run->metrics) {
            if (m.split_name == "Official Test") return m.mae;
        }
        return std::nullopt;
    };
    const auto baseline = test_mae(bench::kPersistence);
    bool pass = baseline.has_value() && desk.first_seconds < 300.0;
    std::string detail = "test MAE";
    for (const char* model : {"linear", "nlinear", "dlinear"}) {
        const auto mae = test_mae(model);
        pass = pass && mae && *mae < *baseline;
        detail += fmt(" %s %.4f", model, mae.value_or(NAN));
    }
    detail += fmt(" vs persistence %.4f; bench %.1f s (< 300 s)", baseline.value_or(NAN), desk.first_seconds);
    return {pass, detail};
}

Outcome determinism(const DeskBench& desk) {
    const std::string a = bench::metrics_json(desk.first).dump(2);
    const std::string b = bench::metrics_json(desk.second).dump(2);
    return {a == b && desk.first.ok(), fmt("two bench runs, metrics JSON %zu bytes, %s", a.size(),
                                           a == b ? "byte-identical" : "DIFFERENT")};
}

} // namespace

int main() {
    int failures = 0;
    const auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        failures += outcome.pass ? 0 : 1;
        std::cout << (outcome.pass ? "[PASS] " : "[FAIL] ") << id << ". " << name << ": " << outcome.detail
                  << fmt(" [%.2f s]", seconds_since(start)) << std::endl;
    };

    std::unique_ptr<DeskBench> desk;
    std::string desk_error;
    try {
        desk = std::make_unique<DeskBench>();
    } catch (const std::exception& e) {
        desk_error = e.what();
    }
    const auto needs_desk = [&](const std::function<Outcome(const DeskBench&)>& f) {
        return [&, f]() -> Outcome {
            if (!desk) return {false, "bench did not run: " + desk_error};
            return f(*desk);
        };
    };
    std::vector<metrics::MetricReport> bench_reports;
    if (desk) {
        for (const auto& run : desk->first.runs) bench_reports.insert(bench_reports.end(), run.metrics.begin(), run.metrics.end());
    }

    report(1, "gradient correctness", gradient_correctness);
    report(2, "OLS equivalence", ols_equivalence);
    report(3, "decomposition identity", decomposition_identity);
    report(4, "NLinear translation equivariance", nlinear_equivariance);
    report(5, "metric oracles", [&] { return metric_oracles(bench_reports); });
    report(6, "protocol fidelity", protocol_fidelity);
    report(7, "early stopping semantics", early_stopping_semantics);
    report(8, "qualitative ordering at desk scale", needs_desk(qualitative_ordering));
    report(9, "determinism", needs_desk(determinism));

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures;
}
