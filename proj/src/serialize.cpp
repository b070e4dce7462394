#include "ltsf/serialize.hpp"

namespace ltsf::io {

namespace {

json map_to_json(const char* name, const models::AffineMap& map) {
    return {{"name", name},
            {"rows", map.weight.rows()},
            {"cols", map.weight.cols()},
            {"weight", std::vector<double>(map.weight.data(), map.weight.data() + map.weight.size())},
            {"bias", std::vector<double>(map.bias.data(), map.bias.data() + map.bias.size())}};
}

models::AffineMap map_from_json(const json& j, Index horizon, Index width) {
    const auto weight = j.at("weight").get<std::vector<double>>();
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (static_cast<Index>(weight.size()) != horizon * width || static_cast<Index>(bias.size()) != horizon) {
        throw ShapeError("params: block '" + j.value("name", std::string("?")) + "' has the wrong size");
    }
    models::AffineMap map{Eigen::Map<const Matrix>(weight.data(), horizon, width),
                          Eigen::Map<const Vector>(bias.data(), horizon)};
    if (!map.weight.allFinite() || !map.bias.allFinite()) throw NumericError("params: non-finite entries");
    return map;
}

} // namespace

json params_to_json(const models::ModelParams& params) {
    const auto kind = models::kind_of(params);
    json j{{"format", "ltsf-params"},
           {"version", kParamsVersion},
           {"kind", models::kind_name(kind)},
           {"lookback", models::lookback_of(params)},
           {"horizon", models::horizon_of(params)},
           {"channels", models::channels_of(params)},
           {"flatten_order", kFlattenOrder},
           {"kernel", nullptr},
           {"anchor", nullptr}};
    json blocks = json::array();
    if (const auto* p = std::get_if<models::LinearParams>(&params)) {
        blocks.push_back(map_to_json("map", p->map));
    } else if (const auto* p = std::get_if<models::NLinearParams>(&params)) {
        blocks.push_back(map_to_json("map", p->map));
        if (p->anchor) j["anchor"] = *p->anchor;
    } else if (const auto* p = std::get_if<models::DLinearParams>(&params)) {
        blocks.push_back(map_to_json("trend", p->trend));
        blocks.push_back(map_to_json("seasonal", p->seasonal));
        j["kernel"] = p->kernel;
    }
    j["blocks"] = std::move(blocks);
    return j;
}

models::ModelParams params_from_json(const json& j) {
    if (j.value("format", std::string()) != "ltsf-params") throw Error("params: not an ltsf-params record");
    if (j.at("version").get<int>() != kParamsVersion) {
        throw Error("params: unsupported version " + j.at("version").dump());
    }
    if (j.at("flatten_order").get<std::string>() != kFlattenOrder) throw Error("params: unknown flatten order");
    const auto kind = models::parse_kind(j.at("kind").get<std::string>());
    const auto lookback = j.at("lookback").get<Index>();
    const auto horizon = j.at("horizon").get<Index>();
    const auto channels = j.at("channels").get<Index>();
    const Index width = lookback * channels;
    const auto& blocks = j.at("blocks");
    const std::size_t expected = kind == models::ModelKind::DLinear ? 2 : 1;
    if (blocks.size() != expected) throw ShapeError("params: wrong number of blocks");

    switch (kind) {
        case models::ModelKind::Linear:
            return models::LinearParams{map_from_json(blocks[0], horizon, width), lookback, channels};
        case models::ModelKind::NLinear: {
            models::Anchor anchor;
            if (!j.at("anchor").is_null()) anchor = j.at("anchor").get<Index>();
            return models::NLinearParams{map_from_json(blocks[0], horizon, width), lookback, channels, anchor};
        }
        case models::ModelKind::DLinear:
            return models::DLinearParams{map_from_json(blocks[0], horizon, width),
                                         map_from_json(blocks[1], horizon, width), lookback, channels,
                                         j.at("kernel").get<int>()};
    }
    throw Error("params: unknown kind");
}

json train_config_to_json(const training::TrainConfig& cfg) {
    return {{"learning_rate", cfg.learning_rate}, {"weight_decay", cfg.weight_decay},
            {"batch_size", cfg.batch_size},       {"patience", cfg.patience},
            {"max_epochs", cfg.max_epochs},       {"seed", cfg.seed},
            {"beta1", cfg.beta1},                 {"beta2", cfg.beta2},
            {"epsilon", cfg.epsilon}};
}

training::TrainConfig train_config_from_json(const json& j) {
    training::TrainConfig cfg;
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.weight_decay = j.at("weight_decay").get<double>();
    cfg.batch_size = j.at("batch_size").get<std::size_t>();
    cfg.patience = j.at("patience").get<std::size_t>();
    cfg.max_epochs = j.at("max_epochs").get<std::size_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.beta1 = j.at("beta1").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    return cfg;
}

json train_report_to_json(const training::TrainReport& report, bool with_timing) {
    json j{{"train_loss", report.train_loss},
           {"val_mae", report.val_mae},
           {"best_epoch", report.best_epoch},
           {"stop_epoch", report.stop_epoch},
           {"early_stopped", report.early_stopped}};
    if (with_timing) j["epoch_seconds"] = report.epoch_seconds;
    return j;
}

training::TrainReport train_report_from_json(const json& j) {
    training::TrainReport report;
    report.train_loss = j.at("train_loss").get<std::vector<double>>();
    report.val_mae = j.at("val_mae").get<std::vector<double>>();
    report.best_epoch = j.at("best_epoch").get<std::size_t>();
    report.stop_epoch = j.at("stop_epoch").get<std::size_t>();
    report.early_stopped = j.at("early_stopped").get<bool>();
    if (j.contains("epoch_seconds")) report.epoch_seconds = j.at("epoch_seconds").get<std::vector<double>>();
    return report;
}

json metric_report_to_json(const metrics::MetricReport& report) {
    json j{{"model", report.model_name},
           {"split", report.split_name},
           {"n_samples", report.n_samples},
           {"mae", nullptr},
           {"mse", report.mse},
           {"kl", nullptr},
           {"kl_direction", nullptr}};
    if (report.mae) j["mae"] = *report.mae;
    if (report.kl) j["kl"] = *report.kl;
    if (report.kl_direction) j["kl_direction"] = metrics::direction_name(*report.kl_direction);
    return j;
}

metrics::MetricReport metric_report_from_json(const json& j) {
    metrics::MetricReport report;
    report.model_name = j.at("model").get<std::string>();
    report.split_name = j.at("split").get<std::string>();
    report.n_samples = j.at("n_samples").get<std::size_t>();
    report.mse = j.at("mse").get<double>();
    if (j.contains("mae") && !j.at("mae").is_null()) report.mae = j.at("mae").get<double>();
    if (j.contains("kl") && !j.at("kl").is_null()) report.kl = j.at("kl").get<double>();
    if (j.contains("kl_direction") && !j.at("kl_direction").is_null()) {
        report.kl_direction = metrics::parse_direction(j.at("kl_direction").get<std::string>());
    }
    return report;
}

} // namespace ltsf::io
