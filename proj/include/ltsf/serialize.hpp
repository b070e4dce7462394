#pragma once

#include "ltsf/metrics.hpp"
#include "ltsf/models.hpp"
#include "ltsf/training.hpp"

#include <json.hpp>

namespace ltsf::io {

using json = nlohmann::json;

inline constexpr int kParamsVersion = 1;
inline constexpr const char* kFlattenOrder = "time-major";

/// {"format": "ltsf-params", "version": 1, "kind", "lookback", "horizon",
///  "channels", "kernel", "anchor", "flatten_order", "blocks": [...]}.
/// Weights are row-major arrays of length horizon * lookback * channels.
json params_to_json(const models::ModelParams& params);
models::ModelParams params_from_json(const json& j);

json train_config_to_json(const training::TrainConfig& cfg);
training::TrainConfig train_config_from_json(const json& j);

/// `with_timing` adds the per-epoch wall clock.
json train_report_to_json(const training::TrainReport& report, bool with_timing = true);
training::TrainReport train_report_from_json(const json& j);

json metric_report_to_json(const metrics::MetricReport& report);
metrics::MetricReport metric_report_from_json(const json& j);

} // namespace ltsf::io
