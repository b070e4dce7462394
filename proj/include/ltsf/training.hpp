#pragma once

#include "ltsf/dataio.hpp"
#include "ltsf/models.hpp"

#include <functional>
#include <optional>

namespace ltsf::training {

struct TrainConfig {
    double learning_rate = 1e-4;
    double weight_decay = 1e-4;
    std::size_t batch_size = 32;
    std::size_t patience = 3;
    std::size_t max_epochs = 50;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    /// Throws Error on out-of-range fields.
    void validate() const;
};

struct TrainReport {
    std::vector<double> train_loss;    // mean mini-batch MSE per epoch, normalized units
    std::vector<double> val_mae;       // per epoch
    std::vector<double> epoch_seconds; // wall clock per epoch
    std::size_t best_epoch = 0;        // 1-based
    std::size_t stop_epoch = 0;        // 1-based, last epoch run
    bool early_stopped = false;

    std::size_t epochs() const { return val_mae.size(); }
    double best_val_mae() const { return val_mae.at(best_epoch - 1); }
};

/// Mean squared error over all elements.
double mse_loss(const Matrix& pred, const Matrix& target);

/// First/second moment estimates for every affine block, plus the step count.
struct AdamState {
    std::vector<models::AffineMap> first;
    std::vector<models::AffineMap> second;
    std::uint64_t step = 0;

    static AdamState zeros_like(const models::ModelParams& params);
};

/// One Adam update with bias correction. Weight decay is coupled: it is added
/// to the gradient as weight_decay * param before the moment updates.
void adam_step(models::ModelParams& params, const models::ModelParams& grads, AdamState& state,
               const TrainConfig& cfg);

/// Patience bookkeeping on a metric that should decrease.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience);

    /// Records the metric for the next epoch. Returns true if this epoch is
    /// the new best.
    bool observe(double metric);
    bool should_stop() const { return stale_ >= patience_; }

    std::size_t best_epoch() const { return best_epoch_; }
    double best_metric() const { return best_; }
    std::size_t epochs_seen() const { return epoch_; }

private:
    std::size_t patience_;
    std::size_t epoch_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t stale_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

struct FitResult {
    models::ModelParams params; // snapshot from the best epoch
    TrainReport report;
};

struct FitOptions {
    /// Replaces the validation-MAE pass; receives the current parameters and
    /// the 1-based epoch.
    std::function<double(const models::ModelParams&, std::size_t)> validation_score;
    /// Called after each epoch with the parameters at the end of that epoch.
    std::function<void(std::size_t, const models::ModelParams&)> on_epoch_end;
};

/// Mini-batch Adam on MSE with early stopping on validation MAE.
///
/// Each epoch visits the training windows in an order drawn from a generator
/// seeded by (cfg.seed, epoch), then scores the validation windows. Training
/// stops once `patience` consecutive epochs fail to improve validation MAE or
/// after `max_epochs`; the returned parameters are those of the best epoch.
FitResult fit(const models::InitSpec& init, const data::WindowSource& train, const data::WindowSource& validation,
              const TrainConfig& cfg, const FitOptions& options = {});

} // namespace ltsf::training
