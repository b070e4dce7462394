#include "ltsf/training.hpp"

#include "ltsf/metrics.hpp"

#include <chrono>
#include <numeric>

namespace ltsf::training {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw Error("train config: learning_rate must be positive");
    if (!(weight_decay >= 0.0)) throw Error("train config: weight_decay must be non-negative");
    if (batch_size < 1) throw Error("train config: batch_size must be at least 1");
    if (patience < 1) throw Error("train config: patience must be at least 1");
    if (max_epochs < 1) throw Error("train config: max_epochs must be at least 1");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
        throw Error("train config: betas must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) throw Error("train config: epsilon must be positive");
}

double mse_loss(const Matrix& pred, const Matrix& target) { return metrics::mse(pred, target); }

AdamState AdamState::zeros_like(const models::ModelParams& params) {
    AdamState state;
    for (const auto* block : models::affine_blocks(params)) {
        models::AffineMap zero{Matrix::Zero(block->weight.rows(), block->weight.cols()),
                               Vector::Zero(block->bias.size())};
        state.first.push_back(zero);
        state.second.push_back(std::move(zero));
    }
    return state;
}

namespace {

template <typename Param, typename Grad, typename Moment>
void update(Param& theta, const Grad& grad, Moment& m, Moment& v, const TrainConfig& cfg, double correction1,
            double correction2) {
    for (Index i = 0; i < theta.size(); ++i) {
        const double g = grad.data()[i] + cfg.weight_decay * theta.data()[i];
        double& mi = m.data()[i];
        double& vi = v.data()[i];
        mi = cfg.beta1 * mi + (1.0 - cfg.beta1) * g;
        vi = cfg.beta2 * vi + (1.0 - cfg.beta2) * g * g;
        const double m_hat = mi / correction1;
        const double v_hat = vi / correction2;
        theta.data()[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

bool same_shape(const models::AffineMap& a, const models::AffineMap& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() && a.bias.size() == b.bias.size();
}

} // namespace

void adam_step(models::ModelParams& params, const models::ModelParams& grads, AdamState& state,
               const TrainConfig& cfg) {
    auto blocks = models::affine_blocks(params);
    const auto grad_blocks = models::affine_blocks(grads);
    if (grad_blocks.size() != blocks.size() || state.first.size() != blocks.size() ||
        state.second.size() != blocks.size()) {
        throw ShapeError("adam_step: parameter, gradient and state block counts differ");
    }
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        if (!same_shape(*blocks[k], *grad_blocks[k]) || !same_shape(*blocks[k], state.first[k]) ||
            !same_shape(*blocks[k], state.second[k])) {
            throw ShapeError("adam_step: block " + std::to_string(k) + " shape mismatch");
        }
        if (!grad_blocks[k]->weight.allFinite() || !grad_blocks[k]->bias.allFinite()) {
            throw NumericError("adam_step: non-finite gradient in block " + std::to_string(k) + " at step " +
                               std::to_string(state.step + 1));
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(cfg.beta1, t);
    const double correction2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        update(blocks[k]->weight, grad_blocks[k]->weight, state.first[k].weight, state.second[k].weight, cfg,
               correction1, correction2);
        update(blocks[k]->bias, grad_blocks[k]->bias, state.first[k].bias, state.second[k].bias, cfg, correction1,
               correction2);
    }
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
    if (patience < 1) throw Error("early stopping: patience must be at least 1");
}

bool EarlyStopping::observe(double metric) {
    ++epoch_;
    if (metric < best_) {
        best_ = metric;
        best_epoch_ = epoch_;
        stale_ = 0;
        return true;
    }
    ++stale_;
    return false;
}

FitResult fit(const models::InitSpec& init, const data::WindowSource& train, const data::WindowSource& validation,
              const TrainConfig& cfg, const FitOptions& options) {
    cfg.validate();
    if (train.size() == 0) throw DataError("fit: no training windows");
    if (validation.size() == 0 && !options.validation_score) throw DataError("fit: no validation windows");
    const auto dims = train.dims();
    if (dims.lookback != init.lookback || dims.horizon != init.horizon || dims.channels != init.channels) {
        throw ShapeError("fit: model dimensions do not match the training windows");
    }

    models::ModelParams params = models::init_params(init);
    models::ModelParams best = params;
    AdamState state = AdamState::zeros_like(params);
    EarlyStopping stopper(cfg.patience);
    TrainReport report;

    std::vector<std::size_t> order(train.size());
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng(cfg.seed, epoch).shuffle(order);

        double loss_sum = 0.0;
        std::size_t loss_weight = 0;
        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const std::size_t count = std::min(cfg.batch_size, order.size() - first);
            const auto batch = train.gather(std::span<const std::size_t>(order).subspan(first, count));
            const auto step = models::model_grad(params, batch.inputs, batch.targets);
            if (!std::isfinite(step.loss)) {
                throw NumericError("fit: non-finite training loss at epoch " + std::to_string(epoch));
            }
            loss_sum += step.loss * static_cast<double>(count);
            loss_weight += count;
            adam_step(params, step.grad, state, cfg);
        }
        const double train_loss = loss_sum / static_cast<double>(loss_weight);

        const double val_mae =
            options.validation_score
                ? options.validation_score(params, epoch)
                : *metrics::evaluate_split(params, validation, std::string(models::kind_name(init.kind)), "validation")
                       .mae;
        if (!std::isfinite(val_mae)) throw NumericError("fit: non-finite validation MAE at epoch " + std::to_string(epoch));

        report.train_loss.push_back(train_loss);
        report.val_mae.push_back(val_mae);
        report.epoch_seconds.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count());
        if (stopper.observe(val_mae)) best = params;
        if (options.on_epoch_end) options.on_epoch_end(epoch, params);

        report.stop_epoch = epoch;
        if (stopper.should_stop()) {
            report.early_stopped = true;
            break;
        }
    }
    report.best_epoch = stopper.best_epoch();
    return {std::move(best), std::move(report)};
}

} // namespace ltsf::training
