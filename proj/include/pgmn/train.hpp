#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgmn/model.hpp"
#include "pgmn/numkit.hpp"

namespace pgmn {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    double eta = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    std::size_t max_epochs = 2000;
    // 0 accumulates the whole epoch and updates once; otherwise the minibatch size.
    std::size_t batch_size = 0;
    std::size_t early_stop_patience = 20;
    std::uint64_t seed = 0;
    // Stop as soon as the epoch's training MSE reaches this value; 0 disables.
    double train_mse_goal = 0.0;

    void validate() const
    {
        if (!(eta > 0.0) || !std::isfinite(eta)) {
            throw std::invalid_argument("TrainConfig: learning rate must be positive");
        }
        if (max_epochs < 1) {
            throw std::invalid_argument("TrainConfig: max_epochs must be >= 1");
        }
        if (early_stop_patience < 1) {
            throw std::invalid_argument("TrainConfig: early_stop_patience must be >= 1");
        }
    }
};

struct TrainHistory {
    // Mean per-sample loss over the epoch, measured before each update is applied.
    std::vector<double> train_mse;
    // Validation MSE after the epoch's updates; empty when no validation split.
    std::vector<double> val_mse;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
};

struct TrainResult {
    PgmnParams params;
    TrainHistory history;
};

inline double mean_loss(std::span<const MaskedSample> samples, const PgmnParams& p)
{
    if (samples.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& s : samples) {
        total += sample_loss(s, p);
    }
    return total / static_cast<double>(samples.size());
}

/// Summed-loss gradient over a set of samples (mean-scaled when `average`).
inline std::pair<double, Gradients> batch_gradients(std::span<const MaskedSample> batch, const PgmnParams& p,
                                                    bool average = true)
{
    Gradients grads(zeros_like, p);
    const double scale = average ? 1.0 / static_cast<double>(batch.size()) : 1.0;
    double total = 0.0;
    for (const auto& s : batch) {
        total += accumulate_gradients(forward(s, p), s, p, grads, scale);
    }
    return {total, std::move(grads)};
}

/// Gradient training with accumulation per batch unit. With batch_size 0 every
/// sample is visited, gradients are summed, and one update is applied per
/// epoch. Samples without actuals are supervised by their physics forecast.
/// When a validation set is given, the parameters with the lowest validation
/// MSE are returned.
inline TrainResult train(std::span<const MaskedSample> dataset, PgmnParams params, const TrainConfig& cfg,
                         std::span<const MaskedSample> validation = {})
{
    cfg.validate();
    if (dataset.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    std::vector<MaskedSample> data(dataset.begin(), dataset.end());
    for (auto& s : data) {
        if (!s.y) {
            if (!s.y_is_proxy) {
                throw std::invalid_argument("train: sample without actual and without proxy flag");
            }
            s.y = s.x_e;
        }
    }

    AdamState adam(cfg.eta);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t unit = cfg.batch_size == 0 ? data.size() : std::min(cfg.batch_size, data.size());

    TrainResult result{params, {}};
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    std::vector<MaskedSample> batch;
    batch.reserve(unit);

    const auto apply = [&](const Gradients& g) {
        if (cfg.optimizer == OptimizerKind::adam) {
            adam_step(params, g, adam);
        } else {
            sgd_step(params, g, cfg.eta);
        }
    };

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        if (cfg.batch_size != 0) {
            std::shuffle(order.begin(), order.end(), rng);
        }
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += unit) {
            const std::size_t stop = std::min(start + unit, order.size());
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(data[order[i]]);
            }
            auto [loss, grads] = batch_gradients(batch, params, cfg.batch_size != 0);
            if (!std::isfinite(loss)) {
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch));
            }
            epoch_loss += loss;
            apply(grads);
        }
        const double train_mse = epoch_loss / static_cast<double>(data.size());
        result.history.train_mse.push_back(train_mse);

        if (!validation.empty()) {
            const double val = mean_loss(validation, params);
            if (!std::isfinite(val)) {
                throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch));
            }
            result.history.val_mse.push_back(val);
            if (val < best_val) {
                best_val = val;
                since_best = 0;
                result.params = params;
                result.history.best_epoch = epoch;
            } else if (++since_best >= cfg.early_stop_patience) {
                result.history.stopped_early = true;
                return result;
            }
        } else {
            result.params = params;
            result.history.best_epoch = epoch;
        }
        if (cfg.train_mse_goal > 0.0 && train_mse <= cfg.train_mse_goal) {
            break;
        }
    }
    return result;
}

} // namespace pgmn
