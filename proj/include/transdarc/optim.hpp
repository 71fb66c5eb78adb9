#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "transdarc/error.hpp"

namespace transdarc {

/// Hyperparameters of the head training loop. Defaults follow the
/// fine-grained setting; k/N_rare/N_com live in CalibrationConfig.
struct TrainConfig {
    std::size_t n_max = 1200;  // main-loop epochs
    double lr_max = 1e-4;
    double lr_min = 1e-6;
    std::size_t batch_size = 256;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-2;
    std::size_t n_mine = 30;  // mining period, in main-loop epochs
    double delta = 1.2;       // hard if loss > delta * mean loss
    std::size_t n_hard = 1;   // epochs on the hard subset per mining event
    std::size_t hidden = 0;   // 0 selects dim / 2
    std::uint64_t seed = 0;

    void validate() const {
        if (delta <= 0) throw ConfigError("train.delta", "must be > 0");
        if (n_mine < 1) throw ConfigError("train.n_mine", "must be >= 1");
        if (!(lr_min > 0)) throw ConfigError("train.lr_min", "must be > 0");
        if (!(lr_min <= lr_max)) throw ConfigError("train.lr_max", "must be >= lr_min");
        if (batch_size < 1) throw ConfigError("train.batch_size", "must be >= 1");
        if (!(beta1 >= 0 && beta1 < 1)) throw ConfigError("train.beta1", "must lie in [0, 1)");
        if (!(beta2 >= 0 && beta2 < 1)) throw ConfigError("train.beta2", "must lie in [0, 1)");
        if (!(eps > 0)) throw ConfigError("train.eps", "must be > 0");
        if (!(weight_decay >= 0)) throw ConfigError("train.weight_decay", "must be >= 0");
    }
};

/// lr_min + (lr_max - lr_min) * (1 + cos(pi * epoch / n_max)) / 2
inline double cosine_lr(std::size_t epoch, const TrainConfig& c) {
    if (c.n_max == 0 || epoch == 0) return c.lr_max;
    if (epoch >= c.n_max) return c.lr_min;
    const double t = static_cast<double>(epoch) / static_cast<double>(c.n_max);
    return c.lr_min + 0.5 * (c.lr_max - c.lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

/// First/second moment accumulators for decoupled-weight-decay Adam.
struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    explicit OptimizerState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One AdamW update in place. `decay_mask[i]` selects the entries that get
/// the decoupled decay p -= lr * weight_decay * p (weights, not biases).
inline void optimizer_step(std::span<double> params, std::span<const double> grads, const std::vector<bool>& decay_mask,
                           OptimizerState& state, double lr, const TrainConfig& c) {
    if (grads.size() != params.size() || state.m.size() != params.size() || decay_mask.size() != params.size())
        throw ValidationError("optimizer_step: parameter, gradient and state sizes differ");
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(c.beta1, t);
    const double bias2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (decay_mask[i]) params[i] -= lr * c.weight_decay * params[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * grads[i];
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bias1;
        const double v_hat = state.v[i] / bias2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
}

}  // namespace transdarc
