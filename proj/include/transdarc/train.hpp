#pragma once

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "transdarc/calibration.hpp"
#include "transdarc/dataset.hpp"
#include "transdarc/evaluation.hpp"
#include "transdarc/head.hpp"
#include "transdarc/optim.hpp"
#include "transdarc/parallel.hpp"

namespace transdarc {

/// Cross-entropy of every row under frozen parameters.
inline std::vector<double> sample_losses(const HeadParams& p, const EmbeddingDataset& d) {
    std::vector<double> out(d.size());
    constexpr std::size_t kChunk = 256;
    parallel_for((d.size() + kChunk - 1) / kChunk, [&](std::size_t chunk) {
        ForwardTrace t;
        const std::size_t end = std::min(d.size(), (chunk + 1) * kChunk);
        for (std::size_t i = chunk * kChunk; i < end; ++i) {
            detail::forward_into(p, d.row(i), t);
            out[i] = detail::cross_entropy(t.logits, d.labels[i]);
        }
    });
    return out;
}

/// {i : loss_i > delta * mean(loss)}, ascending.
inline std::vector<std::size_t> mine_hard_indices(std::span<const double> losses, double delta) {
    if (losses.empty()) return {};
    double sum = 0.0;
    for (double l : losses) sum += l;
    const double threshold = delta * (sum / static_cast<double>(losses.size()));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] > threshold) out.push_back(i);
    return out;
}

inline std::vector<std::size_t> mine_hard_samples(const HeadParams& p, const EmbeddingDataset& d, double delta) {
    if (d.size() == 0) throw ValidationError("mine_hard_samples: empty training set");
    return mine_hard_indices(sample_losses(p, d), delta);
}

struct EpochMetrics {
    std::size_t epoch = 0;
    double lr = 0.0;
    double mean_loss = 0.0;
    double balanced_accuracy = 0.0;  // of the predictions made while training the epoch
    std::size_t n_hard_mined = 0;

    bool operator==(const EpochMetrics&) const = default;
};

struct TrainResult {
    HeadParams params;
    std::vector<EpochMetrics> log;
};

namespace detail {

// Rows of one batch are split into fixed-size chunks; chunk gradients are
// reduced in chunk order, so the sum never depends on the thread count.
inline constexpr std::size_t kGradChunk = 32;

struct EpochOutcome {
    double mean_loss = 0.0;
    double balanced_accuracy = 0.0;
};

class EpochRunner {
public:
    EpochRunner(HeadParams& params, const EmbeddingDataset& data, const TrainConfig& config)
        : params_(params), data_(data), config_(config), state_(params.values().size()),
          mask_(params.weight_mask()) {}

    EpochOutcome run(std::vector<std::size_t> order, double lr, Rng& rng) {
        std::shuffle(order.begin(), order.end(), rng);
        const std::size_t n = order.size();
        std::vector<double> losses(n);
        std::vector<std::uint32_t> preds(n), labels(n);
        for (std::size_t start = 0; start < n; start += config_.batch_size) {
            const std::size_t end = std::min(n, start + config_.batch_size);
            step(std::span<const std::size_t>(order).subspan(start, end - start), lr,
                 std::span<double>(losses).subspan(start, end - start),
                 std::span<std::uint32_t>(preds).subspan(start, end - start));
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += losses[i];
            labels[i] = data_.labels[order[i]];
        }
        return {total / static_cast<double>(n), balanced_accuracy(preds, labels, data_.n_classes())};
    }

private:
    void step(std::span<const std::size_t> batch, double lr, std::span<double> losses,
              std::span<std::uint32_t> preds) {
        const std::size_t n_chunks = (batch.size() + kGradChunk - 1) / kGradChunk;
        if (grads_.size() < n_chunks)
            grads_.resize(n_chunks, HeadParams(params_.dim(), params_.hidden(), params_.n_classes()));
        const double scale = 1.0 / static_cast<double>(batch.size());
        parallel_for(n_chunks, [&](std::size_t c) {
            auto& g = grads_[c];
            std::fill(g.values().begin(), g.values().end(), 0.0);
            ForwardTrace t;
            std::vector<double> probs, scratch;
            const std::size_t end = std::min(batch.size(), (c + 1) * kGradChunk);
            for (std::size_t b = c * kGradChunk; b < end; ++b) {
                const std::size_t row = batch[b];
                losses[b] = accumulate_sample_grad(params_, data_.row(row), data_.labels[row], scale, g, t, probs,
                                                   scratch);
                preds[b] = argmax(t.logits);
            }
        });
        auto total = grads_[0].values();
        for (std::size_t c = 1; c < n_chunks; ++c) {
            const auto part = grads_[c].values();
            for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];
        }
        optimizer_step(params_.values(), total, mask_, state_, lr, config_);
    }

    HeadParams& params_;
    const EmbeddingDataset& data_;
    const TrainConfig& config_;
    OptimizerState state_;
    std::vector<bool> mask_;
    std::vector<HeadParams> grads_;
};

}  // namespace detail

/// Trains the attention head on a (calibrated) training set.
///
/// Runs n_max shuffled mini-batch epochs under the cosine schedule. After
/// every n_mine-th epoch the rows with loss above delta times the mean loss
/// are mined and trained on for n_hard extra epochs at the current rate;
/// those extra epochs do not advance the schedule. One log entry per
/// main-loop epoch.
inline TrainResult train(const EmbeddingDataset& set, const TrainConfig& config) {
    config.validate();
    if (set.size() == 0) throw ConfigError("train", "training set is empty");
    validate(set);
    if (set.n_classes() < 2) throw ConfigError("train", "need at least two classes");

    const std::size_t hidden = config.hidden ? config.hidden : default_hidden_width(set.dim);
    TrainResult result{init_head(set.dim, hidden, set.n_classes(), config.seed), {}};
    if (config.n_max == 0) return result;

    Rng shuffle_rng = derive_rng(config.seed, {tag(StreamTag::Shuffle)});
    detail::EpochRunner runner(result.params, set, config);
    std::vector<std::size_t> all(set.size());
    std::iota(all.begin(), all.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= config.n_max; ++epoch) {
        const double lr = cosine_lr(epoch - 1, config);
        const auto outcome = runner.run(all, lr, shuffle_rng);
        EpochMetrics m{epoch, lr, outcome.mean_loss, outcome.balanced_accuracy, 0};
        if (epoch % config.n_mine == 0) {
            const auto hard = mine_hard_samples(result.params, set, config.delta);
            m.n_hard_mined = hard.size();
            if (!hard.empty())
                for (std::size_t e = 0; e < config.n_hard; ++e) runner.run(hard, lr, shuffle_rng);
        }
        result.log.push_back(m);
    }
    return result;
}

inline TrainResult train(const CalibratedSet& set, const TrainConfig& config) { return train(set.rows, config); }

inline std::string metrics_csv(const std::vector<EpochMetrics>& log) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "epoch,lr,mean_loss,balanced_accuracy,n_hard_mined\n";
    for (const auto& m : log)
        os << m.epoch << ',' << m.lr << ',' << m.mean_loss << ',' << m.balanced_accuracy << ',' << m.n_hard_mined
           << '\n';
    return os.str();
}

}  // namespace transdarc
