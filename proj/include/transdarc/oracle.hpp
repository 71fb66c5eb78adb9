#pragma once

// Brute-force reference implementations. They deliberately share no code
// with the production paths they are compared against.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "transdarc/dataset.hpp"

namespace transdarc::oracle {

struct Moments {
    std::size_t count = 0;
    std::vector<double> mean;
    std::vector<double> cov;  // dim x dim, row-major
};

/// Two-pass mean and unbiased covariance per present class.
inline std::map<std::uint32_t, Moments> oracle_stats(const EmbeddingDataset& d) {
    std::map<std::uint32_t, Moments> out;
    const std::size_t dim = d.dim;
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto& m = out[d.labels[i]];
        if (m.mean.empty()) m.mean.assign(dim, 0.0);
        ++m.count;
        for (std::size_t j = 0; j < dim; ++j) m.mean[j] += d.embeddings[i * dim + j];
    }
    for (auto& [cls, m] : out)
        for (auto& v : m.mean) v /= static_cast<double>(m.count);
    for (auto& [cls, m] : out) m.cov.assign(dim * dim, 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        auto& m = out[d.labels[i]];
        for (std::size_t a = 0; a < dim; ++a) {
            const double da = d.embeddings[i * dim + a] - m.mean[a];
            for (std::size_t b = 0; b < dim; ++b) m.cov[a * dim + b] += da * (d.embeddings[i * dim + b] - m.mean[b]);
        }
    }
    for (auto& [cls, m] : out)
        for (auto& v : m.cov) v = m.count > 1 ? v / static_cast<double>(m.count - 1) : 0.0;
    return out;
}

/// Sorts every candidate by (distance, id) and keeps the first k.
inline std::vector<std::uint32_t> oracle_topk(std::span<const double> x,
                                              const std::map<std::uint32_t, std::vector<double>>& means,
                                              const std::vector<std::uint32_t>& candidates, std::size_t k) {
    struct Entry {
        double dist;
        std::uint32_t id;
    };
    std::vector<Entry> all;
    for (auto id : candidates) {
        const auto& mu = means.at(id);
        double sq = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) sq += (mu[j] - x[j]) * (mu[j] - x[j]);
        all.push_back({std::sqrt(sq), id});
    }
    std::sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        return a.dist != b.dist ? a.dist < b.dist : a.id < b.id;
    });
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].id);
    return out;
}

/// Linear scan for losses strictly above delta times their mean.
inline std::vector<std::size_t> oracle_mine(const std::vector<double>& losses, double delta) {
    std::vector<std::size_t> out;
    if (losses.empty()) return out;
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(losses.size());
    for (std::size_t i = 0; i < losses.size(); ++i)
        if (losses[i] > delta * mean) out.push_back(i);
    return out;
}

}  // namespace transdarc::oracle
