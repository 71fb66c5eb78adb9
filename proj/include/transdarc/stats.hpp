#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "transdarc/dataset.hpp"
#include "transdarc/parallel.hpp"

namespace transdarc {

enum class CovMode { Diagonal, Full };

/// Per-class Gaussian summary: sample count, mean and unbiased covariance.
///
/// `cov` holds `dim` variances in Diagonal mode, or a dim x dim row-major
/// matrix in Full mode. With a single sample the covariance is undefined;
/// it is then stored as zeros and `cov_defined` is false.
struct ClassStats {
    std::uint32_t class_id = 0;
    std::size_t count = 0;
    std::vector<double> mean;
    CovMode mode = CovMode::Diagonal;
    std::vector<double> cov;
    bool cov_defined = false;

    std::size_t dim() const noexcept { return mean.size(); }

    double covariance(std::size_t i, std::size_t j) const {
        if (mode == CovMode::Full) return cov[i * dim() + j];
        return i == j ? cov[i] : 0.0;
    }
};

namespace detail {

// Welford's update in 64-bit; one pass over the rows of a single class.
inline ClassStats accumulate_class(const EmbeddingDataset& d, std::uint32_t cls, const std::vector<std::size_t>& rows,
                                   CovMode mode) {
    const std::size_t dim = d.dim;
    ClassStats s;
    s.class_id = cls;
    s.mode = mode;
    s.mean.assign(dim, 0.0);
    s.cov.assign(mode == CovMode::Full ? dim * dim : dim, 0.0);

    std::vector<double> before(dim), after(dim);
    for (std::size_t idx : rows) {
        const auto x = d.row(idx);
        ++s.count;
        const double inv = 1.0 / static_cast<double>(s.count);
        for (std::size_t j = 0; j < dim; ++j) {
            before[j] = x[j] - s.mean[j];
            s.mean[j] += before[j] * inv;
            after[j] = x[j] - s.mean[j];
        }
        if (mode == CovMode::Diagonal) {
            for (std::size_t j = 0; j < dim; ++j) s.cov[j] += before[j] * after[j];
        } else {
            for (std::size_t a = 0; a < dim; ++a)
                for (std::size_t b = 0; b < dim; ++b) s.cov[a * dim + b] += before[a] * after[b];
        }
    }
    s.cov_defined = s.count >= 2;
    if (s.cov_defined) {
        const double denom = static_cast<double>(s.count - 1);
        for (auto& c : s.cov) c /= denom;
        if (mode == CovMode::Diagonal)
            for (auto& c : s.cov) c = std::max(c, 0.0);
    } else {
        std::fill(s.cov.begin(), s.cov.end(), 0.0);
    }
    return s;
}

}  // namespace detail

/// One entry per class that has at least one sample, ordered by class id.
/// Classes are processed in parallel; each class is a sequential pass, so the
/// result does not depend on the thread count.
inline std::vector<ClassStats> compute_class_stats(const EmbeddingDataset& d, CovMode mode = CovMode::Diagonal) {
    const auto groups = rows_by_class(d);
    std::vector<ClassStats> all(groups.size());
    parallel_for(groups.size(), [&](std::size_t c) {
        if (!groups[c].empty()) all[c] = detail::accumulate_class(d, static_cast<std::uint32_t>(c), groups[c], mode);
    });
    std::vector<ClassStats> out;
    for (std::size_t c = 0; c < groups.size(); ++c)
        if (!groups[c].empty()) out.push_back(std::move(all[c]));
    return out;
}

/// Looks up the statistics of `cls`; throws if the class had no samples.
inline const ClassStats& stats_for(const std::vector<ClassStats>& stats, std::uint32_t cls) {
    auto it = std::lower_bound(stats.begin(), stats.end(), cls,
                               [](const ClassStats& s, std::uint32_t id) { return s.class_id < id; });
    if (it == stats.end() || it->class_id != cls)
        throw ValidationError("no statistics for class " + std::to_string(cls));
    return *it;
}

/// Split of the classes present in a training set into frequent and
/// infrequent ones. A class is common iff its count is strictly above `eta`.
struct FrequencyPartition {
    std::size_t eta = 0;
    std::vector<std::uint32_t> common_ids;
    std::vector<std::uint32_t> rare_ids;

    bool is_common(std::uint32_t id) const { return std::binary_search(common_ids.begin(), common_ids.end(), id); }
    bool is_rare(std::uint32_t id) const { return std::binary_search(rare_ids.begin(), rare_ids.end(), id); }
};

inline FrequencyPartition partition_by_counts(const std::vector<std::size_t>& counts, std::size_t eta) {
    FrequencyPartition p;
    p.eta = eta;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) continue;
        (counts[c] > eta ? p.common_ids : p.rare_ids).push_back(static_cast<std::uint32_t>(c));
    }
    return p;
}

inline FrequencyPartition partition_by_frequency(const EmbeddingDataset& d, std::size_t eta) {
    return partition_by_counts(class_counts(d), eta);
}

}  // namespace transdarc
