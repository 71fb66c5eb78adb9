#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "transdarc/dataset.hpp"
#include "transdarc/log.hpp"
#include "transdarc/parallel.hpp"
#include "transdarc/rng.hpp"
#include "transdarc/stats.hpp"

namespace transdarc {

/// Knobs of the latent-space calibration. Together with the two input views
/// they fully determine the generated rows.
struct CalibrationConfig {
    std::size_t eta = 400;    // classes with more than eta samples are common
    std::size_t k = 2;        // nearest common centers considered per anchor
    std::size_t n_rare = 100; // generated rows per rare class and view
    std::size_t n_com = 50;   // generated rows per common class and view
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 1) throw ConfigError("calibration.k", "must be >= 1");
    }
};

enum class CenterKind { RareCommon, SelfAugment };

/// The k common classes whose means are closest to an anchor, nearest first.
struct CenterSet {
    std::vector<std::uint32_t> center_ids;
    CenterKind kind = CenterKind::RareCommon;
};

/// Euclidean distance from `x` to every common mean, then the k smallest;
/// equal distances are ordered by class id.
inline CenterSet topk_common_centers(std::span<const double> x, const std::vector<ClassStats>& stats,
                                     const std::vector<std::uint32_t>& common_ids, std::size_t k,
                                     CenterKind kind = CenterKind::RareCommon) {
    if (k > common_ids.size())
        throw ConfigError("calibration.k", "k=" + std::to_string(k) + " exceeds the number of common classes (" +
                                               std::to_string(common_ids.size()) + ")");
    std::vector<std::pair<double, std::uint32_t>> ranked;
    ranked.reserve(common_ids.size());
    for (auto id : common_ids) {
        const auto& mu = stats_for(stats, id).mean;
        if (mu.size() != x.size()) throw ValidationError("anchor and class mean differ in dimension");
        double sq = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double diff = mu[j] - x[j];
            sq += diff * diff;
        }
        ranked.emplace_back(std::sqrt(sq), id);
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
    CenterSet out;
    out.kind = kind;
    out.center_ids.reserve(k);
    for (std::size_t i = 0; i < k; ++i) out.center_ids.push_back(ranked[i].second);
    return out;
}

inline CenterSet topk_common_centers(std::span<const float> x, const std::vector<ClassStats>& stats,
                                     const std::vector<std::uint32_t>& common_ids, std::size_t k,
                                     CenterKind kind = CenterKind::RareCommon) {
    std::vector<double> xd(x.begin(), x.end());
    return topk_common_centers(std::span<const double>(xd), stats, common_ids, k, kind);
}

inline void clamp_omega(std::span<double> raw) {
    for (auto& w : raw) w = std::clamp(w, -1.0, 1.0);
}

/// Per-channel standard Gaussian draws clamped to [-1, 1].
inline std::vector<double> sample_omega(std::size_t dim, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> omega(dim);
    for (auto& w : omega) w = gauss(rng);
    clamp_omega(omega);
    return omega;
}

namespace detail {

// Rounding may leave a value marginally past the bound |out - x| <= |mu - x|;
// walk it back toward x one ulp at a time.
template <typename T>
T pull_within_bound(T out, double x, double mu) {
    const double limit = std::abs(mu - x);
    while (std::abs(static_cast<double>(out) - x) > limit) out = std::nextafter(out, static_cast<T>(x));
    return out;
}

}  // namespace detail

/// x + omega * (mu - x), channel-wise. omega = 0 returns x and omega = 1
/// returns mu exactly; negative omega moves away from mu.
inline std::vector<double> calibrate_sample(std::span<const double> x, std::span<const double> mu,
                                            std::span<const double> omega) {
    if (x.size() != mu.size() || x.size() != omega.size())
        throw ValidationError("calibrate_sample: dimension mismatch (x " + std::to_string(x.size()) + ", mu " +
                              std::to_string(mu.size()) + ", omega " + std::to_string(omega.size()) + ")");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j)
        out[j] = detail::pull_within_bound(std::lerp(x[j], mu[j], omega[j]), x[j], mu[j]);
    return out;
}

enum class Provenance : std::uint8_t {
    OriginalPlain,
    OriginalAug,
    GeneratedRarePlain,
    GeneratedRareAug,
    GeneratedCommonPlain,
    GeneratedCommonAug,
};

inline const char* to_string(Provenance p) {
    switch (p) {
        case Provenance::OriginalPlain: return "original_plain";
        case Provenance::OriginalAug: return "original_aug";
        case Provenance::GeneratedRarePlain: return "generated_rare_plain";
        case Provenance::GeneratedRareAug: return "generated_rare_aug";
        case Provenance::GeneratedCommonPlain: return "generated_common_plain";
        case Provenance::GeneratedCommonAug: return "generated_common_aug";
    }
    return "unknown";
}

/// One synthetic training row plus what is needed to replay it.
struct GeneratedRow {
    std::vector<float> features;
    std::uint32_t label = 0;
    Provenance tag = Provenance::GeneratedRarePlain;
    View view = View::Plain;
    std::size_t anchor_row = 0;  // row index inside the view's dataset
    std::uint32_t center_class = 0;
    std::size_t replicate = 0;
};

namespace detail {

inline void require_views_compatible(const EmbeddingDataset& plain, const EmbeddingDataset& aug) {
    require_same_class_table(plain, aug, "plain view", "augmented view");
    if (class_counts(plain) != class_counts(aug))
        throw ValidationError("plain and augmented views must hold the same number of rows per class");
}

// Shared driver for both calibration flavours. For every class in `classes`
// and both views, emits `per_class` rows. Each (class, view, replicate) draws
// from its own derived stream, so the output is independent of scheduling.
inline std::vector<GeneratedRow> generate_rows(const EmbeddingDataset& plain, const EmbeddingDataset& aug,
                                               const std::vector<ClassStats>& stats_plain,
                                               const std::vector<ClassStats>& stats_aug,
                                               const FrequencyPartition& partition,
                                               const std::vector<std::uint32_t>& classes, std::size_t per_class,
                                               const CalibrationConfig& config, CenterKind kind) {
    if (per_class == 0 || classes.empty()) return {};
    config.validate();
    if (config.k > partition.common_ids.size())
        throw ConfigError("calibration.k", "k=" + std::to_string(config.k) +
                                               " exceeds the number of common classes (" +
                                               std::to_string(partition.common_ids.size()) + ")");

    const bool rare = kind == CenterKind::RareCommon;
    const auto stream = tag(rare ? StreamTag::RareCommon : StreamTag::SelfAugment);
    const EmbeddingDataset* views[2] = {&plain, &aug};
    const std::vector<ClassStats>* view_stats[2] = {&stats_plain, &stats_aug};
    const std::vector<std::vector<std::size_t>> members[2] = {rows_by_class(plain), rows_by_class(aug)};

    // (class, view) jobs in canonical order; each owns a contiguous block.
    const std::size_t n_jobs = classes.size() * 2;
    std::vector<std::vector<GeneratedRow>> blocks(n_jobs);
    parallel_for(n_jobs, [&](std::size_t job) {
        const std::uint32_t cls = classes[job / 2];
        const std::size_t v = job % 2;
        const auto& pool = members[v].at(cls);
        if (pool.empty()) {
            log_warning("class " + std::to_string(cls) + " has no samples in the " +
                        to_string(static_cast<View>(v)) + " view; skipped");
            return;
        }
        const auto& ds = *views[v];
        auto& block = blocks[job];
        block.reserve(per_class);
        std::vector<double> anchor(ds.dim);
        for (std::size_t rep = 0; rep < per_class; ++rep) {
            Rng rng = derive_rng(config.seed, {stream, cls, v, rep});
            const std::size_t anchor_row = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
            const auto x = ds.row(anchor_row);
            std::copy(x.begin(), x.end(), anchor.begin());
            const auto centers = topk_common_centers(std::span<const double>(anchor), *view_stats[v],
                                                     partition.common_ids, config.k, kind);
            const auto center =
                centers.center_ids[std::uniform_int_distribution<std::size_t>(0, config.k - 1)(rng)];
            const auto omega = sample_omega(ds.dim, rng);
            const auto& mu = stats_for(*view_stats[v], center).mean;
            const auto gen = calibrate_sample(anchor, mu, omega);

            GeneratedRow row;
            row.features.resize(ds.dim);
            for (std::size_t j = 0; j < ds.dim; ++j)
                row.features[j] = pull_within_bound(static_cast<float>(gen[j]), anchor[j], mu[j]);
            row.label = cls;
            row.view = static_cast<View>(v);
            row.tag = rare ? (v == 0 ? Provenance::GeneratedRarePlain : Provenance::GeneratedRareAug)
                           : (v == 0 ? Provenance::GeneratedCommonPlain : Provenance::GeneratedCommonAug);
            row.anchor_row = anchor_row;
            row.center_class = center;
            row.replicate = rep;
            block.push_back(std::move(row));
        }
    });

    std::vector<GeneratedRow> out;
    out.reserve(n_jobs * per_class);
    for (auto& block : blocks)
        for (auto& row : block) out.push_back(std::move(row));
    return out;
}

}  // namespace detail

/// Rare-common calibration: rare-class anchors are pulled toward (or pushed
/// away from) one of their k nearest common-class means. Rows come out
/// ordered by (class, view, replicate).
inline std::vector<GeneratedRow> generate_rare(const EmbeddingDataset& plain, const EmbeddingDataset& aug,
                                               const std::vector<ClassStats>& stats_plain,
                                               const std::vector<ClassStats>& stats_aug,
                                               const FrequencyPartition& partition, const CalibrationConfig& config) {
    return detail::generate_rows(plain, aug, stats_plain, stats_aug, partition, partition.rare_ids, config.n_rare,
                                 config, CenterKind::RareCommon);
}

/// Self-augment calibration over common classes; the neighbour set may
/// include the anchor's own class.
inline std::vector<GeneratedRow> generate_common(const EmbeddingDataset& plain, const EmbeddingDataset& aug,
                                                 const std::vector<ClassStats>& stats_plain,
                                                 const std::vector<ClassStats>& stats_aug,
                                                 const FrequencyPartition& partition,
                                                 const CalibrationConfig& config) {
    return detail::generate_rows(plain, aug, stats_plain, stats_aug, partition, partition.common_ids, config.n_com,
                                 config, CenterKind::SelfAugment);
}

struct ProvenanceRecord {
    Provenance tag = Provenance::OriginalPlain;
    std::int64_t anchor_index = -1;  // row of the anchor inside the calibrated set
    std::int64_t center_class = -1;
};

/// The training set after calibration: both original views followed by the
/// generated rows, one provenance record per row.
struct CalibratedSet {
    EmbeddingDataset rows;
    std::vector<ProvenanceRecord> provenance;
    FrequencyPartition partition;

    std::size_t size() const noexcept { return rows.size(); }
};

inline std::size_t expected_calibrated_size(const std::vector<std::size_t>& counts, const FrequencyPartition& p,
                                            const CalibrationConfig& config) {
    std::size_t total = 0;
    for (auto c : counts) total += 2 * c;
    total += 2 * config.n_rare * p.rare_ids.size();
    total += 2 * config.n_com * p.common_ids.size();
    return total;
}

/// Assembles the calibrated training set. The two views must be row-paired
/// renderings of the same clips (same class table and per-class counts).
inline CalibratedSet build_calibrated_set(const EmbeddingDataset& plain, const EmbeddingDataset& aug,
                                          const CalibrationConfig& config) {
    config.validate();
    validate(plain);
    validate(aug);
    detail::require_views_compatible(plain, aug);

    CalibratedSet set;
    set.partition = partition_by_frequency(plain, config.eta);

    std::vector<GeneratedRow> rare, common;
    if ((config.n_rare > 0 && !set.partition.rare_ids.empty()) ||
        (config.n_com > 0 && !set.partition.common_ids.empty())) {
        const auto stats_plain = compute_class_stats(plain);
        const auto stats_aug = compute_class_stats(aug);
        rare = generate_rare(plain, aug, stats_plain, stats_aug, set.partition, config);
        common = generate_common(plain, aug, stats_plain, stats_aug, set.partition, config);
    }

    auto& out = set.rows;
    out.dim = plain.dim;
    out.class_names = plain.class_names;
    out.view = View::Plain;
    out.meta = {{"split", "train_calibrated"}};
    if (auto m = plain.meta_or("modality"); !m.empty()) out.meta["modality"] = m;

    const std::size_t total = plain.size() + aug.size() + rare.size() + common.size();
    out.embeddings.reserve(total * out.dim);
    out.labels.reserve(total);
    set.provenance.reserve(total);

    out.embeddings = plain.embeddings;
    out.labels = plain.labels;
    set.provenance.assign(plain.size(), {Provenance::OriginalPlain, -1, -1});
    out.embeddings.insert(out.embeddings.end(), aug.embeddings.begin(), aug.embeddings.end());
    out.labels.insert(out.labels.end(), aug.labels.begin(), aug.labels.end());
    set.provenance.insert(set.provenance.end(), aug.size(), {Provenance::OriginalAug, -1, -1});

    // A class is either rare or common, so merging the two ordered lists by
    // class id yields the canonical (class, view, replicate) order.
    std::vector<GeneratedRow> generated;
    generated.reserve(rare.size() + common.size());
    std::merge(std::make_move_iterator(rare.begin()), std::make_move_iterator(rare.end()),
               std::make_move_iterator(common.begin()), std::make_move_iterator(common.end()),
               std::back_inserter(generated),
               [](const GeneratedRow& a, const GeneratedRow& b) { return a.label < b.label; });

    for (const auto& row : generated) {
        out.push_back(row.features, row.label);
        const auto offset = row.view == View::Plain ? 0 : plain.size();
        set.provenance.push_back({row.tag, static_cast<std::int64_t>(offset + row.anchor_row),
                                  static_cast<std::int64_t>(row.center_class)});
    }
    return set;
}

inline std::string provenance_csv(const CalibratedSet& set) {
    std::ostringstream os;
    os << "row_index,tag,anchor_index,center_class\n";
    for (std::size_t i = 0; i < set.provenance.size(); ++i) {
        const auto& p = set.provenance[i];
        os << i << ',' << to_string(p.tag) << ',';
        if (p.anchor_index >= 0) os << p.anchor_index;
        os << ',';
        if (p.center_class >= 0) os << p.center_class;
        os << '\n';
    }
    return os.str();
}

inline std::filesystem::path provenance_path(const std::filesystem::path& darc_path) {
    return std::filesystem::path(darc_path.string() + ".provenance.csv");
}

/// DARC1 file plus `<path>.provenance.csv`.
inline void save_calibrated_set(const CalibratedSet& set, const std::filesystem::path& path) {
    save_dataset(set.rows, path);
    io::write_file(provenance_path(path), provenance_csv(set));
}

}  // namespace transdarc
