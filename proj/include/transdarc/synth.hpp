#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "transdarc/dataset.hpp"
#include "transdarc/error.hpp"
#include "transdarc/parallel.hpp"
#include "transdarc/rng.hpp"

namespace transdarc::synth {

struct ClassSpec {
    std::size_t count = 0;  // training rows; val/test sizes follow from the fractions
    double radius = 1.0;    // distance of the class mean from the origin
    double stddev = 1.0;    // isotropic per-channel spread
    std::string name;       // defaults to class_<index>
};

/// Seeded isotropic Gaussian mixture used as a stand-in for backbone
/// embeddings.
struct MixtureSpec {
    std::size_t dim = 32;
    std::vector<ClassSpec> classes;
    std::uint64_t seed = 0;
    std::optional<double> noise_sigma;  // adds a shifted copy of every split
    double train_fraction = 0.5;
    double val_fraction = 0.2;
    double test_fraction = 0.3;
    std::string modality = "synthetic";

    void validate() const {
        if (dim == 0) throw ValidationError("synth: dim must be positive");
        if (classes.size() < 2) throw ValidationError("synth: need at least two classes");
        for (std::size_t c = 0; c < classes.size(); ++c) {
            const auto& cs = classes[c];
            const auto where = "synth: class " + std::to_string(c) + ": ";
            if (cs.count < 1) throw ValidationError(where + "count must be >= 1");
            if (!(cs.stddev > 0) || !std::isfinite(cs.stddev)) throw ValidationError(where + "stddev must be > 0");
            if (!(cs.radius >= 0) || !std::isfinite(cs.radius)) throw ValidationError(where + "radius must be >= 0");
        }
        if (!(train_fraction > 0) || val_fraction < 0 || test_fraction < 0)
            throw ValidationError("synth: fractions must be non-negative with a positive train fraction");
        if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9)
            throw ValidationError("synth: train/val/test fractions must sum to 1");
        if (noise_sigma && !(*noise_sigma >= 0)) throw ValidationError("synth: noise_sigma must be >= 0");
    }

    std::string class_name(std::size_t c) const {
        if (!classes[c].name.empty()) return classes[c].name;
        char buf[32];
        std::snprintf(buf, sizeof buf, "class_%02zu", c);
        return buf;
    }

    std::size_t split_count(std::size_t c, double fraction) const {
        return static_cast<std::size_t>(
            std::llround(static_cast<double>(classes[c].count) * fraction / train_fraction));
    }
};

/// The default desk-scale spec: four frequent classes and two infrequent ones.
inline MixtureSpec default_spec() {
    MixtureSpec s;
    s.dim = 32;
    s.seed = 7;
    s.noise_sigma = 0.5;
    for (int c = 0; c < 4; ++c) s.classes.push_back({500, 3.0, 1.0, {}});
    for (int c = 0; c < 2; ++c) s.classes.push_back({20, 3.0, 1.0, {}});
    return s;
}

struct Splits {
    EmbeddingDataset train;
    EmbeddingDataset train_aug;
    EmbeddingDataset val;
    EmbeddingDataset test;
};

struct SynthOutput {
    Splits clean;
    std::optional<Splits> shifted;
    std::vector<std::vector<double>> means;
};

namespace detail {

enum SplitId : std::uint64_t { kTrain = 0, kTrainAug = 1, kVal = 2, kTest = 3 };

inline std::vector<double> class_mean(const MixtureSpec& s, std::size_t c) {
    Rng rng = derive_rng(s.seed, {tag(StreamTag::SynthCenters), c});
    std::normal_distribution<double> gauss;
    std::vector<double> dir(s.dim);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& v : dir) {
            v = gauss(rng);
            norm += v * v;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& v : dir) v = v / norm * s.classes[c].radius;
    return dir;
}

inline EmbeddingDataset empty_split(const MixtureSpec& s, const char* split, View view, const std::string& modality) {
    EmbeddingDataset d;
    d.dim = s.dim;
    d.view = view;
    for (std::size_t c = 0; c < s.classes.size(); ++c) d.class_names.push_back(s.class_name(c));
    d.meta = {{"modality", modality}, {"split", split}, {"source", "synth seed=" + std::to_string(s.seed)}};
    return d;
}

// Fills `d` with `counts[c]` rows per class in (class, index) order; each row
// draws from its own stream keyed by (stream, class, split, index).
template <typename RowFn>
void fill_split(EmbeddingDataset& d, const std::vector<std::size_t>& counts, RowFn&& make_row) {
    std::vector<std::size_t> offset(counts.size() + 1, 0);
    for (std::size_t c = 0; c < counts.size(); ++c) offset[c + 1] = offset[c] + counts[c];
    d.labels.resize(offset.back());
    d.embeddings.resize(offset.back() * d.dim);
    parallel_for(counts.size(), [&](std::size_t c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            const std::size_t row = offset[c] + i;
            d.labels[row] = static_cast<std::uint32_t>(c);
            make_row(c, i, d.row(row));
        }
    });
}

}  // namespace detail

inline SynthOutput generate(const MixtureSpec& spec) {
    spec.validate();
    using namespace detail;
    SynthOutput out;
    const std::size_t n_classes = spec.classes.size();
    for (std::size_t c = 0; c < n_classes; ++c) out.means.push_back(class_mean(spec, c));

    std::vector<std::size_t> n_train(n_classes), n_val(n_classes), n_test(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        n_train[c] = spec.classes[c].count;
        n_val[c] = spec.split_count(c, spec.val_fraction);
        n_test[c] = spec.split_count(c, spec.test_fraction);
    }

    auto sample = [&](SplitId split) {
        return [&, split](std::size_t c, std::size_t i, std::span<float> row) {
            Rng rng = derive_rng(spec.seed, {tag(StreamTag::SynthSamples), c, split, i});
            std::normal_distribution<double> gauss(0.0, spec.classes[c].stddev);
            for (std::size_t j = 0; j < spec.dim; ++j) row[j] = static_cast<float>(out.means[c][j] + gauss(rng));
        };
    };
    auto& clean = out.clean;
    clean.train = empty_split(spec, "train", View::Plain, spec.modality);
    clean.train_aug = empty_split(spec, "train_aug", View::AugmentedView, spec.modality);
    clean.val = empty_split(spec, "val", View::Plain, spec.modality);
    clean.test = empty_split(spec, "test", View::Plain, spec.modality);
    fill_split(clean.train, n_train, sample(kTrain));
    fill_split(clean.train_aug, n_train, sample(kTrainAug));
    fill_split(clean.val, n_val, sample(kVal));
    fill_split(clean.test, n_test, sample(kTest));

    if (spec.noise_sigma) {
        const double sigma = *spec.noise_sigma;
        const std::string modality = spec.modality + "_shifted";
        auto shift = [&](const EmbeddingDataset& src, SplitId split, const char* name) {
            EmbeddingDataset d = empty_split(spec, name, src.view, modality);
            std::vector<std::size_t> counts(n_classes, 0);
            for (auto l : src.labels) ++counts[l];
            std::vector<std::size_t> first(n_classes + 1, 0);
            for (std::size_t c = 0; c < n_classes; ++c) first[c + 1] = first[c] + counts[c];
            fill_split(d, counts, [&](std::size_t c, std::size_t i, std::span<float> row) {
                Rng rng = derive_rng(spec.seed, {tag(StreamTag::SynthShift), c, split, i});
                std::normal_distribution<double> gauss(0.0, sigma);
                const auto base = src.row(first[c] + i);
                for (std::size_t j = 0; j < spec.dim; ++j)
                    row[j] = static_cast<float>(static_cast<double>(base[j]) + gauss(rng));
            });
            return d;
        };
        out.shifted = Splits{shift(clean.train, kTrain, "train"), shift(clean.train_aug, kTrainAug, "train_aug"),
                             shift(clean.val, kVal, "val"), shift(clean.test, kTest, "test")};
    }
    return out;
}

inline nlohmann::ordered_json to_json(const MixtureSpec& s) {
    nlohmann::ordered_json j;
    j["dim"] = s.dim;
    j["seed"] = s.seed;
    j["modality"] = s.modality;
    j["train_fraction"] = s.train_fraction;
    j["val_fraction"] = s.val_fraction;
    j["test_fraction"] = s.test_fraction;
    j["noise_sigma"] = s.noise_sigma ? nlohmann::ordered_json(*s.noise_sigma) : nlohmann::ordered_json();
    auto& classes = j["classes"] = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < s.classes.size(); ++c)
        classes.push_back({{"name", s.class_name(c)},
                           {"count", s.classes[c].count},
                           {"radius", s.classes[c].radius},
                           {"stddev", s.classes[c].stddev}});
    return j;
}

}  // namespace transdarc::synth
