#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "transdarc/dataset.hpp"
#include "transdarc/head.hpp"
#include "transdarc/parallel.hpp"
#include "transdarc/stats.hpp"

namespace transdarc {

/// Argmax with ties resolved toward the lowest index.
inline std::uint32_t argmax(std::span<const double> logits) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[best]) best = k;
    return static_cast<std::uint32_t>(best);
}

inline std::vector<std::uint32_t> predict(const HeadParams& p, const EmbeddingDataset& d) {
    if (d.dim != p.dim())
        throw ValidationError("dataset dim " + std::to_string(d.dim) + " does not match head dim " +
                              std::to_string(p.dim()));
    std::vector<std::uint32_t> out(d.size());
    constexpr std::size_t kChunk = 256;
    parallel_for((d.size() + kChunk - 1) / kChunk, [&](std::size_t chunk) {
        ForwardTrace t;
        const std::size_t end = std::min(d.size(), (chunk + 1) * kChunk);
        for (std::size_t i = chunk * kChunk; i < end; ++i) {
            const auto x = d.row(i);
            detail::check_input(p, x);
            detail::forward_into(p, x, t);
            out[i] = argmax(t.logits);
        }
    });
    return out;
}

/// Per-class recall; nullopt for classes with no ground-truth samples.
inline std::vector<std::optional<double>> per_class_recall(std::span<const std::uint32_t> preds,
                                                           std::span<const std::uint32_t> labels,
                                                           std::size_t n_classes) {
    std::vector<std::size_t> hits(n_classes, 0), totals(n_classes, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ++totals.at(labels[i]);
        if (preds[i] == labels[i]) ++hits[labels[i]];
    }
    std::vector<std::optional<double>> out(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c)
        if (totals[c] > 0) out[c] = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
    return out;
}

/// Mean per-class recall over the classes present in `labels`.
inline double balanced_accuracy(std::span<const std::uint32_t> preds, std::span<const std::uint32_t> labels,
                                std::size_t n_classes) {
    if (labels.empty()) throw ValidationError("balanced_accuracy: empty input");
    if (preds.size() != labels.size())
        throw ValidationError("balanced_accuracy: " + std::to_string(preds.size()) + " predictions for " +
                              std::to_string(labels.size()) + " labels");
    const auto recall = per_class_recall(preds, labels, n_classes);
    double sum = 0.0;
    std::size_t present = 0;
    for (const auto& r : recall)
        if (r) {
            sum += *r;
            ++present;
        }
    return sum / static_cast<double>(present);
}

inline double balanced_accuracy(const std::vector<std::uint32_t>& preds, const std::vector<std::uint32_t>& labels,
                                std::size_t n_classes) {
    return balanced_accuracy(std::span<const std::uint32_t>(preds), std::span<const std::uint32_t>(labels), n_classes);
}

struct EvalReport {
    std::string name;
    std::string modality;
    double balanced_accuracy = 0.0;
    double accuracy = 0.0;  // raw top-1, reported alongside
    std::vector<std::optional<double>> per_class_recall;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
    std::optional<double> common_balanced_acc;
    std::optional<double> rare_balanced_acc;
    std::vector<std::uint32_t> absent_classes;  // no ground truth, excluded from the mean
    std::vector<std::string> class_names;
    std::size_t n_evaluated = 0;
};

namespace detail {

inline std::optional<double> mean_recall_over(const std::vector<std::optional<double>>& recall,
                                              const std::vector<std::uint32_t>& ids) {
    double sum = 0.0;
    std::size_t n = 0;
    for (auto id : ids)
        if (id < recall.size() && recall[id]) {
            sum += *recall[id];
            ++n;
        }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

}  // namespace detail

inline EvalReport make_report(std::span<const std::uint32_t> preds, const EmbeddingDataset& d,
                              const FrequencyPartition* partition) {
    EvalReport r;
    r.n_evaluated = d.size();
    r.class_names = d.class_names;
    r.modality = d.meta_or("modality");
    r.name = d.meta_or("split");
    const std::size_t n_classes = d.n_classes();
    r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        ++r.confusion[d.labels[i]][preds[i]];
        correct += preds[i] == d.labels[i];
    }
    r.accuracy = d.size() ? static_cast<double>(correct) / static_cast<double>(d.size()) : 0.0;
    r.per_class_recall = per_class_recall(preds, d.labels, n_classes);
    for (std::size_t c = 0; c < n_classes; ++c)
        if (!r.per_class_recall[c]) r.absent_classes.push_back(static_cast<std::uint32_t>(c));
    r.balanced_accuracy = balanced_accuracy(preds, d.labels, n_classes);
    if (partition) {
        r.common_balanced_acc = detail::mean_recall_over(r.per_class_recall, partition->common_ids);
        r.rare_balanced_acc = detail::mean_recall_over(r.per_class_recall, partition->rare_ids);
    }
    return r;
}

/// Predicts and scores `d`. With a (training-set) partition, also reports
/// the mean recall over its common and rare classes.
inline EvalReport evaluate(const HeadParams& p, const EmbeddingDataset& d,
                           const std::optional<FrequencyPartition>& partition = std::nullopt) {
    validate(d);
    if (d.n_classes() != p.n_classes())
        throw ValidationError("dataset has " + std::to_string(d.n_classes()) + " classes, head predicts " +
                              std::to_string(p.n_classes()));
    const auto preds = predict(p, d);
    return make_report(preds, d, partition ? &*partition : nullptr);
}

/// Evaluates every dataset against the training class table; a mismatch is
/// an error, never a silent remapping.
inline std::vector<EvalReport> cross_modality_eval(const HeadParams& p, const std::vector<EmbeddingDataset>& datasets,
                                                   const std::vector<std::string>& train_class_names,
                                                   const std::optional<FrequencyPartition>& partition = std::nullopt) {
    std::vector<EvalReport> out;
    for (std::size_t i = 0; i < datasets.size(); ++i) {
        if (datasets[i].class_names != train_class_names)
            throw ValidationError("class table of dataset #" + std::to_string(i) + " (modality '" +
                                  datasets[i].meta_or("modality") + "') does not match the training class table");
        out.push_back(evaluate(p, datasets[i], partition));
    }
    return out;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
    nlohmann::ordered_json recall = nlohmann::ordered_json::array();
    for (const auto& v : r.per_class_recall) recall.push_back(opt(v));
    nlohmann::ordered_json j;
    j["name"] = r.name;
    j["modality"] = r.modality;
    j["balanced_accuracy"] = r.balanced_accuracy;
    j["accuracy"] = r.accuracy;
    j["per_class_recall"] = recall;
    j["confusion"] = r.confusion;
    j["common"] = opt(r.common_balanced_acc);
    j["rare"] = opt(r.rare_balanced_acc);
    j["n"] = r.n_evaluated;
    j["absent_classes"] = r.absent_classes;
    j["class_names"] = r.class_names;
    return j;
}

inline void print_report(std::ostream& os, const EvalReport& r) {
    const auto flags = os.flags();
    os << "report " << (r.name.empty() ? "-" : r.name);
    if (!r.modality.empty()) os << " [" << r.modality << "]";
    os << "  n=" << r.n_evaluated << '\n';
    os << std::fixed << std::setprecision(4);
    os << "  balanced accuracy  " << r.balanced_accuracy << '\n';
    os << "  accuracy           " << r.accuracy << '\n';
    if (r.common_balanced_acc) os << "  common classes     " << *r.common_balanced_acc << '\n';
    if (r.rare_balanced_acc) os << "  rare classes       " << *r.rare_balanced_acc << '\n';
    os << "  per-class recall\n";
    for (std::size_t c = 0; c < r.per_class_recall.size(); ++c) {
        os << "    " << std::left << std::setw(24) << r.class_names[c] << std::right;
        if (r.per_class_recall[c])
            os << *r.per_class_recall[c];
        else
            os << "n/a";
        os << '\n';
    }
    os.flags(flags);
}

}  // namespace transdarc
