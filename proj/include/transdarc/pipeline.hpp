#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "transdarc/calibration.hpp"
#include "transdarc/config.hpp"
#include "transdarc/dataset.hpp"
#include "transdarc/evaluation.hpp"
#include "transdarc/head.hpp"
#include "transdarc/log.hpp"
#include "transdarc/stats.hpp"
#include "transdarc/synth.hpp"
#include "transdarc/train.hpp"

namespace transdarc::pipeline {

namespace fs = std::filesystem;

// Fixed output names under --out.
inline constexpr const char* kParamsFile = "params.darch1";
inline constexpr const char* kCalibratedFile = "calibrated.darc1";
inline constexpr const char* kMetricsFile = "metrics.csv";

/// Fills unset input paths from data.dir (synth layout) and the output dir.
inline DataPaths resolve_paths(const PipelineConfig& cfg) {
    DataPaths d = cfg.data;
    auto from_dir = [&](fs::path& p, const char* name) {
        if (p.empty() && !d.dir.empty()) p = d.dir / name;
    };
    from_dir(d.train, "train.darc1");
    from_dir(d.train_aug, "train_aug.darc1");
    from_dir(d.val, "val.darc1");
    from_dir(d.test, "test.darc1");
    if (d.cross_modality.empty() && !d.dir.empty() && fs::exists(d.dir / "shifted_test.darc1"))
        d.cross_modality.push_back(d.dir / "shifted_test.darc1");
    if (d.calibrated.empty()) d.calibrated = cfg.out / kCalibratedFile;
    if (d.params.empty()) d.params = cfg.out / kParamsFile;
    return d;
}

inline const fs::path& require_path(const fs::path& p, const char* field) {
    if (p.empty()) throw ConfigError(std::string("data.") + field, "path not set (and no data.dir to derive it from)");
    return p;
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) { io::write_file(path, j.dump(2) + "\n"); }

/// Writes every split of the mixture plus spec.json.
inline void run_synth(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out);
    const auto data = synth::generate(cfg.synth);
    auto save_splits = [&](const synth::Splits& s, const std::string& prefix) {
        save_dataset(s.train, cfg.out / (prefix + "train.darc1"));
        save_dataset(s.train_aug, cfg.out / (prefix + "train_aug.darc1"));
        save_dataset(s.val, cfg.out / (prefix + "val.darc1"));
        save_dataset(s.test, cfg.out / (prefix + "test.darc1"));
    };
    save_splits(data.clean, "");
    if (data.shifted) save_splits(*data.shifted, "shifted_");
    write_json(cfg.out / "spec.json", synth::to_json(cfg.synth));
    log_info("synth: wrote " + std::to_string(data.clean.train.size()) + " training rows per view to " +
             cfg.out.string());
}

inline nlohmann::ordered_json stats_json(const EmbeddingDataset& d, const std::vector<ClassStats>& stats) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& s : stats)
        arr.push_back({{"class_id", s.class_id},
                       {"name", d.class_names[s.class_id]},
                       {"count", s.count},
                       {"cov_defined", s.cov_defined},
                       {"cov_mode", s.mode == CovMode::Full ? "full" : "diagonal"},
                       {"mean", s.mean},
                       {"cov", s.cov}});
    return arr;
}

inline nlohmann::ordered_json partition_json(const FrequencyPartition& p, const EmbeddingDataset& d) {
    auto names = [&](const std::vector<std::uint32_t>& ids) {
        std::vector<std::string> out;
        for (auto id : ids) out.push_back(d.class_names[id]);
        return out;
    };
    return {{"eta", p.eta},
            {"common_ids", p.common_ids},
            {"rare_ids", p.rare_ids},
            {"common", names(p.common_ids)},
            {"rare", names(p.rare_ids)}};
}

/// Class statistics of both training views and the frequency partition.
inline void run_stats(const PipelineConfig& cfg) {
    const auto paths = resolve_paths(cfg);
    fs::create_directories(cfg.out);
    const auto train = load_dataset(require_path(paths.train, "train"));
    write_json(cfg.out / "stats_train.json", stats_json(train, compute_class_stats(train, cfg.cov_mode)));
    if (!paths.train_aug.empty()) {
        const auto aug = load_dataset(paths.train_aug);
        write_json(cfg.out / "stats_train_aug.json", stats_json(aug, compute_class_stats(aug, cfg.cov_mode)));
    }
    const auto partition = partition_by_frequency(train, cfg.calibration.eta);
    write_json(cfg.out / "partition.json", partition_json(partition, train));
    log_info("stats: " + std::to_string(partition.common_ids.size()) + " common, " +
             std::to_string(partition.rare_ids.size()) + " rare classes (eta=" + std::to_string(partition.eta) + ")");
}

inline void run_calibrate(const PipelineConfig& cfg) {
    const auto paths = resolve_paths(cfg);
    fs::create_directories(cfg.out);
    const auto plain = load_dataset(require_path(paths.train, "train"));
    const auto aug = load_dataset(require_path(paths.train_aug, "train_aug"));
    try {
        detail::require_views_compatible(plain, aug);
    } catch (const ValidationError& e) {
        throw ValidationError(paths.train.string() + " vs " + paths.train_aug.string() + ": " + e.what());
    }
    const auto set = build_calibrated_set(plain, aug, cfg.calibration);
    save_calibrated_set(set, cfg.out / kCalibratedFile);
    log_info("calibrate: " + std::to_string(set.size()) + " rows (" + std::to_string(plain.size() + aug.size()) +
             " original)");
}

inline void run_train(const PipelineConfig& cfg) {
    const auto paths = resolve_paths(cfg);
    fs::create_directories(cfg.out);
    const auto set = load_dataset(paths.calibrated);
    auto result = train(set, cfg.train);
    save_head(result.params, cfg.out / kParamsFile);
    io::write_file(cfg.out / kMetricsFile, metrics_csv(result.log));
    if (!result.log.empty()) {
        const auto& last = result.log.back();
        log_info("train: " + std::to_string(last.epoch) + " epochs, final mean loss " +
                 std::to_string(last.mean_loss));
    }
}

inline std::string report_name(const fs::path& p) { return p.stem().string(); }

/// Scores val, test and every cross-modality file; one report_<name>.json
/// each, plus a table on stdout.
inline void run_eval(const PipelineConfig& cfg, std::ostream& table = std::cout) {
    const auto paths = resolve_paths(cfg);
    fs::create_directories(cfg.out);
    const auto params = load_head(paths.params);
    const auto& train_path = require_path(paths.train, "train");
    const auto train_set = load_dataset(train_path);
    const auto partition = partition_by_frequency(train_set, cfg.calibration.eta);

    struct Target {
        fs::path path;
        std::string name;
    };
    std::vector<Target> targets;
    if (!paths.val.empty()) targets.push_back({paths.val, "val"});
    if (!paths.test.empty()) targets.push_back({paths.test, "test"});
    for (const auto& p : paths.cross_modality) targets.push_back({p, report_name(p)});
    if (targets.empty()) throw ConfigError("data", "nothing to evaluate (set data.val, data.test or data.cross_modality)");

    for (const auto& t : targets) {
        auto d = load_dataset(t.path);
        try {
            require_same_class_table(train_set, d, train_path.string(), t.path.string());
        } catch (const ValidationError& e) {
            throw ValidationError(std::string("class table mismatch: ") + e.what());
        }
        auto report = evaluate(params, d, partition);
        if (report.name.empty()) report.name = t.name;
        write_json(cfg.out / ("report_" + t.name + ".json"), to_json(report));
        print_report(table, report);
    }
}

/// stats -> calibrate -> train -> eval, each step reading what the previous
/// one wrote, exactly as running the subcommands in sequence.
inline void run_pipeline(const PipelineConfig& cfg, std::ostream& table = std::cout) {
    run_stats(cfg);
    run_calibrate(cfg);
    run_train(cfg);
    run_eval(cfg, table);
}

}  // namespace transdarc::pipeline
