#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "transdarc/calibration.hpp"
#include "transdarc/binary_io.hpp"
#include "transdarc/error.hpp"
#include "transdarc/optim.hpp"
#include "transdarc/stats.hpp"
#include "transdarc/synth.hpp"

namespace transdarc {

/// Input files of a run. Empty paths are filled from `dir` using the file
/// names the `synth` subcommand writes.
struct DataPaths {
    std::filesystem::path dir;
    std::filesystem::path train, train_aug, val, test;
    std::vector<std::filesystem::path> cross_modality;
    std::filesystem::path calibrated;  // train step input; defaults to <out>/calibrated.darc1
    std::filesystem::path params;      // eval step input; defaults to <out>/params.darch1
};

/// Everything a CLI run needs, as read from the JSON config.
struct PipelineConfig {
    DataPaths data;
    CalibrationConfig calibration;
    TrainConfig train;
    CovMode cov_mode = CovMode::Diagonal;
    synth::MixtureSpec synth = synth::default_spec();
    std::filesystem::path out = "out";
};

namespace detail {

class JsonReader {
public:
    JsonReader(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    bool is_explicit_null(const char* key) const { return j_.contains(key) && j_.at(key).is_null(); }
    std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
    JsonReader child(const char* key) const { return {j_.at(key), field(key)}; }
    const nlohmann::json& raw(const char* key) const { return j_.at(key); }

    void reject_unknown(std::initializer_list<const char*> known) const {
        for (auto& [key, value] : j_.items()) {
            bool ok = false;
            for (auto k : known) ok = ok || key == k;
            if (!ok) throw ConfigError(path_.empty() ? key : path_ + "." + key, "unknown key");
        }
    }

    template <typename T>
    void read(const char* key, T& dst) const {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(field(key), "expected a boolean");
            dst = v.get<bool>();
        } else if constexpr (std::is_unsigned_v<T>) {
            if (!v.is_number_unsigned()) throw ConfigError(field(key), "expected a non-negative integer");
            dst = v.get<T>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(field(key), "expected a number");
            dst = v.get<T>();
        } else if constexpr (std::is_same_v<T, std::string> || std::is_same_v<T, std::filesystem::path>) {
            if (!v.is_string()) throw ConfigError(field(key), "expected a string");
            dst = v.get<std::string>();
        } else {
            static_assert(sizeof(T) == 0, "unsupported config field type");
        }
    }

private:
    const nlohmann::json& j_;
    std::string path_;
};

inline void read_calibration(const JsonReader& r, CalibrationConfig& c) {
    r.reject_unknown({"eta", "k", "n_rare", "n_com", "seed"});
    r.read("eta", c.eta);
    r.read("k", c.k);
    r.read("n_rare", c.n_rare);
    r.read("n_com", c.n_com);
    r.read("seed", c.seed);
}

inline void read_train(const JsonReader& r, TrainConfig& c) {
    r.reject_unknown({"n_max", "lr_max", "lr_min", "batch_size", "beta1", "beta2", "eps", "weight_decay", "n_mine",
                      "delta", "n_hard", "hidden", "seed"});
    r.read("n_max", c.n_max);
    r.read("lr_max", c.lr_max);
    r.read("lr_min", c.lr_min);
    r.read("batch_size", c.batch_size);
    r.read("beta1", c.beta1);
    r.read("beta2", c.beta2);
    r.read("eps", c.eps);
    r.read("weight_decay", c.weight_decay);
    r.read("n_mine", c.n_mine);
    r.read("delta", c.delta);
    r.read("n_hard", c.n_hard);
    r.read("hidden", c.hidden);
    r.read("seed", c.seed);
}

inline void read_synth(const JsonReader& r, synth::MixtureSpec& s) {
    r.reject_unknown({"dim", "seed", "noise_sigma", "train_fraction", "val_fraction", "test_fraction", "modality",
                      "classes"});
    r.read("dim", s.dim);
    r.read("seed", s.seed);
    r.read("train_fraction", s.train_fraction);
    r.read("val_fraction", s.val_fraction);
    r.read("test_fraction", s.test_fraction);
    r.read("modality", s.modality);
    if (r.has("noise_sigma")) {
        double sigma = 0;
        r.read("noise_sigma", sigma);
        s.noise_sigma = sigma;
    } else if (r.is_explicit_null("noise_sigma")) {
        s.noise_sigma.reset();
    }
    if (r.has("classes")) {
        const auto& arr = r.raw("classes");
        if (!arr.is_array()) throw ConfigError(r.field("classes"), "expected an array");
        s.classes.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            JsonReader cr(arr[i], r.field("classes") + "[" + std::to_string(i) + "]");
            cr.reject_unknown({"count", "radius", "stddev", "name", "repeat"});
            synth::ClassSpec cs;
            cr.read("count", cs.count);
            cr.read("radius", cs.radius);
            cr.read("stddev", cs.stddev);
            cr.read("name", cs.name);
            std::size_t repeat = 1;
            cr.read("repeat", repeat);
            for (std::size_t k = 0; k < repeat; ++k) s.classes.push_back(cs);
        }
    }
}

}  // namespace detail

/// Parses a config document. Relative data paths are resolved against
/// `base_dir` (the directory holding the config file).
inline PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    PipelineConfig cfg;
    detail::JsonReader root(j, "");
    root.reject_unknown({"data", "calibration", "train", "cov_mode", "synth", "out", "seed"});
    if (root.has("seed")) {
        std::uint64_t seed = 0;
        root.read("seed", seed);
        cfg.calibration.seed = cfg.train.seed = cfg.synth.seed = seed;
    }
    if (root.has("calibration")) detail::read_calibration(root.child("calibration"), cfg.calibration);
    if (root.has("train")) detail::read_train(root.child("train"), cfg.train);
    if (root.has("synth")) detail::read_synth(root.child("synth"), cfg.synth);
    if (root.has("cov_mode")) {
        std::string mode;
        root.read("cov_mode", mode);
        if (mode == "diagonal")
            cfg.cov_mode = CovMode::Diagonal;
        else if (mode == "full")
            cfg.cov_mode = CovMode::Full;
        else
            throw ConfigError("cov_mode", "expected \"diagonal\" or \"full\"");
    }
    auto resolve = [&](std::filesystem::path p) {
        return p.empty() || p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };
    if (root.has("out")) {
        root.read("out", cfg.out);
        cfg.out = resolve(cfg.out);
    }
    if (root.has("data")) {
        auto r = root.child("data");
        r.reject_unknown({"dir", "train", "train_aug", "val", "test", "cross_modality", "calibrated", "params"});
        auto& d = cfg.data;
        r.read("dir", d.dir);
        r.read("train", d.train);
        r.read("train_aug", d.train_aug);
        r.read("val", d.val);
        r.read("test", d.test);
        r.read("calibrated", d.calibrated);
        r.read("params", d.params);
        if (r.has("cross_modality")) {
            const auto& arr = r.raw("cross_modality");
            if (!arr.is_array()) throw ConfigError("data.cross_modality", "expected an array of paths");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                if (!arr[i].is_string())
                    throw ConfigError("data.cross_modality[" + std::to_string(i) + "]", "expected a string");
                d.cross_modality.emplace_back(arr[i].get<std::string>());
            }
        }
        for (auto* p : {&d.dir, &d.train, &d.train_aug, &d.val, &d.test, &d.calibrated, &d.params}) *p = resolve(*p);
        for (auto& p : d.cross_modality) p = resolve(p);
    }
    return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<root>", path.string() + ": " + e.what());
    }
    return parse_config(j, path.parent_path());
}

/// Range checks on everything the config holds.
inline void validate_config(const PipelineConfig& cfg) {
    cfg.calibration.validate();
    cfg.train.validate();
}

}  // namespace transdarc
