#include <gtest/gtest.h>

#include "test_util.hpp"
#include "transdarc/config.hpp"

using namespace transdarc;
using nlohmann::json;

namespace {

std::string field_of(const json& j) {
    try {
        auto cfg = parse_config(j);
        validate_config(cfg);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

}  // namespace

TEST(Config, DefaultsMirrorFineGrainedSetting) {
    const auto cfg = parse_config(json::object());
    EXPECT_EQ(cfg.calibration.eta, 400u);
    EXPECT_EQ(cfg.calibration.k, 2u);
    EXPECT_EQ(cfg.calibration.n_rare, 100u);
    EXPECT_EQ(cfg.calibration.n_com, 50u);
    EXPECT_EQ(cfg.train.n_max, 1200u);
    EXPECT_EQ(cfg.train.lr_max, 1e-4);
    EXPECT_EQ(cfg.train.n_mine, 30u);
    EXPECT_EQ(cfg.train.delta, 1.2);
    EXPECT_EQ(cfg.train.n_hard, 1u);
    EXPECT_EQ(cfg.train.batch_size, 256u);
    EXPECT_EQ(cfg.cov_mode, CovMode::Diagonal);
}

TEST(Config, ParsesEverySection) {
    const auto j = json::parse(R"({
        "seed": 11,
        "cov_mode": "full",
        "out": "results",
        "data": {"dir": "d", "test": "/abs/test.darc1", "cross_modality": ["x.darc1"]},
        "calibration": {"eta": 10, "k": 3, "n_rare": 5, "n_com": 0},
        "train": {"n_max": 7, "lr_max": 0.01, "lr_min": 0.001, "hidden": 9},
        "synth": {"dim": 4, "classes": [{"count": 30, "repeat": 3}, {"count": 5, "stddev": 2.0}]}
    })");
    const auto cfg = parse_config(j, "/base");
    EXPECT_EQ(cfg.calibration.seed, 11u);
    EXPECT_EQ(cfg.train.seed, 11u);
    EXPECT_EQ(cfg.synth.seed, 11u);
    EXPECT_EQ(cfg.cov_mode, CovMode::Full);
    EXPECT_EQ(cfg.out, std::filesystem::path("/base/results"));
    EXPECT_EQ(cfg.data.dir, std::filesystem::path("/base/d"));
    EXPECT_EQ(cfg.data.test, std::filesystem::path("/abs/test.darc1"));
    ASSERT_EQ(cfg.data.cross_modality.size(), 1u);
    EXPECT_EQ(cfg.data.cross_modality[0], std::filesystem::path("/base/x.darc1"));
    EXPECT_EQ(cfg.calibration.k, 3u);
    EXPECT_EQ(cfg.train.n_max, 7u);
    EXPECT_EQ(cfg.train.hidden, 9u);
    EXPECT_EQ(cfg.synth.classes.size(), 4u);
    EXPECT_EQ(cfg.synth.classes[3].stddev, 2.0);
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_EQ(field_of(json::parse(R"({"calibration": {"k": 0}})")), "calibration.k");
    EXPECT_EQ(field_of(json::parse(R"({"calibration": {"k": -1}})")), "calibration.k");
    EXPECT_EQ(field_of(json::parse(R"({"train": {"delta": 0}})")), "train.delta");
    EXPECT_EQ(field_of(json::parse(R"({"train": {"n_max": "many"}})")), "train.n_max");
    EXPECT_EQ(field_of(json::parse(R"({"train": {"bogus": 1}})")), "train.bogus");
    EXPECT_EQ(field_of(json::parse(R"({"cov_mode": "banded"})")), "cov_mode");
    EXPECT_EQ(field_of(json::parse(R"({"data": {"cross_modality": [1]}})")), "data.cross_modality[0]");
    EXPECT_EQ(field_of(json::parse(R"({"synth": {"classes": [{"count": 1, "sigma": 2}]}})")),
              "synth.classes[0].sigma");
    EXPECT_EQ(field_of(json::parse(R"({"calibration": []})")), "calibration");
}

TEST(Config, LoadFromFile) {
    testutil::TempDir tmp("cfg");
    io::write_file(tmp / "c.json", R"({"out": "o", "train": {"n_max": 3}})");
    const auto cfg = load_config(tmp / "c.json");
    EXPECT_EQ(cfg.out, tmp.path() / "o");
    EXPECT_EQ(cfg.train.n_max, 3u);
    io::write_file(tmp / "bad.json", "{ not json");
    EXPECT_THROW(load_config(tmp / "bad.json"), ConfigError);
}
