#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_util.hpp"
#include "transdarc/evaluation.hpp"
#include "transdarc/synth.hpp"
#include "transdarc/train.hpp"

using namespace transdarc;

namespace {

using Labels = std::vector<std::uint32_t>;

}  // namespace

TEST(BalancedAccuracy, PerfectIsOne) {
    const Labels y{0, 1, 2, 2, 1};
    EXPECT_EQ(balanced_accuracy(y, y, 3), 1.0);
}

TEST(BalancedAccuracy, TwoClassExample) {
    // class 0: 3 of 4 correct, class 1: 1 of 2 correct
    const Labels y{0, 0, 0, 0, 1, 1};
    const Labels p{0, 0, 0, 1, 1, 0};
    EXPECT_EQ(balanced_accuracy(p, y, 2), 0.625);
}

TEST(BalancedAccuracy, MajorityPredictorOnSkewedLabels) {
    Labels y(1000, 0);
    y.resize(1010, 1);
    const Labels p(y.size(), 0);
    EXPECT_EQ(balanced_accuracy(p, y, 2), 0.5);
}

TEST(BalancedAccuracy, AbsentClassesExcluded) {
    const Labels y{0, 0, 2};
    const Labels p{0, 1, 2};
    EXPECT_EQ(balanced_accuracy(p, y, 4), 0.75);
}

TEST(BalancedAccuracy, PermutationInvariant) {
    std::mt19937_64 rng(1);
    Labels y(500), p(500);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = rng() % 6;
        p[i] = rng() % 3 == 0 ? y[i] : rng() % 6;
    }
    const double base = balanced_accuracy(p, y, 6);
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), 0);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(order.begin(), order.end(), rng);
        Labels ys, ps;
        for (auto i : order) {
            ys.push_back(y[i]);
            ps.push_back(p[i]);
        }
        EXPECT_EQ(balanced_accuracy(ps, ys, 6), base);
    }
}

TEST(BalancedAccuracy, ErrorPaths) {
    EXPECT_THROW(balanced_accuracy(Labels{}, Labels{}, 2), ValidationError);
    EXPECT_THROW(balanced_accuracy(Labels{0}, Labels{0, 1}, 2), ValidationError);
}

TEST(Predict, ZeroParamsPredictClassZero) {
    HeadParams p(3, 2, 4);
    std::mt19937_64 rng(2);
    const auto d = testutil::random_dataset(rng, 30, 3, 4);
    const auto preds = predict(p, d);
    ASSERT_EQ(preds.size(), d.size());
    for (auto v : preds) EXPECT_EQ(v, 0u);
}

TEST(Predict, MatchesForwardArgmaxOracle) {
    std::mt19937_64 rng(3);
    const auto d = testutil::random_dataset(rng, 100, 8, 5);
    const auto p = init_head(8, 4, 5, 11);
    const auto preds = predict(p, d);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto logits = forward(p, d.row(i)).logits;
        std::size_t best = 0;
        for (std::size_t k = 0; k < logits.size(); ++k)
            if (logits[k] > logits[best]) best = k;
        EXPECT_EQ(preds[i], best);
    }
}

TEST(Predict, DimMismatch) {
    std::mt19937_64 rng(4);
    const auto d = testutil::random_dataset(rng, 5, 3, 2);
    EXPECT_THROW(predict(HeadParams(4, 2, 2), d), ValidationError);
}

TEST(Report, ConfusionOracleThreeClasses) {
    // truth:  0 0 0 1 1 2 2 2 2
    // pred:   0 1 0 1 2 2 2 0 2
    const auto d = testutil::make_dataset(1, {{0}, {0}, {0}, {0}, {0}, {0}, {0}, {0}, {0}},
                                          {0, 0, 0, 1, 1, 2, 2, 2, 2}, {"a", "b", "c"});
    const Labels preds{0, 1, 0, 1, 2, 2, 2, 0, 2};
    const auto part = partition_by_counts({3, 2, 4}, 2);  // common {0, 2}, rare {1}
    const auto r = make_report(preds, d, &part);
    const std::vector<std::vector<std::size_t>> confusion{{2, 1, 0}, {0, 1, 1}, {1, 0, 3}};
    EXPECT_EQ(r.confusion, confusion);
    EXPECT_DOUBLE_EQ(r.balanced_accuracy, (2.0 / 3 + 0.5 + 0.75) / 3);
    EXPECT_DOUBLE_EQ(*r.common_balanced_acc, (2.0 / 3 + 0.75) / 2);
    EXPECT_DOUBLE_EQ(*r.rare_balanced_acc, 0.5);
    EXPECT_DOUBLE_EQ(r.accuracy, 6.0 / 9);
    EXPECT_EQ(r.n_evaluated, 9u);
    std::size_t total = 0;
    for (std::size_t c = 0; c < 3; ++c)
        for (auto v : r.confusion[c]) total += v;
    EXPECT_EQ(total, r.n_evaluated);
}

TEST(Report, PartitionAbsentMeansNoBreakdown) {
    std::mt19937_64 rng(5);
    const auto d = testutil::random_dataset(rng, 50, 4, 3);
    const auto r = evaluate(init_head(4, 2, 3, 1), d);
    EXPECT_FALSE(r.common_balanced_acc);
    EXPECT_FALSE(r.rare_balanced_acc);
    const auto j = to_json(r);
    EXPECT_TRUE(j["common"].is_null());
    for (const char* key : {"balanced_accuracy", "per_class_recall", "confusion", "common", "rare", "n"})
        EXPECT_TRUE(j.contains(key)) << key;
}

TEST(Report, AllCommonPartition) {
    std::mt19937_64 rng(6);
    const auto d = testutil::random_dataset(rng, 80, 4, 3);
    const auto part = partition_by_frequency(d, 0);
    const auto r = evaluate(init_head(4, 2, 3, 1), d, part);
    EXPECT_DOUBLE_EQ(*r.common_balanced_acc, r.balanced_accuracy);
    EXPECT_FALSE(r.rare_balanced_acc);
}

TEST(Report, AbsentClassesListed) {
    const auto d = testutil::make_dataset(1, {{1}, {2}}, {0, 2}, {"a", "b", "c"});
    const auto r = evaluate(HeadParams(1, 1, 3), d);
    EXPECT_EQ(r.absent_classes, (std::vector<std::uint32_t>{1}));
    EXPECT_FALSE(r.per_class_recall[1]);
    EXPECT_TRUE(to_json(r)["per_class_recall"][1].is_null());
}

TEST(CrossModality, SingleDatasetEqualsEvaluate) {
    std::mt19937_64 rng(7);
    const auto d = testutil::random_dataset(rng, 60, 4, 3);
    const auto p = init_head(4, 2, 3, 2);
    const auto reports = cross_modality_eval(p, {d}, d.class_names);
    ASSERT_EQ(reports.size(), 1u);
    EXPECT_EQ(to_json(reports[0]), to_json(evaluate(p, d)));
}

TEST(CrossModality, PermutedClassNamesRejected) {
    std::mt19937_64 rng(8);
    auto d = testutil::random_dataset(rng, 20, 4, 3);
    const auto names = d.class_names;
    std::swap(d.class_names[0], d.class_names[1]);
    EXPECT_THROW(cross_modality_eval(init_head(4, 2, 3, 2), {d}, names), ValidationError);
}

TEST(CrossModality, NoisyModalityDegrades) {
    // Same mixture, second modality with additive noise sigma = 0.5.
    int not_worse = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        synth::MixtureSpec spec;
        spec.dim = 16;
        spec.seed = seed;
        spec.noise_sigma = 0.5;
        for (int c = 0; c < 4; ++c) spec.classes.push_back({150, 1.5, 1.0, {}});
        const auto data = synth::generate(spec);
        TrainConfig cfg;
        cfg.n_max = 40;
        cfg.lr_max = 5e-3;
        cfg.lr_min = 1e-5;
        cfg.batch_size = 64;
        cfg.seed = seed;
        const auto r = train(data.clean.train, cfg);
        const auto reports =
            cross_modality_eval(r.params, {data.clean.test, data.shifted->test}, data.clean.train.class_names);
        EXPECT_EQ(reports[1].modality, "synthetic_shifted");
        not_worse += reports[1].balanced_accuracy <= reports[0].balanced_accuracy;
    }
    EXPECT_GE(not_worse, 4);
}
