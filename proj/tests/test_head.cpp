#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_util.hpp"
#include "transdarc/head.hpp"

using namespace transdarc;

namespace {

HeadParams random_params(std::size_t dim, std::size_t hidden, std::size_t classes, std::mt19937_64& rng) {
    HeadParams p(dim, hidden, classes);
    std::normal_distribution<double> g(0.0, 0.7);
    for (auto& v : p.values()) v = g(rng);
    return p;
}

// Straight-line recomputation of the head: explicit loops over the stored
// input x output matrices, no shared helpers.
std::vector<double> oracle_logits(const HeadParams& p, const std::vector<double>& x) {
    const std::size_t d = p.dim(), h = p.hidden(), c = p.n_classes();
    std::vector<double> hid(h), gate(d), logits(c);
    for (std::size_t j = 0; j < h; ++j) {
        double z = p.attn_b1()[j];
        for (std::size_t i = 0; i < d; ++i) z += x[i] * p.attn_w1()[i * h + j];
        hid[j] = std::max(0.0, z);
    }
    for (std::size_t i = 0; i < d; ++i) {
        double z = p.attn_b2()[i];
        for (std::size_t j = 0; j < h; ++j) z += hid[j] * p.attn_w2()[j * d + i];
        gate[i] = 1.0 / (1.0 + std::exp(-z));
    }
    for (std::size_t k = 0; k < c; ++k) {
        double z = p.cls_b()[k];
        for (std::size_t i = 0; i < d; ++i) z += gate[i] * x[i] * p.cls_w()[i * c + k];
        logits[k] = z;
    }
    return logits;
}

double batch_loss(const HeadParams& p, const std::vector<double>& x, const std::vector<std::uint32_t>& labels) {
    double total = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
        const std::vector<double> row(x.begin() + b * p.dim(), x.begin() + (b + 1) * p.dim());
        const auto z = oracle_logits(p, row);
        double m = z[0];
        for (double v : z) m = std::max(m, v);
        double s = 0.0;
        for (double v : z) s += std::exp(v - m);
        total += m + std::log(s) - z[labels[b]];
    }
    return total / static_cast<double>(labels.size());
}

}  // namespace

TEST(Forward, ZeroAttentionGivesHalfGate) {
    std::mt19937_64 rng(1);
    auto p = random_params(4, 2, 3, rng);
    std::fill(p.attn_w1().begin(), p.attn_w1().end(), 0.0);
    std::fill(p.attn_b1().begin(), p.attn_b1().end(), 0.0);
    std::fill(p.attn_w2().begin(), p.attn_w2().end(), 0.0);
    std::fill(p.attn_b2().begin(), p.attn_b2().end(), 0.0);
    const std::vector<double> x{1.0, -2.0, 0.5, 3.0};
    const auto out = forward(p, x);
    for (double g : out.gate) EXPECT_EQ(g, 0.5);
    for (std::size_t k = 0; k < 3; ++k) {
        double want = p.cls_b()[k];
        for (std::size_t i = 0; i < 4; ++i) want += 0.5 * x[i] * p.cls_w()[i * 3 + k];
        EXPECT_NEAR(out.logits[k], want, 1e-12);
    }
}

TEST(Forward, ZeroInputGivesClassifierBias) {
    std::mt19937_64 rng(2);
    const auto p = random_params(5, 3, 4, rng);
    const auto out = forward(p, std::vector<double>(5, 0.0));
    for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(out.logits[k], p.cls_b()[k]);
}

TEST(Forward, MatchesMatrixOracle) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_params(16, 8, 5, rng);
        std::vector<double> x(16);
        for (auto& v : x) v = g(rng);
        const auto got = forward(p, x).logits;
        const auto want = oracle_logits(p, x);
        for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(got[k], want[k], 1e-6);
    }
}

TEST(Forward, GateStrictlyInsideUnitInterval) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(8, 4, 3, rng);
        std::vector<double> x(8);
        for (auto& v : x) v = g(rng);
        for (double a : forward(p, x).gate) {
            EXPECT_GT(a, 0.0);
            EXPECT_LT(a, 1.0);
        }
    }
}

TEST(Forward, RejectsNonFiniteAndWrongShape) {
    HeadParams p(3, 2, 2);
    EXPECT_THROW(forward(p, std::vector<double>{1, NAN, 0}), ValidationError);
    EXPECT_THROW(forward(p, std::vector<double>{1, 2}), ValidationError);
}

TEST(Loss, UniformLogitsGiveLogClassCount) {
    HeadParams p(4, 2, 7);  // all zeros: every logit is 0
    const std::vector<double> x{1, 2, 3, 4};
    const auto r = loss_and_grad(p, x, std::vector<std::uint32_t>{3});
    EXPECT_NEAR(r.loss, std::log(7.0), 1e-12);
}

TEST(Loss, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 5; ++trial) {
        auto p = random_params(8, 4, 3, rng);
        std::vector<double> x(8 * 6);
        for (auto& v : x) v = g(rng);
        std::vector<std::uint32_t> labels{0, 1, 2, 0, 2, 1};
        const auto analytic = loss_and_grad(p, x, labels);
        EXPECT_NEAR(analytic.loss, batch_loss(p, x, labels), 1e-12);
        const double h = 1e-4;
        for (std::size_t i = 0; i < p.values().size(); ++i) {
            const double orig = p.values()[i];
            p.values()[i] = orig + h;
            const double up = batch_loss(p, x, labels);
            p.values()[i] = orig - h;
            const double down = batch_loss(p, x, labels);
            p.values()[i] = orig;
            const double numeric = (up - down) / (2 * h);
            const double a = analytic.grad.values()[i];
            EXPECT_LT(std::abs(a - numeric) / std::max(1e-3, std::abs(a) + std::abs(numeric)), 1e-4)
                << "parameter " << i;
        }
    }
}

TEST(Loss, DuplicatedBatchLeavesLossAndGradientUnchanged) {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    const auto p = random_params(6, 3, 4, rng);
    std::vector<double> x(6 * 5);
    for (auto& v : x) v = g(rng);
    std::vector<std::uint32_t> labels{0, 3, 1, 1, 2};
    const auto once = loss_and_grad(p, x, labels);
    auto x2 = x;
    x2.insert(x2.end(), x.begin(), x.end());
    auto l2 = labels;
    l2.insert(l2.end(), labels.begin(), labels.end());
    const auto twice = loss_and_grad(p, x2, l2);
    EXPECT_NEAR(once.loss, twice.loss, 1e-12);
    for (std::size_t i = 0; i < once.grad.values().size(); ++i)
        EXPECT_NEAR(once.grad.values()[i], twice.grad.values()[i], 1e-12);
}

TEST(Loss, ErrorPaths) {
    HeadParams p(2, 1, 2);
    EXPECT_THROW(loss_and_grad(p, std::vector<double>{}, std::vector<std::uint32_t>{}), ValidationError);
    EXPECT_THROW(loss_and_grad(p, std::vector<double>{1, 2}, std::vector<std::uint32_t>{2}), ValidationError);
    EXPECT_THROW(loss_and_grad(p, std::vector<double>{1, 2, 3}, std::vector<std::uint32_t>{0}), ValidationError);
}

TEST(HeadInit, FanInScaledWeightsZeroBiases) {
    const auto p = init_head(16, 8, 4, 77);
    for (double v : p.attn_w1()) EXPECT_LE(std::abs(v), 1.0 / 4.0);
    for (double v : p.attn_w2()) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(8.0));
    for (double v : p.cls_w()) EXPECT_LE(std::abs(v), 1.0 / 4.0);
    for (auto seg : {p.attn_b1(), p.attn_b2(), p.cls_b()})
        for (double v : seg) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(init_head(16, 8, 4, 77), p);
    EXPECT_FALSE(init_head(16, 8, 4, 78) == p);
}

TEST(HeadIo, RoundTripThroughFloat) {
    testutil::TempDir tmp("head");
    auto p = init_head(6, 3, 4, 1);
    save_head(p, tmp / "p.darch1");
    const auto back = load_head(tmp / "p.darch1");
    p.round_to_f32();
    EXPECT_EQ(back, p);
    const auto bytes = encode_head(p);
    EXPECT_EQ(bytes.substr(0, 6), "DARCH1");
    EXPECT_EQ(bytes.size(), 6 + 4 * 4 + 4 * p.values().size());
}

TEST(HeadIo, CorruptFilesRejected) {
    auto bytes = encode_head(init_head(4, 2, 3, 1));
    EXPECT_THROW(decode_head(bytes.substr(0, bytes.size() - 3)), LengthError);
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(decode_head(bad), FormatError);
    EXPECT_THROW(decode_head(bytes + "zz"), FormatError);
}
