#include <gtest/gtest.h>

#include <numeric>

#include "fedspectra/errors.hpp"
#include "fedspectra/log.hpp"
#include "fedspectra/metrics.hpp"
#include "oracles.hpp"

using namespace fedspectra;

namespace {

std::vector<std::vector<double>> dense_cm(const ConfusionMatrix& cm) {
    std::vector<std::vector<double>> out(cm.classes(), std::vector<double>(cm.classes()));
    for (std::size_t t = 0; t < cm.classes(); ++t)
        for (std::size_t p = 0; p < cm.classes(); ++p) out[t][p] = static_cast<double>(cm(t, p));
    return out;
}

ConfusionMatrix random_cm(std::size_t k, Rng& rng) {
    std::vector<std::uint64_t> counts(k * k);
    for (auto& c : counts) c = rng.uniform() < 0.2 ? 0 : rng.below(20);
    if (std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) == 0) counts[0] = 1;
    return ConfusionMatrix(k, counts);
}

class QuietWarnings : public ::testing::Test {
protected:
    void SetUp() override { set_warnings_enabled(false); }
    void TearDown() override { set_warnings_enabled(true); }
};

}  // namespace

using Metrics = QuietWarnings;

TEST_F(Metrics, DiagonalIsPerfect) {
    const ConfusionMatrix cm(3, {4, 0, 0, 0, 2, 0, 0, 0, 7});
    EXPECT_EQ(macro_f1(cm), 1.0);
    EXPECT_EQ(accuracy(cm), 1.0);
}

TEST_F(Metrics, AllWrongBinary) {
    EXPECT_EQ(macro_f1(ConfusionMatrix(2, {0, 5, 5, 0})), 0.0);
}

TEST_F(Metrics, HandThreeClassCase) {
    const ConfusionMatrix cm(3, {5, 1, 0, 1, 3, 1, 0, 2, 4});
    // Columns sum to 6, 6, 5; rows to 6, 5, 6.
    const double p[] = {5.0 / 6, 3.0 / 6, 4.0 / 5};
    const double r[] = {5.0 / 6, 3.0 / 5, 4.0 / 6};
    double f1 = 0, pm = 0, rm = 0;
    for (int c = 0; c < 3; ++c) {
        f1 += 2 * p[c] * r[c] / (p[c] + r[c]);
        pm += p[c];
        rm += r[c];
    }
    EXPECT_NEAR(macro_f1(cm), f1 / 3, 1e-12);
    EXPECT_NEAR(macro_precision(cm), pm / 3, 1e-12);
    EXPECT_NEAR(macro_recall(cm), rm / 3, 1e-12);
    EXPECT_NEAR(accuracy(cm), 12.0 / 17.0, 1e-12);
}

TEST_F(Metrics, MacroF1MatchesOracleOnRandomMatrices) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto cm = random_cm(2 + rng.below(4), rng);
        EXPECT_NEAR(macro_f1(cm), oracle::macro_f1(dense_cm(cm)), 1e-12);
        const auto scores = per_class_scores(cm);
        const auto ref = oracle::per_class(dense_cm(cm));
        for (std::size_t c = 0; c < ref.size(); ++c) {
            EXPECT_NEAR(scores[c].precision, ref[c].precision, 1e-12);
            EXPECT_NEAR(scores[c].recall, ref[c].recall, 1e-12);
        }
    }
}

TEST_F(Metrics, MacroF1InvariantUnderClassPermutation) {
    Rng rng(2);
    for (int i = 0; i < 20; ++i) {
        const std::size_t k = 4;
        const auto cm = random_cm(k, rng);
        std::vector<std::size_t> perm{2, 0, 3, 1};
        ConfusionMatrix permuted(k);
        for (std::size_t t = 0; t < k; ++t)
            for (std::size_t p = 0; p < k; ++p) permuted.add(perm[t], perm[p], cm(t, p));
        EXPECT_NEAR(macro_f1(permuted), macro_f1(cm), 1e-12);
    }
}

TEST_F(Metrics, AccuracyIsTraceOverTotal) {
    Rng rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto cm = random_cm(3, rng);
        double trace = 0;
        for (std::size_t c = 0; c < 3; ++c) trace += static_cast<double>(cm(c, c));
        EXPECT_DOUBLE_EQ(accuracy(cm), trace / static_cast<double>(cm.total()));
    }
}

TEST_F(Metrics, FromPredictions) {
    const std::vector<int> truth{0, 1, 2, 2}, pred{0, 2, 2, 1};
    const auto cm = ConfusionMatrix::from_predictions(3, truth, pred);
    EXPECT_EQ(cm(0, 0), 1u);
    EXPECT_EQ(cm(1, 2), 1u);
    EXPECT_EQ(cm(2, 2), 1u);
    EXPECT_EQ(cm(2, 1), 1u);
}

TEST_F(Metrics, AucExamples) {
    const std::vector<double> sep{0.1, 0.2, 0.8, 0.9};
    const bool pos[] = {false, false, true, true};
    EXPECT_EQ(one_vs_rest_auc(sep, pos), 1.0);
    const std::vector<double> flat(4, 0.5);
    EXPECT_EQ(one_vs_rest_auc(flat, pos), 0.5);

    const std::vector<double> six{0.9, 0.4, 0.6, 0.6, 0.3, 0.7};
    const std::vector<bool> lab{true, true, false, true, false, false};
    const bool lab_arr[] = {true, true, false, true, false, false};
    EXPECT_NEAR(one_vs_rest_auc(six, lab_arr), oracle::pairwise_auc(six, lab), 1e-12);
}

TEST_F(Metrics, AucMatchesAllPairsOracle) {
    Rng rng(4);
    for (int i = 0; i < 100; ++i) {
        const std::size_t n = 2 + rng.below(49);
        std::vector<double> scores(n);
        std::vector<bool> positive(n);
        std::unique_ptr<bool[]> flags(new bool[n]);
        for (std::size_t j = 0; j < n; ++j) {
            scores[j] = static_cast<double>(rng.below(10)) / 10.0;  // coarse grid forces ties
            positive[j] = rng.uniform() < 0.4;
            flags[j] = positive[j];
        }
        positive[0] = flags[0] = true;
        positive[1] = flags[1] = false;
        EXPECT_NEAR(one_vs_rest_auc(scores, {flags.get(), n}), oracle::pairwise_auc(scores, positive), 1e-12);
    }
}

TEST_F(Metrics, AucInvariantUnderMonotoneTransform) {
    Rng rng(5);
    std::vector<double> s(30), t(30);
    std::unique_ptr<bool[]> pos(new bool[30]);
    for (int j = 0; j < 30; ++j) {
        s[j] = rng.uniform(-2, 2);
        t[j] = std::exp(3 * s[j]) + 1;
        pos[j] = j % 3 == 0;
    }
    EXPECT_EQ(one_vs_rest_auc(s, {pos.get(), 30}), one_vs_rest_auc(t, {pos.get(), 30}));
}

TEST_F(Metrics, AucUnscorable) {
    const std::vector<double> s{0.1, 0.2};
    const bool all[] = {true, true};
    EXPECT_LT(one_vs_rest_auc(s, all), 0);
}

TEST_F(Metrics, MacroAucSkipsMissingClass) {
    // Class 2 never appears, so only classes 0 and 1 are scored.
    const Tensor scores({4, 3}, {0.9, 0.1, 0, 0.8, 0.2, 0, 0.3, 0.7, 0, 0.1, 0.9, 0});
    const std::vector<int> labels{0, 0, 1, 1};
    EXPECT_EQ(macro_auc(scores, labels), 1.0);
    const std::vector<int> one_class{0, 0, 0, 0};
    EXPECT_THROW(macro_auc(scores, one_class), DomainError);
}
