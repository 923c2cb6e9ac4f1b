#include <gtest/gtest.h>

#include <numbers>

#include "fedspectra/fft.hpp"
#include "oracles.hpp"

using namespace fedspectra;

namespace {

double max_err_vs_naive(const Tensor& m, const ComplexMatrix& f) {
    const auto ref = oracle::naive_dft2(m);
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i)
        worst = std::max(worst, std::abs(cplx(f.re[i], f.im[i]) - ref[i]));
    return worst;
}

}  // namespace

TEST(Fft, TwoPointByHand) {
    const auto f = fft2d(Tensor::matrix(1, 2, {1, 3}));
    EXPECT_NEAR(f.at(0, 0).real(), 4, 1e-12);
    EXPECT_NEAR(f.at(0, 0).imag(), 0, 1e-12);
    EXPECT_NEAR(f.at(0, 1).real(), -2, 1e-12);
    EXPECT_NEAR(f.at(0, 1).imag(), 0, 1e-12);
}

TEST(Fft, ConstantHasOnlyDc) {
    const Tensor m({3, 5}, 2.5);
    const auto f = fft2d(m);
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 5; ++c) {
            const cplx want = (r == 0 && c == 0) ? cplx(2.5 * 15, 0) : cplx(0, 0);
            EXPECT_LE(std::abs(f.at(r, c) - want), 1e-12);
        }
    }
}

TEST(Fft, MatchesNaiveOnSmallShapes) {
    Rng rng(1);
    for (std::size_t r = 1; r <= 8; ++r) {
        for (std::size_t c = 1; c <= 8; ++c) {
            const Tensor m = oracle::random_tensor({r, c}, rng);
            EXPECT_LE(max_err_vs_naive(m, fft2d(m)), 1e-9 * std::max(1.0, m.max_abs())) << r << "x" << c;
        }
    }
}

TEST(Fft, MatchesNaiveOnRandom5x7) {
    Rng rng(57);
    const Tensor m = oracle::random_tensor({5, 7}, rng, -10, 10);
    EXPECT_LE(max_err_vs_naive(m, fft2d(m)), 1e-9);
}

TEST(Fft, SerialAndParallelAgreeBitwise) {
    Rng rng(2);
    for (auto [r, c] : {std::pair<std::size_t, std::size_t>{16, 16}, {24, 9}, {31, 64}}) {
        const Tensor m = oracle::random_tensor({r, c}, rng);
        const auto a = fft2d(m);
        const auto b = fft2d_serial(m);
        EXPECT_EQ(a.re, b.re);
        EXPECT_EQ(a.im, b.im);
    }
}

TEST(Fft, PlanInverseUndoesForward) {
    Rng rng(3);
    for (std::size_t n : {1u, 2u, 3u, 7u, 16u, 100u}) {
        FftPlan plan(n);
        std::vector<cplx> x(n), y;
        for (auto& v : x) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        y = x;
        plan.forward(y);
        plan.inverse(y);
        for (std::size_t i = 0; i < n; ++i) EXPECT_LE(std::abs(y[i] / static_cast<double>(n) - x[i]), 1e-12);
    }
}

TEST(Fft, RealRoundtrip) {
    Rng rng(4);
    const Tensor m = oracle::random_tensor({12, 10}, rng);
    EXPECT_LE(max_abs_diff(ifft2d(fft2d(m)), m), 1e-12);
    EXPECT_LE(max_abs_diff(ifft2d_serial(fft2d_serial(m)), m), 1e-12);
}

TEST(Fft, AmplitudePhaseExamples) {
    ComplexMatrix f(1, 2);
    f.set(0, 0, {0, 1});
    f.set(0, 1, {-2, 0});
    const auto [amp, phase] = to_amplitude_phase(f);
    EXPECT_DOUBLE_EQ(amp.at(0, 0), 1);
    EXPECT_DOUBLE_EQ(phase.at(0, 0), std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(amp.at(0, 1), 2);
    EXPECT_DOUBLE_EQ(phase.at(0, 1), std::numbers::pi);
}

TEST(Fft, AmplitudePhaseRoundtrip) {
    Rng rng(6);
    ComplexMatrix f(6, 5);
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.re[i] = rng.uniform(-3, 3);
        f.im[i] = rng.uniform(-3, 3);
    }
    const auto [amp, phase] = to_amplitude_phase(f);
    const auto g = from_amplitude_phase(amp, phase);
    for (std::size_t i = 0; i < f.size(); ++i) {
        EXPECT_NEAR(g.re[i], f.re[i], 1e-9);
        EXPECT_NEAR(g.im[i], f.im[i], 1e-9);
    }
}
