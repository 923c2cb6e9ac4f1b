#include <gtest/gtest.h>

#include "fedspectra/cto.hpp"
#include "fedspectra/log.hpp"
#include "oracles.hpp"

using namespace fedspectra;

namespace {

const Shape kInput{1, 8, 8};
const char* kArch = "conv:2:3,relu,pool,flatten,dense";

ClientState make_client(std::uint64_t q_seed = 1, std::uint64_t c_seed = 2, CtoOptions opt = {}) {
    return ClientState(0, Network(kInput, 3, kArch, q_seed), Network(kInput, 3, kArch, c_seed), opt);
}

struct Batch {
    Tensor x;
    std::vector<int> y;
};

Batch random_batch(std::uint64_t seed) {
    Rng rng(seed);
    return {oracle::random_tensor({6, 1, 8, 8}, rng), {0, 1, 2, 0, 1, 2}};
}

DataSplit random_split(std::uint64_t seed, std::size_t n) {
    Rng rng(seed);
    DataSplit s;
    for (std::size_t i = 0; i < n; ++i) {
        s.images.push_back(oracle::random_tensor(kInput, rng));
        s.labels.push_back(static_cast<int>(i % 3));
    }
    return s;
}

}  // namespace

TEST(CtoGuard, DocumentedTransitions) {
    auto c = make_client();
    EXPECT_EQ(c.maybe_advance(0.25, 0.5), CtoPhase::Retrieve);
    EXPECT_EQ(c.maybe_advance(0.35, 0.5), CtoPhase::Reciprocate);
    EXPECT_EQ(c.maybe_advance(0.35, 0.5), CtoPhase::Reciprocate);
    EXPECT_EQ(c.maybe_advance(0.45, 0.5), CtoPhase::Refine);
    EXPECT_EQ(c.maybe_advance(0.0, 1.0), CtoPhase::Refine);
}

TEST(CtoGuard, AdvancesAtMostOneStepPerCall) {
    auto c = make_client();
    EXPECT_EQ(c.maybe_advance(1.0, 0.1), CtoPhase::Reciprocate);
    EXPECT_EQ(c.maybe_advance(1.0, 0.1), CtoPhase::Refine);
}

TEST(CtoGuard, ZeroThresholdsReachRefineInTwoCalls) {
    CtoOptions opt;
    opt.lambda1 = opt.lambda2 = 0.0;
    auto c = make_client(1, 2, opt);
    c.maybe_advance(0.0, 0.9);
    EXPECT_EQ(c.maybe_advance(0.0, 0.9), CtoPhase::Refine);
}

TEST(CtoGuard, UnitThresholdsStayInRetrieveWhileBehind) {
    CtoOptions opt;
    opt.lambda1 = opt.lambda2 = 1.0;
    auto c = make_client(1, 2, opt);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double q = rng.uniform(0.01, 1.0);
        EXPECT_EQ(c.maybe_advance(q * rng.uniform(0.0, 0.999), q), CtoPhase::Retrieve);
    }
}

TEST(CtoReceive, ReplacesDeputyOnlyAndResets) {
    auto c = make_client();
    c.maybe_advance(1, 0);
    c.maybe_advance(1, 0);
    ASSERT_EQ(c.phase(), CtoPhase::Refine);
    const ParameterSet q_before = c.personalized().parameters();
    const ParameterSet first = Network(kInput, 3, kArch, 7).parameters();
    const ParameterSet second = Network(kInput, 3, kArch, 8).parameters();
    c.on_receive(first);
    EXPECT_EQ(c.phase(), CtoPhase::Retrieve);
    EXPECT_TRUE(c.deputy().parameters() == first);
    EXPECT_TRUE(c.personalized().parameters() == q_before);
    c.on_receive(second);
    EXPECT_TRUE(c.deputy().parameters() == second);
    EXPECT_TRUE(c.personalized().parameters() == q_before);
}

TEST(CtoTrain, RetrieveWithIdenticalModelsHasNoKlTerm) {
    auto c = make_client(5, 5);
    const auto b = random_batch(1);
    Network ref(kInput, 3, kArch, 5);
    const double ce = ref.backward(b.x, b.y, LossSpec::ce()).loss;
    const auto losses = c.train_batch(b.x, b.y, 0);
    EXPECT_NEAR(losses.deputy, ce, 1e-9);
    EXPECT_NEAR(losses.personalized, ce, 1e-9);
}

TEST(CtoTrain, RetrieveUpdateOfPersonalizedIgnoresDeputy) {
    auto a = make_client(1, 2);
    auto b = make_client(1, 9);
    const auto batch = random_batch(2);
    a.train_batch(batch.x, batch.y, 0);
    b.train_batch(batch.x, batch.y, 0);
    EXPECT_TRUE(a.personalized().parameters() == b.personalized().parameters());

    Network alone(kInput, 3, kArch, 1);
    const auto g = alone.backward(batch.x, batch.y, LossSpec::ce());
    sgd_step(alone, g.grads, 0, LrSchedule{});
    EXPECT_TRUE(a.personalized().parameters() == alone.parameters());
}

TEST(CtoTrain, UpdateScopePerPhase) {
    const auto batch = random_batch(3);
    for (bool deputy_trains : {true, false}) {
        CtoOptions opt;
        opt.refine_trains_deputy = deputy_trains;
        for (int steps = 0; steps < 3; ++steps) {
            auto c = make_client(1, 2, opt);
            for (int i = 0; i < steps; ++i) c.maybe_advance(1, 0);
            const auto q0 = c.personalized().parameters();
            const auto c0 = c.deputy().parameters();
            c.train_batch(batch.x, batch.y, 0);
            EXPECT_FALSE(c.personalized().parameters() == q0);
            const bool deputy_should_move = c.phase() != CtoPhase::Refine || deputy_trains;
            EXPECT_EQ(!(c.deputy().parameters() == c0), deputy_should_move) << to_string(c.phase());
        }
    }
}

TEST(CtoTrain, ReciprocateUsesPreUpdateTeachers) {
    auto c = make_client(1, 2);
    c.maybe_advance(1, 0);
    const auto batch = random_batch(4);
    Network q(kInput, 3, kArch, 1), d(kInput, 3, kArch, 2);
    const Tensor tq = q.forward(batch.x), tc = d.forward(batch.x);
    const auto gq = q.backward(batch.x, batch.y, LossSpec::ce_plus_kl(tc));
    const auto gc = d.backward(batch.x, batch.y, LossSpec::ce_plus_kl(tq));
    sgd_step(q, gq.grads, 0, LrSchedule{});
    sgd_step(d, gc.grads, 0, LrSchedule{});
    c.train_batch(batch.x, batch.y, 0);
    EXPECT_TRUE(c.personalized().parameters() == q.parameters());
    EXPECT_TRUE(c.deputy().parameters() == d.parameters());
}

TEST(CtoEvaluate, IdenticalModelsScoreEqually) {
    set_warnings_enabled(false);
    auto c = make_client(4, 4);
    const auto split = random_split(5, 30);
    const auto [phi_c, phi_q] = c.evaluate(split, true);
    EXPECT_EQ(phi_c, phi_q);
    EXPECT_EQ(c.best_validation_f1(), phi_q);
    EXPECT_TRUE(c.best_personalized().has_value());
    set_warnings_enabled(true);
}

TEST(CtoEvaluate, PerfectModelScoresOne) {
    // Pixel k lights up for class k; the dense layer reads it off directly.
    Network net({1, 8, 8}, 3, "flatten,dense", 1);
    ParameterSet p = net.parameters();
    Tensor w(p[0].tensor.shape());
    for (std::size_t k = 0; k < 3; ++k) w.at(k, k) = 10.0;
    p[0].tensor = w;
    p[1].tensor = Tensor(p[1].tensor.shape());
    net.set_parameters(p);
    ClientState c(0, net, net, CtoOptions{});
    DataSplit split;
    for (int i = 0; i < 12; ++i) {
        Tensor img({1, 8, 8});
        img.data()[i % 3] = 1.0;
        split.images.push_back(img);
        split.labels.push_back(i % 3);
    }
    const auto [phi_c, phi_q] = c.evaluate(split, false);
    EXPECT_EQ(phi_q, 1.0);
    EXPECT_EQ(phi_c, 1.0);
    EXPECT_FALSE(c.best_personalized().has_value());
}
