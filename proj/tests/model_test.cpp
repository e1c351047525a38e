#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pgmn/model.hpp"
#include "pgmn/train.hpp"
#include "support.hpp"

using namespace pgmn;

namespace {

PgmnParams zero_params(PgmnDims dims = {1, 1, 1})
{
    PgmnParams p(dims);
    p.set_zero();
    return p;
}

PgmnParams unit_params()
{
    auto p = zero_params();
    for (auto t : p.tensors()) {
        std::fill(t.begin(), t.end(), 1.0);
    }
    p.b_d[0] = p.b_e[0] = p.b_zd[0] = p.b_ze[0] = 0.0;
    p.b_pi1 = p.b_pi2 = p.b_pi3 = 0.0;
    p.memory[0] = 0.0;
    return p;
}

MaskedSample sample(double x_d, int m_d, double x_e, int m_e, std::optional<double> y = std::nullopt)
{
    MaskedSample s;
    s.x_d = x_d;
    s.m_d = m_d;
    s.x_e = x_e;
    s.m_e = m_e;
    s.y = y;
    return s;
}

} // namespace

TEST(InitParams, MemoryStartsAtZero)
{
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        const auto p = init_params({1, 1, 1}, seed);
        EXPECT_EQ(p.memory[0], 0.0);
    }
}

TEST(InitParams, SameSeedIsBitIdentical)
{
    EXPECT_EQ(init_params({4, 2, 8}, 5), init_params({4, 2, 8}, 5));
    EXPECT_NE(init_params({4, 2, 8}, 5), init_params({4, 2, 8}, 6));
}

TEST(InitParams, ShapesFollowDims)
{
    const auto p = init_params({4, 2, 8}, 1);
    EXPECT_EQ(p.w_zd.rows, 8u);
    EXPECT_EQ(p.w_zd.cols, 6u);
    EXPECT_EQ(p.w_ze.cols, 6u);
    EXPECT_EQ(p.w_d.rows, 4u);
    EXPECT_EQ(p.w_d.cols, 2u);
    EXPECT_EQ(p.w_pi1.size(), 8u);
    EXPECT_EQ(p.w_pi3.size(), 2u);
}

TEST(InitParams, WeightsWithinFanInBoundAndBiasesZero)
{
    const PgmnDims dims{5, 3, 7};
    const auto p = init_params(dims, 12);
    const auto within = [](const std::vector<double>& v, double fan_in) {
        const double bound = std::sqrt(1.0 / fan_in);
        return std::all_of(v.begin(), v.end(), [bound](double x) { return std::abs(x) <= bound; });
    };
    EXPECT_TRUE(within(p.w_d.values, 2));
    EXPECT_TRUE(within(p.w_zd.values, 8));
    EXPECT_TRUE(within(p.w_pi1.values, 7));
    EXPECT_TRUE(within(p.w_pi3.values, 3));
    EXPECT_EQ(p.b_d, Vec64(5));
    EXPECT_EQ(p.b_zd, Vec64(7));
    EXPECT_EQ(p.b_pi1, 0.0);
    EXPECT_EQ(p.b_pi3, 0.0);
}

TEST(InitParams, RandomMemoryOption)
{
    const auto p = init_params({2, 4, 2}, 3, InitOptions{.random_memory = true});
    EXPECT_NE(p.memory, Vec64(4));
}

TEST(InitParams, InvalidDimsThrow)
{
    EXPECT_THROW((void)init_params({0, 1, 1}, 1), std::invalid_argument);
    EXPECT_THROW((void)init_params({1, 1, 0}, 1), std::invalid_argument);
}

TEST(Projection, ZeroWeightsGiveZero)
{
    const auto p = zero_params({3, 1, 1});
    EXPECT_EQ(project_dl(12.0, 1, p), Vec64(3));
    EXPECT_EQ(project_ep(-4.0, 0, p), Vec64(3));
}

TEST(Projection, DataDrivenHandExamples)
{
    auto p = zero_params();
    p.w_d = Mat64(1, 2, {1, -1});
    EXPECT_EQ(project_dl(3, 1, p), Vec64{2});
    EXPECT_EQ(project_dl(0, 1, p), Vec64{0});
}

TEST(Projection, PhysicsHandExamples)
{
    auto p = zero_params();
    p.w_e = Mat64(1, 2, {2, 0});
    p.b_e = Vec64{1};
    EXPECT_EQ(project_ep(2, 0, p), Vec64{5});
    p.w_e = Mat64(1, 2, {0, 3});
    p.b_e = Vec64{0};
    EXPECT_EQ(project_ep(7, 0, p), Vec64{0});
    EXPECT_EQ(project_ep(7, 1, p), Vec64{3});
}

TEST(Projection, NonFiniteInputThrows)
{
    const auto p = zero_params();
    EXPECT_THROW((void)project_dl(std::nan(""), 1, p), std::exception);
}

TEST(Memory, IdentityRead)
{
    auto p = zero_params({1, 2, 1});
    EXPECT_EQ(retrieve_memory(p), (Vec64{0, 0}));
    p.memory = Vec64{1.5, -2};
    EXPECT_EQ(retrieve_memory(p), (Vec64{1.5, -2}));
}

TEST(Memory, ReadReflectsOptimizerUpdate)
{
    auto p = init_params({2, 2, 2}, 4);
    Gradients g(zeros_like, p);
    g.memory = Vec64{1.0, -1.0};
    sgd_step(p, g, 0.5);
    EXPECT_EQ(retrieve_memory(p), (Vec64{-0.5, 0.5}));
}

TEST(Forward, ZeroNetworkPredictsZero)
{
    const auto t = forward(sample(3, 1, 4, 1), zero_params({4, 3, 5}));
    EXPECT_EQ(t.yhat, 0.0);
}

TEST(Forward, ConstantPathSumsBiases)
{
    auto p = zero_params({2, 2, 2});
    p.b_pi1 = 2;
    p.b_pi2 = 3;
    p.b_pi3 = -1;
    EXPECT_EQ(forward(sample(10, 1, -3, 0), p).yhat, 4.0);
}

TEST(Forward, UnitWeightsHandTrace)
{
    const auto t = forward(sample(1, 1, 1, 1), unit_params());
    EXPECT_EQ(t.h_d, Vec64{2});
    EXPECT_EQ(t.h_e, Vec64{2});
    EXPECT_EQ(t.e, Vec64{0});
    EXPECT_EQ(t.z_d, Vec64{2});
    EXPECT_EQ(t.z_e, Vec64{2});
    EXPECT_EQ(t.w_d, 2.0);
    EXPECT_EQ(t.w_e, 2.0);
    EXPECT_EQ(t.delta, 0.0);
    EXPECT_EQ(t.yhat, 4.0);
}

TEST(Forward, NonFiniteStageIsNamed)
{
    auto p = unit_params();
    p.b_pi2 = std::numeric_limits<double>::infinity();
    try {
        (void)forward(sample(1, 1, 1, 1), p);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("w_e"), std::string::npos) << e.what();
    }
}

TEST(Forward, OutputIsSumOfStreamsBitExactly)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 300; ++i) {
        const auto p = init_params({3, 2, 4}, static_cast<std::uint64_t>(i), InitOptions{.random_memory = true});
        const auto t = forward(sample(u(rng), i % 2, u(rng), (i / 2) % 2), p);
        EXPECT_EQ(t.yhat, t.w_d + t.w_e + t.delta);
        for (const Vec64* v : {&t.h_d, &t.h_e, &t.z_d, &t.z_e}) {
            for (double x : v->values) {
                EXPECT_GE(x, 0.0);
            }
        }
    }
}

TEST(Backward, PerfectFitHasZeroLossAndGradient)
{
    const auto p = init_params({3, 2, 3}, 8, InitOptions{.random_memory = true});
    auto s = sample(0.4, 1, -0.2, 1);
    s.y = forward(s, p).yhat;
    const auto [loss, g] = backward(forward(s, p), s, p);
    EXPECT_EQ(loss, 0.0);
    for (auto t : g.tensors()) {
        for (double v : t) {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(Backward, OutputBiasGradientsEqualResidualTimesTwo)
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 100; ++i) {
        const auto p = init_params({2, 3, 2}, static_cast<std::uint64_t>(i), InitOptions{.random_memory = true});
        const auto s = sample(u(rng), 1, u(rng), i % 2, u(rng));
        const auto t = forward(s, p);
        const auto g = backward(t, s, p).second;
        const double expected = 2.0 * (t.yhat - *s.y);
        EXPECT_EQ(g.b_pi1, expected);
        EXPECT_EQ(g.b_pi2, expected);
        EXPECT_EQ(g.b_pi3, expected);
    }
}

TEST(Backward, MissingTargetIsContractViolation)
{
    const auto p = init_params({1, 1, 1}, 1);
    const auto s = sample(1, 1, 1, 1);
    EXPECT_THROW((void)backward(forward(s, p), s, p), std::logic_error);
    auto proxy = s;
    proxy.y_is_proxy = true;
    EXPECT_NO_THROW((void)backward(forward(proxy, p), proxy, p));
}

TEST(Backward, MatchesCentralDifferencesOverRandomConfigs)
{
    const auto stats = testkit::gradient_sweep(200, 2024);
    EXPECT_EQ(stats.configs, 200u);
    EXPECT_EQ(stats.failures, 0u) << "worst relative error " << stats.worst_rel;
}

TEST(Backward, AblatedVariantNeverTouchesMemory)
{
    auto p = init_params({3, 2, 3}, 9, InitOptions{.memory_unit = false});
    const auto s = sample(0.5, 1, 1.5, 1, 3.0);
    const auto g = backward(forward(s, p), s, p).second;
    EXPECT_EQ(g.memory, Vec64(2));
    EXPECT_EQ(g.w_pi3, Vec64(2));
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 3; c < 5; ++c) {
            EXPECT_EQ(g.w_zd(r, c), 0.0);
            EXPECT_EQ(g.w_ze(r, c), 0.0);
        }
    }
    // Garbage in the memory slot must not change the prediction.
    const double before = forward(s, p).yhat;
    p.memory = Vec64{1e6, -1e6};
    EXPECT_EQ(forward(s, p).yhat, before);
}

TEST(Masks, FlippingMaskMattersOnlyThroughMaskColumn)
{
    auto p = init_params({4, 2, 4}, 17, InitOptions{.random_memory = true});
    const auto on = sample(0.7, 1, 0.2, 1);
    const auto off = sample(0.7, 0, 0.2, 1);
    p.w_d(0, 1) = 0.9;
    EXPECT_NE(project_dl(on.x_d, on.m_d, p), project_dl(off.x_d, off.m_d, p));
    for (std::size_t r = 0; r < p.w_d.rows; ++r) {
        p.w_d(r, 1) = 0.0;
    }
    EXPECT_EQ(forward(on, p).yhat, forward(off, p).yhat);
}

TEST(Unboundedness, OffsetCanPushOutsideInputRange)
{
    auto p = unit_params();
    const auto s = sample(1, 1, 1, 1);
    // Baseline prediction is 4 for inputs of 1.
    p.b_pi3 = 10;
    EXPECT_GT(forward(s, p).yhat, std::max(s.x_d, s.x_e));
    p.b_pi3 = -10;
    EXPECT_LT(forward(s, p).yhat, std::min(s.x_d, s.x_e));
}

TEST(BiasCorrection, FirstSmallStepReducesTotalError)
{
    std::vector<MaskedSample> data;
    for (int i = 0; i < 40; ++i) {
        const double x = -1.0 + 0.05 * i;
        data.push_back(sample(x, 1, x, 1, x + 2.0));
    }
    auto p = init_params({4, 3, 4}, 31);
    const double before = mean_loss(data, p);
    const auto g = batch_gradients(data, p, true).second;
    sgd_step(p, g, 1e-4);
    EXPECT_LT(mean_loss(data, p), before);
}

TEST(Predict, ZeroParamsAndPurity)
{
    const std::vector<MaskedSample> xs{sample(1, 1, 2, 1), sample(-3, 0, 0, 1)};
    EXPECT_EQ(predict(xs, zero_params()), (std::vector<double>{0.0, 0.0}));
    const auto p = init_params({3, 3, 3}, 2, InitOptions{.random_memory = true});
    const auto copy = p;
    EXPECT_EQ(predict(xs, p), predict(xs, p));
    EXPECT_EQ(p, copy);
}
