#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pgmn/numkit.hpp"

using namespace pgmn;

TEST(Affine, ZeroMapGivesZero)
{
    const auto out = affine(Mat64(2, 2), Vec64{5, 1}, Vec64{0, 0});
    EXPECT_EQ(out, (Vec64{0, 0}));
}

TEST(Affine, IdentityAddsBias)
{
    const auto out = affine(Mat64::identity(2), Vec64{3, -4}, Vec64{1, 1});
    EXPECT_EQ(out, (Vec64{4, -3}));
}

TEST(Affine, HandProduct)
{
    const Mat64 w(2, 2, {1, 2, 3, 4});
    const auto out = affine(w, Vec64{1, 1}, Vec64{0.5, -0.5});
    // rows: 1+2+0.5, 3+4-0.5
    EXPECT_DOUBLE_EQ(out[0], 3.5);
    EXPECT_DOUBLE_EQ(out[1], 6.5);
}

TEST(Affine, ShapeMismatchNamesBothShapes)
{
    try {
        (void)affine(Mat64(2, 3), Vec64{1, 2}, Vec64{0, 0});
        FAIL() << "expected DimensionError";
    } catch (const DimensionError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("2"), std::string::npos) << msg;
    }
    EXPECT_THROW((void)affine(Mat64(2, 2), Vec64{1, 2}, Vec64{0}), DimensionError);
}

TEST(Affine, LinearInInput)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t r = 1 + trial % 5;
        const std::size_t c = 1 + (trial / 5) % 6;
        Mat64 w(r, c);
        for (double& v : w.values) {
            v = u(rng);
        }
        Vec64 x(c);
        Vec64 y(c);
        for (std::size_t i = 0; i < c; ++i) {
            x[i] = u(rng);
            y[i] = u(rng);
        }
        const double a = u(rng);
        const double b = u(rng);
        Vec64 combo(c);
        for (std::size_t i = 0; i < c; ++i) {
            combo[i] = a * x[i] + b * y[i];
        }
        const Vec64 zero(r);
        const auto lhs = affine(w, combo, zero);
        const auto fx = affine(w, x, zero);
        const auto fy = affine(w, y, zero);
        for (std::size_t i = 0; i < r; ++i) {
            const double rhs = a * fx[i] + b * fy[i];
            const double scale = std::max({1.0, std::abs(lhs[i]), std::abs(a * fx[i]), std::abs(b * fy[i])});
            EXPECT_LE(std::abs(lhs[i] - rhs), 1e-12 * scale);
        }
    }
}

TEST(Relu, Examples)
{
    EXPECT_EQ(relu(Vec64{0, 0}), (Vec64{0, 0}));
    EXPECT_EQ(relu(Vec64{-2, 3}), (Vec64{0, 3}));
    const auto tiny = relu(Vec64{-1e-12, 1e-12});
    EXPECT_EQ(tiny[0], 0.0);
    EXPECT_EQ(tiny[1], 1e-12);
}

TEST(Relu, SubgradientAtKinkIsZero)
{
    EXPECT_EQ(relu_grad(0.0), 0.0);
    EXPECT_EQ(relu_grad(-1.0), 0.0);
    EXPECT_EQ(relu_grad(1e-300), 1.0);
}

TEST(Mse, Examples)
{
    EXPECT_EQ(mse(5, 5), 0.0);
    EXPECT_EQ(mse(3, 1), 4.0);
    EXPECT_EQ(mse(-2, 2), 16.0);
}

TEST(Sgd, Examples)
{
    Vec64 p{1.0};
    sgd_step(p, Vec64{0.0}, 0.1);
    EXPECT_EQ(p[0], 1.0);

    p = Vec64{1.0};
    sgd_step(p, Vec64{2.0}, 0.1);
    EXPECT_DOUBLE_EQ(p[0], 0.8);

    p = Vec64{-0.5};
    sgd_step(p, Vec64{-1.0}, 0.5);
    EXPECT_DOUBLE_EQ(p[0], 0.0);
}

TEST(Sgd, RejectsBadInputs)
{
    Vec64 p{1.0, 2.0};
    EXPECT_THROW(sgd_step(p, Vec64{1.0}, 0.1), DimensionError);
    EXPECT_THROW(sgd_step(p, Vec64{1.0, 1.0}, 0.0), std::invalid_argument);
}

TEST(Sgd, TwoStepsEqualOneDoubledStep)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        Mat64 p(3, 4);
        Mat64 g(3, 4);
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            // Dyadic values keep both paths exact in binary floating point.
            p.values[i] = std::ldexp(std::round(u(rng) * 64.0), -6);
            g.values[i] = std::ldexp(std::round(u(rng) * 64.0), -6);
        }
        const double eta = 0.125;
        Mat64 twice = p;
        sgd_step(twice, g, eta);
        sgd_step(twice, g, eta);
        Mat64 g2 = g;
        for (double& v : g2.values) {
            v *= 2.0;
        }
        Mat64 once = p;
        sgd_step(once, g2, eta);
        EXPECT_EQ(twice, once);
    }
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged)
{
    Vec64 p{0.3, -1.2, 5.0};
    AdamState st(0.01);
    for (int i = 0; i < 5; ++i) {
        adam_step(p, Vec64{0, 0, 0}, st);
    }
    EXPECT_EQ(p, (Vec64{0.3, -1.2, 5.0}));
    EXPECT_EQ(st.step, 5);
}

TEST(Adam, FirstStepMovesByLearningRate)
{
    Vec64 p{1.0};
    AdamState st(0.001);
    adam_step(p, Vec64{1.0}, st);
    // m_hat = 1, v_hat = 1: step = 0.001 * 1 / (1 + 1e-8)
    const double expected = 1.0 - 0.001 / (1.0 + 1e-8);
    EXPECT_NEAR(p[0], expected, 1e-15);
    EXPECT_NEAR(1.0 - p[0], 0.001, 1e-10);
}

TEST(Adam, SecondIdenticalStepWithinTenPercent)
{
    Vec64 p{0.0};
    AdamState st(0.001);
    adam_step(p, Vec64{0.7}, st);
    const double first = -p[0];
    adam_step(p, Vec64{0.7}, st);
    const double second = -p[0] - first;
    EXPECT_NEAR(second / first, 1.0, 0.1);
}

TEST(Adam, ShapeMismatchThrows)
{
    Vec64 p{1.0};
    AdamState st(0.001);
    EXPECT_THROW(adam_step(p, Vec64{1.0, 2.0}, st), DimensionError);
}

TEST(FiniteDiff, Square)
{
    const auto g = finite_diff_grad([](const Vec64& t) { return t[0] * t[0]; }, Vec64{3.0}, 1e-5);
    EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDiff, ConstantIsZero)
{
    const auto g = finite_diff_grad([](const Vec64&) { return 4.2; }, Vec64{1, 2, 3}, 1e-5);
    for (double v : g.values) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(FiniteDiff, ReluAwayFromKink)
{
    const auto g = finite_diff_grad([](const Vec64& t) { return relu(t)[0]; }, Vec64{1.0}, 1e-5);
    EXPECT_NEAR(g[0], 1.0, 1e-6);
}

TEST(FiniteDiff, NonFiniteEvaluationThrows)
{
    const auto f = [](const Vec64& t) { return t[0] > 0.0 ? std::log(0.0) : 0.0; };
    EXPECT_THROW((void)finite_diff_grad(f, Vec64{1.0}, 1e-5), NumericError);
    EXPECT_THROW((void)finite_diff_grad([](const Vec64&) { return 0.0; }, Vec64{1.0}, 0.0), std::invalid_argument);
}

// Composite relu(affine) -> dot -> mse, gradients by hand versus central differences.
TEST(FiniteDiff, MatchesHandGradientsOfSmallNetwork)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int checked = 0;
    while (checked < 1000) {
        Mat64 w(3, 2);
        for (double& v : w.values) {
            v = u(rng);
        }
        const Vec64 x{u(rng), u(rng)};
        const Vec64 b{u(rng), u(rng), u(rng)};
        const Vec64 v{u(rng), u(rng), u(rng)};
        const double y = u(rng);
        const auto pre = affine(w, x, b);
        if (std::abs(pre[0]) < 1e-3 || std::abs(pre[1]) < 1e-3 || std::abs(pre[2]) < 1e-3) {
            continue;
        }
        const auto loss = [&](const Mat64& wp) { return mse(y, dot(v.values, relu(affine(wp, x, b)).values)); };
        const double yhat = dot(v.values, relu(pre).values);
        Mat64 analytic(3, 2);
        for (std::size_t r = 0; r < 3; ++r) {
            for (std::size_t c = 0; c < 2; ++c) {
                analytic(r, c) = 2.0 * (yhat - y) * v[r] * relu_grad(pre[r]) * x[c];
            }
        }
        const auto numeric = finite_diff_grad(loss, w, 1e-5);
        for (std::size_t i = 0; i < 6; ++i) {
            const double a = analytic.values[i];
            const double n = numeric.values[i];
            EXPECT_LE(std::abs(a - n), 1e-8 + 1e-5 * std::max(std::abs(a), std::abs(n)));
        }
        ++checked;
    }
}

TEST(Determinism, RepeatedOperationsAreBitIdentical)
{
    const Mat64 w(2, 3, {0.1, -0.7, 1.3, 2.2, 0.01, -5.5});
    const Vec64 x{1.0 / 3.0, -2.0 / 7.0, 0.9};
    const Vec64 b{0.25, -0.125};
    EXPECT_EQ(affine(w, x, b), affine(w, x, b));
    Vec64 p1{0.5, -0.5};
    Vec64 p2 = p1;
    AdamState s1(0.01);
    AdamState s2(0.01);
    for (int i = 0; i < 10; ++i) {
        adam_step(p1, Vec64{0.3, -0.1 * i}, s1);
        adam_step(p2, Vec64{0.3, -0.1 * i}, s2);
    }
    EXPECT_EQ(p1, p2);
}
