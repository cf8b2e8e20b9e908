#include <gtest/gtest.h>

#include <random>

#include "gradsal/error.hpp"
#include "gradsal/nn.hpp"
#include "gradsal/saliency.hpp"
#include "test_util.hpp"

using namespace gradsal;
using gradsal::testing::random_image;

TEST(Cost, PenaltyVanishesAtBaseline) {
    const Logits o{0.3, -1.2, 2.5};
    for (double gamma : {0.0, 1.0, 7.5}) {
        for (std::size_t l = 0; l < 3; ++l) EXPECT_EQ(cost(o, o, l, gamma), o[l]);
    }
}

TEST(Cost, GammaZeroIgnoresOtherOutputs) {
    EXPECT_EQ(cost({0.4, 9.0, -3.0}, {0.0, 0.0, 0.0}, 0, 0.0), 0.4);
}

TEST(Cost, HandExample) {
    EXPECT_DOUBLE_EQ(cost({1.5, 2.0}, {1.0, 1.0}, 0, 2.0), 2.5);
    EXPECT_DOUBLE_EQ(clamp_penalty({1.5, 2.0}, {1.0, 1.0}, 0), 1.0);
}

TEST(OutputError, OneHotAtBaseline) {
    const Logits o{0.3, -1.2, 2.5};
    EXPECT_EQ(output_error(o, o, 1, 3.0), (std::vector<double>{0.0, 1.0, 0.0}));
    EXPECT_EQ(output_error({5.0, 1.0, -2.0}, o, 2, 0.0), (std::vector<double>{0.0, 0.0, 1.0}));
}

TEST(OutputError, HandExample) {
    EXPECT_EQ(output_error({1.5, 2.0}, {1.0, 1.0}, 0, 2.0), (std::vector<double>{1.0, 2.0}));
}

TEST(GdStep, NegativeGradientLeavesImage) {
    std::mt19937_64 rng(1);
    const ImageRGB x = random_image(4, 4, rng);
    EXPECT_EQ(gd_step(x, Tensor(x.shape(), -2.0), 0.5), x);
}

TEST(GdStep, Arithmetic) {
    const ImageRGB x = make_image(3, 3, 0.5);
    const ImageRGB y = gd_step(x, Tensor(x.shape(), 1.0), 0.1);
    for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 0.4);
}

TEST(GdStep, ClampsAtZero) {
    const ImageRGB x = make_image(2, 2, 0.05);
    const ImageRGB y = gd_step(x, Tensor(x.shape(), 1.0), 0.1);
    for (double v : y.values()) EXPECT_EQ(v, 0.0);
}

TEST(GdStep, NeverIncreases) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const ImageRGB x = random_image(5, 6, rng);
        Tensor g(x.shape());
        for (double& v : g.values()) v = n(rng);
        const ImageRGB y = gd_step(x, g, 0.2);
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_LE(y[i], x[i]);
            EXPECT_GE(y[i], 0.0);
        }
    }
}

TEST(GdStep, NonFiniteGradientIsNumericalError) {
    const ImageRGB x = make_image(2, 2, 0.5);
    Tensor g(x.shape(), 0.0);
    g[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(gd_step(x, g, 0.1), NumericalError);
}

TEST(RawSaliency, IdenticalImagesGiveZero) {
    std::mt19937_64 rng(3);
    const ImageRGB x = random_image(6, 6, rng);
    for (double v : raw_saliency(x, x, 0.0).values) EXPECT_EQ(v, 0.0);
}

TEST(RawSaliency, SinglePixelChannelDifference) {
    const ImageRGB x0 = make_image(4, 4, 0.5);
    ImageRGB xt = x0;
    xt.at(1, 2, 3) = 0.2;
    EXPECT_NEAR(channel_mean_difference(x0, xt)(2, 3), 0.1, 1e-15);
    const SaliencyMap s = raw_saliency(x0, xt, 0.0);
    for (std::size_t y = 0; y < 4; ++y) {
        for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(s(y, x), (y == 2 && x == 3) ? 1.0 : 0.0);
    }
}

TEST(RawSaliency, UniformDifferenceFullyPruned) {
    const ImageRGB x0 = make_image(3, 5, 0.7);
    const ImageRGB xt = make_image(3, 5, 0.5);
    for (double v : raw_saliency(x0, xt, 0.25).values) EXPECT_EQ(v, 0.0);
}

TEST(RawSaliency, ShapeMismatchRejected) {
    EXPECT_THROW(raw_saliency(make_image(3, 3), make_image(3, 4), 0.0), DataError);
}

TEST(RunSaliency, ZeroStepKeepsImage) {
    const Network net = make_desk_network(16, 16, 3, 1);
    std::mt19937_64 rng(4);
    const ImageRGB x = random_image(16, 16, rng);
    SaliencyParams p;
    p.epsilon = 0.0;
    const SaliencyRun run = run_saliency(net, x, p);
    EXPECT_EQ(run.final, x);
    for (double v : run.raw.values) EXPECT_EQ(v, 0.0);
    ASSERT_EQ(run.cost_trace.size(), 11u);
    for (double c : run.cost_trace) EXPECT_EQ(c, run.cost_trace.front());
}

TEST(RunSaliency, IteratesAreMonotoneAndMapNonnegative) {
    const Network net = make_desk_network(16, 16, 3, 2);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const ImageRGB x = random_image(16, 16, rng);
        ImageRGB prev;
        SaliencyParams p;
        p.iterations = 6;
        const SaliencyRun run = run_saliency(net, x, p, [&](std::size_t t, const ImageRGB& xt) {
            if (t > 0) {
                for (std::size_t i = 0; i < xt.size(); ++i) ASSERT_LE(xt[i], prev[i]);
            }
            prev = xt;
        });
        EXPECT_EQ(prev, run.final);
        for (double v : run.raw.values) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
        EXPECT_EQ(run.label, argmax(run.baseline));
        EXPECT_EQ(run.cost_trace.size(), 7u);
    }
}

TEST(RunSaliency, ProbedStepGivesNonincreasingCost) {
    const Network net = make_desk_network(16, 16, 3, 3);
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const SaliencyRun run = run_saliency(net, random_image(16, 16, rng), SaliencyParams{});
        EXPECT_GT(run.epsilon, 0.0);
        for (std::size_t t = 0; t + 1 < run.cost_trace.size(); ++t) {
            EXPECT_LE(run.cost_trace[t + 1], run.cost_trace[t]) << "iteration " << t;
        }
        EXPECT_LT(run.cost_trace.back(), run.cost_trace.front());
    }
}

TEST(RunSaliency, RelativeThetaRecorded) {
    const Network net = make_desk_network(16, 16, 3, 4);
    std::mt19937_64 rng(7);
    const ImageRGB x = random_image(16, 16, rng);
    const SaliencyRun run = run_saliency(net, x, SaliencyParams{});
    EXPECT_DOUBLE_EQ(run.theta, 0.1 * max_value(channel_mean_difference(run.initial, run.final)));
}

TEST(SaliencyParams, Validation) {
    SaliencyParams p;
    p.gamma = -1.0;
    EXPECT_THROW(p.validate(), UsageError);
    p = {};
    p.epsilon = -0.1;
    EXPECT_THROW(p.validate(), UsageError);
    p = {};
    p.iterations = 0;
    EXPECT_THROW(p.validate(), UsageError);
    p = {};
    p.theta = -0.5;
    EXPECT_THROW(p.validate(), UsageError);
}
