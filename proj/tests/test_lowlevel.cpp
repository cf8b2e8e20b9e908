#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "gradsal/color.hpp"
#include "gradsal/error.hpp"
#include "gradsal/lowlevel.hpp"
#include "gradsal/superpixel.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gradsal;
using gradsal::testing::random_image;

namespace {

SuperpixelColorStats stat(double l, double a, double b, double x = 0.0, double y = 0.0) {
    SuperpixelColorStats s;
    s.color = {l, a, b};
    s.x = x;
    s.y = y;
    s.count = 1;
    return s;
}

// Row-major split of an H x W image into vertical strips of equal width.
SuperpixelMap strips(std::size_t h, std::size_t w, std::size_t k) {
    SuperpixelMap sp;
    sp.height = h;
    sp.width = w;
    sp.labels.resize(h * w);
    sp.counts.assign(k, 0);
    for (std::size_t p = 0; p < h * w; ++p) {
        sp.labels[p] = static_cast<std::uint32_t>((p % w) * k / w);
        ++sp.counts[sp.labels[p]];
    }
    return sp;
}

}  // namespace

TEST(Lab, Black) {
    const auto lab = srgb_to_lab(0.0, 0.0, 0.0);
    EXPECT_EQ(lab[0], 0.0);
    EXPECT_EQ(lab[1], 0.0);
    EXPECT_EQ(lab[2], 0.0);
}

TEST(Lab, White) {
    const auto lab = srgb_to_lab(1.0, 1.0, 1.0);
    EXPECT_NEAR(lab[0], 100.0, 1e-4);
    EXPECT_LT(std::fabs(lab[1]), 0.01);
    EXPECT_LT(std::fabs(lab[2]), 0.01);
}

TEST(Lab, GrayIsNeutral) {
    for (double g : {0.1, 0.5, 0.9}) {
        const auto lab = srgb_to_lab(g, g, g);
        EXPECT_LT(std::fabs(lab[1]), 0.01) << g;
        EXPECT_LT(std::fabs(lab[2]), 0.01) << g;
    }
}

// Values from scikit-image rgb2lab (D65, 2 degree observer).
TEST(Lab, MatchesReferenceColorimetry) {
    struct Case {
        double r, g, b, l, a, bb;
    };
    const Case cases[] = {
        {1.0, 0.0, 0.0, 53.240588, 80.092308, 67.202751},
        {0.0, 1.0, 0.0, 87.735099, -86.183030, 83.179703},
        {0.0, 0.0, 1.0, 32.295673, 79.185591, -107.857300},
        {0.2, 0.6, 0.3, 56.101600, -46.238630, 31.675204},
        {0.04, 0.02, 0.9, 29.054484, 72.286136, -98.828952},
    };
    for (const auto& c : cases) {
        const auto lab = srgb_to_lab(c.r, c.g, c.b);
        EXPECT_NEAR(lab[0], c.l, 5e-3);
        EXPECT_NEAR(lab[1], c.a, 5e-3);
        EXPECT_NEAR(lab[2], c.bb, 5e-3);
    }
}

TEST(Lab, ImageConversionRejectsOutOfRange) {
    ImageRGB img = make_image(2, 2, 0.5);
    EXPECT_NO_THROW(rgb_to_lab(img));
    img[5] = 1.01;
    EXPECT_THROW(rgb_to_lab(img), DataError);
    img[5] = std::nan("");
    EXPECT_THROW(rgb_to_lab(img), DataError);
}

TEST(GlobalContrast, IdenticalColorsGiveZero) {
    const std::vector<SuperpixelColorStats> s(5, stat(40.0, 10.0, -5.0));
    for (double v : global_contrast(s)) EXPECT_EQ(v, 0.0);
}

TEST(GlobalContrast, TwoSuperpixelsSymmetric) {
    const std::vector<SuperpixelColorStats> s{stat(10, 2, 3), stat(13, -2, 3)};
    const auto gc = global_contrast(s);
    EXPECT_EQ(gc[0], 25.0);
    EXPECT_EQ(gc[1], 25.0);
}

TEST(GlobalContrast, ThreeSuperpixelHandExample) {
    const std::vector<SuperpixelColorStats> s{stat(0, 0, 0), stat(1, 0, 0), stat(0, 2, 0)};
    EXPECT_EQ(global_contrast(s), (std::vector<double>{5.0, 6.0, 9.0}));
}

TEST(GlobalContrast, MatchesBruteForceBitExactly) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> L(0.0, 100.0), ab(-100.0, 100.0);
    std::uniform_int_distribution<std::size_t> kk(1, 50);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<SuperpixelColorStats> s(kk(rng));
        for (auto& v : s) v = stat(L(rng), ab(rng), ab(rng));
        EXPECT_EQ(global_contrast(s), oracle::global_contrast(s)) << "trial " << trial;
    }
}

TEST(ContrastSmooth, SelfOnlyIsIdentity) {
    const std::vector<SuperpixelColorStats> s{stat(10, 0, 0), stat(50, 5, 5), stat(90, -5, 0)};
    const std::vector<double> gc{3.0, 1.0, 7.0};
    EXPECT_EQ(contrast_smooth(gc, s, 0.0, 10), gc);
    EXPECT_EQ(contrast_smooth(gc, s, 10.0, 1), gc);
}

TEST(ContrastSmooth, EqualColorsAverage) {
    const std::vector<SuperpixelColorStats> s{stat(30, 1, 1, 0, 0), stat(30, 1, 1, 9, 9)};
    const auto out = contrast_smooth(std::vector<double>{2.0, 6.0}, s, 10.0, 10);
    EXPECT_DOUBLE_EQ(out[0], 4.0);
    EXPECT_DOUBLE_EQ(out[1], 4.0);
}

TEST(ContrastSmooth, WeightedNeighbourhood) {
    // Nearest neighbours of superpixel 0 with m = 2: itself and superpixel 1.
    const std::vector<SuperpixelColorStats> s{stat(0, 0, 0), stat(10, 0, 0), stat(30, 0, 0)};
    const std::vector<double> gc{1.0, 5.0, 100.0};
    const double sigma = 10.0;
    const double w01 = std::exp(-100.0 / (2 * sigma * sigma));
    const auto out = contrast_smooth(gc, s, sigma, 2);
    EXPECT_NEAR(out[0], (1.0 + w01 * 5.0) / (1.0 + w01), 1e-14);
}

TEST(ContrastSmooth, StaysWithinInputRange) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 60.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<SuperpixelColorStats> s(20);
        std::vector<double> gc(20);
        for (std::size_t i = 0; i < 20; ++i) {
            s[i] = stat(u(rng), u(rng), u(rng));
            gc[i] = u(rng);
        }
        const auto out = contrast_smooth(gc, s, 10.0, 10);
        const auto [lo, hi] = std::minmax_element(gc.begin(), gc.end());
        for (double v : out) {
            EXPECT_GE(v, *lo - 1e-12);
            EXPECT_LE(v, *hi + 1e-12);
        }
    }
}

TEST(ColorDistribution, SingleSuperpixel) {
    const std::vector<SuperpixelColorStats> s{stat(50, 0, 0, 3, 4)};
    const auto d = color_distribution(s, 10.0, 5.0);
    EXPECT_EQ(d.variance[0], 0.0);
    EXPECT_EQ(d.cue[0], 1.0);
}

TEST(ColorDistribution, SpreadColorHasLowerCue) {
    const std::vector<SuperpixelColorStats> spread{stat(50, 0, 0, 0, 0), stat(50, 0, 0, 63, 63)};
    const auto d = color_distribution(spread, 10.0, 16.0);
    EXPECT_LT(d.cue[0], 1.0);
    EXPECT_DOUBLE_EQ(d.variance[0], 2.0 * 31.5 * 31.5);
}

TEST(ColorDistribution, ThreeSuperpixelOracle) {
    const std::vector<SuperpixelColorStats> s{stat(20, 0, 0, 2, 2), stat(25, 0, 0, 10, 4), stat(80, 0, 0, 6, 12)};
    const double sc = 10.0, sd = 8.0;
    const auto d = color_distribution(s, sc, sd);
    for (std::size_t i = 0; i < 3; ++i) {
        double w[3], tw = 0.0, mx = 0.0, my = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            const double dc = s[i].color[0] - s[j].color[0];
            w[j] = std::exp(-dc * dc / (2 * sc * sc));
            tw += w[j];
            mx += w[j] * s[j].x;
            my += w[j] * s[j].y;
        }
        mx /= tw;
        my /= tw;
        double var = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            var += w[j] * ((s[j].x - mx) * (s[j].x - mx) + (s[j].y - my) * (s[j].y - my));
        }
        var /= tw;
        EXPECT_NEAR(d.variance[i], var, 1e-12);
        EXPECT_NEAR(d.cue[i], std::exp(-var / (sd * sd)), 1e-14);
    }
}

TEST(LowLevel, ConstantFeaturesGiveUpperBound) {
    const SuperpixelMap sp = strips(4, 8, 4);
    const std::vector<double> flat(4, 2.5);
    const Map m = build_lowlevel(flat, flat, 0.3, sp);
    for (double v : m.values) EXPECT_DOUBLE_EQ(v, 1.3);
}

TEST(LowLevel, SpansAlphaRange) {
    const SuperpixelMap sp = strips(3, 9, 3);
    const Map m = build_lowlevel(std::vector<double>{0.0, 0.5, 1.0}, std::vector<double>{0.2, 1.0, 1.0}, 0.3, sp);
    const auto [lo, hi] = std::minmax_element(m.values.begin(), m.values.end());
    EXPECT_DOUBLE_EQ(*lo, 0.3);
    EXPECT_DOUBLE_EQ(*hi, 1.3);
}

TEST(LowLevel, AlphaArithmetic) {
    EXPECT_DOUBLE_EQ(alpha_range(std::vector<double>{0.5}, 0.3)[0], 0.8);
    EXPECT_THROW(alpha_range(std::vector<double>{0.5}, 0.0), UsageError);
    EXPECT_THROW(alpha_range(std::vector<double>{0.5}, 1.0), UsageError);
}

TEST(LowLevel, MinMaxNormalize) {
    EXPECT_EQ(min_max_normalize(std::vector<double>{2.0, 4.0, 3.0}), (std::vector<double>{0.0, 1.0, 0.5}));
    EXPECT_EQ(min_max_normalize(std::vector<double>{7.0, 7.0}), (std::vector<double>{1.0, 1.0}));
}

TEST(LowLevel, FeaturesStayInRange) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const ImageRGB img = random_image(24, 24, rng);
        const LabImage lab = rgb_to_lab(img);
        const SuperpixelMap sp = slic_lab(lab, SlicParams{20, 10.0, 10, true});
        LowLevelParams p;
        p.alpha = 0.2;
        const LowLevelResult r = lowlevel_features(lab, sp, p);
        for (double v : r.map.values) {
            EXPECT_GE(v, 0.2);
            EXPECT_LE(v, 1.2);
        }
        EXPECT_EQ(r.stats.size(), sp.count());
    }
}

TEST(LowLevel, DisabledIsConstant) {
    const SuperpixelMap sp = strips(4, 4, 2);
    LowLevelParams p;
    p.enabled = false;
    const LowLevelResult r = lowlevel_features(rgb_to_lab(make_image(4, 4, 0.3)), sp, p);
    for (double v : r.map.values) EXPECT_EQ(v, 1.3);
}

TEST(Refine, UnitLowLevelIsNormalizedInput) {
    Map s(1, 4);
    s.values = {0.1, 0.4, 0.2, 0.0};
    const SaliencyMap out = refine(s, Map(1, 4, 1.0), 0.0);
    EXPECT_EQ(out.values, (std::vector<double>{0.1 / 0.4, 1.0, 0.2 / 0.4, 0.0}));
}

TEST(Refine, ZeroStaysZero) {
    const SaliencyMap out = refine(Map(3, 3, 0.0), Map(3, 3, 1.2), 0.0);
    for (double v : out.values) EXPECT_EQ(v, 0.0);
}

TEST(Refine, TwoRegionExample) {
    Map s(1, 2), l(1, 2);
    s.values = {0.2, 0.8};
    l.values = {0.5, 1.25};
    const SaliencyMap out = refine(s, l, 0.0);
    EXPECT_NEAR(out.values[0], 0.1, 1e-15);
    EXPECT_EQ(out.values[1], 1.0);
}

TEST(Refine, ShapeMismatchRejected) {
    EXPECT_THROW(refine(Map(2, 2), Map(2, 3), 0.0), DataError);
}
