#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nucleoforge/quality.hpp"
#include "test_support.hpp"

namespace nucleoforge {
namespace {

// Fixtures rebuilt pixel for pixel by tests/oracles/quality_reference.py.
GrayImage fixture_a(int h, int w) {
    std::vector<double> v;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            v.push_back(0.5 + 0.3 * std::sin(0.37 * r + 0.21 * c) + 0.15 * std::cos(0.13 * r * c / 8.0));
    return GrayImage(w, h, v);
}

GrayImage fixture_b(int h, int w) {
    const GrayImage a = fixture_a(h, w);
    std::vector<double> v;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) v.push_back(0.8 * a(r, c) + 0.1 + 0.05 * std::sin(1.3 * c + 0.7 * r));
    return GrayImage(w, h, v);
}

GrayImage disc(int h, int w, double radius, double blur_width) {
    std::vector<double> v;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double d = std::hypot(r - (h - 1) / 2.0, c - (w - 1) / 2.0);
            v.push_back(0.2 + 0.6 / (1.0 + std::exp((d - radius) / blur_width)));
        }
    }
    return GrayImage(w, h, v);
}

GrayImage inverted(const GrayImage& g) {
    std::vector<double> v(g.data().begin(), g.data().end());
    for (auto& x : v) x = 1.0 - x;
    return GrayImage(g.width(), g.height(), v);
}

// Reference values: scikit-image 0.25.2 (SSIM), piq 0.8.0 (GMSD, FSIM).
TEST(SsimTest, MatchesScikitImage) {
    EXPECT_NEAR(ssim(fixture_a(32, 32), fixture_b(32, 32)), 0.869348784785, 1e-9);
    EXPECT_NEAR(ssim(fixture_a(24, 40), fixture_b(24, 40)), 0.851702798666, 1e-9);
}

TEST(SsimTest, ConstantImages) {
    EXPECT_NEAR(ssim(GrayImage(16, 16, 0.5), GrayImage(16, 16, 0.5)), 1.0, 1e-12);
    // Contrast and structure terms are C2/C2 = 1; only luminance remains.
    const double c1 = 0.01 * 0.01;
    const double expected = (2 * 0.25 * 0.75 + c1) / (0.25 * 0.25 + 0.75 * 0.75 + c1);
    EXPECT_NEAR(ssim(GrayImage(16, 16, 0.25), GrayImage(16, 16, 0.75)), expected, 1e-6);
    EXPECT_NEAR(expected, 0.6000640, 1e-6);
}

TEST(SsimTest, Errors) {
    EXPECT_THROW(ssim(GrayImage(16, 16), GrayImage(16, 17)), DimensionMismatch);
    EXPECT_THROW(ssim(GrayImage(10, 16), GrayImage(10, 16)), TooSmall);
}

TEST(GmsdTest, MatchesPiq) {
    EXPECT_NEAR(gmsd(fixture_a(8, 8), fixture_b(8, 8)), 0.007732384218, 1e-9);
    EXPECT_NEAR(gmsd(fixture_a(15, 12), fixture_b(15, 12)), 0.017793996930, 1e-9);
}

TEST(GmsdTest, InversionKeepsGradientMagnitudes) {
    // Gradients at the image border see zero padding, which inversion does
    // not flip, so the fixture keeps a 4-pixel mid-grey frame.
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage noise = testing::random_image(24, 24, rng);
        std::vector<double> v(24 * 24, 0.5);
        for (int r = 4; r < 20; ++r)
            for (int c = 4; c < 20; ++c) v[r * 24 + c] = noise(r, c);
        const GrayImage x(24, 24, v);
        EXPECT_NEAR(gmsd(x, inverted(x)), 0.0, 1e-12);
    }
}

TEST(GmsdTest, Errors) {
    EXPECT_THROW(gmsd(GrayImage(8, 8), GrayImage(8, 9)), DimensionMismatch);
    EXPECT_THROW(gmsd(GrayImage(2, 8), GrayImage(2, 8)), TooSmall);
}

TEST(FsimTest, MatchesPiq) {
    EXPECT_NEAR(fsim(fixture_a(64, 64), fixture_b(64, 64)), 0.918375071425, 1e-5);
    EXPECT_NEAR(fsim(disc(64, 64, 16, 0.5), disc(64, 64, 16, 2.0)), 0.818707814148, 1e-5);
}

TEST(FsimTest, Errors) {
    EXPECT_THROW(fsim(GrayImage(32, 32), GrayImage(33, 32)), DimensionMismatch);
    EXPECT_THROW(fsim(GrayImage(31, 64), GrayImage(31, 64)), TooSmall);
}

TEST(FsimTest, ConstantImagesAreHandled) {
    EXPECT_NEAR(fsim(GrayImage(40, 40, 0.3), GrayImage(40, 40, 0.3)), 1.0, 1e-12);
    const double v = fsim(GrayImage(40, 40, 0.3), GrayImage(40, 40, 0.6));
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
}

TEST(PhaseCongruencyTest, RangeAndFlatImage) {
    const Grid<double> flat(48, 48, 128.0);
    for (double v : phase_congruency(flat).values()) EXPECT_EQ(v, 0.0);
    Grid<double> step(48, 48, 40.0);
    for (int r = 0; r < 48; ++r)
        for (int c = 24; c < 48; ++c) step(r, c) = 200.0;
    const Grid<double> pc = phase_congruency(step);
    double edge = 0.0, away = 0.0;
    for (int r = 0; r < 48; ++r) {
        for (int c = 0; c < 48; ++c) {
            EXPECT_GE(pc(r, c), 0.0);
            EXPECT_LE(pc(r, c), 1.0 + 1e-12);
        }
        edge = std::max(edge, std::max(pc(r, 23), pc(r, 24)));
        away = std::max(away, pc(r, 12));
    }
    EXPECT_GT(edge, 0.5);
    EXPECT_LT(away, edge);
}

TEST(MetricIdentitiesTest, RandomImages) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage x = testing::random_image(40, 36, rng);
        const GrayImage y = testing::random_image(40, 36, rng);
        const QualityReport same = quality_report(x, x);
        EXPECT_NEAR(same.ssim, 1.0, 1e-9);
        EXPECT_NEAR(same.fsim, 1.0, 1e-9);
        EXPECT_NEAR(same.gmsd, 0.0, 1e-9);

        const QualityReport xy = quality_report(x, y), yx = quality_report(y, x);
        EXPECT_NEAR(xy.ssim, yx.ssim, 1e-12);
        EXPECT_NEAR(xy.fsim, yx.fsim, 1e-12);
        EXPECT_NEAR(xy.gmsd, yx.gmsd, 1e-12);
        EXPECT_LE(xy.ssim, 1.0);
        EXPECT_GE(xy.fsim, 0.0);
        EXPECT_LE(xy.fsim, 1.0);
        EXPECT_GE(xy.gmsd, 0.0);
    }
}

TEST(MetricConstantsTest, Validation) {
    MetricConstants k;
    EXPECT_NO_THROW(validate(k));
    k.ssim_window = 4;
    EXPECT_THROW(validate(k), ConfigError);
    k = MetricConstants{};
    k.fsim_scales = 0;
    EXPECT_THROW(validate(k), ConfigError);
    k = MetricConstants{};
    k.gmsd_c = -1.0;
    EXPECT_THROW(validate(k), ConfigError);
}

}  // namespace
}  // namespace nucleoforge
