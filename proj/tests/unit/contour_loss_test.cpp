#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "nucleoforge/contour_loss.hpp"
#include "test_support.hpp"

namespace nucleoforge {
namespace {

// Reference values evaluated independently in extended precision.
constexpr double kS1AtLambda = 0.46211715726000974;        // 2/(1+e^-1) - 1 = tanh(1/2)
constexpr double kInvSqrt2 = 0.70710678118654752;
constexpr double kInvE = 0.36787944117144233;
constexpr double kFullSharpness = 6.8284271247461901;      // 4 + 4/sqrt(2)
constexpr double kLn2 = 0.69314718055994531;

ContourSet contour_of(int w, int h, std::initializer_list<PixelCoord> coords) {
    std::vector<ContourEntry> e;
    for (auto p : coords) e.push_back({p, 1});
    return ContourSet(w, h, std::move(e));
}

double regulariser(const GrayImage& g, const ContourSet& c, const LossParams& p) {
    return smoothness_loss(g, c, p) + p.beta * sharpness_loss(g, c, p);
}

ContourSet random_contour(int w, int h, std::mt19937_64& rng, double density) {
    std::bernoulli_distribution coin(density);
    std::vector<ContourEntry> e;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            if (coin(rng)) e.push_back({{r, c}, 1});
    if (e.empty()) e.push_back({{h / 2, w / 2}, 1});
    return ContourSet(w, h, std::move(e));
}

TEST(SummandTest, ScalarValues) {
    EXPECT_NEAR(smoothness_summand(0.1, 0.1), kS1AtLambda, 1e-12);
    EXPECT_NEAR(smoothness_summand(-0.1, 0.1), kS1AtLambda, 1e-12);
    EXPECT_EQ(smoothness_summand(0.0, 0.1), 0.0);
    EXPECT_NEAR(sharpness_summand(0.0, 0.1, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(sharpness_summand(0.0, 0.1, std::sqrt(2.0)), kInvSqrt2, 1e-12);
    EXPECT_NEAR(sharpness_summand(0.1 * std::sqrt(2.0), 0.1, 1.0), kInvE, 1e-12);
    EXPECT_LT(sharpness_summand(10.0, 0.1, 1.0), 1e-8);
}

TEST(SummandTest, BoundsMonotonicityAndLambdaScaling) {
    double prev_s1 = -1.0, prev_s2 = 2.0;
    for (int i = 0; i <= 200; ++i) {
        const double d = i * 0.005;
        const double s1 = smoothness_summand(d, 0.1), s2 = sharpness_summand(d, 0.1, 1.0);
        EXPECT_GE(s1, 0.0);
        EXPECT_LE(s1, 1.0);  // saturates to exactly 1 in double precision
        EXPECT_GT(s2, 0.0);
        EXPECT_LE(s2, 1.0);
        if (i > 0 && s1 < 1.0 - 1e-15) EXPECT_GT(s1, prev_s1);
        if (i > 0 && s2 > 1e-300) EXPECT_LT(s2, prev_s2);
        prev_s1 = s1;
        prev_s2 = s2;
        for (double k : {0.5, 3.0}) {
            EXPECT_NEAR(smoothness_summand(k * d, k * 0.1), s1, 1e-14);
            EXPECT_NEAR(sharpness_summand(k * d, k * 0.1, 1.0), s2, 1e-14);
        }
    }
}

TEST(S1TermTest, Examples) {
    const LossParams p{0.1, 1.0};
    GrayImage g(5, 5, 0.5);
    EXPECT_EQ(s1_term(g, contour_of(5, 5, {{2, 2}}), {2, 2}, p), 0.0);
    EXPECT_EQ(s1_term(g, contour_of(5, 5, {{2, 2}, {2, 3}}), {2, 2}, p), 0.0);
    g.set(2, 3, 0.6);
    EXPECT_NEAR(s1_term(g, contour_of(5, 5, {{2, 2}, {2, 3}}), {2, 2}, p), kS1AtLambda, 1e-9);
    EXPECT_THROW(s1_term(g, contour_of(5, 5, {{2, 2}}), {0, 0}, p), NotAContourPixel);
}

TEST(S2TermTest, Examples) {
    const LossParams p{0.1, 1.0};
    GrayImage g(3, 3, 0.5);
    // Only one non-contour neighbour: everything else is contour.
    EXPECT_NEAR(s2_term(g, contour_of(3, 3, {{1, 1}, {0, 0}, {0, 2}, {2, 0}, {2, 2}, {0, 1}, {2, 1}, {1, 0}}), {1, 1}, p),
                1.0, 1e-15);
    EXPECT_NEAR(s2_term(g, contour_of(3, 3, {{1, 1}, {0, 1}, {2, 1}, {1, 0}, {1, 2}, {0, 0}, {0, 2}, {2, 0}}), {1, 1}, p),
                kInvSqrt2, 1e-12);
    g.set(1, 2, 0.5 + 0.1 * std::sqrt(2.0));
    EXPECT_NEAR(s2_term(g, contour_of(3, 3, {{1, 1}, {0, 0}, {0, 2}, {2, 0}, {2, 2}, {0, 1}, {2, 1}, {1, 0}}), {1, 1}, p),
                kInvE, 1e-9);
    EXPECT_THROW(s2_term(g, contour_of(3, 3, {{1, 1}}), {0, 0}, p), NotAContourPixel);
}

TEST(S2TermTest, OutOfBoundsNeighboursAreSkipped) {
    const GrayImage g(3, 3, 0.5);
    // Corner pixel: three in-bounds neighbours, two axis and one diagonal.
    EXPECT_NEAR(s2_term(g, contour_of(3, 3, {{0, 0}}), {0, 0}, LossParams{}), 2.0 + kInvSqrt2, 1e-12);
}

TEST(SmoothnessLossTest, Examples) {
    const LossParams p{0.1, 1.0};
    EXPECT_EQ(smoothness_loss(GrayImage(6, 6, 0.3), contour_of(6, 6, {{1, 1}, {1, 2}, {2, 2}}), p), 0.0);
    GrayImage g(6, 6, 0.3);
    g.set(1, 2, 0.4);
    EXPECT_NEAR(smoothness_loss(g, contour_of(6, 6, {{1, 1}, {1, 2}}), p), kS1AtLambda, 1e-9);
    std::mt19937_64 rng(1);
    EXPECT_EQ(smoothness_loss(testing::random_image(6, 6, rng), contour_of(6, 6, {{0, 0}, {0, 2}, {2, 0}, {4, 4}}), p),
              0.0);
    EXPECT_THROW(smoothness_loss(g, ContourSet(6, 6, {}), p), EmptyContourSet);
}

TEST(SharpnessLossTest, Examples) {
    const LossParams p{0.1, 1.0};
    const ContourSet single = contour_of(5, 5, {{2, 2}});
    EXPECT_NEAR(sharpness_loss(GrayImage(5, 5, 0.5), single, p), kFullSharpness, 1e-12);

    GrayImage far(5, 5, 0.0);
    far.set(2, 2, 1.0);  // |dg| = 100 lambda for lambda = 0.01
    EXPECT_LT(sharpness_loss(far, single, LossParams{0.01, 1.0}), 8e-8);

    std::vector<ContourEntry> all;
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) all.push_back({{r, c}, 1});
    EXPECT_EQ(s2_term(GrayImage(5, 5, 0.5), ContourSet(5, 5, all), {2, 2}, p), 0.0);
    EXPECT_THROW(sharpness_loss(far, ContourSet(5, 5, {}), p), EmptyContourSet);
}

TEST(LossTest, RangeBoundsOnRandomInputs) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const GrayImage g = testing::random_image(12, 12, rng);
        const ContourSet c = random_contour(12, 12, rng, 0.4);
        const LossParams p{0.05 + 0.01 * trial, 1.0};
        const double ls1 = smoothness_loss(g, c, p), ls2 = sharpness_loss(g, c, p);
        EXPECT_GE(ls1, 0.0);
        EXPECT_LT(ls1, 8.0);
        EXPECT_GE(ls2, 0.0);
        EXPECT_LE(ls2, kFullSharpness);
    }
}

TEST(LossTest, GlobalShiftInvariance) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const GrayImage g = testing::random_image(10, 10, rng, 0.0, 0.7);
        std::vector<double> shifted(g.data().begin(), g.data().end());
        for (auto& v : shifted) v += 0.25;
        const GrayImage h(10, 10, shifted);
        const ContourSet c = random_contour(10, 10, rng, 0.5);
        const LossParams p{0.2, 0.7};
        EXPECT_NEAR(smoothness_loss(g, c, p), smoothness_loss(h, c, p), 1e-12);
        EXPECT_NEAR(sharpness_loss(g, c, p), sharpness_loss(h, c, p), 1e-12);
        const Grid<double> ga = regularizer_gradient(g, c, p), gb = regularizer_gradient(h, c, p);
        for (std::size_t i = 0; i < ga.size(); ++i) EXPECT_NEAR(ga.data()[i], gb.data()[i], 1e-9);
    }
}

TEST(AdversarialTermsTest, LimitsAndValues) {
    const auto [l1, l2] = adversarial_terms(DiscriminatorScore(1.0), DiscriminatorScore(0.0));
    EXPECT_LT(l1, 1e-6);
    EXPECT_LT(l2, 1e-6);
    const auto [h1, h2] = adversarial_terms(DiscriminatorScore(0.5), DiscriminatorScore(0.5));
    EXPECT_NEAR(h1, kLn2, 1e-15);
    EXPECT_NEAR(h2, kLn2, 1e-15);
    EXPECT_TRUE(std::isfinite(adversarial_terms(DiscriminatorScore(0.0), DiscriminatorScore(1.0)).first));
    EXPECT_THROW(DiscriminatorScore(1.5), ScoreOutOfRange);
    EXPECT_THROW(DiscriminatorScore(-0.1), ScoreOutOfRange);
    EXPECT_THROW(DiscriminatorScore(std::nan("")), ScoreOutOfRange);
}

TEST(TotalLossTest, Examples) {
    EXPECT_EQ(total_loss(0, 0, 0, 0, {0.1, 1.0}).total, 0.0);
    EXPECT_EQ(total_loss(0.1, 0.2, 0.3, 50.0, {0.1, 0.0}).total, 0.1 + 0.2 + 0.3);
    EXPECT_NEAR(total_loss(0.1, 0.2, 0.3, 0.4, {0.1, 2.0}).total, 1.4, 1e-15);
    EXPECT_THROW(total_loss(-1, 0, 0, 0, {}), PreconditionError);
}

TEST(LossParamsTest, Validation) {
    EXPECT_THROW(validate(LossParams{0.0, 1.0}), ConfigError);
    EXPECT_THROW(validate(LossParams{0.1, -1.0}), ConfigError);
    EXPECT_NO_THROW(validate(LossParams{0.1, 0.0}));
}

TEST(GradientTest, UniformImageAndUntouchedPixels) {
    const ContourSet c = contour_of(8, 8, {{2, 2}, {2, 3}, {3, 3}});
    const Grid<double> g = regularizer_gradient(GrayImage(8, 8, 0.4), c, LossParams{0.1, 0.0});
    EXPECT_TRUE(std::ranges::all_of(g.values(), [](double v) { return v == 0.0; }));

    std::mt19937_64 rng(2);
    const Grid<double> h = regularizer_gradient(testing::random_image(8, 8, rng), c, LossParams{0.1, 1.0});
    for (int r = 0; r < 8; ++r)
        for (int col = 0; col < 8; ++col)
            if (r > 4 || col > 4 || r == 0 || col == 0) EXPECT_EQ(h(r, col), 0.0) << r << "," << col;
    EXPECT_THROW(regularizer_gradient(GrayImage(8, 8, 0.4), ContourSet(8, 8, {}), LossParams{}), EmptyContourSet);
    EXPECT_THROW(regularizer_gradient(GrayImage(7, 8, 0.4), c, LossParams{}), DimensionMismatch);
}

TEST(GradientTest, MatchesCentralDifferences) {
    std::mt19937_64 rng(31);
    const double h = 1e-4;
    for (int trial = 0; trial < 8; ++trial) {
        const GrayImage g = testing::random_image(16, 16, rng, 0.05, 0.95);
        const ContourSet c = random_contour(16, 16, rng, 0.35);
        const LossParams p{0.3, 0.8};
        const Grid<double> analytic = regularizer_gradient(g, c, p);
        double scale = 0.0;
        for (double v : analytic.values()) scale = std::max(scale, std::abs(v));
        for (int r = 0; r < 16; ++r) {
            for (int col = 0; col < 16; ++col) {
                GrayImage up = g, down = g;
                up.set(r, col, g(r, col) + h);
                down.set(r, col, g(r, col) - h);
                const double fd = (regulariser(up, c, p) - regulariser(down, c, p)) / (2 * h);
                EXPECT_NEAR(analytic(r, col), fd, 1e-4 * scale) << r << "," << col;
            }
        }
    }
}

TEST(GradientTest, FloatMapMirrorsDoubleGradient) {
    std::mt19937_64 rng(4);
    const GrayImage g = testing::random_image(9, 9, rng);
    const ContourSet c = random_contour(9, 9, rng, 0.3);
    const Grid<double> d = regularizer_gradient(g, c, LossParams{});
    const FloatMap f = loss_gradient(g, c, LossParams{});
    for (std::size_t i = 0; i < d.size(); ++i) EXPECT_EQ(f.data()[i], static_cast<float>(d.data()[i]));
}

TEST(OptimizePatchTest, ZeroLossImageIsStationary) {
    std::vector<ContourEntry> all;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) all.push_back({{r, c}, 1});
    const GrayImage g(6, 6, 0.42);
    const OptimizeResult res = optimize_patch(g, ContourSet(6, 6, all), LossParams{0.1, 1.0}, 0.1, 50);
    EXPECT_EQ(res.image, g);
    ASSERT_EQ(res.trace.size(), 1u);
    EXPECT_EQ(res.trace[0].total, 0.0);
}

TEST(OptimizePatchTest, TraceIsMonotoneAndBounded) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        const GrayImage g = testing::random_image(12, 12, rng);
        const ContourSet c = random_contour(12, 12, rng, 0.3);
        const int iters = 40;
        const OptimizeResult res = optimize_patch(g, c, LossParams{0.1, 1.0}, 0.05, iters);
        ASSERT_GE(res.trace.size(), 1u);
        EXPECT_LE(res.trace.size(), static_cast<std::size_t>(iters) + 1);
        for (std::size_t i = 1; i < res.trace.size(); ++i) EXPECT_LE(res.trace[i].total, res.trace[i - 1].total);
        EXPECT_NEAR(res.trace.back().total, regulariser(res.image, c, LossParams{0.1, 1.0}), 1e-12);
    }
}

TEST(OptimizePatchTest, BlurredDiscGainsCrossContrast) {
    const auto fx = testing::blurred_disc();
    const ContrastReport before = contrast_report(fx.image, fx.contour);
    const OptimizeResult res = optimize_patch(fx.image, fx.contour, LossParams{0.1, 1.0}, 0.05, 200);
    const ContrastReport after = contrast_report(res.image, fx.contour);
    EXPECT_GT(after.cross, before.cross);
    EXPECT_LT(after.along, before.along);
}

TEST(OptimizePatchTest, RejectsBadArguments) {
    const auto fx = testing::blurred_disc();
    EXPECT_THROW(optimize_patch(fx.image, ContourSet(32, 32, {}), LossParams{}, 0.1, 5), EmptyContourSet);
    EXPECT_THROW(optimize_patch(fx.image, fx.contour, LossParams{}, 0.0, 5), PreconditionError);
    EXPECT_THROW(optimize_patch(fx.image, fx.contour, LossParams{}, 0.1, 0), PreconditionError);
}

TEST(ContrastReportTest, Examples) {
    const ContourSet c = contour_of(4, 4, {{1, 1}, {1, 2}});
    const ContrastReport flat = contrast_report(GrayImage(4, 4, 0.3), c);
    EXPECT_EQ(flat.cross, 0.0);
    EXPECT_EQ(flat.along, 0.0);

    // Step image: columns 0-1 bright, 2-3 dark. The contour is the whole
    // bright side, so every contour neighbour is either bright contour or
    // dark non-contour.
    std::vector<double> v(16);
    for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 4; ++col) v[r * 4 + col] = col < 2 ? 1.0 : 0.0;
    std::vector<ContourEntry> bright;
    for (int r = 0; r < 4; ++r)
        for (int col = 0; col < 2; ++col) bright.push_back({{r, col}, 1});
    const ContrastReport step = contrast_report(GrayImage(4, 4, v), ContourSet(4, 4, bright));
    EXPECT_EQ(step.cross, 1.0);
    EXPECT_EQ(step.along, 0.0);
}

TEST(ContrastReportTest, EntryOrderDoesNotMatter) {
    std::mt19937_64 rng(10);
    const GrayImage g = testing::random_image(10, 10, rng);
    const ContourSet c = random_contour(10, 10, rng, 0.4);
    std::vector<ContourEntry> shuffled = c.entries();
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const ContrastReport a = contrast_report(g, c), b = contrast_report(g, ContourSet(10, 10, shuffled));
    EXPECT_EQ(a.cross, b.cross);
    EXPECT_EQ(a.along, b.along);
}

}  // namespace
}  // namespace nucleoforge
