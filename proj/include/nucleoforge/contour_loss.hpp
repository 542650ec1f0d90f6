#pragma once

#include <utility>
#include <vector>

#include "nucleoforge/raster.hpp"

namespace nucleoforge {

/// Contrast scale and sharpness weight of the contour regularisers. The
/// neighbourhood is always the eight nearest neighbours.
struct LossParams {
    double lambda = 0.1;
    double beta = 1.0;
};

void validate(const LossParams& params);

struct LossBreakdown {
    double l1 = 0.0;   // -log D(x, y)
    double l2 = 0.0;   // -log(1 - D(x, G(x)))
    double ls1 = 0.0;  // smoothness
    double ls2 = 0.0;  // sharpness
    double total = 0.0;
};

/// Discriminator output, clamped into [1e-7, 1 - 1e-7] so the logs stay
/// finite. Values outside [0,1] (or NaN) are rejected.
class DiscriminatorScore {
public:
    static constexpr double kMargin = 1e-7;
    explicit DiscriminatorScore(double value);
    double value() const noexcept { return value_; }

private:
    double value_;
};

// Per-pair summands. `diff` is g_at - g_neighbour.

/// 2 / (1 + exp(-diff^2 / lambda^2)) - 1, in [0, 1).
double smoothness_summand(double diff, double lambda);
/// exp(-diff^2 / (2 lambda^2)) / dist, in (0, 1/dist].
double sharpness_summand(double diff, double lambda, double dist);

/// Smoothness term of one contour pixel: sum over 8-neighbours that are
/// also contour pixels. Throws NotAContourPixel.
double s1_term(const GrayImage& g, const ContourSet& c, PixelCoord at, const LossParams& params);

/// Sharpness term of one contour pixel: sum over in-bounds 8-neighbours that
/// are not contour pixels, weighted by 1/dist. Throws NotAContourPixel.
double s2_term(const GrayImage& g, const ContourSet& c, PixelCoord at, const LossParams& params);

/// Mean of s1_term over the contour set. Throws EmptyContourSet.
double smoothness_loss(const GrayImage& g, const ContourSet& c, const LossParams& params);
/// Mean of s2_term over the contour set. Throws EmptyContourSet.
double sharpness_loss(const GrayImage& g, const ContourSet& c, const LossParams& params);

/// (l1, l2) = (-log d_real, -log(1 - d_fake)).
std::pair<double, double> adversarial_terms(DiscriminatorScore d_real, DiscriminatorScore d_fake);

/// total = l1 + l2 + ls1 + beta * ls2. Throws PreconditionError on negative
/// or non-finite components.
LossBreakdown total_loss(double l1, double l2, double ls1, double ls2, const LossParams& params);

/// Gradient of ls1 + beta * ls2 with respect to every pixel, in double
/// precision.
Grid<double> regularizer_gradient(const GrayImage& g, const ContourSet& c, const LossParams& params);

/// regularizer_gradient as a FloatMap (the serialisable form).
FloatMap loss_gradient(const GrayImage& g, const ContourSet& c, const LossParams& params);

struct OptimizeResult {
    GrayImage image;
    /// Regulariser values of the initial image and of every accepted step.
    std::vector<LossBreakdown> trace;
};

/// Gradient descent on ls1 + beta * ls2. Each iteration starts from `step`
/// and halves it (at most 20 times) until the loss does not increase;
/// intensities are clamped to [0,1] after each step. Stops early when the
/// gradient vanishes or no trial step is accepted.
OptimizeResult optimize_patch(const GrayImage& g0, const ContourSet& c, const LossParams& params, double step,
                              int iters);

struct ContrastReport {
    double cross = 0.0;  // mean |dg| over (contour, non-contour 8-neighbour) pairs
    double along = 0.0;  // mean |dg| over (contour, contour 8-neighbour) pairs
};

ContrastReport contrast_report(const GrayImage& g, const ContourSet& c);

}  // namespace nucleoforge
