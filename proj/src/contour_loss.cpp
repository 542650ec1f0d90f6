#include "nucleoforge/contour_loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace nucleoforge {

void validate(const LossParams& params) {
    if (!(params.lambda > 0.0) || !std::isfinite(params.lambda)) throw ConfigError("lambda must be a finite value > 0");
    if (!(params.beta >= 0.0) || !std::isfinite(params.beta)) throw ConfigError("beta must be a finite value >= 0");
}

DiscriminatorScore::DiscriminatorScore(double value) {
    if (!(value >= 0.0 && value <= 1.0))
        throw ScoreOutOfRange("discriminator score " + std::to_string(value) + " outside [0,1]");
    value_ = std::clamp(value, kMargin, 1.0 - kMargin);
}

double smoothness_summand(double diff, double lambda) {
    return 2.0 / (1.0 + std::exp(-(diff * diff) / (lambda * lambda))) - 1.0;
}

double sharpness_summand(double diff, double lambda, double dist) {
    return std::exp(-(diff * diff) / (2.0 * lambda * lambda)) / dist;
}

namespace {

void require_same_shape(const GrayImage& g, const ContourSet& c) {
    if (g.width() != c.width() || g.height() != c.height())
        throw DimensionMismatch("image and contour set dimensions differ");
}

void require_member(const ContourSet& c, PixelCoord at) {
    if (!c.contains(at))
        throw NotAContourPixel("(" + std::to_string(at.row) + "," + std::to_string(at.col) + ") is not in the contour set");
}

double d_smoothness(double diff, double lambda) {
    const double l2 = lambda * lambda;
    const double e = std::exp(-(diff * diff) / l2);
    return 4.0 * diff * e / (l2 * (1.0 + e) * (1.0 + e));
}

double d_sharpness(double diff, double lambda, double dist) {
    return -diff / (lambda * lambda) * sharpness_summand(diff, lambda, dist);
}

}  // namespace

double s1_term(const GrayImage& g, const ContourSet& c, PixelCoord at, const LossParams& params) {
    require_same_shape(g, c);
    require_member(c, at);
    double sum = 0.0;
    const double v = g(at.row, at.col);
    for (const auto& o : kEightNeighborhood) {
        const int r = at.row + o.drow, col = at.col + o.dcol;
        if (c.contains(r, col)) sum += smoothness_summand(v - g(r, col), params.lambda);
    }
    return sum;
}

double s2_term(const GrayImage& g, const ContourSet& c, PixelCoord at, const LossParams& params) {
    require_same_shape(g, c);
    require_member(c, at);
    double sum = 0.0;
    const double v = g(at.row, at.col);
    for (const auto& o : kEightNeighborhood) {
        const int r = at.row + o.drow, col = at.col + o.dcol;
        if (g.in_bounds(r, col) && !c.contains(r, col)) sum += sharpness_summand(v - g(r, col), params.lambda, o.dist);
    }
    return sum;
}

double smoothness_loss(const GrayImage& g, const ContourSet& c, const LossParams& params) {
    if (c.empty()) throw EmptyContourSet();
    double sum = 0.0;
    for (const auto& e : c.entries()) sum += s1_term(g, c, e.coord, params);
    return sum / static_cast<double>(c.size());
}

double sharpness_loss(const GrayImage& g, const ContourSet& c, const LossParams& params) {
    if (c.empty()) throw EmptyContourSet();
    double sum = 0.0;
    for (const auto& e : c.entries()) sum += s2_term(g, c, e.coord, params);
    return sum / static_cast<double>(c.size());
}

std::pair<double, double> adversarial_terms(DiscriminatorScore d_real, DiscriminatorScore d_fake) {
    return {-std::log(d_real.value()), -std::log1p(-d_fake.value())};
}

LossBreakdown total_loss(double l1, double l2, double ls1, double ls2, const LossParams& params) {
    for (double v : {l1, l2, ls1, ls2}) {
        if (!std::isfinite(v) || v < 0.0) throw PreconditionError("loss components must be finite and >= 0");
    }
    return {l1, l2, ls1, ls2, l1 + l2 + ls1 + params.beta * ls2};
}

Grid<double> regularizer_gradient(const GrayImage& g, const ContourSet& c, const LossParams& params) {
    require_same_shape(g, c);
    if (c.empty()) throw EmptyContourSet();
    Grid<double> grad(g.width(), g.height(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(c.size());
    for (const auto& e : c.entries()) {
        const int r0 = e.coord.row, c0 = e.coord.col;
        const double v = g(r0, c0);
        for (const auto& o : kEightNeighborhood) {
            const int r = r0 + o.drow, col = c0 + o.dcol;
            if (!g.in_bounds(r, col)) continue;
            const double diff = v - g(r, col);
            double d;
            if (c.contains(r, col)) d = d_smoothness(diff, params.lambda) * inv_n;
            else d = params.beta * d_sharpness(diff, params.lambda, o.dist) * inv_n;
            grad(r0, c0) += d;
            grad(r, col) -= d;
        }
    }
    return grad;
}

FloatMap loss_gradient(const GrayImage& g, const ContourSet& c, const LossParams& params) {
    const Grid<double> grad = regularizer_gradient(g, c, params);
    FloatMap out(grad.width(), grad.height(), 0.0f);
    for (std::size_t i = 0; i < grad.size(); ++i) out.data()[i] = static_cast<float>(grad.data()[i]);
    return out;
}

namespace {

LossBreakdown regularizer(const GrayImage& g, const ContourSet& c, const LossParams& params) {
    const double ls1 = smoothness_loss(g, c, params);
    const double ls2 = sharpness_loss(g, c, params);
    return total_loss(0.0, 0.0, ls1, ls2, params);
}

}  // namespace

OptimizeResult optimize_patch(const GrayImage& g0, const ContourSet& c, const LossParams& params, double step,
                              int iters) {
    validate(params);
    require_same_shape(g0, c);
    if (c.empty()) throw EmptyContourSet();
    if (!(step > 0.0) || !std::isfinite(step)) throw PreconditionError("step must be > 0");
    if (iters < 1) throw PreconditionError("iters must be >= 1");
    constexpr int kMaxHalvings = 20;

    OptimizeResult result{g0, {regularizer(g0, c, params)}};
    std::vector<double> trial(g0.size());
    for (int it = 0; it < iters; ++it) {
        const Grid<double> grad = regularizer_gradient(result.image, c, params);
        if (std::ranges::all_of(grad.values(), [](double d) { return d == 0.0; })) break;
        const double current = result.trace.back().total;
        const auto pixels = result.image.data();
        bool accepted = false;
        double t = step;
        for (int h = 0; h <= kMaxHalvings && !accepted; ++h, t *= 0.5) {
            for (std::size_t i = 0; i < trial.size(); ++i)
                trial[i] = std::clamp(pixels[i] - t * grad.data()[i], 0.0, 1.0);
            if (std::ranges::equal(trial, pixels)) break;
            GrayImage candidate(g0.width(), g0.height(), trial);
            LossBreakdown value = regularizer(candidate, c, params);
            if (value.total <= current) {
                result.image = std::move(candidate);
                result.trace.push_back(value);
                accepted = true;
            }
        }
        if (!accepted) break;
    }
    return result;
}

ContrastReport contrast_report(const GrayImage& g, const ContourSet& c) {
    require_same_shape(g, c);
    if (c.empty()) throw EmptyContourSet();
    double cross = 0.0, along = 0.0;
    std::size_t n_cross = 0, n_along = 0;
    // Raster order rather than entry order, so the sums do not depend on how
    // the contour set was enumerated.
    for (int r0 = 0; r0 < g.height(); ++r0) {
        for (int c0 = 0; c0 < g.width(); ++c0) {
            if (!c.contains(r0, c0)) continue;
            const double v = g(r0, c0);
            for (const auto& o : kEightNeighborhood) {
                const int r = r0 + o.drow, col = c0 + o.dcol;
                if (!g.in_bounds(r, col)) continue;
                const double d = std::abs(v - g(r, col));
                if (c.contains(r, col)) {
                    along += d;
                    ++n_along;
                } else {
                    cross += d;
                    ++n_cross;
                }
            }
        }
    }
    return {n_cross ? cross / static_cast<double>(n_cross) : 0.0, n_along ? along / static_cast<double>(n_along) : 0.0};
}

}  // namespace nucleoforge
