#pragma once

#include "nucleoforge/raster.hpp"

namespace nucleoforge {

/// Every constant the full-reference metrics depend on, on the [0,1]
/// intensity scale. Defaults reproduce the metric authors' reference code.
struct MetricConstants {
    // SSIM: Gaussian window, stabilisers (k * L)^2 with dynamic range L.
    int ssim_window = 11;
    double ssim_sigma = 1.5;
    double ssim_k1 = 0.01;
    double ssim_k2 = 0.03;
    double dynamic_range = 1.0;

    // GMSD: 2x2 mean downsampling, Prewitt gradients, stabiliser 170/255^2.
    double gmsd_c = 170.0 / (255.0 * 255.0);

    // FSIM: log-Gabor bank and similarity stabilisers. T2 is 160/255^2
    // because gradients are taken on [0,1] intensities.
    int fsim_scales = 4;
    int fsim_orientations = 4;
    double fsim_min_wavelength = 6.0;
    double fsim_mult = 2.0;
    double fsim_sigma_onf = 0.55;
    double fsim_dtheta_on_sigma = 1.2;
    double fsim_noise_k = 2.0;
    double fsim_t1 = 0.85;
    double fsim_t2 = 160.0 / (255.0 * 255.0);
};

void validate(const MetricConstants& k);

struct QualityReport {
    double ssim = 0.0;
    double fsim = 0.0;
    double gmsd = 0.0;
};

/// Mean SSIM over all fully-contained windows. Throws DimensionMismatch,
/// TooSmall (min side < window).
double ssim(const GrayImage& a, const GrayImage& b, const MetricConstants& k = {});

/// Population standard deviation of the gradient-magnitude similarity map.
/// Throws DimensionMismatch, TooSmall (min side < 3).
double gmsd(const GrayImage& a, const GrayImage& b, const MetricConstants& k = {});

/// Phase-congruency-weighted similarity. Throws DimensionMismatch, TooSmall
/// (min side < 32).
double fsim(const GrayImage& a, const GrayImage& b, const MetricConstants& k = {});

/// Phase congruency map (exposed for tests). `img` is on the 0..255 scale
/// the noise model was calibrated for.
Grid<double> phase_congruency(const Grid<double>& img, const MetricConstants& k = {});

QualityReport quality_report(const GrayImage& a, const GrayImage& b, const MetricConstants& k = {});

}  // namespace nucleoforge
