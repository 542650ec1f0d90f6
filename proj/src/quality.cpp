#include "nucleoforge/quality.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

namespace nucleoforge {

void validate(const MetricConstants& k) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (k.ssim_window < 3 || k.ssim_window % 2 == 0) throw ConfigError("ssim_window must be odd and >= 3");
    if (!positive(k.ssim_sigma) || !positive(k.ssim_k1) || !positive(k.ssim_k2) || !positive(k.dynamic_range))
        throw ConfigError("SSIM constants must be positive");
    if (!positive(k.gmsd_c)) throw ConfigError("gmsd_c must be positive");
    if (k.fsim_scales < 1 || k.fsim_orientations < 1) throw ConfigError("FSIM filter bank must be non-empty");
    if (!positive(k.fsim_min_wavelength) || !positive(k.fsim_mult) || !positive(k.fsim_sigma_onf) ||
        !positive(k.fsim_dtheta_on_sigma) || !(k.fsim_noise_k >= 0.0) || !positive(k.fsim_t1) || !positive(k.fsim_t2))
        throw ConfigError("FSIM constants out of range");
}

namespace {

void require_pair(const GrayImage& a, const GrayImage& b, int min_side, const char* metric) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch(std::string(metric) + ": image dimensions differ");
    if (std::min(a.width(), a.height()) < min_side)
        throw TooSmall(std::string(metric) + ": minimum image side is " + std::to_string(min_side));
}

Grid<double> as_grid(const GrayImage& img, double scale = 1.0) {
    Grid<double> g(img.width(), img.height(), 0.0);
    for (std::size_t i = 0; i < img.size(); ++i) g.data()[i] = img.data()[i] * scale;
    return g;
}

/// 2-D correlation with a 3x3 kernel, zero padding, same-size output.
Grid<double> filter3x3(const Grid<double>& img, const std::array<double, 9>& kernel) {
    Grid<double> out(img.width(), img.height(), 0.0);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            double s = 0.0;
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (img.in_bounds(r + dr, c + dc)) s += kernel[(dr + 1) * 3 + (dc + 1)] * img(r + dr, c + dc);
                }
            }
            out(r, c) = s;
        }
    }
    return out;
}

Grid<double> gradient_magnitude(const Grid<double>& img, const std::array<double, 9>& kx) {
    const std::array<double, 9> ky{kx[0], kx[3], kx[6], kx[1], kx[4], kx[7], kx[2], kx[5], kx[8]};
    const Grid<double> gx = filter3x3(img, kx);
    const Grid<double> gy = filter3x3(img, ky);
    Grid<double> out(img.width(), img.height(), 0.0);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.data()[i] = std::sqrt(gx.data()[i] * gx.data()[i] + gy.data()[i] * gy.data()[i]);
    return out;
}

/// Box-filter then keep every factor-th sample, zero padded; the same
/// alignment as the reference MATLAB code.
Grid<double> box_downsample(const Grid<double>& img, int factor) {
    if (factor == 1) return img;
    // conv2(A, ones(f)/f^2, 'same') keeps full-convolution indices offset by
    // floor(f/2); sample i then averages A[i + floor(f/2) - f + 1 .. i + floor(f/2)].
    const int hi = factor / 2, lo = hi - factor + 1;
    const int h = (img.height() + factor - 1) / factor, w = (img.width() + factor - 1) / factor;
    Grid<double> out(w, h, 0.0);
    const double norm = 1.0 / (static_cast<double>(factor) * factor);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double s = 0.0;
            for (int dr = lo; dr <= hi; ++dr)
                for (int dc = lo; dc <= hi; ++dc)
                    if (img.in_bounds(r * factor + dr, c * factor + dc)) s += img(r * factor + dr, c * factor + dc);
            out(r, c) = s * norm;
        }
    }
    return out;
}

/// Normalised 1-D Gaussian taps.
std::vector<double> gaussian_taps(int size, double sigma) {
    std::vector<double> taps(static_cast<std::size_t>(size));
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double x = i - half;
        taps[i] = std::exp(-(x * x) / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

/// Separable 'valid' filtering.
Grid<double> filter_valid(const Grid<double>& img, const std::vector<double>& taps) {
    const int k = static_cast<int>(taps.size());
    const int w = img.width() - k + 1, h = img.height() - k + 1;
    Grid<double> rows(w, img.height(), 0.0);
    for (int r = 0; r < img.height(); ++r)
        for (int c = 0; c < w; ++c) {
            double s = 0.0;
            for (int t = 0; t < k; ++t) s += taps[t] * img(r, c + t);
            rows(r, c) = s;
        }
    Grid<double> out(w, h, 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double s = 0.0;
            for (int t = 0; t < k; ++t) s += taps[t] * rows(r + t, c);
            out(r, c) = s;
        }
    return out;
}

Grid<double> product(const Grid<double>& a, const Grid<double>& b) {
    Grid<double> out(a.width(), a.height(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return out;
}

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

/// In-place 2-D complex FFT pair on an owned buffer.
class Fft2 {
public:
    Fft2(int rows, int cols) : n_(static_cast<std::size_t>(rows) * cols) {
        std::lock_guard lock(fftw_planner_mutex());
        buf_ = fftw_alloc_complex(n_);
        forward_ = fftw_plan_dft_2d(rows, cols, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_2d(rows, cols, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft2() {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(buf_);
    }
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    std::vector<std::complex<double>> forward(const std::vector<std::complex<double>>& in) { return run(in, forward_, 1.0); }
    /// Normalised inverse (divides by N, like MATLAB's ifft2).
    std::vector<std::complex<double>> inverse(const std::vector<std::complex<double>>& in) {
        return run(in, backward_, 1.0 / static_cast<double>(n_));
    }

private:
    std::vector<std::complex<double>> run(const std::vector<std::complex<double>>& in, fftw_plan plan, double scale) {
        for (std::size_t i = 0; i < n_; ++i) {
            buf_[i][0] = in[i].real();
            buf_[i][1] = in[i].imag();
        }
        fftw_execute(plan);
        std::vector<std::complex<double>> out(n_);
        for (std::size_t i = 0; i < n_; ++i) out[i] = {buf_[i][0] * scale, buf_[i][1] * scale};
        return out;
    }

    std::size_t n_;
    fftw_complex* buf_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Normalised frequency coordinates in [-0.5, 0.5), laid out with the zero
/// frequency at index 0 (i.e. already inverse-shifted).
std::vector<double> frequency_axis(int n) {
    std::vector<double> centred(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (n % 2) centred[i] = (i - (n - 1) / 2.0) / (n - 1);
        else centred[i] = (i - n / 2.0) / n;
    }
    std::vector<double> shifted(centred.size());
    for (int i = 0; i < n; ++i) shifted[i] = centred[(i + n / 2) % n];
    return shifted;
}

double median(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

}  // namespace

double ssim(const GrayImage& a, const GrayImage& b, const MetricConstants& k) {
    validate(k);
    require_pair(a, b, k.ssim_window, "ssim");
    const double c1 = (k.ssim_k1 * k.dynamic_range) * (k.ssim_k1 * k.dynamic_range);
    const double c2 = (k.ssim_k2 * k.dynamic_range) * (k.ssim_k2 * k.dynamic_range);
    const auto taps = gaussian_taps(k.ssim_window, k.ssim_sigma);
    const Grid<double> ga = as_grid(a), gb = as_grid(b);
    const Grid<double> mu_a = filter_valid(ga, taps);
    const Grid<double> mu_b = filter_valid(gb, taps);
    const Grid<double> e_aa = filter_valid(product(ga, ga), taps);
    const Grid<double> e_bb = filter_valid(product(gb, gb), taps);
    const Grid<double> e_ab = filter_valid(product(ga, gb), taps);
    double sum = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a.data()[i], mb = mu_b.data()[i];
        const double va = e_aa.data()[i] - ma * ma;
        const double vb = e_bb.data()[i] - mb * mb;
        const double cov = e_ab.data()[i] - ma * mb;
        sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return sum / static_cast<double>(mu_a.size());
}

double gmsd(const GrayImage& a, const GrayImage& b, const MetricConstants& k) {
    validate(k);
    require_pair(a, b, 3, "gmsd");
    constexpr std::array<double, 9> kPrewitt{1.0 / 3, 0.0, -1.0 / 3, 1.0 / 3, 0.0, -1.0 / 3, 1.0 / 3, 0.0, -1.0 / 3};
    const Grid<double> ma = gradient_magnitude(box_downsample(as_grid(a), 2), kPrewitt);
    const Grid<double> mb = gradient_magnitude(box_downsample(as_grid(b), 2), kPrewitt);
    std::vector<double> gms(ma.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < gms.size(); ++i) {
        const double x = ma.data()[i], y = mb.data()[i];
        gms[i] = (2.0 * x * y + k.gmsd_c) / (x * x + y * y + k.gmsd_c);
        mean += gms[i];
    }
    mean /= static_cast<double>(gms.size());
    double var = 0.0;
    for (double v : gms) var += (v - mean) * (v - mean);
    return std::sqrt(var / static_cast<double>(gms.size()));
}

Grid<double> phase_congruency(const Grid<double>& img, const MetricConstants& k) {
    const int rows = img.height(), cols = img.width();
    const std::size_t n = img.size();
    constexpr double kEpsilon = 1e-4;
    const double theta_sigma = std::numbers::pi / k.fsim_orientations / k.fsim_dtheta_on_sigma;

    const std::vector<double> fx = frequency_axis(cols), fy = frequency_axis(rows);
    std::vector<double> radius(n), sin_theta(n), cos_theta(n), lowpass(n);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const std::size_t i = static_cast<std::size_t>(r) * cols + c;
            const double x = fx[c], y = fy[r];
            const double rad = std::sqrt(x * x + y * y);
            lowpass[i] = 1.0 / (1.0 + std::pow(rad / 0.45, 2 * 15));
            radius[i] = rad;
            const double theta = std::atan2(-y, x);
            sin_theta[i] = std::sin(theta);
            cos_theta[i] = std::cos(theta);
        }
    }
    radius[0] = 1.0;

    std::vector<std::vector<double>> log_gabor(static_cast<std::size_t>(k.fsim_scales), std::vector<double>(n));
    const double log_sigma = std::log(k.fsim_sigma_onf);
    for (int s = 0; s < k.fsim_scales; ++s) {
        const double wavelength = k.fsim_min_wavelength * std::pow(k.fsim_mult, s);
        const double fo = 1.0 / wavelength;
        for (std::size_t i = 0; i < n; ++i) {
            const double l = std::log(radius[i] / fo);
            log_gabor[s][i] = std::exp(-(l * l) / (2.0 * log_sigma * log_sigma)) * lowpass[i];
        }
        log_gabor[s][0] = 0.0;
    }

    Fft2 fft(rows, cols);
    std::vector<std::complex<double>> spectrum(n);
    for (std::size_t i = 0; i < n; ++i) spectrum[i] = img.data()[i];
    spectrum = fft.forward(spectrum);

    std::vector<double> energy_all(n, 0.0), an_all(n, 0.0);
    std::vector<std::complex<double>> filtered(n);
    for (int o = 0; o < k.fsim_orientations; ++o) {
        const double angle = o * std::numbers::pi / k.fsim_orientations;
        const double ca = std::cos(angle), sa = std::sin(angle);
        std::vector<double> spread(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ds = sin_theta[i] * ca - cos_theta[i] * sa;
            const double dc = cos_theta[i] * ca + sin_theta[i] * sa;
            const double dtheta = std::abs(std::atan2(ds, dc));
            spread[i] = std::exp(-(dtheta * dtheta) / (2.0 * theta_sigma * theta_sigma));
        }

        std::vector<std::vector<std::complex<double>>> eo(static_cast<std::size_t>(k.fsim_scales));
        std::vector<std::vector<double>> spatial_filters(static_cast<std::size_t>(k.fsim_scales));
        std::vector<double> sum_e(n, 0.0), sum_o(n, 0.0), sum_an(n, 0.0);
        double em_n = 0.0;
        for (int s = 0; s < k.fsim_scales; ++s) {
            std::vector<std::complex<double>> filter(n);
            for (std::size_t i = 0; i < n; ++i) filter[i] = log_gabor[s][i] * spread[i];
            if (s == 0)
                for (std::size_t i = 0; i < n; ++i) em_n += filter[i].real() * filter[i].real();

            const auto impulse = fft.inverse(filter);
            spatial_filters[s].resize(n);
            for (std::size_t i = 0; i < n; ++i)
                spatial_filters[s][i] = impulse[i].real() * std::sqrt(static_cast<double>(n));

            for (std::size_t i = 0; i < n; ++i) filtered[i] = spectrum[i] * filter[i].real();
            eo[s] = fft.inverse(filtered);
            for (std::size_t i = 0; i < n; ++i) {
                sum_an[i] += std::abs(eo[s][i]);
                sum_e[i] += eo[s][i].real();
                sum_o[i] += eo[s][i].imag();
            }
        }

        std::vector<double> energy(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double x_energy = std::sqrt(sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]) + kEpsilon;
            const double mean_e = sum_e[i] / x_energy, mean_o = sum_o[i] / x_energy;
            for (int s = 0; s < k.fsim_scales; ++s) {
                const double e = eo[s][i].real(), od = eo[s][i].imag();
                energy[i] += e * mean_e + od * mean_o - std::abs(e * mean_o - od * mean_e);
            }
        }

        // Noise threshold from the smallest scale's squared response, which
        // is Rayleigh-distributed for Gaussian noise.
        std::vector<double> e2(n);
        for (std::size_t i = 0; i < n; ++i) e2[i] = std::norm(eo[0][i]);
        const double mean_e2n = -median(std::move(e2)) / std::log(0.5);
        const double noise_power = mean_e2n / em_n;
        double sum_an2 = 0.0, sum_ai_aj = 0.0;
        for (int s = 0; s < k.fsim_scales; ++s)
            for (std::size_t i = 0; i < n; ++i) sum_an2 += spatial_filters[s][i] * spatial_filters[s][i];
        for (int si = 0; si + 1 < k.fsim_scales; ++si)
            for (int sj = si + 1; sj < k.fsim_scales; ++sj)
                for (std::size_t i = 0; i < n; ++i) sum_ai_aj += spatial_filters[si][i] * spatial_filters[sj][i];
        const double noise_energy2 = 2.0 * noise_power * sum_an2 + 4.0 * noise_power * sum_ai_aj;
        const double tau = std::sqrt(noise_energy2 / 2.0);
        const double noise_mean = tau * std::sqrt(std::numbers::pi / 2.0);
        const double noise_sigma = std::sqrt((2.0 - std::numbers::pi / 2.0) * tau * tau);
        // 1.7: empirical correction of the threshold for this energy measure.
        const double threshold = (noise_mean + k.fsim_noise_k * noise_sigma) / 1.7;

        for (std::size_t i = 0; i < n; ++i) {
            energy_all[i] += std::max(energy[i] - threshold, 0.0);
            an_all[i] += sum_an[i];
        }
    }

    Grid<double> pc(cols, rows, 0.0);
    for (std::size_t i = 0; i < n; ++i) pc.data()[i] = an_all[i] > 0.0 ? energy_all[i] / an_all[i] : 0.0;
    return pc;
}

double fsim(const GrayImage& a, const GrayImage& b, const MetricConstants& k) {
    validate(k);
    require_pair(a, b, 32, "fsim");
    const int factor = std::max(1, static_cast<int>(std::lround(std::min(a.width(), a.height()) / 256.0)));
    const Grid<double> ya = box_downsample(as_grid(a), factor);
    const Grid<double> yb = box_downsample(as_grid(b), factor);

    // Phase congruency's noise model and epsilon are calibrated for 0..255.
    auto to_u8_scale = [](const Grid<double>& g) {
        Grid<double> out = g;
        for (double& v : out.data()) v *= 255.0;
        return out;
    };
    const Grid<double> pc_a = phase_congruency(to_u8_scale(ya), k);
    const Grid<double> pc_b = phase_congruency(to_u8_scale(yb), k);

    constexpr std::array<double, 9> kScharr{3.0 / 16, 0.0, -3.0 / 16, 10.0 / 16, 0.0, -10.0 / 16, 3.0 / 16, 0.0, -3.0 / 16};
    const Grid<double> ga = gradient_magnitude(ya, kScharr);
    const Grid<double> gb = gradient_magnitude(yb, kScharr);

    double weighted = 0.0, weights = 0.0, unweighted = 0.0;
    for (std::size_t i = 0; i < pc_a.size(); ++i) {
        const double p = pc_a.data()[i], q = pc_b.data()[i];
        const double x = ga.data()[i], y = gb.data()[i];
        const double s_pc = (2.0 * p * q + k.fsim_t1) / (p * p + q * q + k.fsim_t1);
        const double s_g = (2.0 * x * y + k.fsim_t2) / (x * x + y * y + k.fsim_t2);
        const double pc_max = std::max(p, q);
        weighted += s_pc * s_g * pc_max;
        weights += pc_max;
        unweighted += s_pc * s_g;
    }
    // Featureless images (phase congruency zero everywhere) fall back to the
    // unweighted mean similarity.
    if (weights == 0.0) return unweighted / static_cast<double>(pc_a.size());
    return weighted / weights;
}

QualityReport quality_report(const GrayImage& a, const GrayImage& b, const MetricConstants& k) {
    return {ssim(a, b, k), fsim(a, b, k), gmsd(a, b, k)};
}

}  // namespace nucleoforge
