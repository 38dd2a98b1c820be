#pragma once

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "excursor/common.hpp"
#include "excursor/ingest.hpp"

namespace excursor {

enum class MomentMethod { kDifference, kSpectrum };

/// Spectral moments of one series at daily sampling (dt = 1).
///   sigma0 = amplitude scale, sigma1 = derivative scale (1/day),
///   sigma2 = curvature scale (1/day^2),
///   gamma_big = sigma1^2 / (sigma0 sigma2), gamma_small = sigma1 / sigma2.
struct SpectralMoments {
    double sigma0 = 0.0;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double gamma_big = 0.0;
    double gamma_small = 0.0;
    MomentMethod method = MomentMethod::kDifference;
};

/// One-sided periodogram with the two spectral halves folded together:
/// power[m] covers +/- omega_m, so (1/N) * sum(power) equals the series
/// variance (mean removed before transforming).
struct Spectrum {
    std::vector<double> omega;  // omega_m = 2 pi m / N, m = 0..floor(N/2)
    std::vector<double> power;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace detail

inline Spectrum power_spectrum(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 16) throw std::invalid_argument("power_spectrum: need at least 16 samples");

    const double mean = compensated_sum(values) / static_cast<double>(n);
    std::vector<double> in(n);
    for (std::size_t i = 0; i < n; ++i) in[i] = values[i] - mean;
    std::vector<std::complex<double>> out(n / 2 + 1);

    {
        // FFTW's planner is not thread-safe; execution is.
        fftw_plan plan;
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                        reinterpret_cast<fftw_complex*>(out.data()),
                                        FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        {
            std::lock_guard lock(detail::fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
    }

    Spectrum spec;
    const std::size_t bins = n / 2 + 1;
    spec.omega.resize(bins);
    spec.power.resize(bins);
    for (std::size_t m = 0; m < bins; ++m) {
        spec.omega[m] = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        const double mag2 = std::norm(out[m]);
        const bool self_conjugate = (m == 0) || (n % 2 == 0 && m == n / 2);
        spec.power[m] = (self_conjugate ? 1.0 : 2.0) * mag2 / static_cast<double>(n);
    }
    return spec;
}

inline Spectrum power_spectrum(const StandardizedSeries& s) {
    return power_spectrum(std::span<const double>(s.values));
}

/// Frequency weight used when turning the periodogram into moments.
/// kContinuum uses omega^n (comparisons against smooth-process theory);
/// kDiscreteDifference uses (2 sin(omega/2))^n, the exact transfer function
/// of n-fold differencing, for cross-checks against the difference method.
enum class SpectrumWeight { kContinuum, kDiscreteDifference };

inline double spectral_moment_from_spectrum(const Spectrum& spec, int n,
                                            SpectrumWeight weight = SpectrumWeight::kContinuum) {
    if (n < 0 || n > 2) throw std::invalid_argument("spectral moment order must be 0, 1 or 2");
    const std::size_t bins = spec.power.size();
    std::vector<double> terms(bins);
    for (std::size_t m = 0; m < bins; ++m) {
        double w = 1.0;
        if (n > 0) {
            const double base = weight == SpectrumWeight::kContinuum
                                    ? spec.omega[m]
                                    : 2.0 * std::sin(spec.omega[m] / 2.0);
            w = std::pow(base, 2 * n);
        }
        terms[m] = w * spec.power[m];
    }
    // Recover N from the grid: omega_1 = 2 pi / N.
    const double n_samples = bins > 1 ? 2.0 * std::numbers::pi / spec.omega[1]
                                      : 1.0;
    return std::sqrt(compensated_sum(terms) / n_samples);
}

namespace detail {

inline double population_std_of_diffs(std::span<const double> x, int order) {
    std::vector<double> d(x.begin(), x.end());
    for (int o = 0; o < order; ++o) {
        for (std::size_t i = 0; i + 1 < d.size(); ++i) d[i] = d[i + 1] - d[i];
        d.pop_back();
    }
    return std::sqrt(population_mean_var(d).var);
}

}  // namespace detail

inline double spectral_moment(const StandardizedSeries& s, int n,
                              MomentMethod method = MomentMethod::kDifference) {
    if (n < 0 || n > 2) throw std::invalid_argument("spectral moment order must be 0, 1 or 2");
    if (s.size() < 16) throw std::invalid_argument("spectral_moment: need at least 16 samples");
    if (method == MomentMethod::kDifference) {
        return detail::population_std_of_diffs(s.values, n);
    }
    return spectral_moment_from_spectrum(power_spectrum(s), n);
}

inline std::pair<double, double> shape_params(const SpectralMoments& m) {
    if (!(m.sigma0 > 0.0) || !(m.sigma1 > 0.0)) {
        throw std::invalid_argument("shape_params: moments must be positive");
    }
    if (!(m.sigma2 > 0.0)) throw std::invalid_argument("degenerate second moment");
    return {m.sigma1 * m.sigma1 / (m.sigma0 * m.sigma2), m.sigma1 / m.sigma2};
}

inline SpectralMoments estimate_moments(const StandardizedSeries& s,
                                        MomentMethod method = MomentMethod::kDifference) {
    SpectralMoments m;
    m.method = method;
    if (method == MomentMethod::kDifference) {
        m.sigma0 = spectral_moment(s, 0, method);
        m.sigma1 = spectral_moment(s, 1, method);
        m.sigma2 = spectral_moment(s, 2, method);
    } else {
        const Spectrum spec = power_spectrum(s);
        m.sigma0 = spectral_moment_from_spectrum(spec, 0);
        m.sigma1 = spectral_moment_from_spectrum(spec, 1);
        m.sigma2 = spectral_moment_from_spectrum(spec, 2);
    }
    const auto [gb, gs] = shape_params(m);
    m.gamma_big = gb;
    m.gamma_small = gs;
    return m;
}

}  // namespace excursor
