#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "excursor/spectral.hpp"

namespace excursor {

// phi / Phi via the C library erfc (glibc's rational approximations are
// accurate to a couple of ulp, far below the 1e-12 needed here).
inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// ---------------------------------------------------------------------------
// Gaussian stationary-process baselines
// ---------------------------------------------------------------------------

/// Density of peaks with height in [theta, theta + dtheta), per unit time,
/// for a stationary Gaussian process with the given moments. Thresholds are
/// in units of sigma0, so on standardized input (sigma0 = 1) this is directly
/// comparable with the measured differential peak density.
inline double gaussian_peak_density(double theta, const SpectralMoments& m) {
    const auto [gamma_big, gamma_small] = shape_params(m);
    if (gamma_big >= 1.0) {
        throw std::invalid_argument("gaussian_peak_density: degenerate (deterministic-like) spectrum");
    }
    const double s0 = m.sigma0;
    const double s1 = m.sigma1;
    const double one_minus_g2 = 1.0 - gamma_big * gamma_big;
    const double pi = std::numbers::pi;

    const double term1 = s1 * theta * std::exp(-0.5 * theta * theta) / (4.0 * pi * s0 * s0) *
                         (1.0 + std::erf(gamma_big * theta / std::sqrt(2.0 * one_minus_g2)));
    const double term2 = gamma_big * std::exp(-theta * theta / (2.0 * one_minus_g2)) /
                         (4.0 * std::pow(pi, 1.5) * s1 * gamma_small * gamma_small) *
                         std::sqrt(2.0 * one_minus_g2);
    return term1 + term2;
}

/// Trough density by the theta -> -theta symmetry of Gaussian processes.
inline double gaussian_trough_density(double theta, const SpectralMoments& m) {
    return gaussian_peak_density(-theta, m);
}

/// Rate of up-crossings through the level theta*sigma0, per unit time.
inline double gaussian_upcross_density(double theta, const SpectralMoments& m) {
    if (!(m.sigma0 > 0.0) || !(m.sigma1 > 0.0)) {
        throw std::invalid_argument("gaussian_upcross_density: sigma0 and sigma1 must be positive");
    }
    return m.sigma1 / (2.0 * std::numbers::pi * m.sigma0) * std::exp(-0.5 * theta * theta);
}

// ---------------------------------------------------------------------------
// Quadrature oracle
// ---------------------------------------------------------------------------

/// Peak density evaluated directly as the conditional expectation over the
/// trivariate Gaussian of (value, slope, curvature) in normalized variables:
/// the slope is pinned to zero (it is independent of the other two for a
/// stationary process), the value is pinned to theta, and |curvature| is
/// integrated over the negative half-line against the joint density with
/// corr(value, curvature) = -Gamma. This shares no algebra with
/// gaussian_peak_density and is the independent check on it.
inline double quadrature_peak_density(double theta, const SpectralMoments& m,
                                      double rel_tol = 1e-10) {
    const auto [gamma_big, gamma_small] = shape_params(m);
    (void)gamma_small;
    if (gamma_big >= 1.0) {
        throw std::invalid_argument("quadrature_peak_density: degenerate spectrum");
    }
    const double rho = -gamma_big;
    const double det = 1.0 - rho * rho;
    const double pi = std::numbers::pi;
    const double slope_pdf_at_zero = 1.0 / std::sqrt(2.0 * pi);

    auto integrand = [&](double zeta) {
        const double q = (theta * theta - 2.0 * rho * theta * zeta + zeta * zeta) / (2.0 * det);
        const double joint = std::exp(-q) / (2.0 * pi * std::sqrt(det));
        return std::abs(zeta) * joint * slope_pdf_at_zero;
    };

    using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    double abs_err = 0.0;
    const double integral = quad::integrate(integrand, -std::numeric_limits<double>::infinity(),
                                            0.0, 15, rel_tol * 1e-2, &abs_err);
    const double achieved = abs_err / std::max(std::abs(integral), 1e-300);
    if (achieved > rel_tol) {
        throw std::runtime_error("quadrature_peak_density: did not converge (achieved relative error " +
                                 format_double(achieved) + ")");
    }
    return m.sigma2 / (m.sigma1 * m.sigma0) * integral;
}

// ---------------------------------------------------------------------------
// Exact discrete iid oracles
// ---------------------------------------------------------------------------

/// Probability that an interior sample of an iid Gaussian sequence is a local
/// maximum with value at-or-above theta: integral over [theta, inf) of
/// phi(x) Phi(x)^2.
inline double iid_peak_density(double theta) {
    auto integrand = [](double x) {
        const double c = normal_cdf(x);
        return normal_pdf(x) * c * c;
    };
    using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
    double abs_err = 0.0;
    const double v = quad::integrate(integrand, theta, std::numeric_limits<double>::infinity(),
                                     15, 1e-12, &abs_err);
    if (abs_err > 1e-10) {
        throw std::runtime_error("iid_peak_density: quadrature did not converge");
    }
    return v;
}

/// Probability that an iid Gaussian step crosses theta upward:
/// Phi(theta) (1 - Phi(theta)).
inline double iid_upcross_density(double theta) {
    const double c = normal_cdf(theta);
    return c * (1.0 - c);
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

enum class TheoryModel { kGaussianPeak, kGaussianTrough, kGaussianUpcross, kIidPeak, kIidUpcross, kQuadraturePeak };

struct TheoryCurve {
    std::vector<double> theta_grid;
    std::vector<double> values;
    TheoryModel model = TheoryModel::kGaussianPeak;
    SpectralMoments params;
};

inline TheoryCurve theory_curve(TheoryModel model, std::span<const double> theta_grid,
                                const SpectralMoments& m = {}) {
    TheoryCurve curve;
    curve.theta_grid.assign(theta_grid.begin(), theta_grid.end());
    curve.model = model;
    curve.params = m;
    curve.values.reserve(theta_grid.size());
    for (double theta : theta_grid) {
        switch (model) {
            case TheoryModel::kGaussianPeak: curve.values.push_back(gaussian_peak_density(theta, m)); break;
            case TheoryModel::kGaussianTrough: curve.values.push_back(gaussian_trough_density(theta, m)); break;
            case TheoryModel::kGaussianUpcross: curve.values.push_back(gaussian_upcross_density(theta, m)); break;
            case TheoryModel::kIidPeak: curve.values.push_back(iid_peak_density(theta)); break;
            case TheoryModel::kIidUpcross: curve.values.push_back(iid_upcross_density(theta)); break;
            case TheoryModel::kQuadraturePeak: curve.values.push_back(quadrature_peak_density(theta, m)); break;
        }
    }
    return curve;
}

}  // namespace excursor
