#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "excursor/spectral.hpp"

using namespace excursor;

namespace {

StandardizedSeries sine_series(double omega0, std::size_t n) {
    std::vector<double> xs(n);
    for (std::size_t k = 0; k < n; ++k) xs[k] = std::sin(omega0 * static_cast<double>(k));
    return standardize(xs, "sine");
}

}  // namespace

TEST_CASE("pure cosine has a single dominant bin", "[spectral]") {
    const std::size_t n = 1024;
    const std::size_t m0 = 37;  // on-grid frequency
    std::vector<double> xs(n);
    for (std::size_t k = 0; k < n; ++k) {
        xs[k] = std::cos(2.0 * std::numbers::pi * static_cast<double>(m0 * k) / static_cast<double>(n));
    }
    const auto spec = power_spectrum(standardize(xs));
    std::size_t argmax = 0;
    double total = 0.0;
    for (std::size_t m = 0; m < spec.power.size(); ++m) {
        total += spec.power[m];
        if (spec.power[m] > spec.power[argmax]) argmax = m;
    }
    REQUIRE(argmax == m0);
    REQUIRE(spec.power[m0] / total > 0.999);
}

TEST_CASE("Parseval holds on arbitrary input", "[spectral]") {
    Rng rng(8);
    std::vector<double> xs(1000);
    for (double& x : xs) x = rng.normal() + 0.3 * std::sin(0.02 * static_cast<double>(&x - xs.data()));
    const auto s = standardize(xs);
    const auto spec = power_spectrum(s);
    const double mean_power = compensated_sum(spec.power) / static_cast<double>(s.size());
    const double var = population_mean_var(s.values).var;
    REQUIRE(mean_power == Catch::Approx(var).epsilon(1e-9));
}

TEST_CASE("white noise spectrum is flat with mean power = variance", "[spectral]") {
    const std::size_t n = 262'144;
    const auto s = synth({SynthKind::kWhite, n, 1, 41}).front();
    const auto spec = power_spectrum(s);
    const double mean_power = compensated_sum(spec.power) / static_cast<double>(n);
    REQUIRE(std::abs(mean_power - 1.0) < 5.0 / std::sqrt(static_cast<double>(n)));
    // Flatness: average over the low and high quarter of the band agree.
    const std::size_t q = spec.power.size() / 4;
    double low = 0.0;
    double high = 0.0;
    for (std::size_t m = 1; m <= q; ++m) low += spec.power[m];
    for (std::size_t m = spec.power.size() - q; m < spec.power.size(); ++m) high += spec.power[m];
    REQUIRE(low / high == Catch::Approx(1.0).margin(0.05));
    REQUIRE_THROWS_AS(power_spectrum(std::vector<double>(8, 1.0)), std::invalid_argument);
}

TEST_CASE("sigma0 of a standardized series is 1", "[spectral]") {
    const auto s = synth({SynthKind::kSmoothed, 5000, 1, 2, 3.0}).front();
    REQUIRE(spectral_moment(s, 0) == Catch::Approx(1.0).epsilon(1e-9));
    REQUIRE_THROWS_AS(spectral_moment(s, 3), std::invalid_argument);
}

TEST_CASE("iid normal first differences have sigma1 = sqrt(2)", "[spectral]") {
    const auto s = synth({SynthKind::kWhite, 1'000'000, 1, 12}).front();
    REQUIRE(spectral_moment(s, 1) == Catch::Approx(std::numbers::sqrt2).epsilon(0.01));
}

TEST_CASE("slow sine: sigma1/sigma0 approaches omega0", "[spectral]") {
    const double omega0 = 0.05;
    const auto s = sine_series(omega0, 100'000);
    const double ratio = spectral_moment(s, 1) / spectral_moment(s, 0);
    REQUIRE(ratio == Catch::Approx(omega0).epsilon(0.02));
}

TEST_CASE("shape params formulas", "[spectral]") {
    SpectralMoments m;
    m.sigma0 = 1.0;
    m.sigma1 = std::numbers::sqrt2;
    m.sigma2 = 2.0;
    const auto [gamma_big, gamma_small] = shape_params(m);
    // Gamma = sigma1^2/(sigma0 sigma2) = 2/2 = 1; gamma = sigma1/sigma2 = 0.7071...
    REQUIRE(gamma_big == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(gamma_small == Catch::Approx(0.7071067811865476).epsilon(1e-12));

    m.sigma2 = 0.0;
    REQUIRE_THROWS_WITH(shape_params(m), Catch::Matchers::ContainsSubstring("degenerate second moment"));
}

TEST_CASE("pure low-frequency sine drives Gamma to 1", "[spectral]") {
    const auto m = estimate_moments(sine_series(0.03, 200'000));
    REQUIRE(m.gamma_big == Catch::Approx(1.0).epsilon(0.02));
}

TEST_CASE("Gamma is at most 1 on generated synthetics", "[spectral]") {
    for (std::uint64_t seed : {1, 2, 3}) {
        for (double width : {1.0, 3.0, 8.0}) {
            const auto s = synth({SynthKind::kSmoothed, 4000, 1, seed, width}).front();
            const auto m = estimate_moments(s);
            REQUIRE(m.gamma_big > 0.0);
            REQUIRE(m.gamma_big <= 1.0 + 1e-12);
        }
        const auto w = synth({SynthKind::kWhite, 4000, 1, seed}).front();
        REQUIRE(estimate_moments(w).gamma_big <= 1.0 + 1e-12);
    }
}

TEST_CASE("Gamma is invariant under amplitude rescaling", "[spectral]") {
    Rng rng(9);
    std::vector<double> xs(4096);
    double state = 0.0;
    for (double& x : xs) {
        state = 0.9 * state + rng.normal();
        x = state;
    }
    auto moments_of = [](const std::vector<double>& v) {
        SpectralMoments m;
        m.sigma0 = std::sqrt(population_mean_var(v).var);
        std::vector<double> d1(v.size() - 1);
        for (std::size_t i = 0; i + 1 < v.size(); ++i) d1[i] = v[i + 1] - v[i];
        m.sigma1 = std::sqrt(population_mean_var(d1).var);
        std::vector<double> d2(d1.size() - 1);
        for (std::size_t i = 0; i + 1 < d1.size(); ++i) d2[i] = d1[i + 1] - d1[i];
        m.sigma2 = std::sqrt(population_mean_var(d2).var);
        return shape_params(m).first;
    };
    std::vector<double> scaled = xs;
    for (double& x : scaled) x *= 37.5;
    REQUIRE(moments_of(xs) == Catch::Approx(moments_of(scaled)).epsilon(1e-12));
}

TEST_CASE("difference and discrete-weighted spectrum sigma1 agree on white noise", "[spectral]") {
    const std::size_t n = 1u << 20;
    const auto s = synth({SynthKind::kWhite, n, 1, 61}).front();
    const double diff = spectral_moment(s, 1, MomentMethod::kDifference);
    const auto spec = power_spectrum(s);
    const double mapped = spectral_moment_from_spectrum(spec, 1, SpectrumWeight::kDiscreteDifference);
    // Identical up to the single wrap-around difference, O(1/N).
    REQUIRE(std::abs(diff - mapped) / mapped < 1e-6);
    const double mapped2 = spectral_moment_from_spectrum(spec, 2, SpectrumWeight::kDiscreteDifference);
    const double diff2 = spectral_moment(s, 2, MomentMethod::kDifference);
    REQUIRE(std::abs(diff2 - mapped2) / mapped2 < 1e-5);
}

TEST_CASE("difference and continuum spectrum methods converge for smooth processes", "[spectral]") {
    for (double width : {3.0, 6.0}) {
        const auto s = synth({SynthKind::kSmoothed, 200'000, 1, 77, width}).front();
        const double diff = spectral_moment(s, 1, MomentMethod::kDifference);
        const double spec = spectral_moment(s, 1, MomentMethod::kSpectrum);
        REQUIRE(diff == Catch::Approx(spec).epsilon(0.02));
    }
}

TEST_CASE("estimate_moments fills derived shape parameters", "[spectral]") {
    const auto s = synth({SynthKind::kSmoothed, 50'000, 1, 5, 5.0}).front();
    const auto m = estimate_moments(s);
    REQUIRE(m.gamma_big == Catch::Approx(m.sigma1 * m.sigma1 / (m.sigma0 * m.sigma2)).epsilon(1e-12));
    REQUIRE(m.gamma_small == Catch::Approx(m.sigma1 / m.sigma2).epsilon(1e-12));
    // Gaussian-smoothed white noise has Gamma -> 1/sqrt(3) independent of width.
    REQUIRE(m.gamma_big == Catch::Approx(1.0 / std::sqrt(3.0)).epsilon(0.03));
}
