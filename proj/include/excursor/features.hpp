#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "excursor/ingest.hpp"

namespace excursor {

enum class FeatureKind { kPeak, kTrough, kUpcross };

enum class ThresholdMode { kAbove, kBelow, kAt, kBand };

/// What to extract: a feature kind plus the threshold, expressed in units of
/// sigma0 of the (standardized) series. The mode follows the kind: peaks are
/// kept at-or-above theta, troughs at-or-below, up-crossings pass through it.
struct FeatureSpec {
    FeatureKind kind = FeatureKind::kPeak;
    double theta = 0.0;
    ThresholdMode mode = ThresholdMode::kAbove;
    double band_width = 0.0;  // only meaningful for kBand

    bool operator==(const FeatureSpec&) const = default;
};

inline FeatureSpec peak_spec(double theta) { return {FeatureKind::kPeak, theta, ThresholdMode::kAbove, 0.0}; }
inline FeatureSpec trough_spec(double theta) { return {FeatureKind::kTrough, theta, ThresholdMode::kBelow, 0.0}; }
inline FeatureSpec upcross_spec(double theta) { return {FeatureKind::kUpcross, theta, ThresholdMode::kAt, 0.0}; }

inline std::string_view feature_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::kPeak: return "pk";
        case FeatureKind::kTrough: return "tr";
        case FeatureKind::kUpcross: return "up";
    }
    return "?";
}

/// Sorted time indices of one feature kind at one threshold.
/// Extrema live in [1, N-2] and are never adjacent; up-crossings live in
/// [0, N-2] (the index below the level).
struct FeatureCatalog {
    std::vector<int> indices;
    std::size_t series_length = 0;
    FeatureSpec spec;
    std::string label;
    bool short_input = false;  // set instead of throwing when N < 3 for extrema

    std::size_t size() const { return indices.size(); }
};

// Strict inequalities on both neighbors: plateaus yield no feature, so every
// catalog is deterministic and extrema never sit on adjacent indices.
inline FeatureCatalog find_peaks(std::span<const double> x, double theta, std::string label = {}) {
    FeatureCatalog cat;
    cat.series_length = x.size();
    cat.spec = peak_spec(theta);
    cat.label = std::move(label);
    if (x.size() < 3) {
        cat.short_input = true;
        return cat;
    }
    for (std::size_t k = 1; k + 1 < x.size(); ++k) {
        if (x[k - 1] < x[k] && x[k] > x[k + 1] && x[k] >= theta) {
            cat.indices.push_back(static_cast<int>(k));
        }
    }
    return cat;
}

inline FeatureCatalog find_troughs(std::span<const double> x, double theta, std::string label = {}) {
    FeatureCatalog cat;
    cat.series_length = x.size();
    cat.spec = trough_spec(theta);
    cat.label = std::move(label);
    if (x.size() < 3) {
        cat.short_input = true;
        return cat;
    }
    for (std::size_t k = 1; k + 1 < x.size(); ++k) {
        if (x[k - 1] > x[k] && x[k] < x[k + 1] && x[k] <= theta) {
            cat.indices.push_back(static_cast<int>(k));
        }
    }
    return cat;
}

// Counted at the index below the level: strict below at k, at-or-above at
// k+1, so every passage through theta is counted exactly once.
inline FeatureCatalog find_upcrossings(std::span<const double> x, double theta, std::string label = {}) {
    if (x.size() < 2) throw std::invalid_argument("find_upcrossings: need at least 2 samples");
    FeatureCatalog cat;
    cat.series_length = x.size();
    cat.spec = upcross_spec(theta);
    cat.label = std::move(label);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        if (x[k] < theta && x[k + 1] >= theta) cat.indices.push_back(static_cast<int>(k));
    }
    return cat;
}

inline FeatureCatalog find_peaks(const StandardizedSeries& s, double theta) {
    return find_peaks(s.values, theta, s.label);
}
inline FeatureCatalog find_troughs(const StandardizedSeries& s, double theta) {
    return find_troughs(s.values, theta, s.label);
}
inline FeatureCatalog find_upcrossings(const StandardizedSeries& s, double theta) {
    return find_upcrossings(s.values, theta, s.label);
}

inline FeatureCatalog find_features(const StandardizedSeries& s, const FeatureSpec& spec) {
    switch (spec.kind) {
        case FeatureKind::kPeak: return find_peaks(s, spec.theta);
        case FeatureKind::kTrough: return find_troughs(s, spec.theta);
        case FeatureKind::kUpcross: return find_upcrossings(s, spec.theta);
    }
    throw std::logic_error("unknown feature kind");
}

/// Optional Gaussian pre-smoothing for raw discrete inputs. Edge taps are
/// renormalized so the window always integrates to one; the result is
/// re-standardized.
inline StandardizedSeries gaussian_smooth(const StandardizedSeries& s, double width) {
    if (width < 1.0) throw std::invalid_argument("gaussian_smooth: width must be >= 1");
    const auto kernel = detail::gaussian_kernel(width);
    const long half = static_cast<long>(kernel.size() / 2);
    const long n = static_cast<long>(s.size());
    std::vector<double> out(static_cast<std::size_t>(n));
    for (long t = 0; t < n; ++t) {
        double acc = 0.0;
        double wsum = 0.0;
        for (long j = -half; j <= half; ++j) {
            const long src = t + j;
            if (src < 0 || src >= n) continue;
            const double w = kernel[static_cast<std::size_t>(j + half)];
            acc += w * s.values[static_cast<std::size_t>(src)];
            wsum += w;
        }
        out[static_cast<std::size_t>(t)] = acc / wsum;
    }
    auto result = standardize(out, s.label);
    result.window_id = s.window_id;
    return result;
}

// ---------------------------------------------------------------------------
// Empirical density curves
// ---------------------------------------------------------------------------

enum class DensityBand { kDifferential, kCumulative };

struct DensityPoint {
    double theta = 0.0;
    double density = 0.0;
    double err = 0.0;  // binomial standard error
};

/// Per-valid-position normalization throughout: extrema use N-2 interior
/// positions, crossings use N-1 steps. Differential mode bins feature values
/// into [theta, theta + band_width) and divides by the bin width; cumulative
/// mode counts peaks above / troughs below / crossings through each theta.
inline std::vector<DensityPoint> density_curve(const StandardizedSeries& s, FeatureKind kind,
                                               std::span<const double> theta_grid,
                                               DensityBand band, double band_width = 0.0) {
    if (theta_grid.empty()) throw std::invalid_argument("density_curve: empty theta grid");
    for (std::size_t i = 1; i < theta_grid.size(); ++i) {
        if (theta_grid[i] < theta_grid[i - 1]) {
            throw std::invalid_argument("density_curve: theta grid must be sorted");
        }
    }
    if (band == DensityBand::kDifferential) {
        if (kind == FeatureKind::kUpcross) {
            throw std::invalid_argument("density_curve: differential band applies to extrema only");
        }
        if (!(band_width > 0.0)) throw std::invalid_argument("density_curve: band width must be positive");
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<DensityPoint> out;
    out.reserve(theta_grid.size());

    if (kind == FeatureKind::kUpcross) {
        const double valid = static_cast<double>(s.size() - 1);
        for (double theta : theta_grid) {
            const auto cat = find_upcrossings(s, theta);
            const double p = static_cast<double>(cat.size()) / valid;
            out.push_back({theta, p, std::sqrt(p * (1.0 - p) / valid)});
        }
        return out;
    }

    const auto cat = kind == FeatureKind::kPeak ? find_peaks(s, -inf) : find_troughs(s, inf);
    std::vector<double> heights;
    heights.reserve(cat.size());
    for (int idx : cat.indices) heights.push_back(s.values[static_cast<std::size_t>(idx)]);
    std::sort(heights.begin(), heights.end());
    const double valid = static_cast<double>(s.size() - 2);

    auto count_in = [&](double lo, double hi) {  // [lo, hi)
        const auto a = std::lower_bound(heights.begin(), heights.end(), lo);
        const auto b = std::lower_bound(heights.begin(), heights.end(), hi);
        return static_cast<double>(b - a);
    };

    for (double theta : theta_grid) {
        double count;
        double scale = 1.0;
        if (band == DensityBand::kDifferential) {
            count = count_in(theta, theta + band_width);
            scale = band_width;
        } else if (kind == FeatureKind::kPeak) {
            count = count_in(theta, inf);  // peaks at-or-above theta
        } else {                           // troughs at-or-below theta
            count = static_cast<double>(std::upper_bound(heights.begin(), heights.end(), theta) -
                                        heights.begin());
        }
        const double p = count / valid;
        out.push_back({theta, p / scale, std::sqrt(p * (1.0 - p) / valid) / scale});
    }
    return out;
}

}  // namespace excursor
