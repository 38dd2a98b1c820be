#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "excursor/features.hpp"
#include "excursor/rng.hpp"

namespace excursor {

enum class PairMode { kAuto, kCross };
enum class RrMode { kMonteCarlo, kAnalytic };
enum class Estimator { kNatural, kHamilton, kLandySzalay };

inline std::string_view estimator_name(Estimator e) {
    switch (e) {
        case Estimator::kNatural: return "natural";
        case Estimator::kHamilton: return "hamilton";
        case Estimator::kLandySzalay: return "landy-szalay";
    }
    return "?";
}

inline Estimator estimator_from_name(std::string_view name) {
    if (name == "natural") return Estimator::kNatural;
    if (name == "hamilton") return Estimator::kHamilton;
    if (name == "ls" || name == "landy-szalay") return Estimator::kLandySzalay;
    throw std::invalid_argument("unknown estimator: '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Pair counting
// ---------------------------------------------------------------------------

/// Unordered distinct pairs of one catalog binned by separation; index tau in
/// [0, tau_max]. dd[0] is structurally zero.
inline std::vector<std::int64_t> count_auto(const FeatureCatalog& cat, int tau_max) {
    if (tau_max < 0) throw std::invalid_argument("count_auto: tau_max must be >= 0");
    std::vector<std::int64_t> dd(static_cast<std::size_t>(tau_max) + 1, 0);
    const auto& a = cat.indices;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const int tau = a[j] - a[i];
            if (tau > tau_max) break;
            ++dd[static_cast<std::size_t>(tau)];
        }
    }
    return dd;
}

/// Ordered (a, b) pairs binned by signed lag b - a; index tau + tau_max for
/// tau in [-tau_max, tau_max]. Positive lag: the catalog-b feature happens
/// after the catalog-a one.
inline std::vector<std::int64_t> count_cross(const FeatureCatalog& cat_a,
                                             const FeatureCatalog& cat_b, int tau_max) {
    if (tau_max < 0) throw std::invalid_argument("count_cross: tau_max must be >= 0");
    if (cat_a.series_length != cat_b.series_length) {
        throw std::invalid_argument("count_cross: catalogs come from different series lengths");
    }
    std::vector<std::int64_t> dd(2 * static_cast<std::size_t>(tau_max) + 1, 0);
    const auto& a = cat_a.indices;
    const auto& b = cat_b.indices;
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (int ai : a) {
        while (lo < b.size() && b[lo] < ai - tau_max) ++lo;
        if (hi < lo) hi = lo;
        while (hi < b.size() && b[hi] <= ai + tau_max) ++hi;
        for (std::size_t j = lo; j < hi; ++j) {
            ++dd[static_cast<std::size_t>(b[j] - ai + tau_max)];
        }
    }
    return dd;
}

/// n_features distinct indices drawn uniformly from [0, series_length),
/// sorted. No adjacency or exclusion constraint: the contrast between these
/// catalogs and real feature catalogs is exactly what the estimators measure.
inline FeatureCatalog random_catalog(std::size_t n_features, std::size_t series_length,
                                     std::uint64_t seed) {
    if (n_features > series_length) {
        throw std::invalid_argument("random_catalog: more features than positions");
    }
    FeatureCatalog cat;
    cat.series_length = series_length;
    cat.label = "random";
    cat.indices.reserve(n_features);
    if (n_features == series_length) {
        for (std::size_t i = 0; i < series_length; ++i) cat.indices.push_back(static_cast<int>(i));
        return cat;
    }
    // Floyd's sampling: n draws regardless of density.
    Rng rng(seed);
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(n_features * 2);
    for (std::uint64_t j = series_length - n_features; j < series_length; ++j) {
        const std::uint64_t t = rng.uniform_below(j + 1);
        if (!chosen.insert(t).second) chosen.insert(j);
    }
    for (std::uint64_t v : chosen) cat.indices.push_back(static_cast<int>(v));
    std::sort(cat.indices.begin(), cat.indices.end());
    return cat;
}

// ---------------------------------------------------------------------------
// Pair-count assembly
// ---------------------------------------------------------------------------

/// Lag-indexed data-data, random-random and data-random counts.
///
/// Counting conventions (fixed once by requiring every estimator to vanish on
/// uniform random catalogs):
///   dd, rr  auto mode: unordered distinct pairs; cross mode: ordered (a, b).
///   dr      both orientations, i.e. all ordered data-random cross pairs.
/// Hamilton's original ratio is defined on the one-orientation count, so the
/// estimator divides dr by two; natural and Landy-Szalay take dr as stored.
struct PairCounts {
    PairMode mode = PairMode::kAuto;
    int tau_max = 0;
    std::vector<std::int64_t> dd;
    std::vector<double> rr;  // mean over realizations, or expected counts
    std::vector<double> dr;
    std::vector<std::vector<double>> rr_real;  // [realization][lag]; empty in analytic mode
    std::vector<std::vector<double>> dr_real;
    std::size_t n_da = 0, n_db = 0;  // data catalog sizes (equal in auto mode)
    std::size_t n_ra = 0, n_rb = 0;  // random catalog sizes
    std::size_t series_length = 0;
    RrMode rr_mode = RrMode::kMonteCarlo;
    int realizations = 0;
    std::uint64_t seed = 0;

    std::size_t n_lags() const { return dd.size(); }
    int lag_at(std::size_t idx) const {
        return mode == PairMode::kAuto ? static_cast<int>(idx)
                                       : static_cast<int>(idx) - tau_max;
    }
};

namespace detail {

// dr for auto mode: fold the signed data-random counts into |lag| bins.
inline std::vector<double> fold_signed(const std::vector<std::int64_t>& signed_counts, int tau_max) {
    std::vector<double> out(static_cast<std::size_t>(tau_max) + 1, 0.0);
    out[0] = static_cast<double>(signed_counts[static_cast<std::size_t>(tau_max)]);
    for (int tau = 1; tau <= tau_max; ++tau) {
        out[static_cast<std::size_t>(tau)] =
            static_cast<double>(signed_counts[static_cast<std::size_t>(tau_max + tau)] +
                                signed_counts[static_cast<std::size_t>(tau_max - tau)]);
    }
    return out;
}

inline std::vector<double> analytic_rr_auto(std::size_t n_r, std::size_t n, int tau_max) {
    std::vector<double> rr(static_cast<std::size_t>(tau_max) + 1, 0.0);
    const double nd = static_cast<double>(n);
    const double pairs = static_cast<double>(n_r) * static_cast<double>(n_r - 1);
    for (int tau = 1; tau <= tau_max; ++tau) {
        rr[static_cast<std::size_t>(tau)] = (nd - tau) * pairs / (nd * (nd - 1.0));
    }
    return rr;
}

inline std::vector<double> analytic_rr_cross(std::size_t n_ra, std::size_t n_rb, std::size_t n,
                                             int tau_max) {
    std::vector<double> rr(2 * static_cast<std::size_t>(tau_max) + 1, 0.0);
    const double nd = static_cast<double>(n);
    for (int tau = -tau_max; tau <= tau_max; ++tau) {
        rr[static_cast<std::size_t>(tau + tau_max)] =
            (nd - std::abs(tau)) * static_cast<double>(n_ra) * static_cast<double>(n_rb) / (nd * nd);
    }
    return rr;
}

// Expected data-random counts conditioned on the actual data catalog: each
// random index occupies any position with probability n_r / N.
inline std::vector<double> analytic_dr_auto(const FeatureCatalog& data, std::size_t n_r, int tau_max) {
    const double p = static_cast<double>(n_r) / static_cast<double>(data.series_length);
    const int n = static_cast<int>(data.series_length);
    std::vector<double> dr(static_cast<std::size_t>(tau_max) + 1, 0.0);
    for (int tau = 0; tau <= tau_max; ++tau) {
        std::int64_t slots = 0;
        for (int d : data.indices) {
            if (tau == 0) {
                ++slots;
            } else {
                slots += (d - tau >= 0) + (d + tau <= n - 1);
            }
        }
        dr[static_cast<std::size_t>(tau)] = p * static_cast<double>(slots);
    }
    return dr;
}

inline std::vector<double> analytic_dr_cross(const FeatureCatalog& data_a,
                                             const FeatureCatalog& data_b, std::size_t n_ra,
                                             std::size_t n_rb, int tau_max) {
    const int n = static_cast<int>(data_a.series_length);
    const double pa = static_cast<double>(n_ra) / n;
    const double pb = static_cast<double>(n_rb) / n;
    std::vector<double> dr(2 * static_cast<std::size_t>(tau_max) + 1, 0.0);
    for (int tau = -tau_max; tau <= tau_max; ++tau) {
        double acc = 0.0;
        for (int a : data_a.indices) {
            if (a + tau >= 0 && a + tau <= n - 1) acc += pb;
        }
        for (int b : data_b.indices) {
            if (b - tau >= 0 && b - tau <= n - 1) acc += pa;
        }
        dr[static_cast<std::size_t>(tau + tau_max)] = acc;
    }
    return dr;
}

}  // namespace detail

inline PairCounts build_pair_counts(const FeatureCatalog& cat_a, const FeatureCatalog* cat_b,
                                    int tau_max, RrMode rr_mode = RrMode::kMonteCarlo,
                                    int realizations = 100, std::uint64_t seed = 1) {
    PairCounts pc;
    pc.mode = cat_b == nullptr ? PairMode::kAuto : PairMode::kCross;
    pc.tau_max = tau_max;
    pc.series_length = cat_a.series_length;
    pc.rr_mode = rr_mode;
    pc.seed = seed;
    pc.n_da = cat_a.size();
    pc.n_db = cat_b ? cat_b->size() : cat_a.size();
    pc.n_ra = pc.n_da;  // random catalogs mirror the data catalog sizes
    pc.n_rb = pc.n_db;

    if (pc.mode == PairMode::kAuto) {
        pc.dd = count_auto(cat_a, tau_max);
    } else {
        if (cat_b->series_length != cat_a.series_length) {
            throw std::invalid_argument("build_pair_counts: catalogs from different series lengths");
        }
        pc.dd = count_cross(cat_a, *cat_b, tau_max);
    }

    const std::size_t n_lags = pc.dd.size();
    pc.rr.assign(n_lags, 0.0);
    pc.dr.assign(n_lags, 0.0);

    if (rr_mode == RrMode::kAnalytic) {
        if (pc.mode == PairMode::kAuto) {
            pc.rr = detail::analytic_rr_auto(pc.n_ra, pc.series_length, tau_max);
            pc.dr = detail::analytic_dr_auto(cat_a, pc.n_ra, tau_max);
        } else {
            pc.rr = detail::analytic_rr_cross(pc.n_ra, pc.n_rb, pc.series_length, tau_max);
            pc.dr = detail::analytic_dr_cross(cat_a, *cat_b, pc.n_ra, pc.n_rb, tau_max);
        }
        return pc;
    }

    if (realizations < 2) throw std::invalid_argument("build_pair_counts: need at least 2 realizations");
    pc.realizations = realizations;
    pc.rr_real.resize(static_cast<std::size_t>(realizations));
    pc.dr_real.resize(static_cast<std::size_t>(realizations));

    for (int m = 0; m < realizations; ++m) {
        std::vector<double> rr_m;
        std::vector<double> dr_m;
        if (pc.mode == PairMode::kAuto) {
            const auto r = random_catalog(pc.n_ra, pc.series_length,
                                          derive(derive(seed, "rr"), static_cast<std::uint64_t>(m)));
            const auto rr_counts = count_auto(r, tau_max);
            rr_m.assign(rr_counts.begin(), rr_counts.end());
            dr_m = detail::fold_signed(count_cross(cat_a, r, tau_max), tau_max);
        } else {
            const auto ra = random_catalog(pc.n_ra, pc.series_length,
                                           derive(derive(seed, "ra"), static_cast<std::uint64_t>(m)));
            const auto rb = random_catalog(pc.n_rb, pc.series_length,
                                           derive(derive(seed, "rb"), static_cast<std::uint64_t>(m)));
            const auto rr_counts = count_cross(ra, rb, tau_max);
            rr_m.assign(rr_counts.begin(), rr_counts.end());
            const auto da_rb = count_cross(cat_a, rb, tau_max);
            const auto ra_db = count_cross(ra, *cat_b, tau_max);
            dr_m.resize(n_lags);
            for (std::size_t i = 0; i < n_lags; ++i) {
                dr_m[i] = static_cast<double>(da_rb[i] + ra_db[i]);
            }
        }
        for (std::size_t i = 0; i < n_lags; ++i) {
            pc.rr[i] += rr_m[i];
            pc.dr[i] += dr_m[i];
        }
        pc.rr_real[static_cast<std::size_t>(m)] = std::move(rr_m);
        pc.dr_real[static_cast<std::size_t>(m)] = std::move(dr_m);
    }
    for (std::size_t i = 0; i < n_lags; ++i) {
        pc.rr[i] /= realizations;
        pc.dr[i] /= realizations;
    }
    return pc;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

struct CorrelationCurve {
    std::vector<int> lags;
    std::vector<double> xi;
    std::vector<double> err;       // std over random realizations (0 in analytic mode)
    std::vector<char> defined;     // 0 where rr (or dr for Hamilton) vanishes
    Estimator estimator = Estimator::kNatural;
    FeatureSpec spec_a, spec_b;
    std::string label_a, label_b;
    std::size_t n_d = 0, n_r = 0;  // catalog-a totals, for export
};

namespace detail {

inline double xi_from_counts(double dd, double rr, double dr, Estimator est, PairMode mode,
                             double n_da, double n_db, double n_ra, double n_rb, bool& ok) {
    ok = rr > 0.0;
    if (!ok) return std::numeric_limits<double>::quiet_NaN();
    const double norm_dd = mode == PairMode::kAuto ? n_ra * (n_ra - 1.0) / (n_da * (n_da - 1.0))
                                                   : n_ra * n_rb / (n_da * n_db);
    switch (est) {
        case Estimator::kNatural:
            return dd / rr * norm_dd - 1.0;
        case Estimator::kHamilton: {
            const double one_way = dr / 2.0;
            ok = one_way > 0.0;
            if (!ok) return std::numeric_limits<double>::quiet_NaN();
            return rr * dd / (one_way * one_way) - 1.0;
        }
        case Estimator::kLandySzalay: {
            const double norm_dr = mode == PairMode::kAuto ? n_ra * (n_ra - 1.0) / (n_da * n_ra)
                                                           : n_ra * n_rb / (n_da * n_rb);
            return dd / rr * norm_dd - dr / rr * norm_dr + 1.0;
        }
    }
    ok = false;
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

/// Excess pair probability per lag. Auto-mode lag 0 is the definitional
/// distinct-pair exclusion and is reported as exactly -1 rather than
/// estimated (no distinct pair can sit at zero separation).
inline CorrelationCurve estimate_xi(const PairCounts& pc, Estimator est = Estimator::kNatural) {
    CorrelationCurve curve;
    curve.estimator = est;
    curve.n_d = pc.n_da;
    curve.n_r = pc.n_ra;
    const std::size_t n_lags = pc.n_lags();
    curve.lags.resize(n_lags);
    curve.xi.assign(n_lags, std::numeric_limits<double>::quiet_NaN());
    curve.err.assign(n_lags, 0.0);
    curve.defined.assign(n_lags, 0);

    const double n_da = static_cast<double>(pc.n_da);
    const double n_db = static_cast<double>(pc.n_db);
    const double n_ra = static_cast<double>(pc.n_ra);
    const double n_rb = static_cast<double>(pc.n_rb);

    for (std::size_t i = 0; i < n_lags; ++i) {
        curve.lags[i] = pc.lag_at(i);
        if (pc.mode == PairMode::kAuto && curve.lags[i] == 0) {
            curve.xi[i] = -1.0;
            curve.defined[i] = 1;
            continue;
        }
        bool ok = false;
        const double xi = detail::xi_from_counts(static_cast<double>(pc.dd[i]), pc.rr[i], pc.dr[i],
                                                 est, pc.mode, n_da, n_db, n_ra, n_rb, ok);
        if (!ok) continue;
        curve.xi[i] = xi;
        curve.defined[i] = 1;
        if (!pc.rr_real.empty()) {
            // err: sample std of the per-realization estimate.
            double sum = 0.0;
            double sum2 = 0.0;
            int valid = 0;
            for (std::size_t m = 0; m < pc.rr_real.size(); ++m) {
                bool ok_m = false;
                const double xi_m = detail::xi_from_counts(static_cast<double>(pc.dd[i]),
                                                           pc.rr_real[m][i], pc.dr_real[m][i], est,
                                                           pc.mode, n_da, n_db, n_ra, n_rb, ok_m);
                if (!ok_m) continue;
                sum += xi_m;
                sum2 += xi_m * xi_m;
                ++valid;
            }
            if (valid > 1) {
                const double mean = sum / valid;
                const double var = std::max(0.0, (sum2 - valid * mean * mean) / (valid - 1));
                curve.err[i] = std::sqrt(var);
            }
        }
    }
    return curve;
}

// ---------------------------------------------------------------------------
// End-to-end pipeline
// ---------------------------------------------------------------------------

struct XiOptions {
    int tau_max = 30;
    Estimator estimator = Estimator::kNatural;
    RrMode rr_mode = RrMode::kMonteCarlo;
    int realizations = 100;
    std::uint64_t seed = 1;
};

inline constexpr std::size_t kMinFeatures = 5;  // statistical floor

/// Catalog extraction + random-set construction + estimation, deterministic
/// for a fixed seed. Auto mode when series_b is null and the specs coincide;
/// a null series_b with distinct specs correlates two feature kinds of the
/// same series (signed lags).
inline CorrelationCurve xi_pipeline(const StandardizedSeries& series_a,
                                    const StandardizedSeries* series_b, const FeatureSpec& spec_a,
                                    const FeatureSpec& spec_b, const XiOptions& opts = {}) {
    const auto cat_a = find_features(series_a, spec_a);
    std::optional<FeatureCatalog> cat_b;
    const bool auto_mode = series_b == nullptr && spec_a == spec_b;
    if (!auto_mode) {
        cat_b = find_features(series_b ? *series_b : series_a, spec_b);
    }
    if (cat_a.size() < kMinFeatures || (cat_b && cat_b->size() < kMinFeatures)) {
        throw std::runtime_error("insufficient features (< " + std::to_string(kMinFeatures) +
                                 ") for " + (cat_a.size() < kMinFeatures ? cat_a.label
                                                                         : cat_b->label));
    }
    const auto pc = build_pair_counts(cat_a, cat_b ? &*cat_b : nullptr, opts.tau_max, opts.rr_mode,
                                      opts.realizations, opts.seed);
    auto curve = estimate_xi(pc, opts.estimator);
    curve.spec_a = spec_a;
    curve.spec_b = spec_b;
    curve.label_a = series_a.label;
    curve.label_b = series_b ? series_b->label : series_a.label;
    return curve;
}

/// Maximum xi over the defined lags in [lag_lo, lag_hi], ties toward the
/// smaller lag. Returns (xi_max, tau_c).
inline std::pair<double, int> xi_max(const CorrelationCurve& curve, int lag_lo, int lag_hi) {
    double best = -std::numeric_limits<double>::infinity();
    int best_lag = 0;
    bool any = false;
    for (std::size_t i = 0; i < curve.lags.size(); ++i) {
        const int lag = curve.lags[i];
        if (lag < lag_lo || lag > lag_hi || !curve.defined[i]) continue;
        if (!any || curve.xi[i] > best) {
            best = curve.xi[i];
            best_lag = lag;
            any = true;
        }
    }
    if (!any) throw std::runtime_error("xi_max: no defined lags in window");
    return {best, best_lag};
}

}  // namespace excursor
