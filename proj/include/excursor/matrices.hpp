#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "excursor/paircorr.hpp"
#include "excursor/parallel.hpp"

namespace excursor {

enum class TauMode { kMaxWindow, kFixed };

struct PsiOptions {
    TauMode tau_mode = TauMode::kMaxWindow;
    int window = 10;  // cross pairs search |tau| <= window, auto uses [0, window]
    int fixed_tau = 0;
    Estimator estimator = Estimator::kNatural;
    RrMode rr_mode = RrMode::kMonteCarlo;
    int realizations = 100;
    std::uint64_t seed = 1;
};

/// Market x market pair-correlation matrix, Psi = xi + 1. Elements that could
/// not be estimated (too few features) stay NaN with defined() false; nothing
/// is imputed.
struct PsiMatrix {
    std::vector<std::string> labels;
    std::size_t n = 0;
    std::vector<double> values;   // row-major
    std::vector<char> defined_mask;
    FeatureSpec spec_a, spec_b;
    PsiOptions opts;
    std::optional<int> window_id;
    bool symmetrized = false;
    std::vector<std::string> failures;  // labels with insufficient features

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }
    bool defined(std::size_t i, std::size_t j) const { return defined_mask[i * n + j] != 0; }
    bool fully_defined() const {
        return std::all_of(defined_mask.begin(), defined_mask.end(), [](char c) { return c != 0; });
    }
    bool is_symmetric(double tol = 1e-12) const {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (std::abs(at(i, j) - at(j, i)) > tol) return false;
            }
        }
        return true;
    }
};

namespace detail {

inline std::uint64_t pair_seed(std::uint64_t seed, const std::string& a, const std::string& b) {
    const std::string& lo = a <= b ? a : b;
    const std::string& hi = a <= b ? b : a;
    return derive(derive(seed, lo), hi);
}

}  // namespace detail

/// One Psi element: max-mode takes the largest xi over the tau window
/// ([-W, W] for cross pairs, [0, W] on the diagonal), fixed mode reads one
/// lag. Cross pairs of the same feature kind are computed once per unordered
/// pair with a seed derived from the sorted label pair, which makes the
/// matrix exactly symmetric; the pk-tr style cross-feature matrix is
/// asymmetric and computed per ordered pair.
inline PsiMatrix build_psi(const std::vector<StandardizedSeries>& dataset,
                           const FeatureSpec& spec_a, const FeatureSpec& spec_b,
                           const PsiOptions& opts = {}) {
    if (dataset.size() < 2) throw std::invalid_argument("build_psi: need at least 2 series");
    const std::size_t len = dataset.front().size();
    for (const auto& s : dataset) {
        if (s.size() != len) throw std::invalid_argument("build_psi: series lengths differ");
    }
    if (opts.tau_mode == TauMode::kFixed && std::abs(opts.fixed_tau) > opts.window) {
        throw std::invalid_argument("build_psi: fixed tau outside window");
    }

    const std::size_t n = dataset.size();
    PsiMatrix psi;
    psi.labels.reserve(n);
    for (const auto& s : dataset) psi.labels.push_back(s.label);
    psi.n = n;
    psi.values.assign(n * n, std::numeric_limits<double>::quiet_NaN());
    psi.defined_mask.assign(n * n, 0);
    psi.spec_a = spec_a;
    psi.spec_b = spec_b;
    psi.opts = opts;
    psi.window_id = dataset.front().window_id;

    const bool same_spec = spec_a == spec_b;

    // Series with too few features make every element touching them
    // undefined; they are reported, never imputed.
    std::vector<char> usable_a(n, 0);
    std::vector<char> usable_b(n, 0);
    parallel_for(n, [&](std::size_t i) {
        usable_a[i] = find_features(dataset[i], spec_a).size() >= kMinFeatures ? 1 : 0;
        usable_b[i] = same_spec ? usable_a[i]
                                : (find_features(dataset[i], spec_b).size() >= kMinFeatures ? 1 : 0);
    });
    for (std::size_t i = 0; i < n; ++i) {
        if (!usable_a[i] || !usable_b[i]) psi.failures.push_back(psi.labels[i]);
    }

    struct Task {
        std::size_t i, j;
        bool mirror;  // also write (j, i)
    };
    std::vector<Task> tasks;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            if (!usable_a[i] || !usable_b[j]) continue;
            if (same_spec || i == j) {
                tasks.push_back({i, j, i != j});
            } else {
                tasks.push_back({i, j, false});
                if (i != j && usable_a[j] && usable_b[i]) tasks.push_back({j, i, false});
            }
        }
    }

    parallel_for(tasks.size(), [&](std::size_t t) {
        const auto [i, j, mirror] = tasks[t];
        XiOptions xi_opts;
        xi_opts.tau_max = opts.window;
        xi_opts.estimator = opts.estimator;
        xi_opts.rr_mode = opts.rr_mode;
        xi_opts.realizations = opts.realizations;
        xi_opts.seed = detail::pair_seed(opts.seed, psi.labels[i], psi.labels[j]);
        CorrelationCurve curve;
        if (i == j) {
            curve = xi_pipeline(dataset[i], nullptr, spec_a, spec_b, xi_opts);
        } else {
            curve = xi_pipeline(dataset[i], &dataset[j], spec_a, spec_b, xi_opts);
        }
        double xi;
        if (opts.tau_mode == TauMode::kFixed) {
            bool found = false;
            xi = 0.0;
            for (std::size_t k = 0; k < curve.lags.size(); ++k) {
                if (curve.lags[k] == opts.fixed_tau && curve.defined[k]) {
                    xi = curve.xi[k];
                    found = true;
                    break;
                }
            }
            if (!found) return;  // element stays undefined
        } else {
            const int lo = (i == j && same_spec) ? 0 : -opts.window;
            xi = xi_max(curve, lo, opts.window).first;
        }
        psi.at(i, j) = xi + 1.0;
        psi.defined_mask[i * n + j] = 1;
        if (mirror) {
            psi.at(j, i) = xi + 1.0;
            psi.defined_mask[j * n + i] = 1;
        }
    });
    return psi;
}

inline PsiMatrix symmetrize(const PsiMatrix& psi) {
    if (psi.n == 0 || psi.values.size() != psi.n * psi.n) {
        throw std::invalid_argument("symmetrize: not a square matrix");
    }
    PsiMatrix out = psi;
    for (std::size_t i = 0; i < psi.n; ++i) {
        for (std::size_t j = 0; j < psi.n; ++j) {
            out.at(i, j) = 0.5 * (psi.at(i, j) + psi.at(j, i));
            out.defined_mask[i * psi.n + j] =
                psi.defined(i, j) && psi.defined(j, i) ? 1 : 0;
        }
    }
    out.symmetrized = true;
    return out;
}

/// Largest singular value (Jacobi SVD). Used for both the symmetric pk-pk /
/// up-up matrices and the asymmetric pk-tr case.
inline double lambda_max(const PsiMatrix& psi) {
    if (!psi.fully_defined()) {
        throw std::runtime_error("lambda_max: matrix has undefined elements");
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(psi.n), static_cast<Eigen::Index>(psi.n));
    for (std::size_t i = 0; i < psi.n; ++i) {
        for (std::size_t j = 0; j < psi.n; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = psi.at(i, j);
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

/// Window x window dissimilarity of largest singular values.
struct DeltaMatrix {
    std::vector<int> window_ids;
    std::size_t n = 0;
    std::vector<double> values;        // row-major, |lambda_i - lambda_j|
    std::vector<double> lambda_trace;  // per-window lambda_max

    double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

inline DeltaMatrix build_delta(const std::vector<PsiMatrix>& psis) {
    if (psis.size() < 2) throw std::invalid_argument("build_delta: need at least 2 windows");
    std::vector<std::size_t> failed;
    for (std::size_t w = 0; w < psis.size(); ++w) {
        if (!psis[w].fully_defined()) failed.push_back(w);
    }
    if (!failed.empty()) {
        std::ostringstream msg;
        msg << "build_delta: windows with undefined elements:";
        for (std::size_t w : failed) msg << ' ' << w;
        throw std::runtime_error(msg.str());
    }
    DeltaMatrix delta;
    delta.n = psis.size();
    delta.window_ids.reserve(delta.n);
    delta.lambda_trace.resize(delta.n);
    for (std::size_t w = 0; w < delta.n; ++w) {
        delta.window_ids.push_back(psis[w].window_id.value_or(static_cast<int>(w)));
    }
    parallel_for(delta.n, [&](std::size_t w) { delta.lambda_trace[w] = lambda_max(psis[w]); });
    delta.values.resize(delta.n * delta.n);
    for (std::size_t i = 0; i < delta.n; ++i) {
        for (std::size_t j = 0; j < delta.n; ++j) {
            delta.values[i * delta.n + j] = std::abs(delta.lambda_trace[i] - delta.lambda_trace[j]);
        }
    }
    return delta;
}

}  // namespace excursor
