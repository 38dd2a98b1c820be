#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "excursor/matrices.hpp"

namespace excursor {

using Point = std::vector<double>;

/// Similarity-profile embedding: market i becomes its row of the (symmetric,
/// fully defined) Psi matrix, so Ward geometry acts on whole correlation
/// profiles rather than on single entries.
inline std::vector<Point> embed(const PsiMatrix& psi) {
    if (!psi.fully_defined()) throw std::runtime_error("embed: matrix has undefined elements");
    if (!psi.is_symmetric()) throw std::invalid_argument("embed: matrix is asymmetric; symmetrize first");
    std::vector<Point> points(psi.n, Point(psi.n));
    for (std::size_t i = 0; i < psi.n; ++i) {
        for (std::size_t j = 0; j < psi.n; ++j) points[i][j] = psi.at(i, j);
    }
    return points;
}

namespace detail {

inline Point centroid(std::span<const Point> cluster) {
    const std::size_t dim = cluster.front().size();
    Point c(dim, 0.0);
    for (const auto& p : cluster) {
        for (std::size_t d = 0; d < dim; ++d) c[d] += p[d];
    }
    for (double& v : c) v /= static_cast<double>(cluster.size());
    return c;
}

}  // namespace detail

/// Ward inter-cluster similarity: sqrt(2 |A| |B| / (|A| + |B|)) times the
/// Euclidean distance between centroids.
inline double ward_distance(std::span<const Point> cluster_a, std::span<const Point> cluster_b) {
    if (cluster_a.empty() || cluster_b.empty()) {
        throw std::invalid_argument("ward_distance: empty cluster");
    }
    const Point ca = detail::centroid(cluster_a);
    const Point cb = detail::centroid(cluster_b);
    double sq = 0.0;
    for (std::size_t d = 0; d < ca.size(); ++d) {
        const double diff = ca[d] - cb[d];
        sq += diff * diff;
    }
    const double na = static_cast<double>(cluster_a.size());
    const double nb = static_cast<double>(cluster_b.size());
    return std::sqrt(2.0 * na * nb / (na + nb)) * std::sqrt(sq);
}

/// Lance-Williams recurrence for Ward distances after merging I and J,
/// applied to squared dissimilarities (the form that reproduces from-scratch
/// centroid distances exactly). Tiny negative radicands from cancellation are
/// clipped; anything materially negative signals corrupted input.
inline double lance_williams_update(double d_ik, double d_jk, double d_ij, std::size_t n_i,
                                    std::size_t n_j, std::size_t n_k) {
    const double ni = static_cast<double>(n_i);
    const double nj = static_cast<double>(n_j);
    const double nk = static_cast<double>(n_k);
    double radicand = ((ni + nk) * d_ik * d_ik + (nj + nk) * d_jk * d_jk - nk * d_ij * d_ij) /
                      (ni + nj + nk);
    if (radicand < -1e-12) {
        throw std::runtime_error("lance_williams_update: negative radicand " + format_double(radicand));
    }
    if (radicand < 0.0) radicand = 0.0;
    return std::sqrt(radicand);
}

/// The recurrence with the distances entering unsquared. Kept only as a
/// debugging reference: it fails the from-scratch consistency check (e.g.
/// singletons at 0, 1, 3 give sqrt(3) instead of sqrt(25/3)) and is not used
/// by ahc().
inline double lance_williams_update_verbatim(double d_ik, double d_jk, double d_ij, std::size_t n_i,
                                             std::size_t n_j, std::size_t n_k) {
    const double ni = static_cast<double>(n_i);
    const double nj = static_cast<double>(n_j);
    const double nk = static_cast<double>(n_k);
    double radicand = ((ni + nk) * d_ik + (nj + nk) * d_jk - nk * d_ij) / (ni + nj + nk);
    if (radicand < 0.0) radicand = 0.0;
    return std::sqrt(radicand);
}

struct Merge {
    int id_a = 0;       // cluster ids: leaves 0..n-1, merge k creates id n+k
    int id_b = 0;       // id_a < id_b
    double height = 0;  // Ward distance at the merge
    int size = 0;       // leaves in the merged cluster
};

struct Dendrogram {
    std::vector<std::string> leaf_labels;
    std::vector<Merge> merges;  // exactly n-1, heights nondecreasing
};

/// Agglomerative hierarchy over points: start from singletons, repeatedly
/// merge the closest pair (ties broken by the lexicographically smallest id
/// pair), update distances with the Lance-Williams recurrence.
inline Dendrogram ward_ahc(const std::vector<Point>& points,
                           const std::vector<std::string>& labels) {
    const std::size_t n = points.size();
    if (n < 2) throw std::invalid_argument("ward_ahc: need at least 2 points");
    if (labels.size() != n) throw std::invalid_argument("ward_ahc: labels/points size mismatch");

    struct Active {
        int id;
        std::size_t size;
    };
    std::vector<Active> active;
    active.reserve(n);
    for (std::size_t i = 0; i < n; ++i) active.push_back({static_cast<int>(i), 1});

    // Distance matrix over active slots.
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double sq = 0.0;
            for (std::size_t d = 0; d < points[i].size(); ++d) {
                const double diff = points[i][d] - points[j][d];
                sq += diff * diff;
            }
            dist[i][j] = dist[j][i] = std::sqrt(sq);  // Ward prefactor is 1 for singletons
        }
    }

    Dendrogram out;
    out.leaf_labels = labels;
    out.merges.reserve(n - 1);

    int next_id = static_cast<int>(n);
    while (active.size() > 1) {
        // argmin over active pairs; exact ties resolved by the smallest
        // (id_a, id_b) pair for a deterministic merge sequence.
        std::size_t ia = 0;
        std::size_t ib = 1;
        double best = std::numeric_limits<double>::infinity();
        int best_lo = std::numeric_limits<int>::max();
        int best_hi = std::numeric_limits<int>::max();
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const double d = dist[a][b];
                const int lo = std::min(active[a].id, active[b].id);
                const int hi = std::max(active[a].id, active[b].id);
                if (d < best ||
                    (d == best && (lo < best_lo || (lo == best_lo && hi < best_hi)))) {
                    best = d;
                    best_lo = lo;
                    best_hi = hi;
                    ia = a;
                    ib = b;
                }
            }
        }
        const Merge merge{best_lo, best_hi, best,
                          static_cast<int>(active[ia].size + active[ib].size)};
        out.merges.push_back(merge);

        // Update distances to the merged cluster in slot ia, drop slot ib.
        for (std::size_t k = 0; k < active.size(); ++k) {
            if (k == ia || k == ib) continue;
            dist[ia][k] = dist[k][ia] = lance_williams_update(
                dist[ia][k], dist[ib][k], dist[ia][ib], active[ia].size, active[ib].size,
                active[k].size);
        }
        active[ia] = {next_id++, active[ia].size + active[ib].size};
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(ib));
        dist.erase(dist.begin() + static_cast<std::ptrdiff_t>(ib));
        for (auto& row : dist) row.erase(row.begin() + static_cast<std::ptrdiff_t>(ib));
    }
    return out;
}

inline Dendrogram ahc(const PsiMatrix& psi) {
    return ward_ahc(embed(psi), psi.labels);
}

/// Cluster assignment after undoing the last k-1 merges (the standard
/// k-cluster cut). Returns one id in [0, k) per leaf.
inline std::vector<int> cut_clusters(const Dendrogram& d, int k) {
    const int n = static_cast<int>(d.leaf_labels.size());
    if (k < 1 || k > n) throw std::invalid_argument("cut_clusters: k out of range");
    // Apply the first n-k merges with union-find over cluster ids.
    std::vector<int> parent(static_cast<std::size_t>(n) + d.merges.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            x = parent[static_cast<std::size_t>(x)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
        }
        return x;
    };
    for (int m = 0; m < n - k; ++m) {
        const auto& merge = d.merges[static_cast<std::size_t>(m)];
        const int target = n + m;
        parent[static_cast<std::size_t>(find(merge.id_a))] = target;
        parent[static_cast<std::size_t>(find(merge.id_b))] = target;
    }
    std::vector<int> roots;
    std::vector<int> assign(static_cast<std::size_t>(n));
    for (int leaf = 0; leaf < n; ++leaf) {
        const int r = find(leaf);
        auto it = std::find(roots.begin(), roots.end(), r);
        if (it == roots.end()) {
            roots.push_back(r);
            assign[static_cast<std::size_t>(leaf)] = static_cast<int>(roots.size()) - 1;
        } else {
            assign[static_cast<std::size_t>(leaf)] = static_cast<int>(it - roots.begin());
        }
    }
    return assign;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Newick with ultrametric branch lengths: each branch spans the height gap
/// between child and parent merges. A two-leaf tree prints as "(A:h,B:h);".
inline std::string to_newick(const Dendrogram& d) {
    const int n = static_cast<int>(d.leaf_labels.size());
    auto node_text = [&](auto&& self, int id) -> std::pair<std::string, double> {
        if (id < n) {
            std::string label = d.leaf_labels[static_cast<std::size_t>(id)];
            for (char& c : label) {
                if (c == '(' || c == ')' || c == ',' || c == ':' || c == ';' || c == ' ') c = '_';
            }
            return {label, 0.0};
        }
        const Merge& m = d.merges[static_cast<std::size_t>(id - n)];
        auto [ta, ha] = self(self, m.id_a);
        auto [tb, hb] = self(self, m.id_b);
        std::string text = "(" + ta + ":" + format_double(m.height - ha) + "," + tb + ":" +
                           format_double(m.height - hb) + ")";
        return {text, m.height};
    };
    const int root = n + static_cast<int>(d.merges.size()) - 1;
    return node_text(node_text, root).first + ";";
}

}  // namespace excursor
