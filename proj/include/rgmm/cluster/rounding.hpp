#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rgmm/cluster/moment_matrix.hpp"
#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/robust/estimators.hpp"

namespace rgmm {

enum class RoundingVariant { v1, upgraded };

inline std::string to_string(RoundingVariant v) { return v == RoundingVariant::v1 ? "v1" : "upgraded"; }

inline RoundingVariant parse_rounding_variant(const std::string& s) {
    if (s == "v1") return RoundingVariant::v1;
    if (s == "upgraded") return RoundingVariant::upgraded;
    throw InvalidInput("unknown rounding variant: " + s);
}

/// η²α⁵/k for v1, α²/2 for the upgraded variant.
inline double rounding_threshold(double alpha, int k, double eta, RoundingVariant v) {
    return v == RoundingVariant::v1 ? eta * eta * std::pow(alpha, 5) / k : alpha * alpha / 2.0;
}

/// ℓ = ⌈C·(1/α)·log(k/η)⌉, at least 1.
inline int rounding_rows(double alpha, int k, double eta, double c = 1.0) {
    double l = c / alpha * std::log(static_cast<double>(k) / eta);
    return std::max(1, static_cast<int>(std::ceil(l)));
}

struct RoundingResult {
    /// Sampled row per cluster and the columns j with M(row, j) ≥ threshold.
    std::vector<Index> rows;
    std::vector<std::vector<Index>> clusters;
    double threshold = 0.0;
    /// Indices in no cluster.
    Index uncovered = 0;
};

inline RoundingResult round_partition(const MomentMatrix& m, int k, double eta, RoundingVariant variant, Rng& rng, double c = 1.0) {
    if (k < 1) throw InvalidInput("round_partition: k must be positive");
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("round_partition: eta must lie in (0, 1)");
    Index n = m.size();
    if (n == 0) throw InvalidInput("round_partition: empty moment matrix");
    RoundingResult out;
    out.threshold = rounding_threshold(m.alpha, k, eta, variant);
    int rows = rounding_rows(m.alpha, k, eta, c);
    std::vector<bool> covered(static_cast<std::size_t>(n), false);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (int r = 0; r < rows; ++r) {
        Index i = pick(rng);
        std::vector<Index> cluster;
        for (Index j = 0; j < n; ++j)
            if (m.entries(i, j) >= out.threshold) {
                cluster.push_back(j);
                covered[static_cast<std::size_t>(j)] = true;
            }
        out.rows.push_back(i);
        out.clusters.push_back(std::move(cluster));
    }
    out.uncovered = static_cast<Index>(std::count(covered.begin(), covered.end(), false));
    return out;
}

/// 10⁸·C⁶·t⁴ / (β^{2/t}·α²); infinite when β = 0.
inline double merge_tau_formula(double alpha, double beta, double c = 1.0, int t = 4) {
    if (!(alpha > 0.0) || !(beta >= 0.0) || t < 1) throw InvalidInput("merge_tau_formula: invalid parameters");
    if (beta == 0.0) return std::numeric_limits<double>::infinity();
    return 1e8 * std::pow(c, 6) * std::pow(t, 4) / (std::pow(beta, 2.0 / t) * alpha * alpha);
}

struct MergeResult {
    /// Robust second moment of every input cluster.
    std::vector<MatrixXd> second_moments;
    /// Cluster indices per group; the groups partition the input clusters.
    std::vector<std::vector<std::size_t>> groups;
    /// Union of the member clusters' point indices per group, sorted.
    std::vector<std::vector<Index>> group_points;
    std::vector<std::string> warnings;
};

/// Union-find over clusters joined whenever ‖S_i − S_j‖_F ≤ 2Cτ, where S_i is the trimmed second
/// moment of cluster i at outlier rate eta[i]. Groups are ordered by their smallest cluster index.
inline MergeResult merge_clusters(const std::vector<std::vector<Index>>& clusters, const MatrixXd& points, const std::vector<double>& eta,
                                  double tau, double c = 1.0) {
    if (eta.size() != clusters.size()) throw InvalidInput("merge_clusters: need one outlier rate per cluster");
    if (!(tau >= 0.0)) throw InvalidInput("merge_clusters: tau must be nonnegative");
    MergeResult out;
    std::size_t q = clusters.size();
    for (std::size_t i = 0; i < q; ++i) {
        if (clusters[i].empty()) throw InvalidInput("merge_clusters: empty cluster");
        auto est = robust_second_moment(select_rows(points, clusters[i]), eta[i]);
        out.second_moments.push_back(est.m2);
    }
    std::vector<std::size_t> parent(q);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < q; ++i)
        for (std::size_t j = i + 1; j < q; ++j)
            if ((out.second_moments[i] - out.second_moments[j]).norm() <= 2.0 * c * tau) {
                std::size_t a = find(i), b = find(j);
                if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
    std::vector<long> slot(q, -1);
    for (std::size_t i = 0; i < q; ++i) {
        std::size_t root = find(i);
        if (slot[root] < 0) {
            slot[root] = static_cast<long>(out.groups.size());
            out.groups.emplace_back();
        }
        out.groups[static_cast<std::size_t>(slot[root])].push_back(i);
    }
    for (const auto& g : out.groups) {
        std::vector<Index> pts;
        for (std::size_t ci : g) pts.insert(pts.end(), clusters[ci].begin(), clusters[ci].end());
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        out.group_points.push_back(std::move(pts));
    }
    return out;
}

}  // namespace rgmm
