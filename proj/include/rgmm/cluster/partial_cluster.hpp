#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "rgmm/cluster/moment_matrix.hpp"
#include "rgmm/cluster/rounding.hpp"
#include "rgmm/core/density.hpp"
#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/robust/estimators.hpp"

namespace rgmm {

struct PartialClusterOptions {
    /// Accuracy parameter driving the row count and the v1 threshold.
    double eta = 0.05;
    RoundingVariant variant = RoundingVariant::upgraded;
    /// Constant in the row count ℓ = C·(1/α)·log(k/η).
    double rows_c = 1.0;
    /// Merge scale; non-positive selects merge_tau_formula(α, β, merge_c, merge_t).
    double tau = 0.0;
    double merge_c = 1.0;
    int merge_t = 4;
    /// Invariant slack (negative: 0.05·α²) and the affinity-mode mixture fit.
    double slack = -1.0;
    LowDimOptions fit;
    /// Larger inputs are clustered on a random subsample of this size; the remaining points
    /// follow the merge group under whose Gaussian fit they are most likely.
    Index max_oracle_points = 4000;
    /// Candidate clusters smaller than this fraction of α·n are dropped before merging.
    double min_cluster_fraction = 0.5;
    /// Off when the caller passes points that are already robustly isotropized.
    bool isotropize = true;
    FilterOptions filter;
};

struct PartitionResult {
    std::vector<Index> side1, side2;
    /// Candidate clusters and their sampled rows, as indices into the input.
    std::vector<std::vector<Index>> clusters;
    std::vector<Index> cluster_rows;
    /// Merge groups (cluster indices into `clusters`) and their point sets.
    std::vector<std::vector<std::size_t>> groups;
    std::vector<std::vector<Index>> group_points;
    /// Groups forming side 1.
    std::vector<std::size_t> chosen_groups;
    /// Set when fewer than two merge groups exist; side 2 is then empty.
    bool trivial = false;
    Index uncovered = 0;
    std::size_t dropped_clusters = 0;
    double tau = 0.0;
    double cluster_eta = 0.0;
    MomentInvariantReport invariants;
    /// Per true label (labels ≥ 0 only): fraction of its points on its majority side.
    std::map<int, double> purity;
    std::vector<std::string> warnings;

    double min_purity() const {
        double m = 1.0;
        for (const auto& [label, p] : purity) m = std::min(m, p);
        return m;
    }
};

/// Fraction of each labelled component on its majority side.
inline std::map<int, double> partition_purity(const std::vector<Index>& side1, Index n, const std::vector<int>& labels) {
    std::vector<bool> in1(static_cast<std::size_t>(n), false);
    for (Index i : side1) in1[static_cast<std::size_t>(i)] = true;
    std::map<int, std::pair<double, double>> counts;
    for (Index i = 0; i < n; ++i) {
        int l = labels[static_cast<std::size_t>(i)];
        if (l < 0) continue;
        auto& c = counts[l];
        (in1[static_cast<std::size_t>(i)] ? c.first : c.second) += 1.0;
    }
    std::map<int, double> out;
    for (const auto& [l, c] : counts) out[l] = std::max(c.first, c.second) / (c.first + c.second);
    return out;
}

/// Robust isotropization, moment-matrix oracle, rounding, second-moment merging, then a uniformly
/// random non-trivial subset of the merge groups forms side 1 and everything else side 2.
/// `labels` is required by the ground-truth oracle and, when given, fills the purity diagnostics.
inline PartitionResult partial_cluster(const MatrixXd& points, int k, double alpha, double eps, double beta, OracleMode mode, Rng& rng,
                                       const PartialClusterOptions& opt = {}, const std::vector<int>* labels = nullptr) {
    if (k < 1) throw InvalidInput("partial_cluster: k must be positive");
    if (!(alpha > 2.0 * eps)) throw InvalidInput("partial_cluster: alpha must exceed 2 eps");
    if (!(alpha <= 1.0)) throw InvalidInput("partial_cluster: alpha must be at most 1");
    if (!(beta >= 0.0)) throw InvalidInput("partial_cluster: beta must be nonnegative");
    Index n = points.rows();
    if (labels != nullptr && static_cast<Index>(labels->size()) != n) throw InvalidInput("partial_cluster: label count mismatch");
    PartitionResult out;
    MatrixXd y = opt.isotropize ? isotropize(points, eps, rng, opt.filter).transformed : points;

    std::vector<Index> sub(static_cast<std::size_t>(n));
    std::iota(sub.begin(), sub.end(), Index{0});
    if (n > opt.max_oracle_points) {
        std::shuffle(sub.begin(), sub.end(), rng);
        sub.resize(static_cast<std::size_t>(opt.max_oracle_points));
        std::sort(sub.begin(), sub.end());
        out.warnings.push_back("clustered a random subsample of " + std::to_string(sub.size()) + " points");
    }
    MatrixXd ys = select_rows(y, sub);
    std::vector<int> sub_labels;
    if (labels != nullptr)
        for (Index i : sub) sub_labels.push_back((*labels)[static_cast<std::size_t>(i)]);

    OracleParams params;
    params.alpha = alpha;
    params.slack = opt.slack;
    params.components = k;
    params.fit = opt.fit;
    params.max_points = std::max<Index>(opt.max_oracle_points, 1);
    MomentMatrix m = moment_matrix_oracle(ys, mode, params, rng, labels != nullptr ? &sub_labels : nullptr);
    out.invariants = check_moment_matrix(m);

    RoundingResult rounded = round_partition(m, k, opt.eta, opt.variant, rng, opt.rows_c);
    out.uncovered = rounded.uncovered;
    double min_size = opt.min_cluster_fraction * alpha * static_cast<double>(ys.rows());
    std::vector<std::vector<Index>> kept;
    for (std::size_t c = 0; c < rounded.clusters.size(); ++c) {
        if (static_cast<double>(rounded.clusters[c].size()) < min_size) {
            ++out.dropped_clusters;
            continue;
        }
        kept.push_back(rounded.clusters[c]);
        out.cluster_rows.push_back(sub[static_cast<std::size_t>(rounded.rows[c])]);
    }
    if (kept.empty()) throw AlgorithmFailure("partial_cluster: every candidate cluster was below the minimum size");

    out.cluster_eta = std::min(0.25, eps / alpha + beta / (alpha * alpha * opt.eta));
    out.tau = opt.tau > 0.0 ? opt.tau : merge_tau_formula(alpha, beta, opt.merge_c, opt.merge_t);
    MergeResult merged = merge_clusters(kept, ys, std::vector<double>(kept.size(), out.cluster_eta), out.tau, opt.merge_c);
    out.groups = merged.groups;

    std::size_t g = merged.groups.size();
    std::vector<bool> chosen(g, false);
    if (g < 2) {
        out.trivial = true;
        chosen.assign(g, true);
    } else {
        // Uniform over subsets other than the empty and the full one.
        do {
            for (std::size_t i = 0; i < g; ++i) chosen[i] = (rng() & 1U) != 0;
        } while (std::all_of(chosen.begin(), chosen.end(), [](bool b) { return b; }) ||
                 std::none_of(chosen.begin(), chosen.end(), [](bool b) { return b; }));
    }
    for (std::size_t i = 0; i < g; ++i)
        if (chosen[i]) out.chosen_groups.push_back(i);

    std::vector<bool> in1(static_cast<std::size_t>(n), false);
    std::vector<bool> sampled(static_cast<std::size_t>(n), false);
    for (Index i : sub) sampled[static_cast<std::size_t>(i)] = true;
    for (std::size_t i = 0; i < g; ++i)
        if (chosen[i])
            for (Index p : merged.group_points[i]) in1[static_cast<std::size_t>(sub[static_cast<std::size_t>(p)])] = true;
    if (static_cast<Index>(sub.size()) < n) {
        GaussianMixture fits;
        for (const auto& pts : merged.group_points) {
            MatrixXd gp = select_rows(ys, pts);
            MatrixXd cov = gp.rows() > 1 ? empirical_covariance(gp) : MatrixXd::Identity(ys.cols(), ys.cols());
            fits.components.push_back({row_mean(gp), psd_floor(cov, 1e-6 * std::max(cov.trace(), 1e-12))});
            fits.weights.push_back(1.0);
        }
        normalize_weights(fits.weights);
        std::vector<Index> rest;
        for (Index i = 0; i < n; ++i)
            if (!sampled[static_cast<std::size_t>(i)]) rest.push_back(i);
        MatrixXd parts = DensityEvaluator(fits).component_rows(select_rows(y, rest));
        for (std::size_t r = 0; r < rest.size(); ++r) {
            Index best = 0;
            parts.row(static_cast<Index>(r)).maxCoeff(&best);
            in1[static_cast<std::size_t>(rest[r])] = chosen[static_cast<std::size_t>(best)];
        }
    }
    for (Index i = 0; i < n; ++i) (in1[static_cast<std::size_t>(i)] ? out.side1 : out.side2).push_back(i);

    for (const auto& c : kept) {
        std::vector<Index> mapped;
        for (Index p : c) mapped.push_back(sub[static_cast<std::size_t>(p)]);
        out.clusters.push_back(std::move(mapped));
    }
    for (const auto& gp : merged.group_points) {
        std::vector<Index> mapped;
        for (Index p : gp) mapped.push_back(sub[static_cast<std::size_t>(p)]);
        out.group_points.push_back(std::move(mapped));
    }
    if (labels != nullptr) out.purity = partition_purity(out.side1, n, *labels);
    if (out.trivial) out.warnings.push_back("fewer than two merge groups; no non-trivial split");
    return out;
}

}  // namespace rgmm
