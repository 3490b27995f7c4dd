#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/rng.hpp"

namespace rgmm {

struct FilterOptions {
    /// Stop once the top weighted-covariance eigenvalue is at most stop_factor times the
    /// robust (median-based) variance along the same direction.
    double stop_factor = 10.0;
    /// Scores at or below score_cutoff times the robust variance are never down-weighted.
    double score_cutoff = 9.0;
    int max_iterations = 200;
    /// Above this many coordinates the top eigenpair comes from power iteration.
    Index dense_eigen_limit = 64;
    /// Points whose final weight falls below this value are reported as removed.
    double removed_weight = 0.5;
    /// Lower bound on the variance used in the stopping rule, for inputs whose inlier
    /// distribution is heavy tailed enough that the median underestimates the variance.
    double variance_floor = 0.0;
    /// Filtering also stops once the total down-weighted mass reaches this multiple of ε·n.
    double max_removed_factor = 2.5;
};

struct FilterReport {
    int iterations = 0;
    std::vector<Index> removed;
    double final_spectral = 0.0;
    /// Top eigenvalue at the start of each iteration.
    std::vector<double> history;
    double stop_threshold = 0.0;
};

struct FilterResult {
    VectorXd mean;
    VectorXd weights;
    FilterReport report;
};

namespace detail {

// Median of χ²₁, converts a median squared deviation into a variance estimate.
inline constexpr double kChiSquareOneMedian = 0.45493642311957283;

struct TopEigen {
    double value = 0.0;
    VectorXd vector;
};

inline TopEigen top_eigen_dense(const MatrixXd& centered, const VectorXd& w, double total) {
    MatrixXd cov = centered.transpose() * w.asDiagonal() * centered / total;
    SymEig e = sym_eig(cov);
    Index last = e.values.size() - 1;
    return {std::max(0.0, e.values(last)), e.vectors.col(last)};
}

inline TopEigen top_eigen_power(const MatrixXd& centered, const VectorXd& w, double total, VectorXd start) {
    VectorXd v = start.normalized();
    double value = 0.0;
    for (int it = 0; it < 300; ++it) {
        VectorXd proj = centered * v;
        VectorXd next = centered.transpose() * (w.cwiseProduct(proj)) / total;
        double norm = next.norm();
        if (norm == 0.0) return {0.0, v};
        next /= norm;
        double change = std::min((next - v).norm(), (next + v).norm());
        v = next;
        value = norm;
        if (change < 1e-9) break;
    }
    return {value, v};
}

}  // namespace detail

/// Iterative spectral filter with multiplicative down-weighting. Each row of `rows` is
/// one observation; the returned mean is the weighted mean under the final weights.
/// Scores are squared deviations of the projections from their median.
/// eps = 0 disables filtering and returns the plain mean.
inline FilterResult spectral_filter(const MatrixXd& rows, double eps, Rng& rng, const FilterOptions& opt = {}) {
    Index n = rows.rows(), p = rows.cols();
    if (n == 0) throw InvalidInput("spectral_filter: empty input");
    if (!(eps >= 0.0 && eps < 0.5)) throw InvalidInput("spectral_filter: eps must lie in [0, 1/2)");
    FilterResult res;
    res.weights = VectorXd::Ones(n);
    res.mean = row_mean(rows);
    if (eps == 0.0 || n < 2 || p == 0) return res;

    VectorXd v = random_unit_vector(p, rng);
    for (int it = 0; it < opt.max_iterations; ++it) {
        double total = res.weights.sum();
        if (!(total > 0.0)) throw AlgorithmFailure("spectral_filter: every point was removed");
        res.mean = rows.transpose() * res.weights / total;
        MatrixXd centered = rows.rowwise() - res.mean.transpose();
        detail::TopEigen top = p <= opt.dense_eigen_limit ? detail::top_eigen_dense(centered, res.weights, total)
                                                          : detail::top_eigen_power(centered, res.weights, total, v);
        v = top.vector;
        VectorXd proj = centered * v;
        std::vector<double> live;
        live.reserve(static_cast<std::size_t>(n));
        for (Index i = 0; i < n; ++i)
            if (res.weights(i) >= opt.removed_weight) live.push_back(proj(i));
        if (live.empty()) throw AlgorithmFailure("spectral_filter: every point was removed");
        double center = median_of(live);
        VectorXd scores = (proj.array() - center).square();
        for (auto& p : live) p = (p - center) * (p - center);
        double robust_var = median_of(live) / detail::kChiSquareOneMedian;
        res.report.history.push_back(top.value);
        res.report.final_spectral = top.value;
        res.report.stop_threshold = opt.stop_factor * std::max(robust_var, opt.variance_floor);
        if (top.value <= res.report.stop_threshold) break;
        if (static_cast<double>(n) - total >= opt.max_removed_factor * eps * static_cast<double>(n)) break;
        res.report.iterations = it + 1;

        double cutoff = opt.score_cutoff * robust_var;
        double max_excess = 0.0;
        for (Index i = 0; i < n; ++i)
            if (res.weights(i) > 0.0) max_excess = std::max(max_excess, scores(i) - cutoff);
        if (!(max_excess > 0.0)) {
            cutoff = 0.0;
            for (Index i = 0; i < n; ++i)
                if (res.weights(i) > 0.0) max_excess = std::max(max_excess, scores(i));
        }
        if (!(max_excess > 0.0)) break;
        for (Index i = 0; i < n; ++i) {
            double excess = scores(i) - cutoff;
            if (excess > 0.0) res.weights(i) *= std::max(0.0, 1.0 - excess / max_excess);
        }
    }
    double total = res.weights.sum();
    if (!(total > 0.0)) throw AlgorithmFailure("spectral_filter: every point was removed");
    res.mean = rows.transpose() * res.weights / total;
    for (Index i = 0; i < n; ++i)
        if (res.weights(i) < opt.removed_weight) res.report.removed.push_back(i);
    return res;
}

}  // namespace rgmm
