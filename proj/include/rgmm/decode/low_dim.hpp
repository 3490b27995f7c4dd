#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "rgmm/core/density.hpp"
#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/matching.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"

namespace rgmm {

struct LowDimOptions {
    int restarts = 5;
    int max_iterations = 200;
    double tolerance = 1e-6;
    /// Fraction of lowest-likelihood points left out of every M-step.
    double trim_fraction = 0.0;
    /// A fitted component lighter than this is treated as an outlier clump: the points it
    /// claims are dropped and the fit is repeated, at most `outlier_rounds` times.
    double min_weight = 0.0;
    int outlier_rounds = 3;
    /// Components whose symmetric TV upper bound is at most this are merged.
    double merge_tolerance = 0.05;
    /// Relative eigenvalue floor applied to every fitted covariance.
    double cov_floor = 1e-6;
    Index max_points = 20000;
    /// Largest subspace dimension accepted.
    Index max_dim = 6;
};

struct LowDimResult {
    /// Fitted mixtures, best trimmed log-likelihood first.
    std::vector<GaussianMixture> mixtures;
    std::vector<double> log_likelihoods;
    bool converged = true;
    std::vector<std::string> warnings;
};

/// Repeatedly merges the closest pair of components (symmetric TV upper bound) while that
/// distance is at most `tol`. Merged components keep the summed weight and the moment-matched
/// mean and covariance of the pair.
inline GaussianMixture merge_close_components(GaussianMixture m, double tol) {
    while (m.k() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < m.k(); ++i)
            for (std::size_t j = i + 1; j < m.k(); ++j) {
                double c = component_tv_cost(m.components[i], m.components[j]);
                if (c < best) {
                    best = c;
                    bi = i;
                    bj = j;
                }
            }
        if (best > tol) break;
        double w = m.weights[bi] + m.weights[bj];
        GaussianMixture pair{{m.weights[bi] / w, m.weights[bj] / w}, {m.components[bi], m.components[bj]}};
        m.components[bi] = pair.moment_match();
        m.weights[bi] = w;
        m.components.erase(m.components.begin() + static_cast<std::ptrdiff_t>(bj));
        m.weights.erase(m.weights.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return m;
}

namespace detail {

inline MatrixXd floored_cov(const MatrixXd& cov, double rel_floor) {
    double scale = std::max(cov.trace() / static_cast<double>(std::max<Index>(cov.rows(), 1)), 1e-12);
    return psd_floor(symmetrize_matrix(cov), rel_floor * scale);
}

// k-means++ seeding over the rows of `pts`.
inline std::vector<VectorXd> kmeanspp_seeds(const MatrixXd& pts, int k, Rng& rng) {
    Index n = pts.rows();
    std::vector<VectorXd> seeds;
    seeds.push_back(pts.row(std::uniform_int_distribution<Index>(0, n - 1)(rng)).transpose());
    VectorXd dist = (pts.rowwise() - seeds.back().transpose()).rowwise().squaredNorm();
    while (static_cast<int>(seeds.size()) < k) {
        double total = dist.sum();
        Index pick = 0;
        if (total > 0.0) {
            double u = uniform01(rng) * total, acc = 0.0;
            for (pick = 0; pick < n - 1; ++pick) {
                acc += dist(pick);
                if (acc >= u) break;
            }
        } else {
            pick = std::uniform_int_distribution<Index>(0, n - 1)(rng);
        }
        seeds.push_back(pts.row(pick).transpose());
        dist = dist.cwiseMin((pts.rowwise() - seeds.back().transpose()).rowwise().squaredNorm());
    }
    return seeds;
}

inline GaussianMixture initial_mixture(const MatrixXd& pts, int k, double rel_floor, Rng& rng) {
    std::vector<VectorXd> seeds = kmeanspp_seeds(pts, k, rng);
    Index n = pts.rows(), d = pts.cols();
    std::vector<std::vector<Index>> groups(static_cast<std::size_t>(k));
    for (Index i = 0; i < n; ++i) {
        std::size_t best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < seeds.size(); ++c) {
            double dd = (pts.row(i).transpose() - seeds[c]).squaredNorm();
            if (dd < bd) {
                bd = dd;
                best = c;
            }
        }
        groups[best].push_back(i);
    }
    MatrixXd global = n > 1 ? empirical_covariance(pts) : MatrixXd::Identity(d, d);
    GaussianMixture m;
    for (std::size_t c = 0; c < seeds.size(); ++c) {
        const auto& g = groups[c];
        m.weights.push_back(std::max<double>(static_cast<double>(g.size()), 1.0));
        if (g.size() > static_cast<std::size_t>(d)) {
            MatrixXd sub = select_rows(pts, g);
            m.components.push_back({row_mean(sub), floored_cov(empirical_covariance(sub), rel_floor)});
        } else {
            m.components.push_back({seeds[c], floored_cov(global / static_cast<double>(k), rel_floor)});
        }
    }
    normalize_weights(m.weights);
    return m;
}

struct EmRun {
    GaussianMixture mixture;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    bool converged = false;
};

inline EmRun trimmed_em(const MatrixXd& pts, GaussianMixture m, const LowDimOptions& opt) {
    Index n = pts.rows(), d = pts.cols();
    auto keep = std::max<Index>(static_cast<Index>(std::ceil((1.0 - opt.trim_fraction) * static_cast<double>(n))), std::min<Index>(n, d + 2));
    EmRun run;
    double prev = -std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt.max_iterations; ++it) {
        DensityEvaluator eval(m, 1e-12 * std::max(1.0, m.moment_match().cov.trace()));
        MatrixXd parts = eval.component_rows(pts);
        VectorXd top = parts.rowwise().maxCoeff();
        VectorXd ll = top.array() + (parts.colwise() - top).array().exp().rowwise().sum().log();
        VectorXd mask = VectorXd::Ones(n);
        if (keep < n) {
            std::vector<Index> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), Index{0});
            std::nth_element(order.begin(), order.begin() + keep, order.end(), [&](Index a, Index b) { return ll(a) > ll(b); });
            for (std::size_t r = static_cast<std::size_t>(keep); r < order.size(); ++r) mask(order[r]) = 0.0;
        }
        double total_ll = ll.dot(mask) / mask.sum();
        run.log_likelihood = total_ll;
        run.mixture = m;
        if (std::abs(total_ll - prev) < opt.tolerance * std::max(1.0, std::abs(total_ll))) {
            run.converged = true;
            break;
        }
        prev = total_ll;
        // M-step over the kept points.
        MatrixXd resp = (parts.colwise() - ll).array().exp().matrix();
        resp = mask.asDiagonal() * resp;
        GaussianMixture next;
        for (std::size_t c = 0; c < m.k(); ++c) {
            VectorXd r = resp.col(static_cast<Index>(c));
            double wsum = r.sum();
            if (!(wsum > 1e-9)) {
                next.weights.push_back(1e-6);
                next.components.push_back(m.components[c]);
                continue;
            }
            VectorXd mu = pts.transpose() * r / wsum;
            MatrixXd centered = pts.rowwise() - mu.transpose();
            MatrixXd cov = centered.transpose() * r.asDiagonal() * centered / wsum;
            next.weights.push_back(wsum);
            next.components.push_back({mu, floored_cov(cov, opt.cov_floor)});
        }
        normalize_weights(next.weights);
        m = std::move(next);
    }
    return run;
}

}  // namespace detail

/// Desk-scale learner for points already projected to a low-dimensional subspace: EM from
/// k-means++ starts, optionally trimmed, followed by merging of near-duplicate components.
/// k = 1 without trimming returns the sample mean and covariance.
inline LowDimResult low_dim_learn(const MatrixXd& points, int k, Rng& rng, const LowDimOptions& opt = {}) {
    if (k < 1) throw InvalidInput("low_dim_learn: k must be positive");
    if (points.rows() < 2) throw InvalidInput("low_dim_learn: need at least two points");
    if (points.cols() > opt.max_dim) throw InvalidInput("low_dim_learn: subspace dimension above the configured cap");
    if (!(opt.trim_fraction >= 0.0 && opt.trim_fraction < 0.5)) throw InvalidInput("low_dim_learn: trim_fraction must lie in [0, 1/2)");
    LowDimResult out;
    MatrixXd pts = points;
    if (points.rows() > opt.max_points) {
        std::vector<Index> idx(static_cast<std::size_t>(points.rows()));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(static_cast<std::size_t>(opt.max_points));
        std::sort(idx.begin(), idx.end());
        pts = select_rows(points, idx);
    }
    if (points.cols() == 0) {
        out.mixtures.push_back(GaussianMixture::single({VectorXd(0), MatrixXd(0, 0)}));
        out.log_likelihoods.push_back(0.0);
        return out;
    }
    if (k == 1 && opt.trim_fraction == 0.0) {
        out.mixtures.push_back(GaussianMixture::single({row_mean(pts), empirical_covariance(pts)}));
        out.log_likelihoods.push_back(0.0);
        return out;
    }
    std::vector<detail::EmRun> runs;
    for (int r = 0; r < std::max(1, opt.restarts); ++r) {
        MatrixXd active = pts;
        detail::EmRun run = detail::trimmed_em(active, detail::initial_mixture(active, k, opt.cov_floor, rng), opt);
        for (int round = 0; round < opt.outlier_rounds && k > 1; ++round) {
            auto light = std::find_if(run.mixture.weights.begin(), run.mixture.weights.end(), [&](double w) { return w < opt.min_weight; });
            if (light == run.mixture.weights.end()) break;
            auto target = static_cast<Index>(light - run.mixture.weights.begin());
            MatrixXd parts = DensityEvaluator(run.mixture, 1e-12 * std::max(1.0, run.mixture.moment_match().cov.trace())).component_rows(active);
            std::vector<Index> keep;
            for (Index i = 0; i < active.rows(); ++i) {
                Index arg = 0;
                parts.row(i).maxCoeff(&arg);
                if (arg != target) keep.push_back(i);
            }
            if (keep.size() < static_cast<std::size_t>(active.cols() + 2) * static_cast<std::size_t>(k)) break;
            active = select_rows(active, keep);
            run = detail::trimmed_em(active, detail::initial_mixture(active, k, opt.cov_floor, rng), opt);
        }
        run.mixture = merge_close_components(run.mixture, opt.merge_tolerance);
        runs.push_back(std::move(run));
    }
    std::stable_sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.log_likelihood > b.log_likelihood; });
    out.converged = runs.front().converged;
    if (!out.converged) out.warnings.push_back("EM did not converge within the iteration cap; returning best found");
    for (auto& r : runs) {
        out.mixtures.push_back(std::move(r.mixture));
        out.log_likelihoods.push_back(r.log_likelihood);
    }
    return out;
}

}  // namespace rgmm
