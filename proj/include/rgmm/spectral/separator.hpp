#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"

namespace rgmm {

enum class SeparatorKind { variance_gap, mean_gap };

inline std::string to_string(SeparatorKind k) { return k == SeparatorKind::variance_gap ? "variance-gap" : "mean-gap"; }

struct Separator {
    /// Unit direction v.
    VectorXd direction;
    SeparatorKind kind = SeparatorKind::variance_gap;
    /// Variance gap: F(x) = 1 iff v·x lies within half_width of some center.
    std::vector<std::pair<double, double>> intervals;
    /// Mean gap: F(x) = 1 iff v·x > threshold.
    double threshold = 0.0;
    /// Variance gap: the chosen t and the excluded band (t, t·ratio) that no vᵀΣ̂_j v falls in.
    double t = 0.0;
    double band_ratio = 1.0;
    /// Projected variances vᵀΣ̂_j v and projected means v·μ̂_j of the hypothesis.
    std::vector<double> variances;
    std::vector<double> projected_means;
};

struct ThinDirection {
    VectorXd direction;
    /// Index of the component whose covariance has the minimum eigenvalue.
    std::size_t component = 0;
    double variance = 0.0;
};

/// Minimum eigenvalue over all Σ̂_i; returns its eigenvector and component index when below 2η.
/// Ties go to the lowest component index.
inline std::optional<ThinDirection> find_thin_direction(const std::vector<GaussianComponent>& hyp, double eta) {
    if (!(eta > 0.0)) throw InvalidInput("find_thin_direction: eta must be positive");
    std::optional<ThinDirection> best;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        hyp[i].validate();
        SymEig e = sym_eig(hyp[i].cov);
        if (e.values.size() == 0) continue;
        if (!best || e.values(0) < best->variance) best = ThinDirection{e.vectors.col(0), i, e.values(0)};
    }
    if (best && best->variance < 2.0 * eta) return best;
    return std::nullopt;
}

struct SeparatorOptions {
    /// Band ratio C·η^{−1/(2k)}.
    double gap_c = 0.25;
    /// Log-spaced candidate values of t in (2η, √η).
    int scan_points = 1000;
    /// Multiplier on the interval half-width √t·log(1/η).
    double width_multiplier = 1.0;
};

/// Variance-gap case (some vᵀΣ̂_j v > √η): the smallest scanned t in (2η, √η) whose band
/// (t, t·C·η^{−1/(2k)}) holds no projected variance; intervals are centred at v·μ̂_i for every
/// component with vᵀΣ̂_i v ≤ t, half-width multiplier·√t·log(1/η).
/// Mean-gap case: t is the midpoint of the widest gap between sorted projected means, which must
/// keep every projected mean at least 1/(20k) away.
/// Throws AlgorithmFailure when neither construction applies.
inline Separator build_separator(const std::vector<GaussianComponent>& hyp, const VectorXd& v, double eta, int k,
                                 const SeparatorOptions& opt = {}) {
    if (k < 2 || hyp.size() < 2) throw InvalidInput("build_separator: need at least two components to separate");
    if (!(eta > 0.0 && eta < 0.25)) throw InvalidInput("build_separator: eta must lie in (0, 1/4)");
    if (std::abs(v.norm() - 1.0) > 1e-9) throw InvalidInput("build_separator: direction must be unit norm");
    Separator s;
    s.direction = v;
    for (const auto& c : hyp) {
        if (c.dim() != v.size()) throw InvalidInput("build_separator: dimension mismatch");
        s.variances.push_back(v.dot(c.cov * v));
        s.projected_means.push_back(v.dot(c.mean));
    }
    double root = std::sqrt(eta);
    bool wide = std::any_of(s.variances.begin(), s.variances.end(), [&](double x) { return x > root; });
    if (wide) {
        s.kind = SeparatorKind::variance_gap;
        s.band_ratio = opt.gap_c * std::pow(eta, -1.0 / (2.0 * k));
        double lo = std::log(2.0 * eta), hi = std::log(root);
        for (int i = 1; i <= opt.scan_points; ++i) {
            double t = std::exp(lo + (hi - lo) * i / (opt.scan_points + 1.0));
            bool empty = std::none_of(s.variances.begin(), s.variances.end(), [&](double x) { return x > t && x < t * s.band_ratio; });
            if (!empty) continue;
            s.t = t;
            double half = opt.width_multiplier * std::sqrt(t) * std::log(1.0 / eta);
            for (std::size_t j = 0; j < hyp.size(); ++j)
                if (s.variances[j] <= t) s.intervals.emplace_back(s.projected_means[j], half);
            return s;
        }
        throw AlgorithmFailure("build_separator: no empty variance band in (2 eta, sqrt(eta)); candidate parameters are inconsistent");
    }
    s.kind = SeparatorKind::mean_gap;
    std::vector<double> sorted = s.projected_means;
    std::sort(sorted.begin(), sorted.end());
    double margin = 1.0 / (20.0 * k);
    double best_gap = 0.0;
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i + 1] - sorted[i] > best_gap) {
            best_gap = sorted[i + 1] - sorted[i];
            s.threshold = 0.5 * (sorted[i] + sorted[i + 1]);
        }
    if (!(best_gap > 2.0 * margin))
        throw AlgorithmFailure("build_separator: projected means leave no threshold 1/(20k) away from all of them");
    return s;
}

/// F(x) for every row.
inline std::vector<bool> separator_values(const Separator& sep, const MatrixXd& points) {
    if (points.cols() != sep.direction.size()) throw InvalidInput("separator_values: dimension mismatch");
    VectorXd proj = points * sep.direction;
    std::vector<bool> f(static_cast<std::size_t>(points.rows()), false);
    for (Index i = 0; i < proj.size(); ++i) {
        if (sep.kind == SeparatorKind::mean_gap) {
            f[static_cast<std::size_t>(i)] = proj(i) > sep.threshold;
        } else {
            for (const auto& [center, half] : sep.intervals)
                if (std::abs(proj(i) - center) < half) {
                    f[static_cast<std::size_t>(i)] = true;
                    break;
                }
        }
    }
    return f;
}

/// Rows with F = 1 (side 1) and F = 0 (side 2).
inline std::pair<std::vector<Index>, std::vector<Index>> apply_separator(const Separator& sep, const MatrixXd& points) {
    std::pair<std::vector<Index>, std::vector<Index>> out;
    auto f = separator_values(sep, points);
    for (std::size_t i = 0; i < f.size(); ++i) (f[i] ? out.first : out.second).push_back(static_cast<Index>(i));
    return out;
}

}  // namespace rgmm
