#pragma once

#include <algorithm>
#include <cmath>

#include "rgmm/core/density.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/core/sampling.hpp"

namespace rgmm {

struct TvBound {
    double value = 0.0;
    /// True when the covariances span different subspaces; value is then 1.
    bool range_mismatch = false;
};

namespace detail {

inline bool same_range(const MatrixXd& a, const MatrixXd& b, double rel_tol = 1e-8) {
    SymEig ea = sym_eig(a);
    SymEig eb = sym_eig(b);
    double cut_a = rank_cutoff(ea.values, rel_tol);
    double cut_b = rank_cutoff(eb.values, rel_tol);
    MatrixXd ua(a.rows(), 0), ub(b.rows(), 0);
    for (Index i = 0; i < ea.values.size(); ++i) {
        if (ea.values(i) > cut_a) {
            ua.conservativeResize(Eigen::NoChange, ua.cols() + 1);
            ua.col(ua.cols() - 1) = ea.vectors.col(i);
        }
    }
    for (Index i = 0; i < eb.values.size(); ++i) {
        if (eb.values(i) > cut_b) {
            ub.conservativeResize(Eigen::NoChange, ub.cols() + 1);
            ub.col(ub.cols() - 1) = eb.vectors.col(i);
        }
    }
    if (ua.cols() != ub.cols()) return false;
    if (ua.cols() == 0) return true;
    MatrixXd residual = ub - ua * (ua.transpose() * ub);
    return residual.norm() <= 1e-6 * std::sqrt(static_cast<double>(ub.cols()));
}

}  // namespace detail

/// C·√(Δμᵀ Σ_a^† Δμ) + C·‖Σ_a^{†/2}(Σ_b − Σ_a)Σ_a^{†/2}‖_F, clipped to [0, 1].
inline TvBound tv_upper_bound(const GaussianComponent& a, const GaussianComponent& b, double c = 1.0) {
    if (a.dim() != b.dim()) throw InvalidInput("tv_upper_bound: dimension mismatch");
    if (!detail::same_range(a.cov, b.cov)) return {1.0, true};
    VectorXd diff = a.mean - b.mean;
    MatrixXd pinv = pinv_sym(a.cov, 1e-10);
    // A mean offset outside the common range makes the distributions mutually singular.
    VectorXd in_range = a.cov * (pinv * diff);
    if ((diff - in_range).norm() > 1e-8 * std::max(1.0, diff.norm())) return {1.0, true};
    MatrixXd half = pinv_sqrt_sym(a.cov, 1e-10);
    double mean_term = std::sqrt(std::max(0.0, diff.dot(pinv * diff)));
    double cov_term = (half * (b.cov - a.cov) * half).norm();
    return {std::clamp(c * mean_term + c * cov_term, 0.0, 1.0), false};
}

/// C·(‖μ_a − μ_b‖₂ + ‖Σ_a − Σ_b‖_F)/λ, clipped to [0, 1].
inline double tv_frobenius_bound(const GaussianComponent& a, const GaussianComponent& b, double lambda, double c = 1.0) {
    if (!(lambda > 0.0)) throw InvalidInput("tv_frobenius_bound: lambda must be positive");
    if (a.dim() != b.dim()) throw InvalidInput("tv_frobenius_bound: dimension mismatch");
    double raw = c * ((a.mean - b.mean).norm() + (a.cov - b.cov).norm()) / lambda;
    return std::clamp(raw, 0.0, 1.0);
}

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// d_TV(a, b) = E_{x~(a+b)/2} |p_a − p_b|/(p_a + p_b) = E |tanh((log p_a − log p_b)/2)|.
/// Half the draws come from each mixture (stratified proposal).
inline McEstimate tv_monte_carlo(const GaussianMixture& a, const GaussianMixture& b, Index n, Rng& rng, double floor = -1.0) {
    if (n < 1000) throw InvalidInput("tv_monte_carlo: n must be at least 1000");
    a.validate();
    b.validate();
    if (a.dim() != b.dim()) throw InvalidInput("tv_monte_carlo: dimension mismatch");
    double fl = floor > 0.0 ? floor : std::max(default_density_floor(a), default_density_floor(b));
    DensityEvaluator da(a, fl), db(b, fl);
    Index half = n / 2;
    auto score = [&](const MatrixXd& pts) {
        VectorXd la = da.rows(pts), lb = db.rows(pts);
        VectorXd s(pts.rows());
        for (Index i = 0; i < pts.rows(); ++i) {
            double diff = la(i) - lb(i);
            s(i) = std::isnan(diff) ? 0.0 : std::abs(std::tanh(0.5 * diff));
        }
        return s;
    };
    VectorXd sa = score(sample_mixture(a, half, rng).points);
    VectorXd sb = score(sample_mixture(b, n - half, rng).points);
    auto mean_var = [](const VectorXd& s) {
        double m = s.mean();
        double v = s.size() > 1 ? (s.array() - m).square().sum() / static_cast<double>(s.size() - 1) : 0.0;
        return std::pair<double, double>(m, v);
    };
    auto [ma, va] = mean_var(sa);
    auto [mb, vb] = mean_var(sb);
    McEstimate est;
    est.value = 0.5 * (ma + mb);
    est.std_error = 0.5 * std::sqrt(va / static_cast<double>(sa.size()) + vb / static_cast<double>(sb.size()));
    return est;
}

}  // namespace rgmm
