#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/tv.hpp"

namespace rgmm {

enum class SeparationKind { mean, spectral, frobenius, none };

inline std::string to_string(SeparationKind k) {
    switch (k) {
        case SeparationKind::mean: return "mean-sep";
        case SeparationKind::spectral: return "spectral-sep";
        case SeparationKind::frobenius: return "frobenius-sep";
        case SeparationKind::none: return "none";
    }
    return "none";
}

struct SeparationResult {
    SeparationKind kind = SeparationKind::none;
    /// Unit witness direction for the satisfied condition (empty for none). For relative-Frobenius
    /// separation it is the top eigenvector of Σ₁^{†/2}(Σ₂−Σ₁)Σ₁^{†/2} by magnitude.
    VectorXd witness;
    /// Statistic of the satisfied condition and the bound it exceeded.
    double statistic = 0.0;
    double bound = 0.0;
    /// Set when the relative-Frobenius test could not run because the ranges differ.
    bool range_mismatch = false;
};

namespace detail {

// max_v (vᵀ a v)/(vᵀ b v) with its maximizer; infinite when a has mass in the null space of b.
inline std::pair<double, VectorXd> generalized_top(const MatrixXd& a, const MatrixXd& b, double rel_tol = 1e-10) {
    SymEig eb = sym_eig(b);
    double cut = std::max(rank_cutoff(eb.values, rel_tol), 1e-300);
    Index d = a.rows();
    MatrixXd null_basis(d, 0), range_basis(d, 0);
    VectorXd range_vals(0);
    for (Index i = 0; i < d; ++i) {
        auto& dst = eb.values(i) > cut ? range_basis : null_basis;
        dst.conservativeResize(Eigen::NoChange, dst.cols() + 1);
        dst.col(dst.cols() - 1) = eb.vectors.col(i);
        if (eb.values(i) > cut) {
            range_vals.conservativeResize(range_vals.size() + 1);
            range_vals(range_vals.size() - 1) = eb.values(i);
        }
    }
    double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    if (null_basis.cols() > 0) {
        SymEig en = sym_eig(null_basis.transpose() * a * null_basis);
        if (en.values(en.values.size() - 1) > rel_tol * scale)
            return {std::numeric_limits<double>::infinity(), (null_basis * en.vectors.col(en.values.size() - 1)).normalized()};
    }
    if (range_basis.cols() == 0) return {0.0, VectorXd::Zero(d)};
    VectorXd inv_sqrt = range_vals.cwiseSqrt().cwiseInverse();
    MatrixXd w = range_basis * inv_sqrt.asDiagonal();
    SymEig e = sym_eig(w.transpose() * a * w);
    Index top = e.values.size() - 1;
    return {e.values(top), (w * e.vectors.col(top)).normalized()};
}

}  // namespace detail

/// Tests, in order, mean separation (max_v ⟨μ₁−μ₂, v⟩² / vᵀ(Σ₁+Σ₂)v > Δ²), spectral separation
/// (max generalized eigenvalue of (Σ₁, Σ₂) either way > Δ) and relative-Frobenius separation
/// (‖Σ₁^{†/2}(Σ₂−Σ₁)Σ₁^{†/2}‖²_F > Δ²‖Σ₁^†Σ₂‖²_op, same range required); returns the first that holds.
inline SeparationResult separation_test(const GaussianComponent& a, const GaussianComponent& b, double delta) {
    if (!(delta > 0.0)) throw InvalidInput("separation_test: Delta must be positive");
    if (a.dim() != b.dim()) throw InvalidInput("separation_test: dimension mismatch");
    SeparationResult r;
    VectorXd diff = a.mean - b.mean;
    if (diff.norm() > 0.0) {
        MatrixXd outer = diff * diff.transpose();
        auto [value, v] = detail::generalized_top(outer, a.cov + b.cov);
        if (value > delta * delta) return {SeparationKind::mean, v, value, delta * delta, false};
    }
    for (int way = 0; way < 2; ++way) {
        const auto& p = way == 0 ? a.cov : b.cov;
        const auto& q = way == 0 ? b.cov : a.cov;
        auto [value, v] = detail::generalized_top(p, q);
        if (value > delta) return {SeparationKind::spectral, v, value, delta, false};
    }
    if (!detail::same_range(a.cov, b.cov)) {
        r.range_mismatch = true;
        return r;
    }
    MatrixXd half = pinv_sqrt_sym(a.cov);
    double lhs = (half * (b.cov - a.cov) * half).squaredNorm();
    MatrixXd rel = pinv_sym(a.cov) * b.cov;
    double op = rel.jacobiSvd().singularValues()(0);
    double rhs = delta * delta * op * op;
    if (lhs > rhs) {
        SymEig e = sym_eig(half * (b.cov - a.cov) * half);
        Index top = 0;
        e.values.cwiseAbs().maxCoeff(&top);
        return {SeparationKind::frobenius, e.vectors.col(top), lhs, rhs, false};
    }
    return r;
}

}  // namespace rgmm
