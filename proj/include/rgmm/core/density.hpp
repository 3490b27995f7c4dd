#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"

namespace rgmm {

/// Default eigenvalue floor: 1e-9 times the largest component trace.
inline double default_density_floor(const GaussianMixture& m) {
    double tr = 0.0;
    for (const auto& c : m.components) tr = std::max(tr, c.cov.trace());
    return std::max(1e-9 * tr, 1e-300);
}

inline double log_sum_exp(const VectorXd& v) {
    double hi = v.maxCoeff();
    if (!std::isfinite(hi)) return hi;
    return hi + std::log((v.array() - hi).exp().sum());
}

/// Evaluates log Σ_i w_i N(x; μ_i, Σ_i + floor·I) with cached factorizations.
class DensityEvaluator {
public:
    DensityEvaluator(const GaussianMixture& m, double floor) {
        if (!(floor > 0.0)) throw InvalidInput("DensityEvaluator: floor must be positive");
        m.validate();
        dim_ = m.dim();
        const double log2pi = std::log(2.0 * std::numbers::pi);
        for (std::size_t i = 0; i < m.k(); ++i) {
            const auto& c = m.components[i];
            SymEig e = sym_eig(c.cov);
            VectorXd vals = e.values.array().max(0.0) + floor;
            Term t;
            t.mean = c.mean;
            t.whiten = (vals.array().rsqrt().matrix().asDiagonal() * e.vectors.transpose());
            t.log_norm = std::log(std::max(m.weights[i], 0.0)) - 0.5 * (static_cast<double>(dim_) * log2pi + vals.array().log().sum());
            terms_.push_back(std::move(t));
        }
    }

    DensityEvaluator(const GaussianMixture& m) : DensityEvaluator(m, default_density_floor(m)) {}

    double operator()(const VectorXd& x) const {
        VectorXd parts(static_cast<Index>(terms_.size()));
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            parts(static_cast<Index>(i)) = terms_[i].log_norm - 0.5 * (terms_[i].whiten * (x - terms_[i].mean)).squaredNorm();
        }
        return log_sum_exp(parts);
    }

    /// Log-density of each row of `points`.
    VectorXd rows(const MatrixXd& points) const {
        Index n = points.rows();
        MatrixXd parts(n, static_cast<Index>(terms_.size()));
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            MatrixXd z = (points.rowwise() - terms_[i].mean.transpose()) * terms_[i].whiten.transpose();
            parts.col(static_cast<Index>(i)) = (terms_[i].log_norm - 0.5 * z.rowwise().squaredNorm().array()).matrix();
        }
        VectorXd out(n);
        for (Index r = 0; r < n; ++r) out(r) = log_sum_exp(parts.row(r).transpose());
        return out;
    }

    /// Per-component log of w_i N(x; μ_i, Σ_i) for each row (n×k).
    MatrixXd component_rows(const MatrixXd& points) const {
        MatrixXd parts(points.rows(), static_cast<Index>(terms_.size()));
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            MatrixXd z = (points.rowwise() - terms_[i].mean.transpose()) * terms_[i].whiten.transpose();
            parts.col(static_cast<Index>(i)) = (terms_[i].log_norm - 0.5 * z.rowwise().squaredNorm().array()).matrix();
        }
        return parts;
    }

    Index dim() const { return dim_; }

private:
    struct Term {
        VectorXd mean;
        MatrixXd whiten;
        double log_norm = 0.0;
    };
    std::vector<Term> terms_;
    Index dim_ = 0;
};

inline double log_density(const GaussianMixture& m, const VectorXd& x, double floor) {
    return DensityEvaluator(m, floor)(x);
}

}  // namespace rgmm
