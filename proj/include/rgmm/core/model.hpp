#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"

namespace rgmm {

struct GaussianComponent {
    VectorXd mean;
    MatrixXd cov;

    GaussianComponent() = default;
    GaussianComponent(VectorXd m, MatrixXd c) : mean(std::move(m)), cov(std::move(c)) {}

    Index dim() const { return mean.size(); }

    static GaussianComponent standard(Index d) {
        return {VectorXd::Zero(d), MatrixXd::Identity(d, d)};
    }

    /// Throws InvalidInput when the covariance is not symmetric PSD or shapes disagree.
    void validate() const {
        if (cov.rows() != mean.size() || cov.cols() != mean.size()) {
            throw InvalidInput("GaussianComponent: covariance shape does not match mean length");
        }
        if (!mean.allFinite() || !cov.allFinite()) throw InvalidInput("GaussianComponent: non-finite entries");
        double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
        if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw InvalidInput("GaussianComponent: covariance is not symmetric");
        }
        if (cov.rows() > 0) {
            double tr = std::max(cov.trace(), 0.0);
            if (min_eigenvalue(cov) < -1e-10 * std::max(tr, 1e-300)) {
                throw InvalidInput("GaussianComponent: covariance is not positive semidefinite");
            }
        }
    }
};

struct GaussianMixture {
    std::vector<double> weights;
    std::vector<GaussianComponent> components;

    GaussianMixture() = default;
    GaussianMixture(std::vector<double> w, std::vector<GaussianComponent> c)
        : weights(std::move(w)), components(std::move(c)) {}

    static GaussianMixture single(GaussianComponent c) { return {{1.0}, {std::move(c)}}; }

    std::size_t k() const { return components.size(); }
    Index dim() const { return components.empty() ? 0 : components.front().dim(); }

    void validate() const {
        if (components.empty()) throw InvalidInput("GaussianMixture: no components");
        if (weights.size() != components.size()) {
            throw InvalidInput("GaussianMixture: weights and components differ in length");
        }
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("GaussianMixture: negative or non-finite weight");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("GaussianMixture: weights do not sum to 1");
        Index d = dim();
        for (const auto& c : components) {
            if (c.dim() != d) throw InvalidInput("GaussianMixture: components differ in dimension");
            c.validate();
        }
    }

    /// Component-weighted mean and covariance of the whole mixture.
    GaussianComponent moment_match() const {
        Index d = dim();
        VectorXd mu = VectorXd::Zero(d);
        for (std::size_t i = 0; i < k(); ++i) mu += weights[i] * components[i].mean;
        MatrixXd cov = MatrixXd::Zero(d, d);
        for (std::size_t i = 0; i < k(); ++i) {
            VectorXd diff = components[i].mean - mu;
            cov += weights[i] * (components[i].cov + diff * diff.transpose());
        }
        return {mu, symmetrize_matrix(cov)};
    }
};

/// Normalizes nonnegative weights to sum 1; returns the original sum.
inline double normalize_weights(std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    if (!(total > 0.0)) throw InvalidInput("normalize_weights: weights sum to zero");
    for (double& x : w) x /= total;
    return total;
}

struct Hypothesis {
    GaussianMixture mixture;
    std::string provenance;
    /// Sum of the weights before normalization (the guessed weights may sum to 1 ± kε).
    double raw_weight_sum = 1.0;
};

/// y = diag(scale) Ûᵀ (x − shift); maps data to approximately isotropic coordinates.
struct IsotropizingTransform {
    VectorXd shift;
    MatrixXd basis;
    VectorXd scale;
    int rank = 0;

    Index input_dim() const { return shift.size(); }

    MatrixXd apply(const MatrixXd& points) const {
        MatrixXd centered = points.rowwise() - shift.transpose();
        return (centered * basis) * scale.asDiagonal();
    }

    VectorXd apply_point(const VectorXd& x) const { return scale.asDiagonal() * (basis.transpose() * (x - shift)); }

    /// Û diag(1/scale): maps transformed coordinates back to the input space.
    MatrixXd lift() const {
        VectorXd inv = scale.unaryExpr([](double s) { return s > 0.0 ? 1.0 / s : 0.0; });
        return basis * inv.asDiagonal();
    }

    MatrixXd invert(const MatrixXd& transformed) const {
        MatrixXd back = transformed * lift().transpose();
        return back.rowwise() + shift.transpose();
    }

    GaussianComponent lift_component(const GaussianComponent& c) const {
        MatrixXd b = lift();
        return {shift + b * c.mean, symmetrize_matrix(b * c.cov * b.transpose())};
    }

    GaussianMixture lift_mixture(const GaussianMixture& m) const {
        GaussianMixture out;
        out.weights = m.weights;
        for (const auto& c : m.components) out.components.push_back(lift_component(c));
        return out;
    }
};

/// Points as rows, optional component labels (−1 for injected noise) and corruption mask.
struct SampleSet {
    MatrixXd points;
    std::vector<int> labels;
    std::vector<bool> corrupted;

    Index size() const { return points.rows(); }
    Index dim() const { return points.cols(); }
    bool has_labels() const { return static_cast<Index>(labels.size()) == points.rows(); }
};

}  // namespace rgmm
