#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/hermite/packing.hpp"

namespace rgmm {

struct MomentFitResult {
    GaussianMixture mixture;
    /// Weighted residual norm at the solution.
    double residual = 0.0;
    int evaluations = 0;
};

namespace detail {

// Parameter vector: k−1 weight logits (the first is pinned at 0), then per component the
// mean followed by the packed upper triangle of S = Σ − I.
class MomentFitModel {
public:
    MomentFitModel(Index dim, int k) : dim_(dim), k_(k), tri_(dim * (dim + 1) / 2) {}

    Index parameter_count() const { return (k_ - 1) + k_ * (dim_ + tri_); }

    GaussianMixture decode(const VectorXd& x) const {
        GaussianMixture m;
        VectorXd logits(k_);
        logits(0) = 0.0;
        for (int i = 1; i < k_; ++i) logits(i) = x(i - 1);
        double top = logits.maxCoeff();
        for (int i = 0; i < k_; ++i) m.weights.push_back(std::exp(logits(i) - top));
        normalize_weights(m.weights);
        for (int i = 0; i < k_; ++i) {
            Index off = (k_ - 1) + i * (dim_ + tri_);
            VectorXd mu = x.segment(off, dim_);
            MatrixXd s(dim_, dim_);
            Index t = off + dim_;
            for (Index a = 0; a < dim_; ++a)
                for (Index b = a; b < dim_; ++b) s(a, b) = s(b, a) = x(t++);
            m.components.push_back({mu, MatrixXd::Identity(dim_, dim_) + s});
        }
        return m;
    }

    VectorXd encode(const GaussianMixture& m) const {
        VectorXd x(parameter_count());
        for (int i = 1; i < k_; ++i) x(i - 1) = std::log(std::max(m.weights[static_cast<std::size_t>(i)], 1e-12) / std::max(m.weights[0], 1e-12));
        for (int i = 0; i < k_; ++i) {
            const auto& c = m.components[static_cast<std::size_t>(i)];
            Index off = (k_ - 1) + i * (dim_ + tri_);
            x.segment(off, dim_) = c.mean;
            Index t = off + dim_;
            for (Index a = 0; a < dim_; ++a)
                for (Index b = a; b < dim_; ++b) x(t++) = c.cov(a, b) - (a == b ? 1.0 : 0.0);
        }
        return x;
    }

private:
    Index dim_;
    int k_;
    Index tri_;
};

struct MomentFitFunctor {
    using Scalar = double;
    using InputType = VectorXd;
    using ValueType = VectorXd;
    using JacobianType = MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    std::shared_ptr<const MomentFitModel> model;
    std::vector<std::shared_ptr<const PackedLayout>> layouts;
    std::vector<VectorXd> targets;
    std::vector<double> scales;
    Index n_inputs = 0;
    Index n_values = 0;

    Index inputs() const { return n_inputs; }
    Index values() const { return n_values; }

    int operator()(const VectorXd& x, VectorXd& f) const {
        GaussianMixture m = model->decode(x);
        Index off = 0;
        for (std::size_t o = 0; o < layouts.size(); ++o) {
            VectorXd acc = -targets[o];
            for (std::size_t i = 0; i < m.k(); ++i) {
                const auto& c = m.components[i];
                acc += m.weights[i] * layouts[o]->expected_hermite(c.mean, c.cov - MatrixXd::Identity(c.dim(), c.dim()));
            }
            f.segment(off, acc.size()) = scales[o] * acc;
            off += acc.size();
        }
        return 0;
    }
};

}  // namespace detail

/// Least-squares fit of a k-mixture to packed Hermite moment estimates T̂_1..T̂_M (one vector
/// per order, order = position + 1), started from `start`. Order m residuals are scaled by
/// 1/√(m!), the per-coordinate noise scale of h_m under N(0, I).
inline MomentFitResult fit_moments(const std::vector<VectorXd>& packed_targets, const GaussianMixture& start, int max_evaluations = 4000) {
    if (packed_targets.empty()) throw InvalidInput("fit_moments: no target moments");
    start.validate();
    Index d = start.dim();
    auto k = static_cast<int>(start.k());
    detail::MomentFitFunctor fn;
    fn.model = std::make_shared<detail::MomentFitModel>(d, k);
    double fact = 1.0;
    for (std::size_t o = 0; o < packed_targets.size(); ++o) {
        int order = static_cast<int>(o) + 1;
        fact *= order;
        fn.layouts.push_back(PackedLayout::get(d, order));
        if (packed_targets[o].size() != fn.layouts.back()->size()) throw InvalidInput("fit_moments: packed target size mismatch");
        fn.targets.push_back(packed_targets[o]);
        fn.scales.push_back(1.0 / std::sqrt(fact));
        fn.n_values += packed_targets[o].size();
    }
    fn.n_inputs = fn.model->parameter_count();
    VectorXd x = fn.model->encode(start);
    // LM needs at least as many residuals as parameters.
    if (fn.n_values < fn.n_inputs) {
        MomentFitResult out{start, 0.0, 0};
        VectorXd f(fn.n_values);
        fn(x, f);
        out.residual = f.norm();
        return out;
    }
    Eigen::NumericalDiff<detail::MomentFitFunctor> numdiff(fn);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::MomentFitFunctor>> lm(numdiff);
    lm.parameters.maxfev = max_evaluations;
    lm.minimize(x);
    MomentFitResult out;
    out.mixture = fn.model->decode(x);
    for (auto& c : out.mixture.components) c.cov = psd_floor(symmetrize_matrix(c.cov), 0.0);
    VectorXd f(fn.n_values);
    fn(x, f);
    out.residual = f.norm();
    out.evaluations = static_cast<int>(lm.nfev);
    return out;
}

}  // namespace rgmm
