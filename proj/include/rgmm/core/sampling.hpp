#pragma once

#include <random>
#include <vector>

#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"

namespace rgmm {

/// Factor L with L Lᵀ = cov, valid for singular PSD covariances.
inline MatrixXd psd_factor(const MatrixXd& cov) {
    SymEig e = sym_eig(cov);
    VectorXd root = e.values.unaryExpr([](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
    return e.vectors * root.asDiagonal();
}

inline MatrixXd sample_component(const GaussianComponent& c, Index n, Rng& rng) {
    MatrixXd factor = psd_factor(c.cov);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd z(n, c.dim());
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < c.dim(); ++j) z(i, j) = gauss(rng);
    MatrixXd out = z * factor.transpose();
    return out.rowwise() + c.mean.transpose();
}

inline SampleSet sample_mixture(const GaussianMixture& m, Index n, Rng& rng) {
    if (n < 1) throw InvalidInput("sample_mixture: n must be at least 1");
    m.validate();
    std::vector<MatrixXd> factors;
    for (const auto& c : m.components) factors.push_back(psd_factor(c.cov));
    std::discrete_distribution<int> pick(m.weights.begin(), m.weights.end());
    std::normal_distribution<double> gauss(0.0, 1.0);
    SampleSet out;
    Index d = m.dim();
    out.points.resize(n, d);
    out.labels.resize(static_cast<std::size_t>(n));
    out.corrupted.assign(static_cast<std::size_t>(n), false);
    VectorXd z(d);
    for (Index i = 0; i < n; ++i) {
        int c = m.k() == 1 ? 0 : pick(rng);
        for (Index j = 0; j < d; ++j) z(j) = gauss(rng);
        out.points.row(i) = (m.components[static_cast<std::size_t>(c)].mean + factors[static_cast<std::size_t>(c)] * z).transpose();
        out.labels[static_cast<std::size_t>(i)] = c;
    }
    return out;
}

}  // namespace rgmm
