#pragma once

#include <cmath>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/hermite/dense_tensor.hpp"

namespace rgmm {

struct CollapseDraw {
    std::vector<VectorXd> xs;
    std::vector<VectorXd> ys;
    std::vector<double> coefficients;
    /// Coefficient range D: every a_j lies in [−D, D].
    double bound = 0.0;
    MatrixXd s_hat;
};

/// D = C·k⁴ / (α·√η).
inline double collapse_bound(int k, double alpha, double eta, double c = 1.0) {
    if (!(alpha > 0.0 && alpha < 1.0) || !(eta > 0.0 && eta < 1.0)) throw InvalidInput("collapse_bound: alpha and eta must lie in (0, 1)");
    if (k < 1) throw InvalidInput("collapse_bound: k must be positive");
    return c * std::pow(double(k), 4) / (alpha * std::sqrt(eta));
}

/// Ŝ = Σ_j a_j · collapse_modes(t4, x_j, y_j) with the given draws, symmetrized.
inline MatrixXd collapse_with(const DenseTensor& t4, const std::vector<VectorXd>& xs, const std::vector<VectorXd>& ys,
                              const std::vector<double>& a) {
    if (t4.order() != 4) throw InvalidInput("collapse_with: tensor must have order 4");
    if (xs.size() != ys.size() || xs.size() != a.size()) throw InvalidInput("collapse_with: draw count mismatch");
    MatrixXd s = MatrixXd::Zero(t4.dim(), t4.dim());
    for (std::size_t j = 0; j < xs.size(); ++j) s += a[j] * collapse_modes(t4, xs[j], ys[j]);
    return symmetrize_matrix(s);
}

/// Draws 4k standard Gaussian pairs and uniform coefficients in [−D, D].
inline CollapseDraw random_collapse(const DenseTensor& t4, int k, double alpha, double eta, Rng& rng, double c = 1.0) {
    if (t4.order() != 4) throw InvalidInput("random_collapse: tensor must have order 4");
    CollapseDraw draw;
    draw.bound = collapse_bound(k, alpha, eta, c);
    for (int j = 0; j < 4 * k; ++j) {
        draw.xs.push_back(standard_normal_vector(t4.dim(), rng));
        draw.ys.push_back(standard_normal_vector(t4.dim(), rng));
        draw.coefficients.push_back(uniform(rng, -draw.bound, draw.bound));
    }
    draw.s_hat = collapse_with(t4, draw.xs, draw.ys, draw.coefficients);
    return draw;
}

}  // namespace rgmm
