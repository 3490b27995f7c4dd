#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/hermite/dense_tensor.hpp"

namespace rgmm {

struct SubspaceSource {
    /// "tensor" for a left singular vector of a flattened moment tensor, "s_hat" for Ŝ.
    std::string kind;
    int order = 0;
    double singular_value = 0.0;
};

struct SearchSubspace {
    /// Orthonormal columns; d×0 when empty.
    MatrixXd basis;
    /// One entry per basis column.
    std::vector<SubspaceSource> sources;
    std::vector<std::string> warnings;

    Index dim() const { return basis.cols(); }
    Index ambient_dim() const { return basis.rows(); }
    MatrixXd projector() const { return basis * basis.transpose(); }
};

namespace detail {

struct DirectionCandidate {
    VectorXd vector;
    SubspaceSource source;
};

// Appends v to `basis` after Gram-Schmidt against the current columns; returns false
// when v is numerically inside the span already.
inline bool extend_orthonormal(MatrixXd& basis, const VectorXd& v, double tol = 1e-8) {
    VectorXd r = v;
    for (int pass = 0; pass < 2; ++pass)
        if (basis.cols() > 0) r -= basis * (basis.transpose() * r);
    double n = r.norm();
    if (n <= tol * std::max(1.0, v.norm())) return false;
    basis.conservativeResize(basis.rows(), basis.cols() + 1);
    basis.col(basis.cols() - 1) = r / n;
    return true;
}

}  // namespace detail

/// V = span of left singular vectors of flatten(T̂_m) with singular value ≥ λ over the given
/// tensors; V′ = V plus the singular vectors of Ŝ with singular value > δ^{1/4}. Directions are
/// added in decreasing singular value order; past `max_dim` the rest are dropped with a warning.
/// An empty `s_hat` (0×0) contributes nothing.
inline SearchSubspace build_search_subspace(const std::vector<DenseTensor>& tensors, const MatrixXd& s_hat, double lambda, double delta,
                                            Index max_dim = 6) {
    if (!(lambda > 0.0) || !(delta > 0.0)) throw InvalidInput("build_search_subspace: lambda and delta must be positive");
    Index d = -1;
    for (const auto& t : tensors) {
        if (t.order() < 1) throw InvalidInput("build_search_subspace: tensors must have order at least 1");
        if (d >= 0 && t.dim() != d) throw InvalidInput("build_search_subspace: tensor dimension mismatch");
        d = t.dim();
    }
    if (s_hat.size() > 0) {
        if (s_hat.rows() != s_hat.cols() || (d >= 0 && s_hat.rows() != d)) throw InvalidInput("build_search_subspace: s_hat dimension mismatch");
        d = s_hat.rows();
    }
    if (d < 0) throw InvalidInput("build_search_subspace: no inputs");

    std::vector<detail::DirectionCandidate> tensor_dirs, s_dirs;
    for (const auto& t : tensors) {
        Eigen::JacobiSVD<MatrixXd> svd(flatten(t), Eigen::ComputeThinU);
        for (Index i = 0; i < svd.singularValues().size(); ++i) {
            double s = svd.singularValues()(i);
            if (s >= lambda) tensor_dirs.push_back({svd.matrixU().col(i), {"tensor", t.order(), s}});
        }
    }
    if (s_hat.size() > 0) {
        double cut = std::pow(delta, 0.25);
        SymEig e = sym_eig(symmetrize_matrix(s_hat));
        for (Index i = 0; i < e.values.size(); ++i)
            if (std::abs(e.values(i)) > cut) s_dirs.push_back({e.vectors.col(i), {"s_hat", 2, std::abs(e.values(i))}});
    }
    auto by_value = [](const auto& a, const auto& b) { return a.source.singular_value > b.source.singular_value; };
    std::stable_sort(tensor_dirs.begin(), tensor_dirs.end(), by_value);
    std::stable_sort(s_dirs.begin(), s_dirs.end(), by_value);

    SearchSubspace out;
    out.basis = MatrixXd(d, 0);
    bool truncated = false;
    // V first, then the Ŝ directions that extend it.
    for (const auto* group : {&tensor_dirs, &s_dirs}) {
        for (const auto& c : *group) {
            if (out.dim() >= max_dim) {
                MatrixXd probe = out.basis;
                if (detail::extend_orthonormal(probe, c.vector)) truncated = true;
                continue;
            }
            if (detail::extend_orthonormal(out.basis, c.vector)) out.sources.push_back(c.source);
        }
    }
    if (truncated) out.warnings.push_back("search subspace truncated to " + std::to_string(max_dim) + " directions");
    return out;
}

}  // namespace rgmm
