#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "rgmm/core/error.hpp"

namespace rgmm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd symmetrize_matrix(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Eigenvalues in ascending order with matching eigenvector columns.
struct SymEig {
    VectorXd values;
    MatrixXd vectors;
};

inline SymEig sym_eig(const MatrixXd& m) {
    if (m.rows() != m.cols()) throw InvalidInput("sym_eig: matrix is not square");
    if (m.rows() == 0) return {VectorXd(0), MatrixXd(0, 0)};
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrize_matrix(m));
    if (solver.info() != Eigen::Success) throw AlgorithmFailure("sym_eig: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Rebuilds V diag(f(λ)) Vᵀ.
template <typename F>
MatrixXd spectral_map(const SymEig& e, F&& f) {
    VectorXd mapped(e.values.size());
    for (Index i = 0; i < e.values.size(); ++i) mapped(i) = f(e.values(i));
    return e.vectors * mapped.asDiagonal() * e.vectors.transpose();
}

/// Threshold below which an eigenvalue counts as zero: rel_tol times the largest magnitude.
inline double rank_cutoff(const VectorXd& values, double rel_tol) {
    if (values.size() == 0) return 0.0;
    return rel_tol * std::max(values.cwiseAbs().maxCoeff(), 0.0);
}

inline MatrixXd pinv_sym(const MatrixXd& m, double rel_tol = 1e-10) {
    SymEig e = sym_eig(m);
    double cut = rank_cutoff(e.values, rel_tol);
    return spectral_map(e, [cut](double v) { return v > cut ? 1.0 / v : 0.0; });
}

/// Σ^{†/2} for a PSD matrix.
inline MatrixXd pinv_sqrt_sym(const MatrixXd& m, double rel_tol = 1e-10) {
    SymEig e = sym_eig(m);
    double cut = rank_cutoff(e.values, rel_tol);
    return spectral_map(e, [cut](double v) { return v > cut ? 1.0 / std::sqrt(v) : 0.0; });
}

inline MatrixXd sqrt_psd(const MatrixXd& m) {
    SymEig e = sym_eig(m);
    return spectral_map(e, [](double v) { return v > 0.0 ? std::sqrt(v) : 0.0; });
}

/// Symmetrizes and raises every eigenvalue to at least `floor`.
inline MatrixXd psd_floor(const MatrixXd& m, double floor = 0.0) {
    SymEig e = sym_eig(m);
    return symmetrize_matrix(spectral_map(e, [floor](double v) { return std::max(v, floor); }));
}

inline double min_eigenvalue(const MatrixXd& m) {
    if (m.rows() == 0) return 0.0;
    return sym_eig(m).values(0);
}

inline int numeric_rank(const MatrixXd& psd, double rel_tol) {
    SymEig e = sym_eig(psd);
    double cut = rank_cutoff(e.values, rel_tol);
    int r = 0;
    for (Index i = 0; i < e.values.size(); ++i) r += e.values(i) > cut ? 1 : 0;
    return r;
}

/// Orthonormal basis for the column span of `cols`; directions with singular value
/// below rel_tol times the largest are dropped.
inline MatrixXd orthonormal_span(const MatrixXd& cols, double rel_tol = 1e-9) {
    if (cols.cols() == 0 || cols.rows() == 0) return MatrixXd(cols.rows(), 0);
    Eigen::JacobiSVD<MatrixXd> svd(cols, Eigen::ComputeThinU);
    const VectorXd& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0) return MatrixXd(cols.rows(), 0);
    Index r = 0;
    while (r < s.size() && s(r) > rel_tol * s(0)) ++r;
    return svd.matrixU().leftCols(r);
}

/// Row-wise mean of an n×d point matrix.
inline VectorXd row_mean(const MatrixXd& points) {
    if (points.rows() == 0) throw InvalidInput("row_mean: empty point set");
    return points.colwise().mean().transpose();
}

inline MatrixXd empirical_covariance(const MatrixXd& points) {
    VectorXd mu = row_mean(points);
    MatrixXd centered = points.rowwise() - mu.transpose();
    return symmetrize_matrix(centered.transpose() * centered / static_cast<double>(points.rows()));
}

inline MatrixXd select_rows(const MatrixXd& points, const std::vector<Index>& rows) {
    MatrixXd out(static_cast<Index>(rows.size()), points.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = points.row(rows[i]);
    return out;
}

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw InvalidInput("median_of: empty input");
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

inline double quantile_of(std::vector<double> v, double q) {
    if (v.empty()) throw InvalidInput("quantile_of: empty input");
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace rgmm
