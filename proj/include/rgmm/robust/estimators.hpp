#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/hermite/dense_tensor.hpp"
#include "rgmm/hermite/packing.hpp"
#include "rgmm/robust/filter.hpp"

namespace rgmm {

struct MeanEstimate {
    VectorXd mean;
    FilterReport report;
};

inline MeanEstimate robust_mean_filter(const MatrixXd& points, double eps, Rng& rng, const FilterOptions& opt = {}) {
    FilterResult r = spectral_filter(points, eps, rng, opt);
    return {r.mean, r.report};
}

/// Packs symmetric d×d matrices: diagonal entries, then √2 times each off-diagonal entry.
inline VectorXd pack_symmetric(const MatrixXd& s) {
    Index d = s.rows();
    VectorXd out(d * (d + 1) / 2);
    Index k = 0;
    for (Index i = 0; i < d; ++i) out(k++) = s(i, i);
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j) out(k++) = std::sqrt(2.0) * s(i, j);
    return out;
}

inline MatrixXd unpack_symmetric(const VectorXd& v, Index d) {
    if (v.size() != d * (d + 1) / 2) throw InvalidInput("unpack_symmetric: length mismatch");
    MatrixXd s(d, d);
    Index k = 0;
    for (Index i = 0; i < d; ++i) s(i, i) = v(k++);
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j) s(i, j) = s(j, i) = v(k++) / std::sqrt(2.0);
    return s;
}

inline MatrixXd packed_outer_rows(const MatrixXd& centered) {
    Index n = centered.rows(), d = centered.cols();
    MatrixXd out(n, d * (d + 1) / 2);
    Index k = 0;
    for (Index i = 0; i < d; ++i) out.col(k++) = centered.col(i).array().square().matrix();
    for (Index i = 0; i < d; ++i)
        for (Index j = i + 1; j < d; ++j) out.col(k++) = std::sqrt(2.0) * centered.col(i).cwiseProduct(centered.col(j));
    return out;
}

struct TensorEstimate {
    /// Packed symmetric coordinates (see PackedLayout).
    VectorXd packed;
    FilterReport report;
};

/// Filtered mean of packed h_m(x_i). Unless set, the filter's variance floor is m!·s^m with s
/// the largest eigenvalue (at least 1) of a robust covariance estimate; under N(0, I) every
/// packed coordinate of h_m has variance m!.
inline TensorEstimate robust_tensor_mean_packed(const MatrixXd& points, int m, double eps, Rng& rng, const FilterOptions& opt = {}) {
    auto layout = PackedLayout::get(points.cols(), m);
    FilterOptions o = opt;
    if (o.variance_floor == 0.0 && eps > 0.0 && points.rows() > 1) {
        FilterResult mean = spectral_filter(points, eps, rng, opt);
        MatrixXd centered = points.rowwise() - mean.mean.transpose();
        FilterResult second = spectral_filter(packed_outer_rows(centered), eps, rng, opt);
        double s = std::max(1.0, sym_eig(unpack_symmetric(second.mean, points.cols())).values.maxCoeff());
        double fact = 1.0;
        for (int i = 2; i <= m; ++i) fact *= i;
        o.variance_floor = fact * std::pow(s, m);
    }
    FilterResult r = spectral_filter(layout->hermite_rows(points), eps, rng, o);
    return {r.mean, r.report};
}

inline DenseTensor robust_tensor_mean(const MatrixXd& points, int m, double eps, Rng& rng, const FilterOptions& opt = {},
                                      double guard = kDefaultTensorGuard) {
    check_tensor_guard(m, points.cols(), guard);
    auto layout = PackedLayout::get(points.cols(), m);
    return layout->unpack(robust_tensor_mean_packed(points, m, eps, rng, opt).packed, guard);
}

struct CovEstimate {
    MatrixXd cov;
    VectorXd mean;
    FilterReport mean_report;
    FilterReport cov_report;
};

/// Robust mean via the spectral filter, then the same filter over packed (x − μ̂)(x − μ̂)ᵀ.
inline CovEstimate robust_cov_estimate(const MatrixXd& points, double eps, Rng& rng, const FilterOptions& opt = {}) {
    if (points.rows() == 0) throw InvalidInput("robust_cov_estimate: empty point set");
    CovEstimate out;
    FilterResult mean = spectral_filter(points, eps, rng, opt);
    out.mean = mean.mean;
    out.mean_report = mean.report;
    MatrixXd centered = points.rowwise() - out.mean.transpose();
    FilterResult second = spectral_filter(packed_outer_rows(centered), eps, rng, opt);
    out.cov = psd_floor(unpack_symmetric(second.mean, points.cols()), 0.0);
    out.cov_report = second.report;
    return out;
}

struct SecondMomentEstimate {
    MatrixXd m2;
    std::vector<Index> kept;
    int iterations = 0;
    std::vector<std::string> warnings;
};

/// Trimmed second moment E[x xᵀ]: repeatedly drop the ⌈η n⌉ points with the largest
/// leverage xᵀ M^† x under the current estimate until the kept set stops changing.
/// Equal leverages are broken toward keeping the lower index.
inline SecondMomentEstimate robust_second_moment(const MatrixXd& points, double eta, int max_iterations = 50) {
    Index n = points.rows();
    if (n == 0) throw InvalidInput("robust_second_moment: empty point set");
    if (!(eta >= 0.0 && eta < 0.5)) throw InvalidInput("robust_second_moment: eta must lie in [0, 1/2)");
    SecondMomentEstimate out;
    if (eta > 0.01) out.warnings.push_back("eta above 1/100; trimming applied with relaxed guarantee");
    auto drop = static_cast<Index>(std::ceil(eta * static_cast<double>(n) - 1e-12));
    drop = std::min(drop, n - 1);
    std::vector<Index> kept(static_cast<std::size_t>(n));
    std::iota(kept.begin(), kept.end(), Index{0});
    auto moment_of = [&](const std::vector<Index>& idx) {
        MatrixXd sub = select_rows(points, idx);
        return MatrixXd(symmetrize_matrix(sub.transpose() * sub / static_cast<double>(idx.size())));
    };
    out.m2 = moment_of(kept);
    if (drop == 0) {
        out.kept = kept;
        return out;
    }
    for (int it = 0; it < max_iterations; ++it) {
        MatrixXd pinv = pinv_sym(out.m2, 1e-10);
        VectorXd lev = ((points * pinv).cwiseProduct(points)).rowwise().sum();
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return lev(a) < lev(b); });
        std::vector<Index> next(order.begin(), order.end() - drop);
        std::sort(next.begin(), next.end());
        out.iterations = it + 1;
        bool same = next == kept;
        kept = std::move(next);
        out.m2 = moment_of(kept);
        if (same) break;
    }
    out.kept = kept;
    return out;
}

struct IsotropizeResult {
    IsotropizingTransform transform;
    MatrixXd transformed;
    CovEstimate estimate;
};

/// Robust mean/covariance, then y ↦ Λ̂^{−1/2} Ûᵀ (x − μ̂) over the numerical range of Σ̂.
inline IsotropizeResult isotropize(const MatrixXd& points, double eps, Rng& rng, const FilterOptions& opt = {}, double rank_tol = 1e-8) {
    IsotropizeResult out;
    out.estimate = robust_cov_estimate(points, eps, rng, opt);
    SymEig e = sym_eig(out.estimate.cov);
    double cut = rank_cutoff(e.values, rank_tol);
    std::vector<Index> keep;
    for (Index i = e.values.size() - 1; i >= 0; --i)
        if (e.values(i) > cut && e.values(i) > 0.0) keep.push_back(i);
    if (keep.empty()) throw InvalidInput("isotropize: estimated covariance has rank zero");
    auto r = static_cast<Index>(keep.size());
    IsotropizingTransform& t = out.transform;
    t.shift = out.estimate.mean;
    t.basis.resize(points.cols(), r);
    t.scale.resize(r);
    for (Index j = 0; j < r; ++j) {
        t.basis.col(j) = e.vectors.col(keep[static_cast<std::size_t>(j)]);
        t.scale(j) = 1.0 / std::sqrt(e.values(keep[static_cast<std::size_t>(j)]));
    }
    t.rank = static_cast<int>(r);
    out.transformed = t.apply(points);
    return out;
}

}  // namespace rgmm
