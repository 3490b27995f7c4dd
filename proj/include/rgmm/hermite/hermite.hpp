#pragma once

#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/hermite/dense_tensor.hpp"
#include "rgmm/hermite/partitions.hpp"

namespace rgmm {

/// h_m(x): partition sum with −I on pairs and x on singletons.
inline DenseTensor hermite_tensor_of_point(const VectorXd& x, int m, double guard = kDefaultTensorGuard) {
    if (m < 0 || m > kMaxPartitionOrder) throw InvalidInput("hermite_tensor_of_point: order out of range");
    DenseTensor t(m, x.size(), guard);
    t.for_each_index([&](const std::vector<int>& idx, Index lin) {
        t[lin] = partition_sum(idx, [&](int i) { return x(i); }, [](int a, int b) { return a == b ? -1.0 : 0.0; });
    });
    return t;
}

/// E h_m(X) for X ~ N(μ, Σ): partition sum with (Σ − I) on pairs and μ on singletons.
inline DenseTensor expected_hermite(const GaussianComponent& c, int m, double guard = kDefaultTensorGuard) {
    if (m < 0 || m > kMaxPartitionOrder) throw InvalidInput("expected_hermite: order out of range");
    MatrixXd s = c.cov - MatrixXd::Identity(c.dim(), c.dim());
    DenseTensor t(m, c.dim(), guard);
    t.for_each_index([&](const std::vector<int>& idx, Index lin) {
        t[lin] = partition_sum(idx, [&](int i) { return c.mean(i); }, [&](int a, int b) { return s(a, b); });
    });
    return t;
}

inline DenseTensor expected_hermite(const GaussianMixture& mix, int m, double guard = kDefaultTensorGuard) {
    mix.validate();
    DenseTensor total(m, mix.dim(), guard);
    for (std::size_t i = 0; i < mix.k(); ++i) total += mix.weights[i] * expected_hermite(mix.components[i], m, guard);
    return total;
}

/// Empirical E x^{⊗m} over the rows of `points`.
inline DenseTensor raw_moment_tensor(const MatrixXd& points, int m, double guard = kDefaultTensorGuard) {
    DenseTensor t(m, points.cols(), guard);
    if (points.rows() == 0) throw InvalidInput("raw_moment_tensor: empty point set");
    for (Index r = 0; r < points.rows(); ++r) t += outer_power(points.row(r).transpose(), m, guard);
    t *= 1.0 / static_cast<double>(points.rows());
    return t;
}

namespace detail {

inline std::vector<DenseTensor> change_moment_basis(const std::vector<DenseTensor>& in, double pair_sign) {
    if (in.empty()) throw InvalidInput("hermite_raw_roundtrip: empty moment list");
    Index d = in.front().dim();
    for (std::size_t m = 0; m < in.size(); ++m) {
        if (in[m].order() != static_cast<int>(m) || in[m].dim() != d) {
            throw InvalidInput("hermite_raw_roundtrip: moment list must contain orders 0..m in sequence over one dimension");
        }
    }
    if (in.size() - 1 > static_cast<std::size_t>(kMaxPartitionOrder)) throw InvalidInput("hermite_raw_roundtrip: order too large");
    std::vector<DenseTensor> out;
    for (std::size_t m = 0; m < in.size(); ++m) {
        DenseTensor t(static_cast<int>(m), d);
        t.for_each_index([&](const std::vector<int>& idx, Index lin) {
            double total = 0.0;
            for (const auto& p : pair_partitions(static_cast<int>(m))) {
                double coeff = 1.0;
                for (const auto& [a, b] : p.pairs) {
                    if (idx[static_cast<std::size_t>(a)] != idx[static_cast<std::size_t>(b)]) {
                        coeff = 0.0;
                        break;
                    }
                    coeff *= pair_sign;
                }
                if (coeff == 0.0) continue;
                std::vector<int> sub;
                for (int s : p.singles) sub.push_back(idx[static_cast<std::size_t>(s)]);
                total += coeff * in[sub.size()].at(sub);
            }
            t[lin] = total;
        });
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace detail

/// Raw moment tensors R_0..R_m to Hermite moment tensors H_0..H_m
/// (H_m = Σ_P Π_pairs(−δ) R_{|singles|}).
inline std::vector<DenseTensor> raw_to_hermite(const std::vector<DenseTensor>& raw) {
    return detail::change_moment_basis(raw, -1.0);
}

/// Inverse of raw_to_hermite (R_m = Σ_P Π_pairs(+δ) H_{|singles|}).
inline std::vector<DenseTensor> hermite_to_raw(const std::vector<DenseTensor>& hermite) {
    return detail::change_moment_basis(hermite, 1.0);
}

}  // namespace rgmm
