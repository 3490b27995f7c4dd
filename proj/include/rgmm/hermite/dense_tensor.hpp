#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"

namespace rgmm {

inline constexpr double kDefaultTensorGuard = 1e8;

/// Throws MemoryGuardExceeded when d^m exceeds the guard; returns d^m otherwise.
inline double check_tensor_guard(int order, Index dim, double guard = kDefaultTensorGuard) {
    double required = std::pow(static_cast<double>(dim), order);
    if (required > guard) {
        throw MemoryGuardExceeded("tensor of order " + std::to_string(order) + " over dimension " + std::to_string(dim) + " needs " +
                                      std::to_string(required) + " entries, above the guard of " + std::to_string(guard),
                                  required);
    }
    return required;
}

/// Order-m tensor over R^d stored densely; the multi-index (i_1, …, i_m) maps to
/// Σ_k i_k d^{m−k} (row-major, first index slowest).
class DenseTensor {
public:
    DenseTensor() = default;

    DenseTensor(int order, Index dim, double guard = kDefaultTensorGuard) : order_(order), dim_(dim) {
        if (order < 0) throw InvalidInput("DenseTensor: negative order");
        if (dim < 0) throw InvalidInput("DenseTensor: negative dimension");
        double required = check_tensor_guard(order, dim, guard);
        data_ = VectorXd::Zero(static_cast<Index>(std::llround(required)));
    }

    int order() const { return order_; }
    Index dim() const { return dim_; }
    Index size() const { return data_.size(); }

    VectorXd& data() { return data_; }
    const VectorXd& data() const { return data_; }

    double& operator[](Index i) { return data_(i); }
    double operator[](Index i) const { return data_(i); }

    Index linear(const std::vector<int>& idx) const {
        Index out = 0;
        for (int v : idx) out = out * dim_ + v;
        return out;
    }

    std::vector<int> multi(Index lin) const {
        std::vector<int> idx(static_cast<std::size_t>(order_));
        for (int k = order_ - 1; k >= 0; --k) {
            idx[static_cast<std::size_t>(k)] = static_cast<int>(lin % dim_);
            lin /= dim_;
        }
        return idx;
    }

    double at(const std::vector<int>& idx) const { return data_(linear(idx)); }

    double norm() const { return data_.norm(); }

    DenseTensor& operator+=(const DenseTensor& o) {
        check_same(o);
        data_ += o.data_;
        return *this;
    }
    DenseTensor& operator-=(const DenseTensor& o) {
        check_same(o);
        data_ -= o.data_;
        return *this;
    }
    DenseTensor& operator*=(double s) {
        data_ *= s;
        return *this;
    }
    friend DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
    friend DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
    friend DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

    /// Calls f(multi_index, linear_index) for every entry.
    template <typename F>
    void for_each_index(F&& f) const {
        std::vector<int> idx(static_cast<std::size_t>(order_), 0);
        for (Index lin = 0; lin < size(); ++lin) {
            f(idx, lin);
            for (int k = order_ - 1; k >= 0; --k) {
                auto& v = idx[static_cast<std::size_t>(k)];
                if (++v < dim_) break;
                v = 0;
            }
        }
    }

private:
    void check_same(const DenseTensor& o) const {
        if (o.order_ != order_ || o.dim_ != dim_) throw InvalidInput("DenseTensor: shape mismatch");
    }

    int order_ = 0;
    Index dim_ = 0;
    VectorXd data_ = VectorXd::Ones(1);
};

/// v_1 ⊗ v_2 ⊗ … ⊗ v_m.
inline DenseTensor outer_product(const std::vector<VectorXd>& vs, double guard = kDefaultTensorGuard) {
    if (vs.empty()) throw InvalidInput("outer_product: no factors");
    Index d = vs.front().size();
    DenseTensor t(static_cast<int>(vs.size()), d, guard);
    t.for_each_index([&](const std::vector<int>& idx, Index lin) {
        double v = 1.0;
        for (std::size_t k = 0; k < vs.size(); ++k) v *= vs[k](idx[k]);
        t[lin] = v;
    });
    return t;
}

inline DenseTensor outer_power(const VectorXd& v, int m, double guard = kDefaultTensorGuard) {
    if (m == 0) {
        DenseTensor t(0, v.size(), guard);
        t[0] = 1.0;
        return t;
    }
    return outer_product(std::vector<VectorXd>(static_cast<std::size_t>(m), v), guard);
}

/// Average over all m! index permutations, computed by averaging each orbit of
/// multi-indices sharing the same sorted form.
inline DenseTensor symmetrize(const DenseTensor& t) {
    DenseTensor out = t;
    if (t.order() <= 1) return out;
    std::map<std::vector<int>, std::pair<double, int>> orbit;
    t.for_each_index([&](const std::vector<int>& idx, Index lin) {
        std::vector<int> key = idx;
        std::sort(key.begin(), key.end());
        auto& slot = orbit[key];
        slot.first += t[lin];
        slot.second += 1;
    });
    out.for_each_index([&](const std::vector<int>& idx, Index lin) {
        std::vector<int> key = idx;
        std::sort(key.begin(), key.end());
        const auto& slot = orbit[key];
        out[lin] = slot.first / slot.second;
    });
    return out;
}

/// Mode-1 unfolding: row i_1, column the row-major index of (i_2, …, i_m).
inline MatrixXd flatten(const DenseTensor& t) {
    if (t.order() < 1) throw InvalidInput("flatten: order must be at least 1");
    Index d = t.dim();
    Index cols = d == 0 ? 0 : t.size() / d;
    MatrixXd out(d, cols);
    for (Index r = 0; r < d; ++r)
        for (Index c = 0; c < cols; ++c) out(r, c) = t[r * cols + c];
    return out;
}

inline DenseTensor unflatten(const MatrixXd& flat, int order, double guard = kDefaultTensorGuard) {
    DenseTensor t(order, flat.rows(), guard);
    if (flat.rows() * flat.cols() != t.size()) throw InvalidInput("unflatten: shape does not match order");
    for (Index r = 0; r < flat.rows(); ++r)
        for (Index c = 0; c < flat.cols(); ++c) t[r * flat.cols() + c] = flat(r, c);
    return t;
}

/// Ŝ(r, s) = Σ_{g,h} t(r, s, g, h) x(g) y(h).
inline MatrixXd collapse_modes(const DenseTensor& t, const VectorXd& x, const VectorXd& y) {
    if (t.order() != 4) throw InvalidInput("collapse_modes: tensor order must be 4");
    Index d = t.dim();
    if (x.size() != d || y.size() != d) throw InvalidInput("collapse_modes: vector length does not match tensor dimension");
    // Column-major view: entry ((g, h), (r, s)) holds t(r, s, g, h).
    Eigen::Map<const MatrixXd> as_matrix(t.data().data(), d * d, d * d);
    VectorXd xy(d * d);
    for (Index g = 0; g < d; ++g)
        for (Index h = 0; h < d; ++h) xy(g * d + h) = x(g) * y(h);
    VectorXd flat = as_matrix.transpose() * xy;
    MatrixXd out(d, d);
    for (Index r = 0; r < d; ++r)
        for (Index s = 0; s < d; ++s) out(r, s) = flat(r * d + s);
    return out;
}

/// Contracts the last two modes of an order-4 tensor with a d×d matrix: Σ_{g,h} t(·,·,g,h) P(g,h).
inline MatrixXd contract_last_two(const DenseTensor& t, const MatrixXd& p) {
    if (t.order() != 4) throw InvalidInput("contract_last_two: tensor order must be 4");
    Index d = t.dim();
    if (p.rows() != d || p.cols() != d) throw InvalidInput("contract_last_two: matrix shape mismatch");
    Eigen::Map<const MatrixXd> as_matrix(t.data().data(), d * d, d * d);
    VectorXd pv(d * d);
    for (Index g = 0; g < d; ++g)
        for (Index h = 0; h < d; ++h) pv(g * d + h) = p(g, h);
    VectorXd flat = as_matrix.transpose() * pv;
    MatrixXd out(d, d);
    for (Index r = 0; r < d; ++r)
        for (Index s = 0; s < d; ++s) out(r, s) = flat(r * d + s);
    return out;
}

}  // namespace rgmm
