#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "rgmm/core/model.hpp"
#include "rgmm/hermite/dense_tensor.hpp"
#include "rgmm/hermite/partitions.hpp"

namespace rgmm {

/// Coordinates for symmetric order-m tensors: one entry per sorted multi-index, scaled
/// by √(multiplicity) so the Euclidean norm of the packed vector equals the Frobenius
/// norm of the symmetric tensor.
class PackedLayout {
public:
    PackedLayout(Index dim, int order) : dim_(dim), order_(order) {
        if (order < 0 || order > kMaxPartitionOrder) throw InvalidInput("PackedLayout: order out of range");
        std::vector<int> idx(static_cast<std::size_t>(order), 0);
        build(idx, 0, 0);
        const auto& parts = pair_partitions(order);
        for (const auto& key : keys_) {
            std::vector<Term> terms;
            for (const auto& p : parts) {
                bool alive = true;
                for (const auto& [a, b] : p.pairs) alive = alive && key[static_cast<std::size_t>(a)] == key[static_cast<std::size_t>(b)];
                if (!alive) continue;
                Term t;
                t.sign = (p.pairs.size() % 2 == 0) ? 1.0 : -1.0;
                for (int s : p.singles) t.coords.push_back(key[static_cast<std::size_t>(s)]);
                terms.push_back(std::move(t));
            }
            point_terms_.push_back(std::move(terms));
        }
    }

    Index dim() const { return dim_; }
    int order() const { return order_; }
    Index size() const { return static_cast<Index>(keys_.size()); }
    const std::vector<std::vector<int>>& keys() const { return keys_; }
    const VectorXd& root_multiplicity() const { return root_mult_; }

    VectorXd pack(const DenseTensor& t) const {
        check(t);
        VectorXd out(size());
        for (Index i = 0; i < size(); ++i) out(i) = root_mult_(i) * t.at(keys_[static_cast<std::size_t>(i)]);
        return out;
    }

    /// Rebuilds the dense symmetric tensor (entries of t that differ within an orbit are averaged first).
    DenseTensor unpack(const VectorXd& packed, double guard = kDefaultTensorGuard) const {
        if (packed.size() != size()) throw InvalidInput("PackedLayout::unpack: length mismatch");
        std::map<std::vector<int>, double> lookup;
        for (Index i = 0; i < size(); ++i) lookup[keys_[static_cast<std::size_t>(i)]] = packed(i) / root_mult_(i);
        DenseTensor t(order_, dim_, guard);
        t.for_each_index([&](const std::vector<int>& idx, Index lin) {
            std::vector<int> key = idx;
            std::sort(key.begin(), key.end());
            t[lin] = lookup[key];
        });
        return t;
    }

    /// Packed h_m(x).
    VectorXd hermite_of_point(const VectorXd& x) const {
        VectorXd out(size());
        for (Index i = 0; i < size(); ++i) {
            double v = 0.0;
            for (const auto& t : point_terms_[static_cast<std::size_t>(i)]) {
                double term = t.sign;
                for (int c : t.coords) term *= x(c);
                v += term;
            }
            out(i) = root_mult_(i) * v;
        }
        return out;
    }

    /// Packed h_m for every row of `points` (n × size()).
    MatrixXd hermite_rows(const MatrixXd& points) const {
        if (points.cols() != dim_) throw InvalidInput("PackedLayout::hermite_rows: dimension mismatch");
        MatrixXd out(points.rows(), size());
        for (Index i = 0; i < size(); ++i) {
            VectorXd col = VectorXd::Zero(points.rows());
            for (const auto& t : point_terms_[static_cast<std::size_t>(i)]) {
                VectorXd term = VectorXd::Constant(points.rows(), t.sign);
                for (int c : t.coords) term.array() *= points.col(c).array();
                col += term;
            }
            out.col(i) = root_mult_(i) * col;
        }
        return out;
    }

    /// Packed E h_m under N(μ, I + S).
    VectorXd expected_hermite(const VectorXd& mu, const MatrixXd& s) const {
        VectorXd out(size());
        for (Index i = 0; i < size(); ++i) {
            out(i) = root_mult_(i) * partition_sum(keys_[static_cast<std::size_t>(i)], [&](int a) { return mu(a); },
                                                   [&](int a, int b) { return s(a, b); });
        }
        return out;
    }

    VectorXd expected_hermite(const GaussianComponent& c) const {
        return expected_hermite(c.mean, c.cov - MatrixXd::Identity(c.dim(), c.dim()));
    }

    /// Shared layout for (dim, order), built once.
    static std::shared_ptr<const PackedLayout> get(Index dim, int order) {
        static std::mutex mu;
        static std::map<std::pair<Index, int>, std::shared_ptr<const PackedLayout>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto& slot = cache[{dim, order}];
        if (!slot) slot = std::make_shared<const PackedLayout>(dim, order);
        return slot;
    }

private:
    struct Term {
        double sign = 1.0;
        std::vector<int> coords;
    };

    void build(std::vector<int>& idx, int pos, int start) {
        if (pos == order_) {
            keys_.push_back(idx);
            double mult = factorial_int(order_);
            int run = 1;
            for (int k = 1; k <= order_; ++k) {
                if (k < order_ && idx[static_cast<std::size_t>(k)] == idx[static_cast<std::size_t>(k - 1)]) {
                    ++run;
                } else {
                    mult /= factorial_int(run);
                    run = 1;
                }
            }
            root_mult_.conservativeResize(root_mult_.size() + 1);
            root_mult_(root_mult_.size() - 1) = std::sqrt(mult);
            return;
        }
        for (int v = start; v < dim_; ++v) {
            idx[static_cast<std::size_t>(pos)] = v;
            build(idx, pos + 1, v);
        }
    }

    static double factorial_int(int n) {
        double out = 1.0;
        for (int i = 2; i <= n; ++i) out *= i;
        return out;
    }

    void check(const DenseTensor& t) const {
        if (t.order() != order_ || t.dim() != dim_) throw InvalidInput("PackedLayout: tensor shape mismatch");
    }

    Index dim_;
    int order_;
    std::vector<std::vector<int>> keys_;
    VectorXd root_mult_;
    std::vector<std::vector<Term>> point_terms_;
};

}  // namespace rgmm
