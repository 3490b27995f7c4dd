#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/decode/candidates.hpp"
#include "rgmm/decode/subspace.hpp"

namespace rgmm {

struct EnumerationGrid {
    /// Cover resolution for means, directions and scalars (δ^{1/4} by default).
    double step = 1.0;
    /// Radius of the ball the mean cover spans (2/√α by default).
    double radius = 1.0;
    /// Scalars τ_j range over [−φ, φ].
    double phi = 0.0;
    /// Number of rank-one correction terms per candidate.
    int k_prime = 0;
};

/// Grid with step δ^{1/4}, radius 2/√α, scalar range φ.
inline EnumerationGrid make_enumeration_grid(double alpha, double delta, double phi, int k_prime) {
    if (!(alpha > 0.0 && alpha <= 1.0) || !(delta > 0.0) || !(phi >= 0.0) || k_prime < 0)
        throw InvalidInput("make_enumeration_grid: invalid parameters");
    return {std::pow(delta, 0.25), 2.0 / std::sqrt(alpha), phi, k_prime};
}

/// Points of step·ℤ^dim inside the closed ball of the given radius, in subspace coordinates.
/// Ordered by norm, ties broken lexicographically, so the origin comes first.
inline std::vector<VectorXd> cover_coordinates(Index dim, double step, double radius) {
    if (!(step > 0.0) || !(radius >= 0.0)) throw InvalidInput("cover_coordinates: step must be positive");
    std::vector<VectorXd> out;
    if (dim == 0) {
        out.emplace_back(0);
        return out;
    }
    auto r = static_cast<long>(std::floor(radius / step + 1e-9));
    double limit = radius * radius * (1.0 + 1e-12) + 1e-18;
    std::vector<long> idx(static_cast<std::size_t>(dim), -r);
    while (true) {
        VectorXd p(dim);
        for (Index i = 0; i < dim; ++i) p(i) = step * static_cast<double>(idx[static_cast<std::size_t>(i)]);
        if (p.squaredNorm() <= limit) out.push_back(p);
        Index pos = dim - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == r) idx[static_cast<std::size_t>(pos--)] = -r;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
    }
    std::stable_sort(out.begin(), out.end(), [](const VectorXd& a, const VectorXd& b) {
        double na = a.squaredNorm(), nb = b.squaredNorm();
        if (std::abs(na - nb) > 1e-12 * std::max(1.0, na)) return na < nb;
        for (Index i = 0; i < a.size(); ++i)
            if (a(i) != b(i)) return a(i) < b(i);
        return false;
    });
    return out;
}

/// 0, +step, −step, +2·step, ... within [−phi, phi].
inline std::vector<double> scalar_grid(double step, double phi) {
    std::vector<double> out{0.0};
    auto r = static_cast<long>(std::floor(phi / step + 1e-9));
    for (long i = 1; i <= r; ++i) {
        out.push_back(step * static_cast<double>(i));
        out.push_back(-step * static_cast<double>(i));
    }
    return out;
}

/// Untruncated list length N_μ·(1 + N_v·(N_τ − 1))^{k′}, where N_μ counts mean cover points,
/// N_v the nonzero ones and N_τ the scalar grid. A zero scalar makes its direction irrelevant,
/// so each correction slot contributes one "off" state plus every (direction, nonzero τ) pair.
/// Saturates at the largest double.
inline double enumeration_size(Index dim, const EnumerationGrid& g) {
    auto means = static_cast<double>(cover_coordinates(dim, g.step, g.radius).size());
    double per_slot = 1.0 + (means - 1.0) * (static_cast<double>(scalar_grid(g.step, g.phi).size()) - 1.0);
    double total = means * std::pow(per_slot, g.k_prime);
    return std::isfinite(total) ? total : std::numeric_limits<double>::max();
}

/// Emits (Uμ̂, I + Ŝ + Σ_j τ_j (Uv_j)(Uv_j)ᵀ) over the mean cover and the correction tuples,
/// with the mean index varying fastest. Stops after `budget` entries and flags truncation.
inline CandidateList enumerate_candidates(const SearchSubspace& subspace, const MatrixXd& s_hat, const EnumerationGrid& grid, std::size_t budget) {
    Index d = subspace.ambient_dim();
    if (s_hat.rows() != d || s_hat.cols() != d) throw InvalidInput("enumerate_candidates: s_hat dimension mismatch");
    CandidateList out;
    out.budget = budget;
    std::vector<VectorXd> means = cover_coordinates(subspace.dim(), grid.step, grid.radius);
    std::vector<double> taus = scalar_grid(grid.step, grid.phi);
    // Slot states: 0 = off, then (direction, nonzero τ) pairs.
    std::size_t dirs = means.size() - 1, nonzero_tau = taus.size() - 1;
    std::size_t slot_states = 1 + dirs * nonzero_tau;
    MatrixXd base = MatrixXd::Identity(d, d) + symmetrize_matrix(s_hat);
    std::vector<std::size_t> state(static_cast<std::size_t>(grid.k_prime), 0);
    while (true) {
        MatrixXd q = MatrixXd::Zero(d, d);
        for (std::size_t s : state) {
            if (s == 0) continue;
            std::size_t dir = 1 + (s - 1) / nonzero_tau;
            double tau = taus[1 + (s - 1) % nonzero_tau];
            VectorXd v = subspace.basis * means[dir];
            q += tau * v * v.transpose();
        }
        MatrixXd cov = base + q;
        for (const auto& mu : means) {
            if (out.entries.size() >= budget) {
                out.truncated = true;
                return out;
            }
            out.entries.push_back({subspace.basis * mu, cov, {{"source", "cover"}}});
        }
        std::size_t pos = 0;
        while (pos < state.size() && state[pos] + 1 == slot_states) state[pos++] = 0;
        if (pos == state.size()) break;
        ++state[pos];
    }
    return out;
}

}  // namespace rgmm
