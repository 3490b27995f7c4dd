#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/density.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/decode/low_dim.hpp"

namespace rgmm {

/// Pairwise co-membership matrix M(i, j) used by the rounding step, with the target cluster
/// fraction α and the slack allowed in the invariant checks.
struct MomentMatrix {
    MatrixXd entries;
    double alpha = 0.0;
    double slack = 0.0;

    Index size() const { return entries.rows(); }
};

/// Default invariant slack 0.05·α².
inline double default_moment_slack(double alpha) { return 0.05 * alpha * alpha; }

struct MomentInvariantReport {
    bool ok = true;
    /// Largest entry outside [0, α], as a positive excess.
    double entry_excess = 0.0;
    /// Largest |M(i, i) − α|.
    double diagonal_deviation = 0.0;
    /// Smallest row mean.
    double min_row_mean = 0.0;
    std::vector<std::string> violations;
};

/// Checks 0 ≤ M(i, j) ≤ α + slack, |M(i, i) − α| ≤ slack and per-row mean ≥ α² − slack.
inline MomentInvariantReport check_moment_matrix(const MomentMatrix& m) {
    MomentInvariantReport r;
    Index n = m.size();
    if (m.entries.cols() != n) throw InvalidInput("check_moment_matrix: matrix is not square");
    if (n == 0) return r;
    double lo = m.entries.minCoeff(), hi = m.entries.maxCoeff();
    r.entry_excess = std::max({0.0, -lo, hi - m.alpha});
    r.diagonal_deviation = (m.entries.diagonal().array() - m.alpha).abs().maxCoeff();
    r.min_row_mean = m.entries.rowwise().mean().minCoeff();
    auto fail = [&](const std::string& what, double value) {
        std::ostringstream os;
        os << what << " (" << value << ")";
        r.violations.push_back(os.str());
        r.ok = false;
    };
    if (lo < -m.slack || hi > m.alpha + m.slack) fail("entry outside [0, alpha + slack]", r.entry_excess);
    if (r.diagonal_deviation > m.slack) fail("diagonal differs from alpha by more than slack", r.diagonal_deviation);
    if (r.min_row_mean < m.alpha * m.alpha - m.slack) fail("row mean below alpha^2 - slack", r.min_row_mean);
    return r;
}

/// Throws InvalidInput naming every violated invariant.
inline void require_moment_invariants(const MomentMatrix& m) {
    auto r = check_moment_matrix(m);
    if (r.ok) return;
    std::string msg = "moment matrix rejected:";
    for (const auto& v : r.violations) msg += " " + v + ";";
    throw InvalidInput(msg);
}

enum class OracleMode { ground_truth, affinity };

inline std::string to_string(OracleMode m) { return m == OracleMode::ground_truth ? "ground-truth" : "affinity"; }

inline OracleMode parse_oracle_mode(const std::string& s) {
    if (s == "ground-truth") return OracleMode::ground_truth;
    if (s == "affinity") return OracleMode::affinity;
    throw InvalidInput("unknown oracle mode: " + s);
}

struct OracleParams {
    double alpha = 0.0;
    /// Invariant slack; negative selects default_moment_slack(alpha).
    double slack = -1.0;
    /// Affinity mode: number of components fitted to the supplied points.
    int components = 2;
    /// Affinity mode: settings of the fit; min_weight ≤ 0 selects α/2.
    LowDimOptions fit;
    /// Dense n×n matrices above this many points are refused.
    Index max_points = 6000;
};

/// Ground-truth mode: M(i, j) = α·𝟙[same label]; points labelled −1 are first given the label of
/// the nearest labelled-component mean.
/// Affinity mode: a Gaussian mixture with `components` terms is fitted to the (already whitened)
/// points, each point gets its vector r_i of posterior memberships, which depend on the point only
/// through its Mahalanobis distances to the fitted centres, and M(i, j) = α·⟨r_i, r_j⟩/(‖r_i‖‖r_j‖).
/// Fitted components lighter than the fit's min_weight are discarded before computing posteriors.
/// A row with mean below α² is rescaled to α·min(1, c·cos) with the smallest c restoring it.
/// Either way the result must pass check_moment_matrix or InvalidInput is thrown.
inline MomentMatrix moment_matrix_oracle(const MatrixXd& points, OracleMode mode, const OracleParams& params, Rng& rng,
                                         const std::vector<int>* labels = nullptr) {
    Index n = points.rows();
    if (!(params.alpha > 0.0 && params.alpha <= 1.0)) throw InvalidInput("moment_matrix_oracle: alpha must lie in (0, 1]");
    if (n > params.max_points)
        throw MemoryGuardExceeded("moment_matrix_oracle: too many points for a dense moment matrix", static_cast<double>(n) * static_cast<double>(n));
    MomentMatrix m;
    m.alpha = params.alpha;
    m.slack = params.slack >= 0.0 ? params.slack : default_moment_slack(params.alpha);
    if (mode == OracleMode::ground_truth) {
        if (labels == nullptr || static_cast<Index>(labels->size()) != n)
            throw InvalidInput("moment_matrix_oracle: ground-truth mode requires one label per point");
        std::vector<int> lab = *labels;
        int top = *std::max_element(lab.begin(), lab.end());
        if (top < 0) throw InvalidInput("moment_matrix_oracle: no labelled points");
        std::vector<VectorXd> sums(static_cast<std::size_t>(top + 1), VectorXd::Zero(points.cols()));
        std::vector<double> counts(static_cast<std::size_t>(top + 1), 0.0);
        for (Index i = 0; i < n; ++i) {
            if (lab[static_cast<std::size_t>(i)] < 0) continue;
            auto c = static_cast<std::size_t>(lab[static_cast<std::size_t>(i)]);
            sums[c] += points.row(i).transpose();
            counts[c] += 1.0;
        }
        for (Index i = 0; i < n; ++i) {
            if (lab[static_cast<std::size_t>(i)] >= 0) continue;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < sums.size(); ++c) {
                if (counts[c] == 0.0) continue;
                double dd = (points.row(i).transpose() - sums[c] / counts[c]).squaredNorm();
                if (dd < best) {
                    best = dd;
                    lab[static_cast<std::size_t>(i)] = static_cast<int>(c);
                }
            }
        }
        m.entries.resize(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j) m.entries(i, j) = lab[static_cast<std::size_t>(i)] == lab[static_cast<std::size_t>(j)] ? m.alpha : 0.0;
    } else {
        if (params.components < 1) throw InvalidInput("moment_matrix_oracle: components must be positive");
        LowDimOptions fit = params.fit;
        fit.max_dim = std::max(fit.max_dim, points.cols());
        if (!(fit.min_weight > 0.0)) fit.min_weight = 0.5 * m.alpha;
        GaussianMixture g = low_dim_learn(points, params.components, rng, fit).mixtures.front();
        GaussianMixture heavy;
        for (std::size_t c = 0; c < g.k(); ++c)
            if (g.weights[c] >= fit.min_weight) {
                heavy.weights.push_back(g.weights[c]);
                heavy.components.push_back(g.components[c]);
            }
        if (heavy.k() > 0) {
            normalize_weights(heavy.weights);
            g = std::move(heavy);
        }
        MatrixXd parts = DensityEvaluator(g).component_rows(points);
        MatrixXd r = (parts.colwise() - parts.rowwise().maxCoeff()).array().exp().matrix();
        r = r.rowwise().normalized();
        MatrixXd cosine = (r * r.transpose()).cwiseMin(1.0);
        cosine.diagonal().setOnes();
        // Rows whose mean falls short of α are rescaled to min(1, c·cos) with the smallest such c.
        for (Index i = 0; i < n; ++i) {
            if (cosine.row(i).mean() >= m.alpha) continue;
            auto mass = [&](double c) { return (c * cosine.row(i).array()).min(1.0).mean(); };
            double lo = 1.0, hi = 2.0;
            while (mass(hi) < m.alpha && hi < 1e12) hi *= 2.0;
            for (int it = 0; it < 50; ++it) {
                double mid = 0.5 * (lo + hi);
                (mass(mid) < m.alpha ? lo : hi) = mid;
            }
            cosine.row(i) = (hi * cosine.row(i).array()).min(1.0).matrix();
        }
        m.entries = m.alpha * cosine;
    }
    require_moment_invariants(m);
    return m;
}

}  // namespace rgmm
