#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/decode/candidates.hpp"
#include "rgmm/decode/collapse.hpp"
#include "rgmm/decode/enumerate.hpp"
#include "rgmm/decode/low_dim.hpp"
#include "rgmm/decode/moment_fit.hpp"
#include "rgmm/decode/subspace.hpp"
#include "rgmm/hermite/packing.hpp"
#include "rgmm/robust/estimators.hpp"

namespace rgmm {

enum class DecodeMode { cover, efficient };

inline std::string to_string(DecodeMode m) { return m == DecodeMode::cover ? "cover" : "efficient"; }

inline DecodeMode parse_decode_mode(const std::string& s) {
    if (s == "cover") return DecodeMode::cover;
    if (s == "efficient") return DecodeMode::efficient;
    throw InvalidInput("unknown decode mode: " + s);
}

/// G(k) = 1/(C^{k+1}·(k+1)!).
inline double decode_exponent(int k, double c) {
    double f = 1.0;
    for (int i = 2; i <= k + 1; ++i) f *= i;
    return 1.0 / (std::pow(c, k + 1) * f);
}

/// Tensor accuracy target (2k)^{4k}·(C·k·(1/α + Δ))^{4k}·√ε. Far above 1 at any practical ε;
/// reported for reference.
inline double formula_tensor_accuracy(int k, double alpha, double big_delta, double eps, double c) {
    return std::pow(2.0 * k, 4 * k) * std::pow(c * k * (1.0 / alpha + big_delta), 4 * k) * std::sqrt(eps);
}

/// Repetition count 100·log k·(η/(k⁵(Δ⁴ + 1/α⁴)))^{−4k}.
inline double formula_collapse_repetitions(int k, double eta, double big_delta, double alpha) {
    double base = eta / (std::pow(double(k), 5) * (std::pow(big_delta, 4) + 1.0 / std::pow(alpha, 4)));
    return 100.0 * std::log(double(k)) * std::pow(base, -4.0 * k);
}

struct DecodeOptions {
    int m_max = 4;
    /// Upper bound Δ on ‖Σ_i − I‖_F assumed for the target components.
    double big_delta = 2.0;
    /// Universal constant C inside D, G(k) and δ.
    double c = 1.0;
    /// Tensor accuracy η; 0 derives max(eta_floor, √ε).
    double eta = 0.0;
    double eta_floor = 0.05;
    /// Number of collapse draws ℓ′ (the formula value is far larger).
    int collapse_budget = 20;
    /// Candidate cap per collapse draw for the cover enumeration.
    std::size_t enumeration_budget = 64;
    /// Correction terms k′ per enumerated candidate.
    int k_prime = 1;
    Index max_subspace_dim = 6;
    /// Cover mode: moment-fit refinements, at most one per collapse draw.
    int fit_restarts = 50;
    int fit_max_evaluations = 1500;
    /// Efficient mode: collapse draws that run the low-dimensional learner.
    int efficient_repetitions = 3;
    /// Fitted mixtures kept per learner run.
    int low_dim_keep = 2;
    LowDimOptions low_dim;
    FilterOptions filter;
};

struct DecodeParameters {
    double eta = 0.0;
    double lambda = 0.0;
    double delta = 0.0;
    double phi = 0.0;
    double collapse_bound = 0.0;
    double formula_repetitions = 0.0;
    int repetitions = 0;
};

struct DecodeResult {
    CandidateList list;
    DecodeParameters params;
    std::vector<Index> subspace_dims;
    std::vector<std::string> warnings;
};

/// Lifts a subspace fit: μ = Uμ̂, Σ = UΣ̂Uᵀ + (I + Ŝ) − P̂(I + Ŝ)P̂ with P̂ = UUᵀ, symmetrized and
/// floored at 0. Emits one tuple covering all components.
inline CandidateList assemble_candidates(const SearchSubspace& subspace, const MatrixXd& s_hat, const GaussianMixture& low_dim) {
    Index d = subspace.ambient_dim();
    if (s_hat.rows() != d || s_hat.cols() != d) throw InvalidInput("assemble_candidates: s_hat dimension mismatch");
    if (low_dim.dim() != subspace.dim()) throw InvalidInput("assemble_candidates: low-dimensional fit does not match the subspace");
    const MatrixXd& u = subspace.basis;
    MatrixXd p = subspace.projector();
    MatrixXd base = MatrixXd::Identity(d, d) + s_hat;
    MatrixXd outside = base - p * base * p;
    CandidateList out;
    std::vector<std::size_t> tuple;
    for (std::size_t i = 0; i < low_dim.k(); ++i) {
        const auto& c = low_dim.components[i];
        MatrixXd cov = psd_floor(symmetrize_matrix(u * c.cov * u.transpose() + outside), 0.0);
        tuple.push_back(out.entries.size());
        out.entries.push_back({u * c.mean, cov, {{"source", "low-dim"}, {"weight", std::to_string(low_dim.weights[i])}}});
    }
    out.tuples.push_back(tuple);
    out.budget = out.entries.size();
    return out;
}

namespace detail {

inline void append_list(CandidateList& into, const CandidateList& from, const std::string& draw) {
    std::size_t offset = into.entries.size();
    for (auto c : from.entries) {
        c.tags["draw"] = draw;
        into.entries.push_back(std::move(c));
    }
    for (auto t : from.tuples) {
        for (auto& i : t) i += offset;
        into.tuples.push_back(std::move(t));
    }
    into.truncated = into.truncated || from.truncated;
}

inline VectorXd random_point_in_subspace_ball(const SearchSubspace& s, double radius, Rng& rng) {
    if (s.dim() == 0) return VectorXd::Zero(s.ambient_dim());
    VectorXd dir = random_unit_vector(s.dim(), rng);
    double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(s.dim()));
    return s.basis * (r * dir);
}

}  // namespace detail

/// Candidate generation from moment tensor estimates T̂_1..T̂_M (tensors[m − 1] has order m).
/// Cover mode enumerates the δ^{1/4}-cover per collapse draw, truncated to the enumeration
/// budget, and adds moment-fit refinements; efficient mode runs the low-dimensional learner on
/// `fresh_points` projected to each search subspace. `trivial` is placed first when given.
inline DecodeResult decode_from_tensors(const std::vector<DenseTensor>& tensors, int k, double alpha, double eps, DecodeMode mode,
                                        const DecodeOptions& opt, Rng& rng, const MatrixXd* fresh_points = nullptr,
                                        const std::optional<Candidate>& trivial = std::nullopt) {
    if (k < 1) throw InvalidInput("decode_from_tensors: k must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("decode_from_tensors: alpha must lie in (0, 1]");
    if (tensors.size() < 4) throw InvalidInput("decode_from_tensors: need tensors of orders 1 through 4");
    for (std::size_t i = 0; i < tensors.size(); ++i)
        if (tensors[i].order() != static_cast<int>(i) + 1) throw InvalidInput("decode_from_tensors: tensors must be ordered 1..M");
    if (mode == DecodeMode::efficient && fresh_points == nullptr) throw InvalidInput("list_decode: efficient mode requires a fresh sample");
    Index d = tensors[0].dim();
    if (fresh_points != nullptr && fresh_points->cols() != d) throw InvalidInput("list_decode: fresh sample dimension mismatch");

    DecodeResult res;
    DecodeParameters& p = res.params;
    p.eta = opt.eta > 0.0 ? opt.eta : std::max(opt.eta_floor, std::sqrt(std::max(eps, 0.0)));
    p.eta = std::min(p.eta, 0.99);
    p.lambda = 4.0 * p.eta;
    p.delta = 2.0 * std::pow(p.eta, decode_exponent(k, opt.c));
    double alpha_eff = std::min(alpha, 0.999);
    p.phi = 10.0 * (1.0 + opt.big_delta * opt.big_delta) / (std::sqrt(p.eta) * std::pow(alpha_eff, 5));
    p.collapse_bound = collapse_bound(k, alpha_eff, p.eta, opt.c);
    p.formula_repetitions = formula_collapse_repetitions(k, p.eta, opt.big_delta, alpha_eff);
    p.repetitions = mode == DecodeMode::cover ? opt.collapse_budget : std::min(opt.collapse_budget, opt.efficient_repetitions);
    p.repetitions = std::max(1, p.repetitions);

    CandidateList& list = res.list;
    if (trivial) {
        Candidate t = *trivial;
        t.tags["source"] = "trivial";
        list.entries.push_back(std::move(t));
    }
    std::vector<VectorXd> packed;
    for (int m = 1; m <= std::min<int>(4, static_cast<int>(tensors.size())); ++m) packed.push_back(PackedLayout::get(d, m)->pack(tensors[static_cast<std::size_t>(m - 1)]));
    std::vector<DenseTensor> drive(tensors.begin(), tensors.begin() + std::min<std::size_t>(tensors.size(), static_cast<std::size_t>(opt.m_max)));
    EnumerationGrid grid = make_enumeration_grid(alpha_eff, p.delta, p.phi, opt.k_prime);
    double radius = 2.0 / std::sqrt(alpha_eff);

    for (int r = 0; r < p.repetitions; ++r) {
        CollapseDraw draw = random_collapse(tensors[3], k, alpha_eff, p.eta, rng, opt.c);
        SearchSubspace sub = build_search_subspace(drive, draw.s_hat, p.lambda, p.delta, opt.max_subspace_dim);
        res.subspace_dims.push_back(sub.dim());
        for (const auto& w : sub.warnings) res.warnings.push_back(w);
        std::string tag = std::to_string(r);
        if (mode == DecodeMode::cover) {
            detail::append_list(list, enumerate_candidates(sub, draw.s_hat, grid, opt.enumeration_budget), tag);
            if (r < opt.fit_restarts) {
                GaussianMixture start;
                double sn = draw.s_hat.norm();
                for (int i = 0; i < k; ++i) {
                    MatrixXd cov = MatrixXd::Identity(d, d);
                    if (i == r % k && sn > 0.0) cov += uniform(rng, -0.5, 0.5) * opt.big_delta * draw.s_hat / sn;
                    start.weights.push_back(1.0 / k);
                    start.components.push_back({detail::random_point_in_subspace_ball(sub, radius, rng), psd_floor(cov, 0.1)});
                }
                MomentFitResult fit = fit_moments(packed, start, opt.fit_max_evaluations);
                CandidateList fitted;
                std::vector<std::size_t> tuple;
                for (std::size_t i = 0; i < fit.mixture.k(); ++i) {
                    tuple.push_back(i);
                    fitted.entries.push_back({fit.mixture.components[i].mean, fit.mixture.components[i].cov,
                                              {{"source", "moment-fit"}, {"residual", std::to_string(fit.residual)}, {"weight", std::to_string(fit.mixture.weights[i])}}});
                }
                fitted.tuples.push_back(tuple);
                detail::append_list(list, fitted, tag);
            }
        } else {
            MatrixXd projected = (*fresh_points) * sub.basis;
            LowDimOptions lo = opt.low_dim;
            lo.max_dim = std::max(lo.max_dim, opt.max_subspace_dim);
            if (lo.min_weight == 0.0) lo.min_weight = 0.5 * alpha;
            LowDimResult fit = low_dim_learn(projected, k, rng, lo);
            for (const auto& w : fit.warnings) res.warnings.push_back(w);
            for (std::size_t i = 0; i < fit.mixtures.size() && static_cast<int>(i) < opt.low_dim_keep; ++i)
                detail::append_list(list, assemble_candidates(sub, draw.s_hat, fit.mixtures[i]), tag);
        }
    }
    deduplicate_candidates(list, p.delta / 10.0);
    list.budget = list.entries.size();
    if (list.truncated) res.warnings.push_back("cover enumeration truncated by budget");
    return res;
}

/// Robust Hermite tensors of `points` for orders 1..max(4, m_max), then candidate generation.
/// The robust mean and covariance always form the first candidate.
inline DecodeResult list_decode(const MatrixXd& points, int k, double alpha, double eps, DecodeMode mode, Rng& rng, const DecodeOptions& opt = {},
                                const MatrixXd* fresh_points = nullptr) {
    if (points.rows() < 2) throw InvalidInput("list_decode: need at least two points");
    Index d = points.cols();
    std::vector<DenseTensor> tensors;
    for (int m = 1; m <= std::max(4, opt.m_max); ++m) {
        auto layout = PackedLayout::get(d, m);
        tensors.push_back(layout->unpack(robust_tensor_mean_packed(points, m, eps, rng, opt.filter).packed));
    }
    CovEstimate base = robust_cov_estimate(points, eps, rng, opt.filter);
    Candidate trivial{base.mean, base.cov, {}};
    return decode_from_tensors(tensors, k, alpha, eps, mode, opt, rng, fresh_points, trivial);
}

}  // namespace rgmm
