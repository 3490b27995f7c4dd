#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/core/sampling.hpp"

namespace rgmm {

enum class ContaminationModel { huber, tv, strong };
enum class AttackStrategy { far_cluster, moment_attack, density_swap };

inline std::string to_string(ContaminationModel m) {
    switch (m) {
        case ContaminationModel::huber: return "huber";
        case ContaminationModel::tv: return "tv";
        case ContaminationModel::strong: return "strong";
    }
    return "unknown";
}

inline std::string to_string(AttackStrategy s) {
    switch (s) {
        case AttackStrategy::far_cluster: return "far-cluster";
        case AttackStrategy::moment_attack: return "moment-attack";
        case AttackStrategy::density_swap: return "density-swap";
    }
    return "unknown";
}

inline ContaminationModel parse_contamination_model(const std::string& s) {
    if (s == "huber") return ContaminationModel::huber;
    if (s == "tv") return ContaminationModel::tv;
    if (s == "strong") return ContaminationModel::strong;
    throw InvalidInput("unknown contamination model: " + s);
}

inline AttackStrategy parse_attack_strategy(const std::string& s) {
    if (s == "far-cluster") return AttackStrategy::far_cluster;
    if (s == "moment-attack") return AttackStrategy::moment_attack;
    if (s == "density-swap") return AttackStrategy::density_swap;
    throw InvalidInput("unknown attack strategy: " + s);
}

struct ContaminationSpec {
    ContaminationModel model = ContaminationModel::strong;
    double eps = 0.0;
    AttackStrategy strategy = AttackStrategy::far_cluster;
    /// Location scale R: distance of the far cluster, or the shift in units of the
    /// standard deviation along the attack direction for the other strategies.
    double scale = 100.0;
    /// Radius of the ball the far-cluster points are spread over.
    double jitter = 0.25;
    /// Attack direction; the top principal direction (or a random one for moment-attack) when unset.
    std::optional<VectorXd> direction;

    void validate() const {
        if (!(eps >= 0.0 && eps < 0.5)) throw InvalidInput("ContaminationSpec: eps must lie in [0, 1/2)");
        if (!(scale >= 0.0)) throw InvalidInput("ContaminationSpec: scale must be nonnegative");
        if (direction && direction->norm() == 0.0) throw InvalidInput("ContaminationSpec: zero attack direction");
    }
};

struct ContaminationResult {
    SampleSet samples;
    std::vector<std::string> warnings;
    /// Set for strategies whose effect on the estimator is heuristic rather than worst case.
    bool heuristic = false;
};

namespace detail {

inline VectorXd top_principal_direction(const MatrixXd& points) {
    if (points.rows() < 2) return VectorXd::Unit(points.cols(), 0);
    SymEig e = sym_eig(empirical_covariance(points));
    return e.vectors.col(e.vectors.cols() - 1);
}

inline VectorXd uniform_in_ball(Index d, double radius, Rng& rng) {
    VectorXd dir = random_unit_vector(d, rng);
    double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
    return r * dir;
}

inline std::vector<Index> random_subset(Index n, Index count, Rng& rng) {
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(static_cast<std::size_t>(count));
    std::sort(all.begin(), all.end());
    return all;
}

}  // namespace detail

/// Each point is independently replaced by a draw from `noise` with probability ε.
inline ContaminationResult huber_contaminate(const SampleSet& x, const ContaminationSpec& spec, const GaussianMixture& noise, Rng& rng) {
    spec.validate();
    if (spec.model != ContaminationModel::huber) throw InvalidInput("huber_contaminate: spec.model must be huber");
    noise.validate();
    if (noise.dim() != x.dim()) throw InvalidInput("huber_contaminate: noise dimension mismatch");
    ContaminationResult out;
    out.samples = x;
    Index n = x.size();
    out.samples.labels.resize(static_cast<std::size_t>(n), 0);
    out.samples.corrupted.assign(static_cast<std::size_t>(n), false);
    std::bernoulli_distribution coin(spec.eps);
    for (Index i = 0; i < n; ++i) {
        if (!coin(rng)) continue;
        out.samples.points.row(i) = sample_mixture(noise, 1, rng).points.row(0);
        out.samples.labels[static_cast<std::size_t>(i)] = -1;
        out.samples.corrupted[static_cast<std::size_t>(i)] = true;
    }
    return out;
}

/// Replaces exactly ⌊εn⌋ points after inspecting the sample. Replaced points keep
/// their original labels; the mask records which rows changed.
inline ContaminationResult strong_contaminate(const SampleSet& x, const ContaminationSpec& spec, Rng& rng) {
    spec.validate();
    if (spec.model != ContaminationModel::strong) throw InvalidInput("strong_contaminate: spec.model must be strong");
    ContaminationResult out;
    out.samples = x;
    Index n = x.size(), d = x.dim();
    out.samples.labels.resize(static_cast<std::size_t>(n), 0);
    out.samples.corrupted.assign(static_cast<std::size_t>(n), false);
    auto count = static_cast<Index>(std::floor(spec.eps * static_cast<double>(n) + 1e-9));
    if (count < 1) {
        if (spec.eps > 0.0) out.warnings.push_back("eps*n < 1: no points replaced");
        return out;
    }
    VectorXd mean = row_mean(x.points);
    MatrixXd cov = n > 1 ? empirical_covariance(x.points) : MatrixXd::Identity(d, d);
    std::vector<Index> targets;
    switch (spec.strategy) {
        case AttackStrategy::far_cluster: {
            VectorXd u = spec.direction ? VectorXd(spec.direction->normalized()) : detail::top_principal_direction(x.points);
            VectorXd center = mean + spec.scale * u;
            targets = detail::random_subset(n, count, rng);
            for (Index i : targets) out.samples.points.row(i) = (center + detail::uniform_in_ball(d, spec.jitter, rng)).transpose();
            break;
        }
        case AttackStrategy::moment_attack: {
            out.heuristic = true;
            VectorXd u = spec.direction ? VectorXd(spec.direction->normalized()) : random_unit_vector(d, rng);
            double sd = std::sqrt(std::max(u.dot(cov * u), 0.0));
            targets = detail::random_subset(n, count, rng);
            std::bernoulli_distribution sign(0.5);
            for (Index i : targets) {
                double s = sign(rng) ? 1.0 : -1.0;
                out.samples.points.row(i) = (mean + s * spec.scale * sd * u).transpose();
            }
            break;
        }
        case AttackStrategy::density_swap: {
            out.heuristic = true;
            VectorXd u = spec.direction ? VectorXd(spec.direction->normalized()) : detail::top_principal_direction(x.points);
            double sd = std::sqrt(std::max(u.dot(cov * u), 0.0));
            MatrixXd pinv = pinv_sym(cov);
            MatrixXd centered = x.points.rowwise() - mean.transpose();
            VectorXd maha = ((centered * pinv).cwiseProduct(centered)).rowwise().sum();
            std::vector<Index> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), Index{0});
            std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return maha(a) < maha(b); });
            std::vector<Index> densest(order.begin(), order.begin() + count);
            targets.assign(order.end() - count, order.end());
            std::sort(targets.begin(), targets.end());
            for (std::size_t k = 0; k < targets.size(); ++k) {
                out.samples.points.row(targets[k]) = x.points.row(densest[k]) + (spec.scale * sd * u).transpose();
            }
            break;
        }
    }
    for (Index i : targets) out.samples.corrupted[static_cast<std::size_t>(i)] = true;
    return out;
}

/// Default noise for the TV model: a tight Gaussian at distance R along the top principal axis of m.
inline GaussianMixture default_tv_noise(const GaussianMixture& m, const ContaminationSpec& spec) {
    GaussianComponent mm = m.moment_match();
    VectorXd u = spec.direction ? VectorXd(spec.direction->normalized()) : VectorXd(sym_eig(mm.cov).vectors.rightCols(1));
    Index d = m.dim();
    return GaussianMixture::single({mm.mean + spec.scale * u, spec.jitter * spec.jitter * MatrixXd::Identity(d, d)});
}

/// i.i.d. draws from (1 − ε)·m + ε·noise. Noise draws carry label −1 and are masked.
inline ContaminationResult tv_contaminate(const GaussianMixture& m, const ContaminationSpec& spec, Index n, Rng& rng,
                                         const std::optional<GaussianMixture>& noise = std::nullopt) {
    spec.validate();
    if (spec.model != ContaminationModel::tv) throw InvalidInput("tv_contaminate: spec.model must be tv");
    GaussianMixture nz = noise ? *noise : default_tv_noise(m, spec);
    nz.validate();
    if (nz.dim() != m.dim()) throw InvalidInput("tv_contaminate: noise dimension mismatch");
    ContaminationResult out;
    out.samples = sample_mixture(m, n, rng);
    std::bernoulli_distribution coin(spec.eps);
    for (Index i = 0; i < n; ++i) {
        if (!coin(rng)) continue;
        out.samples.points.row(i) = sample_mixture(nz, 1, rng).points.row(0);
        out.samples.labels[static_cast<std::size_t>(i)] = -1;
        out.samples.corrupted[static_cast<std::size_t>(i)] = true;
    }
    return out;
}

}  // namespace rgmm
