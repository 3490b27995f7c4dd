#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/moments1d.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/hermite/packing.hpp"

namespace rgmm {

struct GoodSampleEntry {
    int component = 0;
    /// "direction" for a projected raw moment, "tensor" for a Hermite moment tensor.
    std::string kind;
    int order = 0;
    double deviation = 0.0;
    double budget = 0.0;
};

struct GoodSampleReport {
    bool pass = true;
    /// Largest deviation/budget ratio; at most 1 when the check passes.
    double worst_ratio = 0.0;
    std::vector<GoodSampleEntry> entries;
};

/// Compares per-component empirical moments with their population values.
/// Directional check: standardized raw moments of order j ≤ t along random unit
/// directions, budget γ·j^j. Tensor check: Frobenius error of the mean of h_m over the
/// component's points after whitening by the true parameters, m ≤ min(t, 4), budget
/// γ·(m·B)^m·d^{m/2} with B = 1 + ‖μ‖ + ‖Σ − I‖_F.
inline GoodSampleReport good_sample_diagnostic(const MatrixXd& points, const std::vector<int>& labels, const GaussianMixture& mixture,
                                               double gamma, int t, Rng& rng, int directions = 20) {
    if (static_cast<Index>(labels.size()) != points.rows()) throw InvalidInput("good_sample_diagnostic: labels required for every point");
    if (t < 1) throw InvalidInput("good_sample_diagnostic: t must be positive");
    mixture.validate();
    GoodSampleReport rep;
    Index d = points.cols();
    std::vector<double> std_moments = raw_moments_1d(GaussianMixture::single(GaussianComponent::standard(1)), std::min(t, 16));
    auto record = [&](GoodSampleEntry e) {
        double ratio = e.budget == std::numeric_limits<double>::infinity() ? 0.0 : (e.budget > 0.0 ? e.deviation / e.budget : std::numeric_limits<double>::infinity());
        if (!std::isfinite(e.deviation)) ratio = std::numeric_limits<double>::infinity();
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (ratio > 1.0) rep.pass = false;
        rep.entries.push_back(std::move(e));
    };
    for (std::size_t c = 0; c < mixture.k(); ++c) {
        std::vector<Index> idx;
        for (Index i = 0; i < points.rows(); ++i)
            if (labels[static_cast<std::size_t>(i)] == static_cast<int>(c)) idx.push_back(i);
        if (idx.empty()) continue;
        MatrixXd own = select_rows(points, idx);
        const GaussianComponent& comp = mixture.components[c];
        for (int r = 0; r < directions; ++r) {
            VectorXd v = random_unit_vector(d, rng);
            double mu = v.dot(comp.mean);
            double sd = std::sqrt(std::max(v.dot(comp.cov * v), 1e-300));
            VectorXd z = ((own * v).array() - mu) / sd;
            for (int j = 1; j <= std::min(t, 16); ++j) {
                double emp = z.array().pow(j).mean();
                GoodSampleEntry e{static_cast<int>(c), "direction", j, std::abs(emp - std_moments[static_cast<std::size_t>(j - 1)]),
                                  gamma * std::pow(double(j), j)};
                record(e);
            }
        }
        MatrixXd whiten = pinv_sqrt_sym(comp.cov);
        MatrixXd white = (own.rowwise() - comp.mean.transpose()) * whiten;
        double b = 1.0 + comp.mean.norm() + (comp.cov - MatrixXd::Identity(d, d)).norm();
        for (int m = 1; m <= std::min(t, 4); ++m) {
            auto layout = PackedLayout::get(d, m);
            VectorXd emp = layout->hermite_rows(white).colwise().mean().transpose();
            GoodSampleEntry e{static_cast<int>(c), "tensor", m, emp.norm(), gamma * std::pow(m * b, m) * std::pow(double(d), 0.5 * m)};
            record(e);
        }
    }
    return rep;
}

}  // namespace rgmm
