#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/tv.hpp"

namespace rgmm {

struct MatchingReport {
    /// Hypothesis component each truth component is assigned to, or −1 for the unmatched set R_0.
    std::vector<int> truth_to_hyp;
    /// Per hypothesis component: summed truth weight W_i, hypothesis weight ŵ_i and |W_i − ŵ_i|.
    std::vector<double> cluster_weight;
    std::vector<double> hyp_weight;
    std::vector<double> weight_gap;
    double unmatched_weight = 0.0;
    double max_weight_gap = 0.0;
    /// tv_upper_bound cost matrix (truth × hypothesis).
    MatrixXd cost;
};

/// Symmetric version of tv_upper_bound (the larger of both orders).
inline double component_tv_cost(const GaussianComponent& a, const GaussianComponent& b, double c = 1.0) {
    return std::max(tv_upper_bound(a, b, c).value, tv_upper_bound(b, a, c).value);
}

/// Assigns each truth component to its cheapest hypothesis component; assignments with
/// cost above tv_tol fall into R_0. Several truth components may share one hypothesis
/// component, which covers hypotheses that merged nearby components.
inline MatchingReport match_components(const GaussianMixture& truth, const GaussianMixture& hyp, double tv_tol, double c = 1.0) {
    truth.validate();
    hyp.validate();
    if (truth.dim() != hyp.dim()) throw InvalidInput("match_components: dimension mismatch");
    MatchingReport rep;
    auto kt = static_cast<Index>(truth.k());
    auto kh = static_cast<Index>(hyp.k());
    rep.cost.resize(kt, kh);
    for (Index i = 0; i < kt; ++i)
        for (Index j = 0; j < kh; ++j)
            rep.cost(i, j) = component_tv_cost(truth.components[static_cast<std::size_t>(i)], hyp.components[static_cast<std::size_t>(j)], c);
    rep.cluster_weight.assign(hyp.k(), 0.0);
    rep.hyp_weight = hyp.weights;
    for (Index i = 0; i < kt; ++i) {
        Index best = 0;
        for (Index j = 1; j < kh; ++j)
            if (rep.cost(i, j) < rep.cost(i, best)) best = j;
        double w = truth.weights[static_cast<std::size_t>(i)];
        if (rep.cost(i, best) <= tv_tol) {
            rep.truth_to_hyp.push_back(static_cast<int>(best));
            rep.cluster_weight[static_cast<std::size_t>(best)] += w;
        } else {
            rep.truth_to_hyp.push_back(-1);
            rep.unmatched_weight += w;
        }
    }
    for (std::size_t j = 0; j < hyp.k(); ++j) {
        double gap = std::abs(rep.cluster_weight[j] - rep.hyp_weight[j]);
        rep.weight_gap.push_back(gap);
        rep.max_weight_gap = std::max(rep.max_weight_gap, gap);
    }
    return rep;
}

/// Smallest i in [1, k_a + k_b + 1] such that no weight lies in [ε^{c1^{i−1}}, ε^{c1^i}).
inline int weight_gap_threshold(const std::vector<double>& weights_a, const std::vector<double>& weights_b, double eps, double c1) {
    if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("weight_gap_threshold: eps must lie in (0, 1)");
    if (!(c1 > 0.0 && c1 < 1.0)) throw InvalidInput("weight_gap_threshold: c1 must lie in (0, 1)");
    if (weights_a.empty() || weights_b.empty()) throw InvalidInput("weight_gap_threshold: empty weight list");
    int limit = static_cast<int>(weights_a.size() + weights_b.size()) + 1;
    for (int i = 1; i <= limit; ++i) {
        double lo = std::pow(eps, std::pow(c1, i - 1));
        double hi = std::pow(eps, std::pow(c1, i));
        bool occupied = false;
        for (const auto* list : {&weights_a, &weights_b})
            for (double w : *list) occupied = occupied || (w >= lo && w < hi);
        if (!occupied) return i;
    }
    throw AlgorithmFailure("weight_gap_threshold: every interval is occupied");
}

}  // namespace rgmm
