#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/model.hpp"

namespace rgmm {

/// Number of partitions of [j] into exactly p pairs and j − 2p singletons.
inline double pairing_count(int j, int p) {
    double out = 1.0;
    for (int i = 0; i < 2 * p; ++i) out *= static_cast<double>(j - i);
    for (int i = 1; i <= p; ++i) out /= static_cast<double>(i);
    return out / std::pow(2.0, p);
}

inline double factorial(int n) {
    double out = 1.0;
    for (int i = 2; i <= n; ++i) out *= static_cast<double>(i);
    return out;
}

/// Raw moments E x^j, j = 1..j_max, of a univariate mixture via the singleton/pair
/// partition sum: pairs contribute σ², singletons contribute μ.
inline std::vector<double> raw_moments_1d(const GaussianMixture& m, int j_max) {
    if (j_max < 0 || j_max > 16) throw InvalidInput("raw_moments_1d: j_max must lie in [0, 16]");
    m.validate();
    if (m.dim() != 1) throw InvalidInput("raw_moments_1d: mixture must be univariate");
    std::vector<double> out(static_cast<std::size_t>(j_max), 0.0);
    for (std::size_t i = 0; i < m.k(); ++i) {
        double mu = m.components[i].mean(0);
        double var = m.components[i].cov(0, 0);
        for (int j = 1; j <= j_max; ++j) {
            double sum = 0.0;
            for (int p = 0; 2 * p <= j; ++p) sum += pairing_count(j, p) * std::pow(var, p) * std::pow(mu, j - 2 * p);
            out[static_cast<std::size_t>(j - 1)] += m.weights[i] * sum;
        }
    }
    return out;
}

struct MomentDistanceResult {
    bool exceeds = false;
    /// Order j (1-based) attaining the largest moment gap.
    int witness = 0;
    double max_gap = 0.0;
    double threshold = 0.0;
    std::vector<std::string> warnings;
};

/// Compares the first 2k raw moments of a univariate mixture to those of N(0, 1) and
/// reports whether the largest gap reaches β^{C^{k+1}(k+1)! − 1}.
inline MomentDistanceResult moment_distance_check(const GaussianMixture& m, double beta, double bound_d, int k, double c = 2.0) {
    if (k < 1) throw InvalidInput("moment_distance_check: k must be positive");
    if (!(beta > 0.0) || !(bound_d > 0.0)) throw InvalidInput("moment_distance_check: beta and D must be positive");
    MomentDistanceResult res;
    for (std::size_t i = 0; i < m.k(); ++i) {
        if (m.weights[i] < beta) res.warnings.push_back("component weight below beta");
        double mu = m.components[i].mean(0);
        double sd = std::sqrt(std::max(m.components[i].cov(0, 0), 0.0));
        if (std::abs(mu) > bound_d || sd > bound_d) res.warnings.push_back("component mean or deviation exceeds D");
    }
    double beta_cap = 1.0 / (2.0 * factorial(2 * k - 1) * std::pow(bound_d, 2 * k - 3));
    if (beta > beta_cap) res.warnings.push_back("beta exceeds 1/(2(2k-1)! D^(2k-3))");

    std::vector<double> mix = raw_moments_1d(m, 2 * k);
    std::vector<double> ref = raw_moments_1d(GaussianMixture::single(GaussianComponent::standard(1)), 2 * k);
    for (int j = 1; j <= 2 * k; ++j) {
        double gap = std::abs(mix[static_cast<std::size_t>(j - 1)] - ref[static_cast<std::size_t>(j - 1)]);
        if (gap > res.max_gap) {
            res.max_gap = gap;
            res.witness = j;
        }
    }
    double exponent = std::pow(c, k + 1) * factorial(k + 1) - 1.0;
    res.threshold = std::pow(beta, exponent);
    res.exceeds = res.max_gap > 0.0 && res.max_gap >= res.threshold * (1.0 - 1e-12);
    return res;
}

}  // namespace rgmm
