#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/rng.hpp"

namespace rgmm {

/// Uniform point of the probability simplex scaled by a factor uniform in [1 − kε, 1 + kε].
/// k = 1 returns (1).
inline std::vector<double> weight_guess(int k, double eps, Rng& rng) {
    if (k < 1) throw InvalidInput("weight_guess: k must be positive");
    if (!(eps >= 0.0)) throw InvalidInput("weight_guess: eps must be nonnegative");
    if (k == 1) return {1.0};
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> w(static_cast<std::size_t>(k));
    double total = 0.0;
    for (double& x : w) total += (x = expo(rng));
    double spread = k * eps;
    double scale = spread > 0.0 ? uniform(rng, 1.0 - spread, 1.0 + spread) : 1.0;
    for (double& x : w) x *= scale / total;
    return w;
}

/// Each weight uniform on the grid {α, 2α, …} ∩ (0, 1], then normalized to sum 1.
inline std::vector<double> weight_guess_grid(int k, double alpha, Rng& rng) {
    if (k < 1) throw InvalidInput("weight_guess_grid: k must be positive");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidInput("weight_guess_grid: alpha must lie in (0, 1]");
    if (k == 1) return {1.0};
    auto steps = static_cast<int>(std::floor(1.0 / alpha + 1e-9));
    std::uniform_int_distribution<int> pick(1, steps);
    std::vector<double> w(static_cast<std::size_t>(k));
    double total = 0.0;
    for (double& x : w) total += (x = alpha * pick(rng));
    for (double& x : w) x /= total;
    return w;
}

}  // namespace rgmm
