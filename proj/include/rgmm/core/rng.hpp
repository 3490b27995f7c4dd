#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rgmm {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds.
inline std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t stream) noexcept {
    return mix_seed(mix_seed(parent) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

/// Draws a fresh seed from `rng` so that a sub-computation gets its own stream.
inline std::uint64_t split(Rng& rng) { return rng(); }

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Eigen::VectorXd standard_normal_vector(Eigen::Index d, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = gauss(rng);
    return v;
}

inline Eigen::VectorXd random_unit_vector(Eigen::Index d, Rng& rng) {
    Eigen::VectorXd v = standard_normal_vector(d, rng);
    while (v.norm() == 0.0) v = standard_normal_vector(d, rng);
    return v.normalized();
}

}  // namespace rgmm
