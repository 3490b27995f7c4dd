#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rgmm/cluster/moment_matrix.hpp"
#include "rgmm/core/error.hpp"
#include "rgmm/core/moments1d.hpp"
#include "rgmm/decode/list_decode.hpp"

namespace rgmm {

enum class PipelineMode { baseline, efficient };

inline std::string to_string(PipelineMode m) { return m == PipelineMode::baseline ? "baseline" : "efficient"; }

inline PipelineMode parse_pipeline_mode(const std::string& s) {
    if (s == "baseline") return PipelineMode::baseline;
    if (s == "efficient") return PipelineMode::efficient;
    throw InvalidInput("unknown pipeline mode: " + s);
}

/// How the leaf of the decode branch assigns weights to the drawn candidate set.
/// simplex: uniform on the simplex scaled to 1 ± kε. grid: uniform over the grid of multiples
/// of α in [α, 1] (bounded-weights variant), renormalized.
enum class WeightMode { simplex, grid };

inline std::string to_string(WeightMode m) { return m == WeightMode::simplex ? "simplex" : "grid"; }

inline WeightMode parse_weight_mode(const std::string& s) {
    if (s == "simplex") return WeightMode::simplex;
    if (s == "grid") return WeightMode::grid;
    throw InvalidInput("unknown weight mode: " + s);
}

/// Constants table: every tunable that stands in for an unspecified constant, keyed by the
/// formula site it feeds.
inline std::map<std::string, double> default_constants() {
    return {
        {"escalation.C", 1.0},                 // C in the ε-escalation exponents
        {"escalation.exponent_floor", 0.5},    // exponents below this are raised to it
        {"branch.p_light", 0.5},               // probability of the light-component branch
        {"branch.p_cluster", 0.5},             // probability of partial clustering over decoding
        {"decode.big_delta", 2.0},
        {"decode.c", 1.0},
        {"decode.eta_floor", 0.05},
        {"decode.max_subspace_dim", 6.0},
        {"decode.efficient_repetitions", 1.0},
        {"decode.low_dim_restarts", 2.0},
        {"decode.low_dim_max_points", 10000.0}, // EM subsample cap in the efficient variant
        {"decode.fit_restarts", 4.0},
        {"cluster.rows_c", 1.0},
        {"cluster.merge_c", 1.0},
        {"cluster.merge_t", 4.0},
        {"cluster.tau", 0.25},                 // merge scale; non-positive selects the formula
        {"cluster.max_oracle_points", 2000.0},
        {"cluster.fit_restarts", 2.0},          // EM restarts of the affinity oracle
        {"separator.gap_c", 0.25},
        {"node.min_points_per_dim", 5.0},      // nodes with fewer than this·(d+1) points fail
        {"node.alpha_floor", 0.05},            // lower clamp of the minimum-weight guess
        {"report.tv_samples", 20000.0},
        {"tournament.eta", 0.05},
        {"tournament.C", 1.0},                 // |points| ≥ C·log(#hyps)/η²
        {"tournament.mc_samples", 20000.0},
    };
}

struct PipelineConfig {
    int k = 1;
    double eps = 0.01;
    PipelineMode mode = PipelineMode::efficient;
    WeightMode weight_mode = WeightMode::simplex;
    OracleMode oracle = OracleMode::affinity;
    /// Outer repetitions of cluster-or-decode, collapse draws per decode, cover entries per draw.
    int outer_budget = 20;
    int collapse_budget = 20;
    int cover_budget = 64;
    std::map<std::string, double> constants = default_constants();
    std::uint64_t seed = 0;
    int threads = 1;

    double constant(const std::string& key) const {
        auto it = constants.find(key);
        if (it == constants.end()) throw InvalidInput("PipelineConfig: unknown constant " + key);
        return it->second;
    }

    void validate() const {
        if (k < 1) throw InvalidInput("PipelineConfig: k must be positive");
        if (!(eps > 0.0 && eps < 0.5)) throw InvalidInput("PipelineConfig: eps must lie in (0, 1/2)");
        if (outer_budget < 1 || collapse_budget < 1 || cover_budget < 1) throw InvalidInput("PipelineConfig: budgets must be at least 1");
        if (threads < 1) throw InvalidInput("PipelineConfig: threads must be at least 1");
        for (const auto& [key, value] : default_constants())
            if (!constants.contains(key)) throw InvalidInput("PipelineConfig: missing constant " + key);
        for (const char* p : {"branch.p_light", "branch.p_cluster"}) {
            double v = constant(p);
            if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(std::string("PipelineConfig: ") + p + " must lie in [0, 1]");
        }
        if (!(constant("escalation.C") > 0.0)) throw InvalidInput("PipelineConfig: escalation.C must be positive");
        double eta = constant("tournament.eta");
        if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("PipelineConfig: tournament.eta must lie in (0, 1)");
    }
};

/// sf(k) = Π_{i=1..k} (k − i)!.
inline double superfactorial(int k) {
    double f = 1.0;
    for (int i = 1; i <= k; ++i) f *= factorial(k - i);
    return f;
}

/// Final error exponent c_k = 1 / (100^k · C^{(k+1)!} · sf(k+1) · k!).
inline double error_exponent(int k, double c) {
    return 1.0 / (std::pow(100.0, k) * std::pow(c, factorial(k + 1)) * superfactorial(k + 1) * factorial(k));
}

struct ExponentSite {
    std::string name;
    double formula = 0.0;
    double used = 0.0;
    bool floored = false;
};

/// The ε-escalation exponents of one recursion level, each 1/(a·C^{k+1}·(k+1)!) with its own
/// divisor a, raised to the configured floor when smaller.
struct ExponentSchedule {
    int k = 1;
    double c = 1.0;
    double floor = 0.5;
    std::vector<ExponentSite> sites;

    static ExponentSchedule make(int k, double c, double floor) {
        ExponentSchedule s;
        s.k = k;
        s.c = c;
        s.floor = floor;
        double base = std::pow(c, k + 1) * factorial(k + 1);
        auto add = [&](const std::string& name, double divisor) {
            double f = 1.0 / (divisor * base);
            s.sites.push_back({name, f, std::max(f, floor), f < floor});
        };
        add("light_weight", 10.0);
        add("cluster_accuracy", 5.0);
        add("cluster_eps", 10.0);
        add("eigen_threshold", 40.0);
        add("spectral_small_side", 400.0 * k);
        add("spectral_eps", 100.0 * k);
        return s;
    }

    double exponent(const std::string& name) const {
        for (const auto& site : sites)
            if (site.name == name) return site.used;
        throw InvalidInput("ExponentSchedule: unknown site " + name);
    }

    /// ε raised to the (floored) exponent of `name`.
    double power(double eps, const std::string& name) const { return std::pow(eps, exponent(name)); }
};

}  // namespace rgmm
