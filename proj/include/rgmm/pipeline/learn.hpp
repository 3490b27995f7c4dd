#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rgmm/core/error.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/core/tv.hpp"
#include "rgmm/pipeline/cluster_or_decode.hpp"
#include "rgmm/pipeline/config.hpp"
#include "rgmm/pipeline/tournament.hpp"

namespace rgmm {

struct RunReport {
    bool success = false;
    std::string failure;
    std::optional<Hypothesis> chosen;
    /// Index of the winner among the non-null hypotheses.
    std::size_t chosen_index = 0;
    int k = 0;
    double eps = 0.0;
    std::uint64_t seed = 0;
    PipelineConfig config;
    ExponentSchedule schedule;
    double error_exponent = 0.0;
    /// Stage sizes: attempts, non-null hypotheses, tournament comparisons, per-branch counts.
    std::map<std::string, std::size_t> list_sizes;
    std::vector<BranchNode> traces;
    TournamentResult tournament;
    std::optional<McEstimate> tv;
    std::map<std::string, double> timings;
    std::vector<std::string> warnings;
};

struct LearnResult {
    std::optional<Hypothesis> hypothesis;
    RunReport report;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Runs cluster-or-decode `cfg.outer_budget` times on `points_a` (attempt r seeded by
/// derive_seed(base, r), so results do not depend on the thread count), then selects among
/// the non-null hypotheses by the Scheffé tournament on `points_b`. `truth`, when given, adds
/// a Monte Carlo TV estimate to the report.
inline LearnResult learn_gmm(const MatrixXd& points_a, const MatrixXd& points_b, int k, double eps, const PipelineConfig& cfg, Rng& rng,
                             const GaussianMixture* truth = nullptr) {
    cfg.validate();
    if (points_a.cols() != points_b.cols()) throw InvalidInput("learn_gmm: the two samples differ in dimension");
    if (points_a.rows() < 2 || points_b.rows() < 1) throw InvalidInput("learn_gmm: samples are too small");
    if (!(eps > 0.0 && eps < 0.5)) throw InvalidInput("learn_gmm: eps must lie in (0, 1/2)");
    auto t_start = std::chrono::steady_clock::now();
    LearnResult out;
    RunReport& rep = out.report;
    rep.k = k;
    rep.eps = eps;
    rep.seed = cfg.seed;
    rep.config = cfg;
    rep.schedule = ExponentSchedule::make(k, cfg.constant("escalation.C"), cfg.constant("escalation.exponent_floor"));
    rep.error_exponent = error_exponent(k, cfg.constant("escalation.C"));
    for (const auto& site : rep.schedule.sites)
        if (site.floored) rep.warnings.push_back("exponent " + site.name + " floored from " + std::to_string(site.formula) + " to " + std::to_string(site.used));

    std::uint64_t base = split(rng);
    std::uint64_t tournament_seed = split(rng);
    std::uint64_t pre_seed = split(rng);

    auto t0 = std::chrono::steady_clock::now();
    std::vector<NodePrecompute> top;
    try {
        Rng pre_rng(pre_seed);
        top = precompute_top(points_a, k, eps, cfg, pre_rng);
    } catch (const AlgorithmFailure& e) {
        rep.warnings.push_back(std::string("top-level precompute failed: ") + e.what());
    }
    rep.timings["precompute"] = detail::seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    auto budget = static_cast<std::size_t>(cfg.outer_budget);
    std::vector<AttemptResult> attempts(budget);
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t r = next++; r < budget; r = next++) {
            Rng arng(derive_seed(base, r));
            attempts[r] = cluster_or_decode(points_a, k, eps, cfg, arng, &top);
        }
    };
    int threads = std::min<int>(cfg.threads, static_cast<int>(budget));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    rep.timings["attempts"] = detail::seconds_since(t0);

    std::vector<GaussianMixture> hyps;
    std::vector<std::size_t> source;
    for (std::size_t r = 0; r < budget; ++r) {
        const auto& a = attempts[r];
        std::vector<std::string> steps;
        a.trace.collect_steps(steps);
        for (const auto& s : steps) ++rep.list_sizes["branch." + s];
        if (a.hypothesis) {
            hyps.push_back(a.hypothesis->mixture);
            source.push_back(r);
        }
        rep.traces.push_back(a.trace);
    }
    rep.list_sizes["attempts"] = budget;
    rep.list_sizes["hypotheses"] = hyps.size();
    if (hyps.empty()) {
        rep.failure = "no attempt produced a hypothesis";
        rep.timings["total"] = detail::seconds_since(t_start);
        return out;
    }

    t0 = std::chrono::steady_clock::now();
    Rng trng(tournament_seed);
    TournamentOptions to;
    to.mc_samples = static_cast<Index>(cfg.constant("tournament.mc_samples"));
    to.size_c = cfg.constant("tournament.C");
    try {
        rep.tournament = tournament_select(hyps, points_b, cfg.constant("tournament.eta"), trng, to);
    } catch (const InvalidInput& e) {
        rep.failure = std::string("tournament: ") + e.what();
        rep.timings["total"] = detail::seconds_since(t_start);
        return out;
    }
    rep.timings["tournament"] = detail::seconds_since(t0);
    rep.list_sizes["comparisons"] = rep.tournament.ledger.size();
    rep.chosen_index = rep.tournament.winner;
    out.hypothesis = attempts[source[rep.chosen_index]].hypothesis;
    rep.chosen = out.hypothesis;
    rep.success = true;

    if (truth != nullptr) {
        Rng tv_rng(derive_seed(base, budget));
        rep.tv = tv_monte_carlo(*truth, out.hypothesis->mixture, static_cast<Index>(cfg.constant("report.tv_samples")), tv_rng);
    }
    rep.timings["total"] = detail::seconds_since(t_start);
    return out;
}

}  // namespace rgmm
