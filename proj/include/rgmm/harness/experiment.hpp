#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rgmm/contamination/contamination.hpp"
#include "rgmm/core/matching.hpp"
#include "rgmm/core/sampling.hpp"
#include "rgmm/core/tv.hpp"
#include "rgmm/io/csv_io.hpp"
#include "rgmm/io/json_io.hpp"
#include "rgmm/pipeline/learn.hpp"

namespace rgmm {

/// Random mixture: equal weights, means at distance `separation` from the origin in random
/// directions, covariances Q diag(λ) Qᵀ with λ uniform in [min_eig, max_eig].
struct GeneratorRecipe {
    int k = 2;
    Index d = 2;
    double separation = 3.0;
    double min_eig = 0.5;
    double max_eig = 2.0;
};

struct ExperimentSpec {
    std::optional<std::string> mixture_path;
    GeneratorRecipe generator;
    ContaminationSpec contamination;
    /// Size of each of the two independent samples.
    Index n = 1000;
    int trials = 1;
    PipelineConfig pipeline;
    std::string out_dir = ".";

    void validate() const {
        if (trials < 1) throw InvalidInput("experiment: trials must be at least 1");
        if (n < 2) throw InvalidInput("experiment: n must be at least 2");
        if (generator.k < 1 || generator.d < 1) throw InvalidInput("experiment: generator k and d must be positive");
        if (!(generator.min_eig > 0.0 && generator.max_eig >= generator.min_eig)) throw InvalidInput("experiment: bad eigenvalue range");
        contamination.validate();
    }
};

inline GaussianMixture random_mixture(const GeneratorRecipe& r, Rng& rng) {
    if (r.k < 1 || r.d < 1) throw InvalidInput("random_mixture: k and d must be positive");
    GaussianMixture m;
    for (int i = 0; i < r.k; ++i) {
        VectorXd mean = r.k == 1 ? VectorXd::Zero(r.d) : VectorXd(r.separation * random_unit_vector(r.d, rng));
        MatrixXd g(r.d, r.d);
        for (Index c = 0; c < r.d; ++c) g.col(c) = standard_normal_vector(r.d, rng);
        Eigen::HouseholderQR<MatrixXd> qr(g);
        MatrixXd q = qr.householderQ();
        VectorXd lam(r.d);
        for (Index c = 0; c < r.d; ++c) lam(c) = uniform(rng, r.min_eig, r.max_eig);
        m.components.push_back({mean, symmetrize_matrix(q * lam.asDiagonal() * q.transpose())});
        m.weights.push_back(1.0 / r.k);
    }
    return m;
}

struct GeneratedPair {
    SampleSet clean;
    SampleSet corrupted;
};

/// Clean draw plus its corrupted version. The TV model draws the corrupted sample directly.
inline GeneratedPair generate_pair(const GaussianMixture& m, const ContaminationSpec& spec, Index n, Rng& rng) {
    GeneratedPair out;
    out.clean = sample_mixture(m, n, rng);
    switch (spec.model) {
        case ContaminationModel::strong:
            out.corrupted = strong_contaminate(out.clean, spec, rng).samples;
            break;
        case ContaminationModel::huber:
            out.corrupted = huber_contaminate(out.clean, spec, default_tv_noise(m, spec), rng).samples;
            break;
        case ContaminationModel::tv:
            out.corrupted = tv_contaminate(m, spec, n, rng).samples;
            break;
    }
    return out;
}

struct EvalMetrics {
    McEstimate tv;
    MatchingReport matching;
    double tv_tol = 0.0;
};

inline EvalMetrics evaluate_hypothesis(const GaussianMixture& truth, const GaussianMixture& hyp, Index n_mc, Rng& rng, double tv_tol = 0.5) {
    EvalMetrics e;
    e.tv = tv_monte_carlo(truth, hyp, n_mc, rng);
    e.matching = match_components(truth, hyp, tv_tol);
    e.tv_tol = tv_tol;
    return e;
}

inline io::Json metrics_json(const EvalMetrics& e) {
    io::Json j;
    j["tv"] = e.tv.value;
    j["tv_std_error"] = e.tv.std_error;
    j["match_tv_tolerance"] = e.tv_tol;
    j["truth_to_hypothesis"] = e.matching.truth_to_hyp;
    j["cluster_weight"] = e.matching.cluster_weight;
    j["hypothesis_weight"] = e.matching.hyp_weight;
    j["weight_gap"] = e.matching.weight_gap;
    j["max_weight_gap"] = e.matching.max_weight_gap;
    j["unmatched_weight"] = e.matching.unmatched_weight;
    j["cost"] = io::matrix_json(e.matching.cost);
    return j;
}

namespace io {

inline Json experiment_json(const ExperimentSpec& s) {
    Json j;
    if (s.mixture_path) j["mixture"] = *s.mixture_path;
    j["generator"] = {{"k", s.generator.k}, {"d", s.generator.d}, {"separation", s.generator.separation},
                      {"min_eig", s.generator.min_eig}, {"max_eig", s.generator.max_eig}};
    j["contamination"] = {{"model", to_string(s.contamination.model)}, {"eps", s.contamination.eps},
                          {"strategy", to_string(s.contamination.strategy)}, {"scale", s.contamination.scale},
                          {"jitter", s.contamination.jitter}};
    j["n"] = s.n;
    j["trials"] = s.trials;
    j["pipeline"] = config_json(s.pipeline);
    j["out"] = s.out_dir;
    return j;
}

/// Absent fields keep their defaults.
inline ExperimentSpec experiment_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidInput("experiment: expected an object");
    ExperimentSpec s;
    try {
        if (j.contains("mixture")) s.mixture_path = j["mixture"].get<std::string>();
        if (j.contains("generator")) {
            const Json& g = j["generator"];
            if (g.contains("k")) s.generator.k = g["k"].get<int>();
            if (g.contains("d")) s.generator.d = g["d"].get<Index>();
            if (g.contains("separation")) s.generator.separation = g["separation"].get<double>();
            if (g.contains("min_eig")) s.generator.min_eig = g["min_eig"].get<double>();
            if (g.contains("max_eig")) s.generator.max_eig = g["max_eig"].get<double>();
        }
        if (j.contains("contamination")) {
            const Json& c = j["contamination"];
            if (c.contains("model")) s.contamination.model = parse_contamination_model(c["model"].get<std::string>());
            if (c.contains("eps")) s.contamination.eps = c["eps"].get<double>();
            if (c.contains("strategy")) s.contamination.strategy = parse_attack_strategy(c["strategy"].get<std::string>());
            if (c.contains("scale")) s.contamination.scale = c["scale"].get<double>();
            if (c.contains("jitter")) s.contamination.jitter = c["jitter"].get<double>();
        }
        if (j.contains("n")) s.n = j["n"].get<Index>();
        if (j.contains("trials")) s.trials = j["trials"].get<int>();
        if (j.contains("pipeline")) s.pipeline = config_from_json(j["pipeline"]);
        if (j.contains("out")) s.out_dir = j["out"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("experiment: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace io

/// Grid of (ε, n, k, d) cells; each cell runs `trials` generate-learn-evaluate trials.
struct BenchGrid {
    std::vector<double> eps;
    std::vector<Index> n;
    std::vector<int> k;
    std::vector<Index> d;
    int trials = 1;

    std::size_t cells() const { return eps.size() * n.size() * k.size() * d.size(); }
};

struct BenchRow {
    double eps = 0.0;
    Index n = 0;
    int k = 0;
    Index d = 0;
    int trials = 0;
    int failures = 0;
    double tv_median = 0.0, tv_q1 = 0.0, tv_q3 = 0.0;
    std::vector<std::string> errors;
};

/// One trial: random mixture, two corrupted samples, learn_gmm, Monte Carlo TV. Returns
/// nullopt on pipeline failure.
inline std::optional<double> bench_trial(const ExperimentSpec& base, double eps, Index n, int k, Index d, std::uint64_t seed, std::string& error) {
    Rng rng(seed);
    GeneratorRecipe recipe = base.generator;
    recipe.k = k;
    recipe.d = d;
    GaussianMixture truth = random_mixture(recipe, rng);
    ContaminationSpec cs = base.contamination;
    cs.eps = eps;
    MatrixXd a = generate_pair(truth, cs, n, rng).corrupted.points;
    MatrixXd b = generate_pair(truth, cs, n, rng).corrupted.points;
    PipelineConfig cfg = base.pipeline;
    cfg.k = k;
    // The pipeline needs a positive contamination level; clean cells use a small one.
    cfg.eps = std::max(eps, 1e-3);
    cfg.seed = seed;
    cfg.threads = 1;
    try {
        LearnResult r = learn_gmm(a, b, k, cfg.eps, cfg, rng, &truth);
        if (!r.report.success || !r.report.tv) {
            error = r.report.failure;
            return std::nullopt;
        }
        return r.report.tv->value;
    } catch (const InvalidInput& e) {
        error = e.what();
        return std::nullopt;
    }
}

/// Runs every cell of the grid. Trial t uses derive_seed(seed, t) in every cell, so cells are
/// compared on common random numbers and the table does not depend on the thread count.
/// Failed trials are counted, not aborted on.
inline std::vector<BenchRow> run_bench(const ExperimentSpec& base, const BenchGrid& grid, std::uint64_t seed, int threads = 1) {
    if (grid.trials < 1) throw InvalidInput("bench: trials must be at least 1");
    struct Job {
        std::size_t cell;
        int trial;
    };
    std::vector<BenchRow> rows;
    for (double e : grid.eps)
        for (Index n : grid.n)
            for (int k : grid.k)
                for (Index d : grid.d) {
                    BenchRow r;
                    r.eps = e;
                    r.n = n;
                    r.k = k;
                    r.d = d;
                    r.trials = grid.trials;
                    rows.push_back(r);
                }
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < rows.size(); ++c)
        for (int t = 0; t < grid.trials; ++t) jobs.push_back({c, t});
    std::vector<std::optional<double>> results(jobs.size());
    std::vector<std::string> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const BenchRow& r = rows[jobs[i].cell];
            std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(jobs[i].trial));
            results[i] = bench_trial(base, r.eps, r.n, r.k, r.d, s, errors[i]);
        }
    };
    int workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    std::vector<std::vector<double>> tvs(rows.size());
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        BenchRow& r = rows[jobs[i].cell];
        if (results[i]) {
            tvs[jobs[i].cell].push_back(*results[i]);
        } else {
            ++r.failures;
            r.errors.push_back(errors[i]);
        }
    }
    for (std::size_t c = 0; c < rows.size(); ++c) {
        if (tvs[c].empty()) {
            rows[c].tv_median = rows[c].tv_q1 = rows[c].tv_q3 = std::nan("");
            continue;
        }
        rows[c].tv_median = median_of(tvs[c]);
        rows[c].tv_q1 = quantile_of(tvs[c], 0.25);
        rows[c].tv_q3 = quantile_of(tvs[c], 0.75);
    }
    return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows, std::uint64_t seed) {
    out << "# seed=" << seed << "\n";
    out << "eps,n,k,d,trials,failures,tv_median,tv_q1,tv_q3\n";
    for (const auto& r : rows)
        out << io::format_double(r.eps) << "," << r.n << "," << r.k << "," << r.d << "," << r.trials << "," << r.failures << ","
            << io::format_double(r.tv_median) << "," << io::format_double(r.tv_q1) << "," << io::format_double(r.tv_q3) << "\n";
}

}  // namespace rgmm
