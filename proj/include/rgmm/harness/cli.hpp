#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgmm/harness/experiment.hpp"

namespace rgmm::cli {

enum ExitCode : int { exit_ok = 0, exit_pipeline_failure = 1, exit_input_error = 2 };

inline constexpr const char* sample_a_file = "sample_a.csv";
inline constexpr const char* sample_b_file = "sample_b.csv";
inline constexpr const char* clean_a_file = "sample_a_clean.csv";
inline constexpr const char* clean_b_file = "sample_b_clean.csv";
inline constexpr const char* truth_file = "truth.json";
inline constexpr const char* hypothesis_file = "hypothesis.json";
inline constexpr const char* report_file = "report.json";
inline constexpr const char* metrics_file = "metrics.json";
inline constexpr const char* bench_file = "bench.csv";

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = ".";
    int threads = 1;
    // run
    std::string samples_a, samples_b, truth;
    // eval
    std::string hypothesis;
    Index n_mc = 20000;
    double tv_tol = 0.5;
};

namespace detail {

inline std::filesystem::path out_path(const Options& o, const char* name) {
    std::filesystem::create_directories(o.out);
    return std::filesystem::path(o.out) / name;
}

inline ExperimentSpec load_spec(const Options& o) {
    ExperimentSpec s = o.config.empty() ? ExperimentSpec{} : io::experiment_from_json(io::read_json_file(o.config));
    s.pipeline.seed = o.seed;
    s.pipeline.threads = o.threads;
    return s;
}

/// "grid" object of the config: {"eps": [...], "n": [...], "k": [...], "d": [...], "trials": t}.
inline BenchGrid load_grid(const Options& o) {
    BenchGrid g;
    if (o.config.empty()) return g;
    io::Json j = io::read_json_file(o.config);
    if (!j.contains("grid")) return g;
    const io::Json& gj = j["grid"];
    try {
        if (gj.contains("eps")) g.eps = gj["eps"].get<std::vector<double>>();
        if (gj.contains("n")) g.n = gj["n"].get<std::vector<Index>>();
        if (gj.contains("k")) g.k = gj["k"].get<std::vector<int>>();
        if (gj.contains("d")) g.d = gj["d"].get<std::vector<Index>>();
        g.trials = gj.contains("trials") ? gj["trials"].get<int>() : 1;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("grid: ") + e.what());
    }
    return g;
}

}  // namespace detail

inline int cmd_gen(const Options& o) {
    ExperimentSpec s = detail::load_spec(o);
    Rng rng(o.seed);
    GaussianMixture truth = s.mixture_path ? io::load_mixture(*s.mixture_path) : random_mixture(s.generator, rng);
    GeneratedPair a = generate_pair(truth, s.contamination, s.n, rng);
    GeneratedPair b = generate_pair(truth, s.contamination, s.n, rng);
    io::save_samples_csv(detail::out_path(o, clean_a_file).string(), a.clean, o.seed);
    io::save_samples_csv(detail::out_path(o, sample_a_file).string(), a.corrupted, o.seed);
    io::save_samples_csv(detail::out_path(o, clean_b_file).string(), b.clean, o.seed);
    io::save_samples_csv(detail::out_path(o, sample_b_file).string(), b.corrupted, o.seed);
    io::save_mixture(detail::out_path(o, truth_file).string(), truth, o.seed);
    return exit_ok;
}

inline int cmd_run(const Options& o) {
    ExperimentSpec s = detail::load_spec(o);
    std::string pa = o.samples_a.empty() ? (std::filesystem::path(o.out) / sample_a_file).string() : o.samples_a;
    std::string pb = o.samples_b.empty() ? (std::filesystem::path(o.out) / sample_b_file).string() : o.samples_b;
    SampleSet a = io::load_samples_csv(pa);
    SampleSet b = io::load_samples_csv(pb);
    std::optional<GaussianMixture> truth;
    if (!o.truth.empty()) truth = io::load_mixture(o.truth);
    Rng rng(o.seed);
    LearnResult r = learn_gmm(a.points, b.points, s.pipeline.k, s.pipeline.eps, s.pipeline, rng, truth ? &*truth : nullptr);
    io::write_json_file(detail::out_path(o, report_file).string(), io::report_json(r.report));
    if (!r.hypothesis) {
        std::cerr << "run: " << r.report.failure << "\n";
        return exit_pipeline_failure;
    }
    io::Json h = io::mixture_json(r.hypothesis->mixture);
    h["provenance"] = r.hypothesis->provenance;
    h["seed"] = o.seed;
    io::write_json_file(detail::out_path(o, hypothesis_file).string(), h);
    return exit_ok;
}

inline int cmd_eval(const Options& o) {
    if (o.truth.empty() || o.hypothesis.empty()) throw InvalidInput("eval: --truth and --hypothesis are required");
    GaussianMixture truth = io::load_mixture(o.truth);
    GaussianMixture hyp = io::load_mixture(o.hypothesis);
    if (truth.dim() != hyp.dim()) throw InvalidInput("eval: truth and hypothesis differ in dimension");
    Rng rng(o.seed);
    io::Json j = metrics_json(evaluate_hypothesis(truth, hyp, o.n_mc, rng, o.tv_tol));
    j["n_mc"] = o.n_mc;
    j["seed"] = o.seed;
    io::write_json_file(detail::out_path(o, metrics_file).string(), j);
    return exit_ok;
}

inline int cmd_bench(const Options& o) {
    ExperimentSpec s = detail::load_spec(o);
    BenchGrid g = detail::load_grid(o);
    std::vector<BenchRow> rows = run_bench(s, g, o.seed, o.threads);
    std::string path = detail::out_path(o, bench_file).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_bench_csv(out, rows, o.seed);
    for (const auto& r : rows)
        for (const auto& e : r.errors) std::cerr << "bench cell eps=" << r.eps << " n=" << r.n << " k=" << r.k << " d=" << r.d << ": " << e << "\n";
    return exit_ok;
}

/// Default experiment document, including the full constants table.
inline int cmd_defaults(const Options& o, std::ostream& out) {
    ExperimentSpec s;
    s.contamination.eps = 0.05;
    s.pipeline.k = s.generator.k;
    s.pipeline.eps = s.contamination.eps;
    s.pipeline.seed = o.seed;
    io::Json j = io::experiment_json(s);
    j["grid"] = {{"eps", {0.0, 0.05}}, {"n", {2000}}, {"k", {1}}, {"d", {2}}, {"trials", 3}};
    out << j.dump(2) << "\n";
    return exit_ok;
}

/// Entry point for the rgmm command line tool; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Robust learning of Gaussian mixtures"};
    app.require_subcommand(1);
    Options o;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment JSON");
        sub->add_option("--seed", o.seed, "random seed");
        sub->add_option("--out", o.out, "output directory");
        sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
    };
    CLI::App* gen = app.add_subcommand("gen", "draw clean and corrupted samples");
    common(gen);
    CLI::App* run = app.add_subcommand("run", "learn a mixture from two corrupted samples");
    common(run);
    run->add_option("--samples-a", o.samples_a, "learning sample CSV (default OUT/sample_a.csv)");
    run->add_option("--samples-b", o.samples_b, "selection sample CSV (default OUT/sample_b.csv)");
    run->add_option("--truth", o.truth, "true mixture JSON; adds TV to the report");
    CLI::App* eval = app.add_subcommand("eval", "compare a hypothesis with the true mixture");
    common(eval);
    eval->add_option("--truth", o.truth, "true mixture JSON")->required();
    eval->add_option("--hypothesis", o.hypothesis, "hypothesis JSON")->required();
    eval->add_option("--n-mc", o.n_mc, "Monte Carlo draws for TV");
    eval->add_option("--tv-tol", o.tv_tol, "TV tolerance for component matching");
    CLI::App* bench = app.add_subcommand("bench", "sweep the (eps, n, k, d) grid");
    common(bench);
    CLI::App* defaults = app.add_subcommand("defaults", "print the default experiment config");
    common(defaults);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input_error;
    }
    try {
        if (gen->parsed()) return cmd_gen(o);
        if (run->parsed()) return cmd_run(o);
        if (eval->parsed()) return cmd_eval(o);
        if (bench->parsed()) return cmd_bench(o);
        return cmd_defaults(o, out);
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    } catch (const AlgorithmFailure& e) {
        err << "pipeline failure: " << e.what() << "\n";
        return exit_pipeline_failure;
    } catch (const std::runtime_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_input_error;
    }
}

}  // namespace rgmm::cli
