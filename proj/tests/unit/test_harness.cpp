#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rgmm/harness/cli.hpp"
#include "support/oracles.hpp"

using namespace rgmm;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("rgmm_harness_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "rgmm_cli");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p);
    out << s;
}

const char* k1_spec = R"({"generator": {"k": 1, "d": 2}, "contamination": {"model": "strong", "eps": 0.1},
  "n": 100, "pipeline": {"k": 1, "eps": 0.1, "outer_budget": 2}})";

const char* k1_run_spec = R"({"generator": {"k": 1, "d": 2}, "contamination": {"model": "strong", "eps": 0.0},
  "n": 1000, "pipeline": {"k": 1, "eps": 0.01, "outer_budget": 2}})";

GaussianMixture pair_2d() {
    VectorXd m1(2);
    m1 << 3.0, -1.0;
    MatrixXd c1(2, 2);
    c1 << 2.0, 0.3, 0.3, 0.5;
    return {{0.3, 0.7}, {GaussianComponent::standard(2), {m1, c1}}};
}

}  // namespace

TEST(JsonIo, MixtureRoundTripIsExact) {
    GaussianMixture m = pair_2d();
    GaussianMixture back = io::mixture_from_json(io::Json::parse(io::mixture_json(m).dump()));
    ASSERT_EQ(back.k(), 2);
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(back.weights[i], m.weights[i]);
        EXPECT_EQ(back.components[i].mean, m.components[i].mean);
        EXPECT_EQ(back.components[i].cov, m.components[i].cov);
    }
}

TEST(JsonIo, ConfigRoundTripAndUnknownConstant) {
    PipelineConfig cfg;
    cfg.k = 3;
    cfg.eps = 0.07;
    cfg.constants["decode.c"] = 2.5;
    PipelineConfig back = io::config_from_json(io::config_json(cfg));
    EXPECT_EQ(back.k, 3);
    EXPECT_EQ(back.eps, 0.07);
    EXPECT_EQ(back.constants, cfg.constants);
    io::Json bad = {{"constants", {{"no.such.key", 1.0}}}};
    EXPECT_THROW(io::config_from_json(bad), InvalidInput);
}

TEST(JsonIo, MalformedMixtureRejected) {
    EXPECT_THROW(io::mixture_from_json(io::Json::parse(R"({"weights": [1.0]})")), InvalidInput);
    EXPECT_THROW(io::mixture_from_json(io::Json::parse(R"({"weights": [0.5], "components": [{"mean": [0], "cov": [[1]]}]})")), InvalidInput);
    EXPECT_THROW(io::mixture_from_json(io::Json::parse(R"({"weights": [1.0], "components": [{"mean": [0, 1], "cov": [[1]]}]})")), InvalidInput);
}

TEST(CsvIo, SamplesRoundTripIsExact) {
    Rng rng(5);
    GaussianMixture m = pair_2d();
    SampleSet s = sample_mixture(m, 50, rng);
    ContaminationSpec spec;
    spec.eps = 0.1;
    SampleSet c = strong_contaminate(s, spec, rng).samples;
    std::stringstream ss;
    io::write_samples_csv(ss, c, 17);
    EXPECT_EQ(ss.str().rfind("# seed=17\n", 0), 0u);
    SampleSet back = io::read_samples_csv(ss);
    EXPECT_EQ(back.points, c.points);
    EXPECT_EQ(back.labels, c.labels);
    EXPECT_EQ(back.corrupted, c.corrupted);
}

TEST(CsvIo, BadCellRejected) {
    std::stringstream ss("x0,x1\n1,2\n3,abc\n");
    EXPECT_THROW(io::read_samples_csv(ss), InvalidInput);
    std::stringstream ragged("x0,x1\n1,2,3\n");
    EXPECT_THROW(io::read_samples_csv(ragged), InvalidInput);
}

TEST(CliGen, WritesSeededPairsAndTruth) {
    fs::path dir = scratch("gen");
    write_text(dir / "spec.json", k1_spec);
    ASSERT_EQ(invoke({"gen", "--config", (dir / "spec.json").string(), "--seed", "11", "--out", (dir / "a").string()}), 0);
    SampleSet a = io::load_samples_csv((dir / "a" / cli::sample_a_file).string());
    EXPECT_EQ(a.size(), 100);
    EXPECT_EQ(a.dim(), 2);
    ASSERT_EQ(a.corrupted.size(), 100u);
    EXPECT_EQ(std::count(a.corrupted.begin(), a.corrupted.end(), true), 10);
    SampleSet clean = io::load_samples_csv((dir / "a" / cli::clean_a_file).string());
    EXPECT_EQ(std::count(clean.corrupted.begin(), clean.corrupted.end(), true), 0);
    for (const char* f : {cli::sample_a_file, cli::sample_b_file, cli::clean_a_file, cli::clean_b_file})
        EXPECT_EQ(slurp(dir / "a" / f).rfind("# seed=11\n", 0), 0u) << f;
    io::Json truth = io::read_json_file((dir / "a" / cli::truth_file).string());
    EXPECT_EQ(truth["seed"].get<std::uint64_t>(), 11u);
    EXPECT_EQ(io::mixture_from_json(truth).k(), 1);
}

TEST(CliGen, SameSeedSameFiles) {
    fs::path dir = scratch("gen_repeat");
    write_text(dir / "spec.json", k1_spec);
    for (const char* sub : {"a", "b"}) ASSERT_EQ(invoke({"gen", "--config", (dir / "spec.json").string(), "--seed", "3", "--out", (dir / sub).string()}), 0);
    for (const char* f : {cli::sample_a_file, cli::sample_b_file, cli::clean_a_file, cli::clean_b_file, cli::truth_file})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    ASSERT_EQ(invoke({"gen", "--config", (dir / "spec.json").string(), "--seed", "4", "--out", (dir / "c").string()}), 0);
    EXPECT_NE(slurp(dir / "a" / cli::sample_a_file), slurp(dir / "c" / cli::sample_a_file));
}

TEST(CliRun, SingleComponentAndRepeatable) {
    fs::path dir = scratch("run");
    write_text(dir / "spec.json", k1_run_spec);
    std::string spec = (dir / "spec.json").string(), out = dir.string();
    ASSERT_EQ(invoke({"gen", "--config", spec, "--seed", "2", "--out", out}), 0);
    ASSERT_EQ(invoke({"run", "--config", spec, "--seed", "2", "--out", out, "--truth", (dir / cli::truth_file).string()}), 0);
    std::string first = slurp(dir / cli::hypothesis_file);
    GaussianMixture h = io::load_mixture((dir / cli::hypothesis_file).string());
    EXPECT_EQ(h.k(), 1);
    io::Json report = io::read_json_file((dir / cli::report_file).string());
    EXPECT_TRUE(report["success"].get<bool>());
    EXPECT_EQ(report["seed"].get<std::uint64_t>(), 2u);
    EXPECT_FALSE(report["branch_trace"].empty());
    EXPECT_EQ(report["constants"].size(), default_constants().size());
    EXPECT_LT(report["tv_vs_truth"]["value"].get<double>(), 0.2);
    ASSERT_EQ(invoke({"run", "--config", spec, "--seed", "2", "--out", out}), 0);
    EXPECT_EQ(slurp(dir / cli::hypothesis_file), first);
}

TEST(CliRun, MissingInputIsExitTwo) {
    fs::path dir = scratch("missing");
    EXPECT_EQ(invoke({"run", "--out", dir.string()}), cli::exit_input_error);
    EXPECT_EQ(invoke({"run", "--config", (dir / "absent.json").string(), "--out", dir.string()}), cli::exit_input_error);
    EXPECT_EQ(invoke({"eval", "--truth", (dir / "t.json").string(), "--hypothesis", (dir / "h.json").string()}), cli::exit_input_error);
    EXPECT_EQ(invoke({"no-such-command"}), cli::exit_input_error);
}

TEST(CliRun, PipelineFailureIsExitOneWithReport) {
    fs::path dir = scratch("fail");
    // 100 evaluation rows are below the tournament sample floor for two hypotheses.
    write_text(dir / "spec.json", R"({"generator": {"k": 1, "d": 2}, "n": 100, "pipeline": {"k": 1, "eps": 0.1, "outer_budget": 2}})");
    std::string spec = (dir / "spec.json").string();
    ASSERT_EQ(invoke({"gen", "--config", spec, "--out", dir.string()}), 0);
    EXPECT_EQ(invoke({"run", "--config", spec, "--out", dir.string()}), cli::exit_pipeline_failure);
    io::Json report = io::read_json_file((dir / cli::report_file).string());
    EXPECT_FALSE(report["success"].get<bool>());
    EXPECT_FALSE(report["failure"].get<std::string>().empty());
    EXPECT_FALSE(fs::exists(dir / cli::hypothesis_file));
}

TEST(CliEval, IdenticalMixturesMatchPerfectly) {
    fs::path dir = scratch("eval_same");
    io::save_mixture((dir / "t.json").string(), pair_2d());
    ASSERT_EQ(invoke({"eval", "--truth", (dir / "t.json").string(), "--hypothesis", (dir / "t.json").string(), "--out", dir.string(), "--seed", "1"}), 0);
    io::Json j = io::read_json_file((dir / cli::metrics_file).string());
    EXPECT_LT(j["tv"].get<double>(), 0.01);
    EXPECT_EQ(j["truth_to_hypothesis"], io::Json::parse("[0, 1]"));
    EXPECT_NEAR(j["max_weight_gap"].get<double>(), 0.0, 1e-12);
    EXPECT_NEAR(j["unmatched_weight"].get<double>(), 0.0, 1e-12);
    EXPECT_EQ(j["seed"].get<std::uint64_t>(), 1u);
}

TEST(CliEval, PermutedComponentsGiveIdenticalMetrics) {
    fs::path dir = scratch("eval_perm");
    GaussianMixture truth = pair_2d();
    GaussianMixture hyp = truth;
    hyp.components[1].mean(0) += 0.2;
    GaussianMixture perm{{hyp.weights[1], hyp.weights[0]}, {hyp.components[1], hyp.components[0]}};
    io::save_mixture((dir / "t.json").string(), truth);
    io::save_mixture((dir / "h.json").string(), hyp);
    io::save_mixture((dir / "p.json").string(), perm);
    ASSERT_EQ(invoke({"eval", "--truth", (dir / "t.json").string(), "--hypothesis", (dir / "h.json").string(), "--out", (dir / "h").string()}), 0);
    ASSERT_EQ(invoke({"eval", "--truth", (dir / "t.json").string(), "--hypothesis", (dir / "p.json").string(), "--out", (dir / "p").string()}), 0);
    io::Json a = io::read_json_file((dir / "h" / cli::metrics_file).string());
    io::Json b = io::read_json_file((dir / "p" / cli::metrics_file).string());
    EXPECT_NEAR(a["tv"].get<double>(), b["tv"].get<double>(), 4.0 * a["tv_std_error"].get<double>() + 1e-3);
    for (const char* key : {"max_weight_gap", "unmatched_weight"}) EXPECT_EQ(a[key], b[key]) << key;
    for (const char* key : {"weight_gap", "cluster_weight", "hypothesis_weight"}) {
        EXPECT_EQ(a[key][0], b[key][1]) << key;
        EXPECT_EQ(a[key][1], b[key][0]) << key;
    }
    EXPECT_EQ(a["truth_to_hypothesis"], io::Json::parse("[0, 1]"));
    EXPECT_EQ(b["truth_to_hypothesis"], io::Json::parse("[1, 0]"));
}

TEST(CliEval, OneDimensionalTvMatchesQuadrature) {
    fs::path dir = scratch("eval_1d");
    GaussianMixture p{{0.4, 0.6}, {{VectorXd::Constant(1, -1.0), MatrixXd::Constant(1, 1, 1.0)}, {VectorXd::Constant(1, 2.0), MatrixXd::Constant(1, 1, 0.5)}}};
    GaussianMixture q{{1.0}, {{VectorXd::Constant(1, 0.5), MatrixXd::Constant(1, 1, 3.0)}}};
    io::save_mixture((dir / "p.json").string(), p);
    io::save_mixture((dir / "q.json").string(), q);
    ASSERT_EQ(invoke({"eval", "--truth", (dir / "p.json").string(), "--hypothesis", (dir / "q.json").string(), "--out", dir.string(), "--n-mc", "200000"}), 0);
    double mc = io::read_json_file((dir / cli::metrics_file).string())["tv"].get<double>();
    auto diff = [](double x) {
        double fp = 0.4 * rgmm_test::normal_pdf(x, -1.0, 1.0) + 0.6 * rgmm_test::normal_pdf(x, 2.0, 0.5);
        double fq = rgmm_test::normal_pdf(x, 0.5, 3.0);
        return std::abs(fp - fq);
    };
    double exact = 0.5 * rgmm_test::simpson(diff, -20.0, 20.0);
    EXPECT_NEAR(mc, exact, 0.01);
}

TEST(CliBench, EmptyGridGivesHeaderOnlyTable) {
    fs::path dir = scratch("bench_empty");
    write_text(dir / "spec.json", R"({"grid": {"eps": [], "n": [1000], "k": [1], "d": [2]}})");
    ASSERT_EQ(invoke({"bench", "--config", (dir / "spec.json").string(), "--out", dir.string(), "--seed", "9"}), 0);
    EXPECT_EQ(slurp(dir / cli::bench_file), "# seed=9\neps,n,k,d,trials,failures,tv_median,tv_q1,tv_q3\n");
}

TEST(CliBench, SingleCellSingleTrial) {
    fs::path dir = scratch("bench_one");
    write_text(dir / "spec.json", R"({"pipeline": {"outer_budget": 2}, "grid": {"eps": [0.05], "n": [1000], "k": [1], "d": [2], "trials": 1}})");
    ASSERT_EQ(invoke({"bench", "--config", (dir / "spec.json").string(), "--out", dir.string()}), 0);
    std::istringstream in(slurp(dir / cli::bench_file));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[2].rfind("0.05,1000,1,2,1,0,", 0), 0u);
}

TEST(Bench, ThreadCountDoesNotChangeTable) {
    ExperimentSpec spec;
    spec.pipeline.outer_budget = 2;
    BenchGrid g{{0.0, 0.05}, {1000}, {1}, {2}, 2};
    auto one = run_bench(spec, g, 4, 1);
    auto two = run_bench(spec, g, 4, 2);
    ASSERT_EQ(one.size(), 2u);
    for (std::size_t i = 0; i < one.size(); ++i) {
        EXPECT_EQ(one[i].tv_median, two[i].tv_median);
        EXPECT_EQ(one[i].tv_q1, two[i].tv_q1);
        EXPECT_EQ(one[i].tv_q3, two[i].tv_q3);
    }
}

TEST(Bench, MedianTvNonDecreasingInEps) {
    ExperimentSpec spec;
    spec.pipeline.outer_budget = 20;
    BenchGrid g{{0.0, 0.05}, {2000}, {2}, {2}, 5};
    auto rows = run_bench(spec, g, 1, 1);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].failures + rows[1].failures, 0);
    EXPECT_LE(rows[0].tv_median, rows[1].tv_median);
}

TEST(Bench, FailuresRecordedPerCell) {
    ExperimentSpec spec;
    spec.pipeline.outer_budget = 2;
    // n = 50 is below the tournament sample floor, so each trial fails and the run continues.
    BenchGrid g{{0.05}, {50, 1000}, {1}, {2}, 2};
    auto rows = run_bench(spec, g, 2, 1);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].failures, 2);
    EXPECT_TRUE(std::isnan(rows[0].tv_median));
    EXPECT_EQ(rows[0].errors.size(), 2u);
    EXPECT_EQ(rows[1].failures, 0);
}
