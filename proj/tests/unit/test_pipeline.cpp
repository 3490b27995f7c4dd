#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "rgmm/contamination/contamination.hpp"
#include "rgmm/core/sampling.hpp"
#include "rgmm/core/tv.hpp"
#include "rgmm/pipeline/learn.hpp"

using namespace rgmm;

namespace {

GaussianMixture separated_pair(Index d) {
    VectorXd far = VectorXd::Zero(d);
    far(0) = 4.0;
    return {{0.5, 0.5}, {GaussianComponent::standard(d), {far, MatrixXd::Identity(d, d)}}};
}

GaussianMixture thin_pair() {
    MatrixXd thin = MatrixXd::Identity(3, 3);
    thin(2, 2) = 1e-6;
    VectorXd offset = VectorXd::Zero(3);
    offset(2) = 3.0;
    return {{0.5, 0.5}, {GaussianComponent::standard(3), {offset, thin}}};
}

PipelineConfig forced(int k, double eps, double p_light, double p_cluster) {
    PipelineConfig cfg;
    cfg.k = k;
    cfg.eps = eps;
    cfg.constants["branch.p_light"] = p_light;
    cfg.constants["branch.p_cluster"] = p_cluster;
    return cfg;
}

const std::set<std::string>& known_steps() {
    static const std::set<std::string> s{"light-noise", "base-case", "partial-cluster", "decode-leaf",
                                         "spectral-split", "spectral-small-side", "abort", "isotropize"};
    return s;
}

}  // namespace

TEST(Schedule, SuperfactorialMatchesProductOfFactorials) {
    EXPECT_DOUBLE_EQ(superfactorial(1), 1.0);
    EXPECT_DOUBLE_EQ(superfactorial(3), 2.0);    // 2!·1!·0!
    EXPECT_DOUBLE_EQ(superfactorial(4), 12.0);   // 3!·2!·1!·0!
    EXPECT_DOUBLE_EQ(superfactorial(5), 288.0);  // 4!·3!·2!·1!·0!
}

TEST(Schedule, ErrorExponentFormula) {
    // k = 1, C = 1: 1/(100 · 1 · sf(2) · 1!) with sf(2) = 1.
    EXPECT_DOUBLE_EQ(error_exponent(1, 1.0), 0.01);
    // k = 2, C = 2: 1/(100² · 2^6 · sf(3) · 2!) = 1/(10^4 · 64 · 2 · 2).
    EXPECT_DOUBLE_EQ(error_exponent(2, 2.0), 1.0 / (1e4 * 64.0 * 4.0));
}

TEST(Schedule, ExponentsAreFlooredAndRecorded) {
    ExponentSchedule s = ExponentSchedule::make(2, 1.0, 0.5);
    for (const auto& site : s.sites) {
        EXPECT_TRUE(site.floored) << site.name;
        EXPECT_DOUBLE_EQ(site.used, 0.5);
    }
    // 1/(10 · C^3 · 3!) at k = 2, C = 1.
    EXPECT_DOUBLE_EQ(s.sites[0].formula, 1.0 / 60.0);
    ExponentSchedule raw = ExponentSchedule::make(1, 0.1, 0.0);
    // 1/(5 · 0.01 · 2) = 10 exceeds any floor below it.
    EXPECT_DOUBLE_EQ(raw.exponent("cluster_accuracy"), 10.0);
    EXPECT_FALSE(raw.sites[1].floored);
    EXPECT_DOUBLE_EQ(s.power(0.04, "eigen_threshold"), 0.2);
}

TEST(Config, ValidationRejectsBadValues) {
    PipelineConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.eps = 0.5;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = PipelineConfig{};
    cfg.outer_budget = 0;
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = PipelineConfig{};
    cfg.constants.erase("tournament.eta");
    EXPECT_THROW(cfg.validate(), InvalidInput);
    cfg = PipelineConfig{};
    cfg.constants["branch.p_light"] = 1.5;
    EXPECT_THROW(cfg.validate(), InvalidInput);
}

TEST(WeightGuess, SingleComponentIsOne) {
    Rng rng(1);
    EXPECT_EQ(weight_guess(1, 0.1, rng), std::vector<double>{1.0});
    EXPECT_EQ(weight_guess_grid(1, 0.2, rng), std::vector<double>{1.0});
}

TEST(WeightGuess, MeanIsUniformAndSumWithinKEps) {
    // A uniform point of the simplex has mean (1/k, …, 1/k) by symmetry; the scale factor has mean 1.
    Rng rng(2);
    int k = 4;
    double eps = 0.05;
    std::vector<double> mean(4, 0.0);
    for (int t = 0; t < 10000; ++t) {
        auto w = weight_guess(k, eps, rng);
        double s = 0.0;
        for (int i = 0; i < k; ++i) {
            EXPECT_GE(w[static_cast<std::size_t>(i)], 0.0);
            mean[static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(i)] / 10000.0;
            s += w[static_cast<std::size_t>(i)];
        }
        EXPECT_LE(std::abs(s - 1.0), k * eps + 1e-12);
    }
    for (double m : mean) EXPECT_NEAR(m, 0.25, 0.02);
}

TEST(WeightGuess, DeterministicGivenSeed) {
    Rng a(3), b(3);
    EXPECT_EQ(weight_guess(3, 0.1, a), weight_guess(3, 0.1, b));
}

TEST(WeightGuess, GridValuesAreMultiplesBeforeNormalization) {
    Rng rng(4);
    for (int t = 0; t < 100; ++t) {
        auto w = weight_guess_grid(3, 0.25, rng);
        double s = 0.0;
        for (double x : w) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12);
        // Ratios of grid values are ratios of integers in [1, 4].
        double r = w[0] / w[1] * 12.0;
        EXPECT_NEAR(r, std::round(r), 1e-9);
    }
}

TEST(Tournament, EmptyListIsRejected) {
    Rng rng(5);
    EXPECT_THROW(tournament_select({}, MatrixXd::Zero(100, 2), 0.1, rng), InvalidInput);
}

TEST(Tournament, SingletonReturnsZero) {
    Rng rng(6);
    GaussianMixture truth = separated_pair(2);
    MatrixXd pts = sample_mixture(truth, 1000, rng).points;
    EXPECT_EQ(tournament_select({truth}, pts, 0.1, rng).winner, 0U);
}

TEST(Tournament, IdenticalHypothesesPickIndexZero) {
    Rng rng(7);
    GaussianMixture truth = separated_pair(2);
    MatrixXd pts = sample_mixture(truth, 2000, rng).points;
    EXPECT_EQ(tournament_select({truth, truth, truth, truth, truth}, pts, 0.1, rng).winner, 0U);
}

TEST(Tournament, UndersizedSampleIsRejected) {
    Rng rng(8);
    GaussianMixture truth = separated_pair(2);
    MatrixXd pts = sample_mixture(truth, 100, rng).points;
    // log(2)/0.05² ≈ 277 points are required.
    EXPECT_THROW(tournament_select({truth, truth}, pts, 0.05, rng), InvalidInput);
}

TEST(Tournament, TruthBeatsWideAlternative) {
    GaussianMixture truth = separated_pair(3);
    GaussianMixture wide = GaussianMixture::single({VectorXd::Zero(3), 100.0 * MatrixXd::Identity(3, 3)});
    int wins = 0;
    TournamentOptions opt;
    opt.mc_samples = 2000;
    for (int t = 0; t < 100; ++t) {
        Rng rng(100 + t);
        SampleSet s = sample_mixture(truth, 2000, rng);
        ContaminationSpec spec;
        spec.eps = 0.01;
        MatrixXd pts = strong_contaminate(s, spec, rng).samples.points;
        // Alternate the position of the truth so the tie rule cannot help it.
        bool first = t % 2 == 0;
        std::vector<GaussianMixture> list = first ? std::vector<GaussianMixture>{truth, wide} : std::vector<GaussianMixture>{wide, truth};
        wins += tournament_select(list, pts, 0.1, rng, opt).winner == (first ? 0U : 1U);
    }
    EXPECT_GE(wins, 95);
}

TEST(Tournament, WinnerDeficitWithinThreeEtaOfEveryOpponent) {
    Rng rng(9);
    GaussianMixture truth = separated_pair(2);
    std::vector<GaussianMixture> list;
    for (int i = 0; i < 8; ++i) {
        GaussianMixture h = truth;
        h.components[1].mean(0) += 0.5 * i;
        h.components[0].cov *= 1.0 + 0.2 * i;
        list.push_back(h);
    }
    std::reverse(list.begin(), list.end());
    double eta = 0.05;
    MatrixXd pts = sample_mixture(truth, 5000, rng).points;
    TournamentResult r = tournament_select(list, pts, eta, rng);
    ASSERT_FALSE(r.cycled);
    int rechecks = 0;
    for (const auto& c : r.ledger) {
        if (!c.recheck || (c.i != r.winner && c.j != r.winner)) continue;
        ++rechecks;
        double mine = c.i == r.winner ? c.deficit_i : c.deficit_j;
        double theirs = c.i == r.winner ? c.deficit_j : c.deficit_i;
        EXPECT_LE(mine, theirs + 3.0 * eta);
    }
    EXPECT_EQ(rechecks, 7);
    EXPECT_EQ(r.winner, 7U);
}

TEST(ClusterOrDecode, SingleGaussianWithinSamplingError) {
    Rng rng(10);
    MatrixXd cov(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    GaussianComponent c{VectorXd::Constant(2, 1.0), cov};
    MatrixXd pts = sample_component(c, 20000, rng);
    PipelineConfig cfg = forced(1, 0.01, 0.5, 0.5);
    AttemptResult r = cluster_or_decode(pts, 1, 0.01, cfg, rng);
    ASSERT_TRUE(r.hypothesis.has_value());
    EXPECT_EQ(r.trace.step, "base-case");
    const auto& h = r.hypothesis->mixture.components[0];
    EXPECT_LT((h.mean - c.mean).norm(), 0.1);
    EXPECT_LT((h.cov - c.cov).norm(), 0.2);
}

TEST(ClusterOrDecode, ForcedDecodeSucceedsSometimes) {
    GaussianMixture truth = separated_pair(3);
    Rng data(11);
    MatrixXd pts = sample_mixture(truth, 20000, data).points;
    PipelineConfig cfg = forced(2, 0.01, 0.0, 0.0);
    bool hit = false;
    for (int t = 0; t < 200 && !hit; ++t) {
        Rng rng(derive_seed(11, static_cast<std::uint64_t>(t)));
        AttemptResult r = cluster_or_decode(pts, 2, 0.0, cfg, rng);
        if (!r.hypothesis) continue;
        EXPECT_EQ(r.trace.step, "decode-leaf");
        Rng tv_rng(t);
        hit = tv_monte_carlo(truth, r.hypothesis->mixture, 20000, tv_rng).value <= 0.2;
    }
    EXPECT_TRUE(hit);
}

TEST(ClusterOrDecode, ThinComponentReachesSpectralSplit) {
    GaussianMixture truth = thin_pair();
    Rng data(12);
    MatrixXd pts = sample_mixture(truth, 10000, data).points;
    PipelineConfig cfg = forced(2, 0.01, 0.5, 0.5);
    int spectral = 0;
    for (int t = 0; t < 100; ++t) {
        Rng rng(derive_seed(12, static_cast<std::uint64_t>(t)));
        AttemptResult r = cluster_or_decode(pts, 2, 0.01, cfg, rng);
        std::vector<std::string> steps;
        r.trace.collect_steps(steps);
        spectral += std::count(steps.begin(), steps.end(), "spectral-split") + std::count(steps.begin(), steps.end(), "spectral-small-side") > 0;
    }
    // A quarter of the attempts reach the decode leaf, where the thin candidate triggers the split.
    EXPECT_GE(spectral, 5);
}

TEST(ClusterOrDecode, TracesAreWellFormedAndWeightsPreserved) {
    GaussianMixture truth = thin_pair();
    Rng data(13);
    MatrixXd pts = sample_mixture(truth, 6000, data).points;
    double eps = 0.01;
    PipelineConfig cfg = forced(2, eps, 0.5, 0.5);
    for (int t = 0; t < 40; ++t) {
        Rng rng(derive_seed(13, static_cast<std::uint64_t>(t)));
        AttemptResult r = cluster_or_decode(pts, 2, eps, cfg, rng);
        EXPECT_LE(r.trace.depth(), 2);
        std::vector<std::string> steps;
        r.trace.collect_steps(steps);
        for (const auto& s : steps) EXPECT_TRUE(known_steps().contains(s)) << s;
        if (r.hypothesis) {
            EXPECT_EQ(r.hypothesis->mixture.k(), 2U);
            EXPECT_LE(std::abs(r.hypothesis->raw_weight_sum - 1.0), 2 * eps + 1e-12);
            EXPECT_NO_THROW(r.hypothesis->mixture.validate());
        }
    }
}

TEST(ClusterOrDecode, RejectsNonPositiveK) {
    Rng rng(14);
    EXPECT_THROW(cluster_or_decode(MatrixXd::Zero(10, 2), 0, 0.1, PipelineConfig{}, rng), InvalidInput);
}

TEST(LearnGmm, BudgetOneReturnsTheOnlyHypothesis) {
    GaussianMixture truth = GaussianMixture::single(GaussianComponent::standard(2));
    Rng rng(15);
    MatrixXd a = sample_mixture(truth, 3000, rng).points;
    MatrixXd b = sample_mixture(truth, 3000, rng).points;
    PipelineConfig cfg = forced(1, 0.02, 0.5, 0.5);
    cfg.outer_budget = 1;
    LearnResult r = learn_gmm(a, b, 1, 0.02, cfg, rng, &truth);
    ASSERT_TRUE(r.report.success);
    EXPECT_EQ(r.report.chosen_index, 0U);
    EXPECT_EQ(r.report.list_sizes.at("hypotheses"), 1U);
    ASSERT_TRUE(r.report.tv.has_value());
    EXPECT_LT(r.report.tv->value, 0.1);
}

TEST(LearnGmm, ReportCarriesTraceAndConstants) {
    GaussianMixture truth = separated_pair(2);
    Rng rng(16);
    MatrixXd a = sample_mixture(truth, 4000, rng).points;
    MatrixXd b = sample_mixture(truth, 4000, rng).points;
    PipelineConfig cfg = forced(2, 0.02, 0.5, 0.5);
    cfg.outer_budget = 6;
    LearnResult r = learn_gmm(a, b, 2, 0.02, cfg, rng, &truth);
    EXPECT_EQ(r.report.traces.size(), 6U);
    EXPECT_EQ(r.report.config.constants, cfg.constants);
    EXPECT_EQ(r.report.schedule.sites.size(), 6U);
    EXPECT_FALSE(r.report.warnings.empty());  // floored exponents are reported
}

TEST(LearnGmm, BitReproducibleAcrossRunsAndThreads) {
    GaussianMixture truth = separated_pair(2);
    Rng data(17);
    MatrixXd a = sample_mixture(truth, 4000, data).points;
    MatrixXd b = sample_mixture(truth, 4000, data).points;
    PipelineConfig cfg = forced(2, 0.02, 0.5, 0.5);
    cfg.outer_budget = 8;
    Rng r1(99), r2(99), r3(99);
    LearnResult x = learn_gmm(a, b, 2, 0.02, cfg, r1);
    LearnResult y = learn_gmm(a, b, 2, 0.02, cfg, r2);
    cfg.threads = 3;
    LearnResult z = learn_gmm(a, b, 2, 0.02, cfg, r3);
    ASSERT_TRUE(x.hypothesis && y.hypothesis && z.hypothesis);
    for (const auto* other : {&y, &z}) {
        EXPECT_EQ(x.report.chosen_index, other->report.chosen_index);
        EXPECT_EQ(x.hypothesis->mixture.weights, other->hypothesis->mixture.weights);
        for (std::size_t i = 0; i < x.hypothesis->mixture.k(); ++i) {
            EXPECT_TRUE(x.hypothesis->mixture.components[i].mean == other->hypothesis->mixture.components[i].mean);
            EXPECT_TRUE(x.hypothesis->mixture.components[i].cov == other->hypothesis->mixture.components[i].cov);
        }
    }
}

TEST(LearnGmm, NoHypothesesGivesFailureReport) {
    // A single Gaussian cannot be split, so forced partial clustering always fails.
    GaussianMixture truth = GaussianMixture::single(GaussianComponent::standard(2));
    Rng rng(18);
    MatrixXd a = sample_mixture(truth, 3000, rng).points;
    MatrixXd b = sample_mixture(truth, 3000, rng).points;
    PipelineConfig cfg = forced(2, 0.02, 0.0, 1.0);
    cfg.outer_budget = 3;
    LearnResult r = learn_gmm(a, b, 2, 0.02, cfg, rng);
    EXPECT_FALSE(r.report.success);
    EXPECT_FALSE(r.hypothesis.has_value());
    EXPECT_EQ(r.report.list_sizes.at("hypotheses"), 0U);
    EXPECT_FALSE(r.report.failure.empty());
}
