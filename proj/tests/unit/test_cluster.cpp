#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "rgmm/cluster/moment_matrix.hpp"
#include "rgmm/cluster/partial_cluster.hpp"
#include "rgmm/cluster/rounding.hpp"
#include "rgmm/cluster/separation.hpp"
#include "rgmm/contamination/contamination.hpp"
#include "rgmm/core/sampling.hpp"
#include "support/instances.hpp"

using namespace rgmm;

namespace {

std::vector<int> block_labels(Index n1, Index n2) {
    std::vector<int> l(static_cast<std::size_t>(n1), 0);
    l.insert(l.end(), static_cast<std::size_t>(n2), 1);
    return l;
}

MomentMatrix block_matrix(Index n1, Index n2, double alpha) {
    MatrixXd pts = MatrixXd::Zero(n1 + n2, 1);
    auto labels = block_labels(n1, n2);
    OracleParams p;
    p.alpha = alpha;
    Rng rng(1);
    return moment_matrix_oracle(pts, OracleMode::ground_truth, p, rng, &labels);
}

SampleSet two_spherical_clusters(Index n, Index d, double gap, std::uint64_t seed) {
    VectorXd far = VectorXd::Zero(d);
    far(0) = gap;
    GaussianMixture m({0.5, 0.5}, {GaussianComponent::standard(d), {far, MatrixXd::Identity(d, d)}});
    Rng rng(seed);
    return sample_mixture(m, n, rng);
}

}  // namespace

TEST(MomentMatrix, GroundTruthTwoBlocksIsExactBlockMatrix) {
    MomentMatrix m = block_matrix(5, 5, 0.5);
    for (Index i = 0; i < 10; ++i)
        for (Index j = 0; j < 10; ++j) EXPECT_EQ(m.entries(i, j), (i < 5) == (j < 5) ? 0.5 : 0.0);
    auto r = check_moment_matrix(m);
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.diagonal_deviation, 0.0);
    EXPECT_EQ(r.entry_excess, 0.0);
}

TEST(MomentMatrix, SingleClusterIsConstantAlpha) {
    MatrixXd pts = MatrixXd::Random(7, 2);
    std::vector<int> labels(7, 0);
    OracleParams p;
    p.alpha = 0.4;
    Rng rng(2);
    MomentMatrix m = moment_matrix_oracle(pts, OracleMode::ground_truth, p, rng, &labels);
    EXPECT_TRUE((m.entries.array() == 0.4).all());
}

TEST(MomentMatrix, GroundTruthRequiresLabels) {
    OracleParams p;
    p.alpha = 0.5;
    Rng rng(3);
    EXPECT_THROW(moment_matrix_oracle(MatrixXd::Zero(4, 2), OracleMode::ground_truth, p, rng), InvalidInput);
}

TEST(MomentMatrix, NoisePointsJoinNearestLabelledMean) {
    MatrixXd pts(5, 1);
    pts << 0.0, 0.1, 10.0, 10.1, 9.0;
    std::vector<int> labels{0, 0, 1, 1, -1};
    OracleParams p;
    p.alpha = 0.4;
    Rng rng(4);
    MomentMatrix m = moment_matrix_oracle(pts, OracleMode::ground_truth, p, rng, &labels);
    EXPECT_EQ(m.entries(4, 2), 0.4);
    EXPECT_EQ(m.entries(4, 0), 0.0);
}

TEST(MomentMatrix, UnequalBlocksBelowAlphaAreRejected) {
    // The 4-point block has row mean 0.5·0.4 = 0.2 < 0.25 − 0.0125.
    MatrixXd pts = MatrixXd::Zero(10, 1);
    auto labels = block_labels(6, 4);
    OracleParams p;
    p.alpha = 0.5;
    Rng rng(1);
    EXPECT_THROW(moment_matrix_oracle(pts, OracleMode::ground_truth, p, rng, &labels), InvalidInput);
}

TEST(MomentMatrix, InvariantViolationsAreNamed) {
    MomentMatrix m;
    m.alpha = 0.5;
    m.slack = default_moment_slack(0.5);
    m.entries = MatrixXd::Identity(4, 4) * 0.5;
    m.entries(0, 1) = 0.7;
    m.entries(2, 2) = 0.3;
    auto r = check_moment_matrix(m);
    EXPECT_FALSE(r.ok);
    ASSERT_EQ(r.violations.size(), 3U);
    EXPECT_NE(r.violations[0].find("entry"), std::string::npos);
    EXPECT_NE(r.violations[1].find("diagonal"), std::string::npos);
    EXPECT_NE(r.violations[2].find("row mean"), std::string::npos);
    EXPECT_THROW(require_moment_invariants(m), InvalidInput);
}

TEST(MomentMatrix, SlackBoundariesAreInclusive) {
    MomentMatrix m;
    m.alpha = 0.5;
    m.slack = 0.0625;
    m.entries = MatrixXd::Constant(3, 3, 0.5);
    m.entries(0, 1) = 0.5625;
    m.entries(1, 1) = 0.4375;
    EXPECT_TRUE(check_moment_matrix(m).ok);
    m.entries(0, 1) = 0.5626;
    EXPECT_FALSE(check_moment_matrix(m).ok);
}

TEST(MomentMatrix, AffinityReproducesTwoSeparatedBlocks) {
    SampleSet s = two_spherical_clusters(600, 3, 20.0, 5);
    OracleParams p;
    p.alpha = 0.5;
    p.components = 2;
    Rng rng(6);
    MomentMatrix m = moment_matrix_oracle(s.points, OracleMode::affinity, p, rng);
    double worst = 0.0;
    for (Index i = 0; i < m.size(); ++i)
        for (Index j = 0; j < m.size(); ++j) {
            double ideal = s.labels[static_cast<std::size_t>(i)] == s.labels[static_cast<std::size_t>(j)] ? 0.5 : 0.0;
            worst = std::max(worst, std::abs(m.entries(i, j) - ideal));
        }
    EXPECT_LE(worst, 0.1 * 0.5);
    EXPECT_TRUE(check_moment_matrix(m).ok);
}

TEST(MomentMatrix, MemoryGuardRefusesLargeInputs) {
    OracleParams p;
    p.alpha = 0.5;
    p.max_points = 10;
    Rng rng(7);
    std::vector<int> labels(11, 0);
    EXPECT_THROW(moment_matrix_oracle(MatrixXd::Zero(11, 2), OracleMode::ground_truth, p, rng, &labels), MemoryGuardExceeded);
}

TEST(Rounding, ThresholdsAndRowCountFollowTheirFormulas) {
    EXPECT_DOUBLE_EQ(rounding_threshold(0.5, 2, 0.1, RoundingVariant::upgraded), 0.125);
    EXPECT_DOUBLE_EQ(rounding_threshold(0.5, 2, 0.1, RoundingVariant::v1), 0.01 * std::pow(0.5, 5) / 2.0);
    // (1/0.5)·log(2/0.1) = 5.99 → 6.
    EXPECT_EQ(rounding_rows(0.5, 2, 0.1), 6);
    EXPECT_EQ(rounding_rows(1.0, 1, 0.9), 1);
}

TEST(Rounding, ExactBlockRowsYieldTheirBlocks) {
    MomentMatrix m = block_matrix(25, 25, 0.5);
    for (auto variant : {RoundingVariant::v1, RoundingVariant::upgraded}) {
        Rng rng(8);
        auto r = round_partition(m, 2, 0.1, variant, rng);
        ASSERT_EQ(r.clusters.size(), r.rows.size());
        for (std::size_t c = 0; c < r.clusters.size(); ++c) {
            bool first = r.rows[c] < 25;
            EXPECT_EQ(r.clusters[c].size(), 25U);
            for (Index j : r.clusters[c]) EXPECT_EQ(j < 25, first);
        }
    }
}

TEST(Rounding, ConstantMatrixGivesFullIndexSet) {
    MomentMatrix m;
    m.alpha = 0.3;
    m.entries = MatrixXd::Constant(12, 12, 0.3);
    Rng rng(9);
    auto r = round_partition(m, 3, 0.05, RoundingVariant::upgraded, rng);
    for (const auto& c : r.clusters) EXPECT_EQ(c.size(), 12U);
    EXPECT_EQ(r.uncovered, 0);
}

TEST(Rounding, EnoughRowsCoverBothBlocks) {
    MomentMatrix m = block_matrix(50, 50, 0.5);
    std::vector<double> coverage;
    for (int t = 0; t < 20; ++t) {
        Rng rng(100 + t);
        auto r = round_partition(m, 2, 0.01, RoundingVariant::upgraded, rng);
        coverage.push_back(1.0 - static_cast<double>(r.uncovered) / 100.0);
    }
    EXPECT_GE(median_of(coverage), 0.99);
}

TEST(Rounding, ClusterIsExactlyTheThresholdSupportOfItsRow) {
    MomentMatrix m;
    m.alpha = 0.5;
    m.entries = (MatrixXd::Random(40, 40).array().abs() * 0.5).matrix();
    Rng rng(11);
    auto r = round_partition(m, 2, 0.2, RoundingVariant::upgraded, rng);
    for (std::size_t c = 0; c < r.clusters.size(); ++c) {
        std::vector<Index> support;
        for (Index j = 0; j < 40; ++j)
            if (m.entries(r.rows[c], j) >= r.threshold) support.push_back(j);
        EXPECT_EQ(r.clusters[c], support);
    }
}

TEST(Merge, TauFormulaMatchesClosedForm) {
    // 10⁸·4⁴ / (0.01^{1/2}·0.25) = 1.024e12.
    EXPECT_NEAR(merge_tau_formula(0.5, 0.01), 1.024e12, 1.0);
    EXPECT_TRUE(std::isinf(merge_tau_formula(0.5, 0.0)));
}

TEST(Merge, SplitOfOneComponentIsMerged) {
    Rng rng(12);
    MatrixXd pts = sample_mixture(GaussianMixture::single(GaussianComponent::standard(3)), 4000, rng).points;
    std::vector<Index> a, b;
    for (Index i = 0; i < 4000; ++i) (i % 2 == 0 ? a : b).push_back(i);
    auto r = merge_clusters({a, b}, pts, {0.01, 0.01}, 0.1);
    ASSERT_EQ(r.groups.size(), 1U);
    EXPECT_EQ(r.group_points[0].size(), 4000U);
}

TEST(Merge, DiagonalGapKeepsClustersApart) {
    Rng rng(13);
    MatrixXd c = MatrixXd::Identity(3, 3);
    c(0, 0) = 5.0;
    MatrixXd p1 = sample_mixture(GaussianMixture::single(GaussianComponent::standard(3)), 2000, rng).points;
    MatrixXd p2 = sample_mixture(GaussianMixture::single({VectorXd::Zero(3), c}), 2000, rng).points;
    MatrixXd pts(4000, 3);
    pts << p1, p2;
    std::vector<Index> a(2000), b(2000);
    std::iota(a.begin(), a.end(), Index{0});
    std::iota(b.begin(), b.end(), Index{2000});
    auto r = merge_clusters({a, b}, pts, {0.01, 0.01}, 0.2);
    EXPECT_EQ(r.groups.size(), 2U);
}

TEST(Merge, SingleClusterIsSingleGroup) {
    MatrixXd pts = MatrixXd::Random(20, 2);
    std::vector<Index> all(20);
    std::iota(all.begin(), all.end(), Index{0});
    auto r = merge_clusters({all}, pts, {0.0}, 1.0);
    ASSERT_EQ(r.groups.size(), 1U);
    EXPECT_EQ(r.groups[0], std::vector<std::size_t>{0});
}

TEST(Merge, GroupsPartitionClustersAndCloseTransitively) {
    // Points on a line; cluster i holds the points at 0 and i·h, so S_i = (i·h)²/2 and
    // neighbours differ by less than 2τ while the ends do not.
    double h = 0.5;
    MatrixXd pts(6, 1);
    for (Index i = 0; i < 6; ++i) pts(i, 0) = static_cast<double>(i) * h;
    std::vector<std::vector<Index>> clusters;
    for (Index i = 1; i < 6; ++i) clusters.push_back({0, i});
    std::vector<double> s;
    for (Index i = 1; i < 6; ++i) s.push_back(std::pow(static_cast<double>(i) * h, 2) / 2.0);
    // Largest neighbour gap is s[4] − s[3] = 1.125; τ = 0.6 links every neighbour pair.
    auto r = merge_clusters(clusters, pts, std::vector<double>(5, 0.0), 0.6);
    ASSERT_EQ(r.groups.size(), 1U);
    EXPECT_GT(s[4] - s[0], 2.0 * 0.6);
    // τ = 0.3 links only the pairs with gap ≤ 0.6: gaps are 0.375, 0.625, 0.875, 1.125.
    r = merge_clusters(clusters, pts, std::vector<double>(5, 0.0), 0.3);
    std::multiset<std::size_t> seen;
    for (const auto& g : r.groups) seen.insert(g.begin(), g.end());
    EXPECT_EQ(seen.size(), 5U);
    EXPECT_EQ(std::set<std::size_t>(seen.begin(), seen.end()).size(), 5U);
    ASSERT_EQ(r.groups.size(), 4U);
    EXPECT_EQ(r.groups[0], (std::vector<std::size_t>{0, 1}));
}

TEST(Separation, IdenticalComponentsAreNotSeparated) {
    GaussianComponent a{VectorXd::Ones(3), MatrixXd::Identity(3, 3) * 2.0};
    auto r = separation_test(a, a, 1.5);
    EXPECT_EQ(r.kind, SeparationKind::none);
    EXPECT_FALSE(r.range_mismatch);
}

TEST(Separation, MeanGapGivesMeanDirection) {
    VectorXd mu = VectorXd::Zero(3);
    mu(1) = 10.0;
    GaussianComponent a = GaussianComponent::standard(3);
    GaussianComponent b{mu, MatrixXd::Identity(3, 3)};
    auto r = separation_test(a, b, 2.0);
    ASSERT_EQ(r.kind, SeparationKind::mean);
    // Closed form: δᵀ(2I)⁻¹δ = 50.
    EXPECT_NEAR(r.statistic, 50.0, 1e-9);
    EXPECT_NEAR(std::abs(r.witness(1)), 1.0, 1e-9);
}

TEST(Separation, SpectralGapGivesLargeVarianceAxis) {
    MatrixXd c = MatrixXd::Identity(2, 2);
    c(0, 0) = 100.0;
    auto r = separation_test(GaussianComponent::standard(2), {VectorXd::Zero(2), c}, 10.0);
    ASSERT_EQ(r.kind, SeparationKind::spectral);
    EXPECT_NEAR(r.statistic, 100.0, 1e-9);
    EXPECT_NEAR(std::abs(r.witness(0)), 1.0, 1e-9);
}

TEST(Separation, NullSpaceMassIsInfiniteSpectralGap) {
    MatrixXd c = MatrixXd::Identity(2, 2);
    c(1, 1) = 0.0;
    auto r = separation_test({VectorXd::Zero(2), c}, GaussianComponent::standard(2), 5.0);
    ASSERT_EQ(r.kind, SeparationKind::spectral);
    EXPECT_TRUE(std::isinf(r.statistic));
    EXPECT_NEAR(std::abs(r.witness(1)), 1.0, 1e-9);
}

TEST(Separation, ManySmallEigenShiftsGiveFrobeniusGap) {
    Index d = 50;
    VectorXd diag(d);
    for (Index i = 0; i < d; ++i) diag(i) = i % 2 == 0 ? 1.5 : 0.6;
    GaussianComponent b{VectorXd::Zero(d), MatrixXd(diag.asDiagonal())};
    auto r = separation_test(GaussianComponent::standard(d), b, 2.0);
    ASSERT_EQ(r.kind, SeparationKind::frobenius);
    // 25·0.5² + 25·0.4² = 10.25 against 2²·1.5² = 9.
    EXPECT_NEAR(r.statistic, 10.25, 1e-9);
    EXPECT_NEAR(r.bound, 9.0, 1e-9);
    EXPECT_NEAR(r.witness.norm(), 1.0, 1e-9);
}

TEST(Separation, RejectsNonPositiveDelta) {
    EXPECT_THROW(separation_test(GaussianComponent::standard(2), GaussianComponent::standard(2), 0.0), InvalidInput);
}

TEST(PartialCluster, TwoBlocksGroundTruthSplitExactly) {
    SampleSet s = two_spherical_clusters(400, 3, 10.0, 14);
    int exact = 0;
    for (int t = 0; t < 10; ++t) {
        PartialClusterOptions opt;
        opt.tau = 0.05;
        Rng rng(200 + t);
        auto r = partial_cluster(s.points, 2, 0.4, 0.0, 0.0, OracleMode::ground_truth, rng, opt, &s.labels);
        ASSERT_EQ(r.side1.size() + r.side2.size(), 400U);
        if (!r.trivial && r.min_purity() == 1.0) ++exact;
        EXPECT_TRUE(r.invariants.ok);
    }
    EXPECT_GE(exact, 5);
}

TEST(PartialCluster, SidesPartitionTheInput) {
    SampleSet s = two_spherical_clusters(300, 2, 8.0, 15);
    PartialClusterOptions opt;
    opt.tau = 0.05;
    Rng rng(16);
    auto r = partial_cluster(s.points, 2, 0.4, 0.0, 0.0, OracleMode::affinity, rng, opt);
    std::vector<Index> all = r.side1;
    all.insert(all.end(), r.side2.begin(), r.side2.end());
    std::sort(all.begin(), all.end());
    for (Index i = 0; i < 300; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);
}

TEST(PartialCluster, SingleComponentIsFlaggedTrivial) {
    Rng gen(17);
    SampleSet s = sample_mixture(GaussianMixture::single(GaussianComponent::standard(3)), 500, gen);
    Rng rng(18);
    auto r = partial_cluster(s.points, 1, 0.9, 0.0, 0.0, OracleMode::ground_truth, rng, {}, &s.labels);
    EXPECT_TRUE(r.trivial);
    EXPECT_EQ(r.groups.size(), 1U);
    EXPECT_EQ(r.side1.size(), 500U);
    EXPECT_TRUE(r.side2.empty());
}

TEST(PartialCluster, FarComponentIsolatedWithGroundTruthOracle) {
    GaussianMixture m = test_support::close_pair_and_far();
    std::vector<double> purity;
    for (int t = 0; t < 20; ++t) {
        Rng gen(300 + t);
        ContaminationSpec spec;
        spec.eps = 0.02;
        spec.scale = 50.0;
        SampleSet s = strong_contaminate(sample_mixture(m, 3000, gen), spec, gen).samples;
        auto labels = test_support::inlier_labels(s.labels, s.corrupted);
        PartialClusterOptions opt;
        opt.tau = 0.25;
        Rng rng(400 + t);
        auto r = partial_cluster(s.points, 3, 0.3, 0.02, 0.0, OracleMode::ground_truth, rng, opt, &labels);
        purity.push_back(r.trivial ? 0.0 : r.min_purity());
    }
    EXPECT_GE(median_of(purity), 0.98);
}

TEST(PartialCluster, GroundTruthOnSeparatedBlocksMisclassifiesNothing) {
    SampleSet s = two_spherical_clusters(500, 3, 12.0, 19);
    PartialClusterOptions opt;
    opt.tau = 0.05;
    Rng rng(20);
    auto r = partial_cluster(s.points, 2, 0.4, 0.0, 0.0, OracleMode::ground_truth, rng, opt, &s.labels);
    ASSERT_FALSE(r.trivial);
    EXPECT_EQ(r.min_purity(), 1.0);
}

TEST(PartialCluster, SubsampledInputIsExtendedByGroupFits) {
    SampleSet s = two_spherical_clusters(3000, 3, 12.0, 21);
    PartialClusterOptions opt;
    opt.tau = 0.05;
    opt.max_oracle_points = 800;
    Rng rng(22);
    auto r = partial_cluster(s.points, 2, 0.4, 0.0, 0.0, OracleMode::affinity, rng, opt, &s.labels);
    ASSERT_FALSE(r.trivial);
    EXPECT_GE(r.min_purity(), 0.99);
    EXPECT_EQ(r.side1.size() + r.side2.size(), 3000U);
}

TEST(PartialCluster, RejectsAlphaBelowTwiceEps) {
    Rng rng(23);
    EXPECT_THROW(partial_cluster(MatrixXd::Random(50, 2), 2, 0.1, 0.05, 0.0, OracleMode::affinity, rng), InvalidInput);
}
