#include <cmath>

#include <gtest/gtest.h>

#include "rgmm/contamination/contamination.hpp"
#include "rgmm/core/sampling.hpp"
#include "rgmm/hermite/hermite.hpp"

using namespace rgmm;

namespace {

SampleSet clean_gaussian(Index n, Index d, std::uint64_t seed) {
    Rng rng(seed);
    return sample_mixture(GaussianMixture::single(GaussianComponent::standard(d)), n, rng);
}

Index count_corrupted(const SampleSet& s) {
    Index c = 0;
    for (bool b : s.corrupted) c += b ? 1 : 0;
    return c;
}

ContaminationSpec spec_of(ContaminationModel model, double eps, AttackStrategy strategy = AttackStrategy::far_cluster) {
    ContaminationSpec s;
    s.model = model;
    s.eps = eps;
    s.strategy = strategy;
    return s;
}

}  // namespace

TEST(Contamination, SpecRejectsEpsAtOneHalf) {
    ContaminationSpec s = spec_of(ContaminationModel::strong, 0.5);
    EXPECT_THROW(s.validate(), InvalidInput);
}

TEST(Contamination, ParsersRoundTrip) {
    for (auto m : {ContaminationModel::huber, ContaminationModel::tv, ContaminationModel::strong})
        EXPECT_EQ(parse_contamination_model(to_string(m)), m);
    for (auto s : {AttackStrategy::far_cluster, AttackStrategy::moment_attack, AttackStrategy::density_swap})
        EXPECT_EQ(parse_attack_strategy(to_string(s)), s);
    EXPECT_THROW(parse_attack_strategy("nope"), InvalidInput);
}

TEST(Contamination, HuberEpsZeroIsIdentity) {
    SampleSet x = clean_gaussian(500, 3, 1);
    Rng rng(2);
    auto noise = GaussianMixture::single(GaussianComponent::standard(3));
    auto out = huber_contaminate(x, spec_of(ContaminationModel::huber, 0.0), noise, rng);
    EXPECT_EQ(out.samples.points, x.points);
    EXPECT_EQ(count_corrupted(out.samples), 0);
}

TEST(Contamination, HuberPointMassNoiseLandsAtTarget) {
    Index n = 20000;
    SampleSet x = clean_gaussian(n, 2, 3);
    Rng rng(4);
    VectorXd target = 50.0 * VectorXd::Unit(2, 0);
    auto noise = GaussianMixture::single({target, MatrixXd::Zero(2, 2)});
    auto out = huber_contaminate(x, spec_of(ContaminationModel::huber, 0.25), noise, rng);
    Index at_target = 0;
    for (Index i = 0; i < n; ++i)
        if ((out.samples.points.row(i).transpose() - target).norm() < 1e-12) ++at_target;
    EXPECT_EQ(at_target, count_corrupted(out.samples));
    EXPECT_NEAR(static_cast<double>(at_target) / static_cast<double>(n), 0.25, 5.0 * std::sqrt(0.25 / static_cast<double>(n)));
}

TEST(Contamination, HuberFractionWithinBinomialBand) {
    Index n = 10000;
    double eps = 0.1;
    SampleSet x = clean_gaussian(n, 2, 5);
    Rng rng(6);
    auto noise = GaussianMixture::single(GaussianComponent::standard(2));
    auto out = huber_contaminate(x, spec_of(ContaminationModel::huber, eps), noise, rng);
    double frac = static_cast<double>(count_corrupted(out.samples)) / static_cast<double>(n);
    EXPECT_LE(std::abs(frac - eps), 5.0 * std::sqrt(eps / static_cast<double>(n)));
}

TEST(Contamination, HuberRejectsWrongModel) {
    SampleSet x = clean_gaussian(10, 2, 7);
    Rng rng(8);
    auto noise = GaussianMixture::single(GaussianComponent::standard(2));
    EXPECT_THROW(huber_contaminate(x, spec_of(ContaminationModel::strong, 0.1), noise, rng), InvalidInput);
}

TEST(Contamination, StrongEpsZeroIsIdentity) {
    SampleSet x = clean_gaussian(300, 3, 9);
    Rng rng(10);
    auto out = strong_contaminate(x, spec_of(ContaminationModel::strong, 0.0), rng);
    EXPECT_EQ(out.samples.points, x.points);
    EXPECT_TRUE(out.warnings.empty());
}

TEST(Contamination, StrongTinyEpsIsNoOpWithWarning) {
    SampleSet x = clean_gaussian(50, 2, 11);
    Rng rng(12);
    auto out = strong_contaminate(x, spec_of(ContaminationModel::strong, 0.01), rng);
    EXPECT_EQ(out.samples.points, x.points);
    EXPECT_EQ(out.warnings.size(), 1u);
}

TEST(Contamination, FarClusterReplacesExactlyTenPercentInTightClump) {
    SampleSet x = clean_gaussian(1000, 4, 13);
    Rng rng(14);
    ContaminationSpec s = spec_of(ContaminationModel::strong, 0.1);
    s.scale = 100.0;
    auto out = strong_contaminate(x, s, rng);
    std::vector<Index> replaced;
    for (Index i = 0; i < 1000; ++i)
        if (out.samples.corrupted[static_cast<std::size_t>(i)]) replaced.push_back(i);
    ASSERT_EQ(replaced.size(), 100u);
    VectorXd mean = row_mean(x.points);
    for (std::size_t a = 0; a < replaced.size(); ++a) {
        EXPECT_NEAR((out.samples.points.row(replaced[a]).transpose() - mean).norm(), 100.0, 0.25 + 1e-9);
        for (std::size_t b = a + 1; b < replaced.size(); ++b)
            EXPECT_LE((out.samples.points.row(replaced[a]) - out.samples.points.row(replaced[b])).norm(), 1.0);
    }
}

TEST(Contamination, StrongUncorruptedRowsAreBitIdentical) {
    SampleSet x = clean_gaussian(800, 3, 15);
    for (auto strategy : {AttackStrategy::far_cluster, AttackStrategy::moment_attack, AttackStrategy::density_swap}) {
        Rng rng(16);
        auto out = strong_contaminate(x, spec_of(ContaminationModel::strong, 0.15, strategy), rng);
        EXPECT_EQ(count_corrupted(out.samples), 120);
        for (Index i = 0; i < 800; ++i) {
            if (out.samples.corrupted[static_cast<std::size_t>(i)]) continue;
            EXPECT_EQ(out.samples.points.row(i), x.points.row(i));
        }
    }
}

TEST(Contamination, SameSeedReproducesCorruptedSet) {
    SampleSet x = clean_gaussian(400, 3, 17);
    for (auto strategy : {AttackStrategy::far_cluster, AttackStrategy::moment_attack, AttackStrategy::density_swap}) {
        Rng a(18), b(18);
        auto s = spec_of(ContaminationModel::strong, 0.1, strategy);
        EXPECT_EQ(strong_contaminate(x, s, a).samples.points, strong_contaminate(x, s, b).samples.points);
    }
    Rng a(19), b(19);
    auto base = GaussianMixture::single(GaussianComponent::standard(3));
    auto tv = spec_of(ContaminationModel::tv, 0.2);
    EXPECT_EQ(tv_contaminate(base, tv, 300, a).samples.points, tv_contaminate(base, tv, 300, b).samples.points);
}

TEST(Contamination, MomentAttackShiftsFourthHermiteMean) {
    Index d = 3, n = 5000;
    double eps = 0.05, r = 5.0;
    SampleSet x = clean_gaussian(n, d, 20);
    Rng rng(21);
    ContaminationSpec s = spec_of(ContaminationModel::strong, eps, AttackStrategy::moment_attack);
    s.scale = r;
    auto out = strong_contaminate(x, s, rng);
    EXPECT_TRUE(out.heuristic);
    // Both tensors recomputed from scratch in dense form.
    DenseTensor clean(4, d), dirty(4, d);
    for (Index i = 0; i < n; ++i) {
        clean = clean + hermite_tensor_of_point(x.points.row(i).transpose(), 4);
        dirty = dirty + hermite_tensor_of_point(out.samples.points.row(i).transpose(), 4);
    }
    double shift = (dirty - clean).norm() / static_cast<double>(n);
    EXPECT_GE(shift, eps * r * r);
}

TEST(Contamination, DensitySwapReplacesOutermostPoints) {
    SampleSet x = clean_gaussian(1000, 2, 22);
    Rng rng(23);
    ContaminationSpec s = spec_of(ContaminationModel::strong, 0.05, AttackStrategy::density_swap);
    s.scale = 3.0;
    auto out = strong_contaminate(x, s, rng);
    VectorXd mean = row_mean(x.points);
    double min_replaced = 1e300, max_kept = 0.0;
    for (Index i = 0; i < 1000; ++i) {
        double r = (x.points.row(i).transpose() - mean).norm();
        if (out.samples.corrupted[static_cast<std::size_t>(i)]) min_replaced = std::min(min_replaced, r);
        else max_kept = std::max(max_kept, r);
    }
    // Isotropic sample: Mahalanobis order is close to Euclidean order.
    EXPECT_GT(min_replaced, 0.8 * max_kept);
}

TEST(Contamination, TvEpsZeroMatchesCleanDraw) {
    auto m = GaussianMixture::single(GaussianComponent::standard(2));
    Rng a(24), b(24);
    auto out = tv_contaminate(m, spec_of(ContaminationModel::tv, 0.0), 200, a);
    SampleSet clean = sample_mixture(m, 200, b);
    EXPECT_EQ(out.samples.points, clean.points);
    EXPECT_EQ(count_corrupted(out.samples), 0);
}

TEST(Contamination, TvNoiseEqualToModelLooksClean) {
    auto m = GaussianMixture::single(GaussianComponent::standard(2));
    Rng rng(25);
    auto out = tv_contaminate(m, spec_of(ContaminationModel::tv, 0.3), 20000, rng, m);
    EXPECT_LT(row_mean(out.samples.points).norm(), 0.05);
    EXPECT_LT((empirical_covariance(out.samples.points) - MatrixXd::Identity(2, 2)).norm(), 0.1);
}

TEST(Contamination, TvNoiseFractionNearEps) {
    auto m = GaussianMixture::single(GaussianComponent::standard(2));
    Rng rng(26);
    Index n = 10000;
    double eps = 0.2;
    auto out = tv_contaminate(m, spec_of(ContaminationModel::tv, eps), n, rng);
    Index noise = 0;
    for (int l : out.samples.labels) noise += l == -1 ? 1 : 0;
    EXPECT_EQ(noise, count_corrupted(out.samples));
    EXPECT_LE(std::abs(static_cast<double>(noise) / static_cast<double>(n) - eps), 5.0 * std::sqrt(eps / static_cast<double>(n)));
}
