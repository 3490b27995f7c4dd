// Learns a two-component mixture in R^3 from samples with 5% adversarial outliers and
// compares the result with the truth.

#include <cstdio>

#include "rgmm/contamination/contamination.hpp"
#include "rgmm/core/matching.hpp"
#include "rgmm/core/sampling.hpp"
#include "rgmm/pipeline/learn.hpp"

using namespace rgmm;

int main() {
    Index d = 3;
    VectorXd shift = VectorXd::Zero(d);
    shift(0) = 4.0;
    MatrixXd wide = MatrixXd::Identity(d, d);
    wide(1, 1) = 3.0;
    GaussianMixture truth({0.4, 0.6}, {GaussianComponent::standard(d), {shift, wide}});

    Rng rng(42);
    ContaminationSpec spec;
    spec.eps = 0.05;
    MatrixXd a = strong_contaminate(sample_mixture(truth, 20000, rng), spec, rng).samples.points;
    MatrixXd b = strong_contaminate(sample_mixture(truth, 20000, rng), spec, rng).samples.points;
    std::printf("plain sample mean: %.3f %.3f %.3f\n", a.col(0).mean(), a.col(1).mean(), a.col(2).mean());

    PipelineConfig cfg;
    cfg.k = 2;
    cfg.eps = spec.eps;
    cfg.outer_budget = 30;
    LearnResult res = learn_gmm(a, b, 2, spec.eps, cfg, rng, &truth);
    if (!res.hypothesis) {
        std::printf("no hypothesis: %s\n", res.report.failure.c_str());
        return 1;
    }
    const GaussianMixture& h = res.hypothesis->mixture;
    for (std::size_t i = 0; i < h.k(); ++i) {
        const auto& c = h.components[i];
        std::printf("component %zu: weight %.3f mean (%.3f, %.3f, %.3f) cov diag (%.3f, %.3f, %.3f)\n", i, h.weights[i], c.mean(0), c.mean(1),
                    c.mean(2), c.cov(0, 0), c.cov(1, 1), c.cov(2, 2));
    }
    MatchingReport match = match_components(truth, h, 1.0);
    for (std::size_t i = 0; i < truth.k(); ++i)
        std::printf("truth component %zu -> hypothesis component %d (TV bound %.3f)\n", i, match.truth_to_hyp[i],
                    match.cost(static_cast<Index>(i), match.truth_to_hyp[i]));
    std::printf("provenance: %s\n", res.hypothesis->provenance.c_str());
    std::printf("TV to truth: %.3f (+/- %.3f)\n", res.report.tv->value, res.report.tv->std_error);
    return 0;
}
