#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rgmm/cluster/partial_cluster.hpp"
#include "rgmm/core/error.hpp"
#include "rgmm/core/model.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/decode/list_decode.hpp"
#include "rgmm/pipeline/config.hpp"
#include "rgmm/pipeline/weights.hpp"
#include "rgmm/robust/estimators.hpp"
#include "rgmm/spectral/separator.hpp"

namespace rgmm {

/// One recursion node. `step` names the branch taken: light-noise, base-case, partial-cluster,
/// decode-leaf, spectral-split, spectral-small-side, or abort; isotropize marks a node that
/// failed before choosing a branch.
struct BranchNode {
    std::string step;
    int k = 0;
    double eps = 0.0;
    Index n = 0;
    bool ok = true;
    std::string note;
    std::map<std::string, double> values;
    std::vector<BranchNode> children;

    int depth() const {
        int d = 0;
        for (const auto& c : children) d = std::max(d, c.depth());
        return d + 1;
    }

    /// Steps of this node and all descendants, pre-order.
    void collect_steps(std::vector<std::string>& out) const {
        out.push_back(step);
        for (const auto& c : children) c.collect_steps(out);
    }
};

/// Unnormalized weights (summing to 1 ± kε) with their components.
struct RawHypothesis {
    std::vector<double> weights;
    std::vector<GaussianComponent> components;

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights) s += w;
        return s;
    }

    Hypothesis finish(std::string provenance) const {
        Hypothesis h;
        h.mixture.weights = weights;
        h.mixture.components = components;
        h.raw_weight_sum = normalize_weights(h.mixture.weights);
        h.provenance = std::move(provenance);
        return h;
    }
};

/// Robust tensors of orders 1..4 and the robust mean/covariance of one point set: the inputs
/// of the decode branch.
struct DecodeInputs {
    std::vector<DenseTensor> tensors;
    Candidate trivial;
    MatrixXd fresh;
};

/// Isotropization and decode inputs for a node, computed once and shared read-only.
struct NodePrecompute {
    double eps = 0.0;
    IsotropizeResult iso;
    std::optional<DecodeInputs> decode;
};

inline DecodeInputs prepare_decode_inputs(const MatrixXd& z, double eps, PipelineMode mode, Rng& rng, const FilterOptions& filter = {}) {
    // Even rows estimate the tensors; odd rows are the fresh sample of the efficient variant.
    std::vector<Index> even, odd;
    for (Index i = 0; i < z.rows(); ++i) (i % 2 == 0 ? even : odd).push_back(i);
    MatrixXd est = mode == PipelineMode::efficient ? select_rows(z, even) : z;
    if (est.rows() < 2) throw AlgorithmFailure("decode: too few points");
    DecodeInputs out;
    for (int m = 1; m <= 4; ++m)
        out.tensors.push_back(PackedLayout::get(z.cols(), m)->unpack(robust_tensor_mean_packed(est, m, eps, rng, filter).packed));
    CovEstimate base = robust_cov_estimate(est, eps, rng, filter);
    out.trivial = Candidate{base.mean, base.cov, {}};
    if (mode == PipelineMode::efficient) out.fresh = select_rows(z, odd);
    return out;
}

/// Precomputes every node that works on the full input: the root and the chain of
/// light-noise descendants (k, ε), (k − 1, ε + ε^a), … down to k = 1.
inline std::vector<NodePrecompute> precompute_top(const MatrixXd& points, int k, double eps, const PipelineConfig& cfg, Rng& rng) {
    std::vector<NodePrecompute> out;
    bool decode = cfg.constant("branch.p_cluster") < 1.0;
    bool light = cfg.constant("branch.p_light") > 0.0;
    for (int level = k; level >= 1 && eps < 0.5; --level) {
        NodePrecompute pre;
        pre.eps = eps;
        pre.iso = isotropize(points, eps, rng);
        if (level >= 2 && decode) pre.decode = prepare_decode_inputs(pre.iso.transformed, eps, cfg.mode, rng);
        out.push_back(std::move(pre));
        if (!light) break;
        ExponentSchedule sched = ExponentSchedule::make(level, cfg.constant("escalation.C"), cfg.constant("escalation.exponent_floor"));
        eps += sched.power(eps, "light_weight");
    }
    return out;
}

namespace detail {

inline DecodeOptions decode_options(const PipelineConfig& cfg) {
    DecodeOptions o;
    o.big_delta = cfg.constant("decode.big_delta");
    o.c = cfg.constant("decode.c");
    o.eta_floor = cfg.constant("decode.eta_floor");
    o.collapse_budget = cfg.collapse_budget;
    o.enumeration_budget = static_cast<std::size_t>(cfg.cover_budget);
    o.max_subspace_dim = static_cast<Index>(cfg.constant("decode.max_subspace_dim"));
    o.efficient_repetitions = static_cast<int>(cfg.constant("decode.efficient_repetitions"));
    o.fit_restarts = static_cast<int>(cfg.constant("decode.fit_restarts"));
    o.low_dim.restarts = static_cast<int>(cfg.constant("decode.low_dim_restarts"));
    o.low_dim.max_points = static_cast<Index>(cfg.constant("decode.low_dim_max_points"));
    return o;
}

inline PartialClusterOptions cluster_options(const PipelineConfig& cfg) {
    PartialClusterOptions o;
    o.rows_c = cfg.constant("cluster.rows_c");
    o.merge_c = cfg.constant("cluster.merge_c");
    o.merge_t = static_cast<int>(cfg.constant("cluster.merge_t"));
    o.tau = cfg.constant("cluster.tau");
    o.max_oracle_points = static_cast<Index>(cfg.constant("cluster.max_oracle_points"));
    o.fit.restarts = static_cast<int>(cfg.constant("cluster.fit_restarts"));
    return o;
}

/// Lifts hypotheses found in isotropized coordinates back through the node's transform.
inline RawHypothesis lift(const RawHypothesis& h, const IsotropizingTransform& t) {
    RawHypothesis out;
    out.weights = h.weights;
    for (const auto& c : h.components) out.components.push_back(t.lift_component(c));
    return out;
}

inline void append_scaled(RawHypothesis& into, const RawHypothesis& part, double scale) {
    for (std::size_t i = 0; i < part.weights.size(); ++i) {
        into.weights.push_back(part.weights[i] * scale);
        into.components.push_back(part.components[i]);
    }
}

/// Picks a candidate parameter set: one of the recorded k-tuples when any exist, otherwise k
/// entries drawn uniformly with replacement.
inline std::vector<GaussianComponent> draw_candidate_set(const CandidateList& list, int k, Rng& rng) {
    std::vector<const std::vector<std::size_t>*> full;
    for (const auto& t : list.tuples)
        if (static_cast<int>(t.size()) == k) full.push_back(&t);
    std::vector<GaussianComponent> out;
    if (!full.empty()) {
        const auto& t = *full[std::uniform_int_distribution<std::size_t>(0, full.size() - 1)(rng)];
        for (std::size_t i : t) out.push_back(list.entries[i].component());
        return out;
    }
    if (list.empty()) throw AlgorithmFailure("decode: empty candidate list");
    std::uniform_int_distribution<std::size_t> pick(0, list.size() - 1);
    for (int i = 0; i < k; ++i) out.push_back(list.entries[pick(rng)].component());
    return out;
}

class Recursion {
public:
    Recursion(const PipelineConfig& cfg, const std::vector<NodePrecompute>* top, int k_top) : cfg_(cfg), top_(top), k_top_(k_top) {}

    /// `full` marks nodes whose points are the whole input (the root and light-noise chain).
    std::optional<RawHypothesis> run(const MatrixXd& y, int k, double eps, int depth, bool full, Rng& rng, BranchNode& node) {
        if (depth > k_top_) throw std::logic_error("cluster_or_decode: recursion depth exceeds k");
        node.k = k;
        node.eps = eps;
        node.n = y.rows();
        node.step = "isotropize";
        try {
            return step(y, k, eps, depth, full, rng, node);
        } catch (const AlgorithmFailure& e) {
            return fail(node, e.what());
        } catch (const InvalidInput& e) {
            return fail(node, e.what());
        }
    }

private:
    static std::optional<RawHypothesis> fail(BranchNode& node, const std::string& why) {
        node.ok = false;
        node.note = why;
        return std::nullopt;
    }

    bool coin(double p, Rng& rng) const { return p >= 1.0 || (p > 0.0 && uniform01(rng) < p); }

    std::optional<RawHypothesis> child(const MatrixXd& y, int k, double eps, int depth, Rng& rng, BranchNode& node, bool full = false) {
        node.children.emplace_back();
        return run(y, k, eps, depth + 1, full, rng, node.children.back());
    }

    const NodePrecompute* cached(bool full, double eps) const {
        if (!full || top_ == nullptr) return nullptr;
        for (const auto& p : *top_)
            if (p.eps == eps) return &p;
        return nullptr;
    }

    std::optional<RawHypothesis> step(const MatrixXd& y, int k, double eps, int depth, bool full, Rng& rng, BranchNode& node) {
        if (k == 0) {
            node.step = "abort";
            return fail(node, "no components left");
        }
        ExponentSchedule sched = ExponentSchedule::make(k, cfg_.constant("escalation.C"), cfg_.constant("escalation.exponent_floor"));
        double light = sched.power(eps, "light_weight");
        Index d = y.cols();

        // At k = 1 the light branch would recurse to k = 0 and abort, so it is not offered.
        if (k >= 2 && coin(cfg_.constant("branch.p_light"), rng)) {
            node.step = "light-noise";
            double escalated = eps + light;
            node.values["escalated_eps"] = escalated;
            if (!(escalated < 0.5)) return fail(node, "escalated eps reaches 1/2");
            auto sub = child(y, k - 1, escalated, depth, rng, node, full);
            if (!sub) return fail(node, "sub-call failed");
            sub->weights.push_back(0.0);
            sub->components.push_back(GaussianComponent::standard(d));
            return sub;
        }

        double min_points = cfg_.constant("node.min_points_per_dim") * static_cast<double>(d + 1);
        if (static_cast<double>(y.rows()) < min_points) {
            node.step = k == 1 ? "base-case" : "partial-cluster";
            return fail(node, "too few points at node");
        }
        const NodePrecompute* pre = cached(full, eps);
        IsotropizeResult own;
        if (pre == nullptr) own = isotropize(y, eps, rng);
        const IsotropizeResult& iso = pre != nullptr ? pre->iso : own;
        if (k == 1) {
            node.step = "base-case";
            return RawHypothesis{{1.0}, {{iso.estimate.mean, iso.estimate.cov}}};
        }
        const MatrixXd& z = iso.transformed;
        double alpha = std::min(std::max(light, cfg_.constant("node.alpha_floor")), 1.0 / k);
        node.values["alpha"] = alpha;

        if (coin(cfg_.constant("branch.p_cluster"), rng)) {
            node.step = "partial-cluster";
            double beta = sched.power(eps, "cluster_accuracy");
            if (!(alpha > 2.0 * eps)) return fail(node, "minimum-weight guess does not exceed 2 eps");
            PartialClusterOptions po = cluster_options(cfg_);
            po.isotropize = false;
            PartitionResult part = partial_cluster(z, k, alpha, eps, beta, cfg_.oracle, rng, po);
            node.values["side1"] = static_cast<double>(part.side1.size());
            node.values["side2"] = static_cast<double>(part.side2.size());
            node.values["groups"] = static_cast<double>(part.groups.size());
            if (part.trivial || part.side2.empty()) return fail(node, "partition is trivial");
            return split(z, part.side1, part.side2, k, sched.power(eps, "cluster_eps"), depth, rng, node, iso.transform);
        }

        node.step = "decode-leaf";
        DecodeInputs own_inputs;
        const DecodeInputs* inputs = nullptr;
        if (pre != nullptr && pre->decode) {
            inputs = &*pre->decode;
        } else {
            own_inputs = prepare_decode_inputs(z, eps, cfg_.mode, rng);
            inputs = &own_inputs;
        }
        DecodeMode mode = cfg_.mode == PipelineMode::baseline ? DecodeMode::cover : DecodeMode::efficient;
        DecodeResult dec = decode_from_tensors(inputs->tensors, k, alpha, eps, mode, decode_options(cfg_), rng,
                                               mode == DecodeMode::efficient ? &inputs->fresh : nullptr, inputs->trivial);
        node.values["list_size"] = static_cast<double>(dec.list.size());
        node.values["sets"] = static_cast<double>(dec.list.tuples.size());
        std::vector<GaussianComponent> set = draw_candidate_set(dec.list, k, rng);

        double tau = sched.power(eps, "eigen_threshold");
        node.values["tau"] = tau;
        double smallest = std::numeric_limits<double>::infinity();
        for (const auto& c : set) smallest = std::min(smallest, min_eigenvalue(c.cov));
        node.values["min_eigenvalue"] = smallest;
        if (smallest >= tau) {
            RawHypothesis h;
            h.weights = cfg_.weight_mode == WeightMode::simplex ? weight_guess(k, eps, rng) : weight_guess_grid(k, alpha, rng);
            h.components = set;
            return lift(h, iso.transform);
        }

        node.step = "spectral-split";
        double eta = tau / 2.0;
        auto thin = find_thin_direction(set, eta);
        if (!thin) return fail(node, "no thin direction below tau");
        SeparatorOptions so;
        so.gap_c = cfg_.constant("separator.gap_c");
        Separator sep = build_separator(set, thin->direction, eta, k, so);
        auto [side1, side2] = apply_separator(sep, z);
        node.values["side1"] = static_cast<double>(side1.size());
        node.values["side2"] = static_cast<double>(side2.size());
        double small = sched.power(eps, "spectral_small_side");
        if (static_cast<double>(std::min(side1.size(), side2.size())) < small * static_cast<double>(z.rows())) {
            node.step = "spectral-small-side";
            auto sub = child(z, k - 1, 2.0 * small, depth, rng, node);
            if (!sub) return fail(node, "sub-call failed");
            sub->weights.push_back(0.0);
            sub->components.push_back(GaussianComponent::standard(z.cols()));
            return lift(*sub, iso.transform);
        }
        return split(z, side1, side2, k, sched.power(eps, "spectral_eps"), depth, rng, node, iso.transform);
    }

    /// Guesses k₁ ∈ [1, k−1], recurses on both sides and rescales by the side fractions.
    std::optional<RawHypothesis> split(const MatrixXd& z, const std::vector<Index>& side1, const std::vector<Index>& side2, int k, double eps,
                                       int depth, Rng& rng, BranchNode& node, const IsotropizingTransform& t) {
        int k1 = std::uniform_int_distribution<int>(1, k - 1)(rng);
        node.values["k1"] = k1;
        node.values["child_eps"] = eps;
        if (!(eps < 0.5)) return fail(node, "escalated eps reaches 1/2");
        auto a = child(select_rows(z, side1), k1, eps, depth, rng, node);
        if (!a) return fail(node, "sub-call failed");
        auto b = child(select_rows(z, side2), k - k1, eps, depth, rng, node);
        if (!b) return fail(node, "sub-call failed");
        double n = static_cast<double>(z.rows());
        RawHypothesis out;
        append_scaled(out, *a, static_cast<double>(side1.size()) / n);
        append_scaled(out, *b, static_cast<double>(side2.size()) / n);
        return lift(out, t);
    }

    const PipelineConfig& cfg_;
    const std::vector<NodePrecompute>* top_;
    int k_top_;
};

}  // namespace detail

struct AttemptResult {
    std::optional<Hypothesis> hypothesis;
    BranchNode trace;
};

/// One randomized run of the cluster-or-decode recursion. `top` optionally supplies the
/// isotropization and decode inputs of the nodes that see the whole input (precompute_top).
inline AttemptResult cluster_or_decode(const MatrixXd& points, int k, double eps, const PipelineConfig& cfg, Rng& rng,
                                       const std::vector<NodePrecompute>* top = nullptr) {
    if (k < 1) throw InvalidInput("cluster_or_decode: k must be positive");
    if (!(eps >= 0.0 && eps < 0.5)) throw InvalidInput("cluster_or_decode: eps must lie in [0, 1/2)");
    if (points.rows() < 1) throw InvalidInput("cluster_or_decode: empty sample");
    AttemptResult out;
    detail::Recursion rec(cfg, top, k);
    auto raw = rec.run(points, k, eps, 0, true, rng, out.trace);
    if (raw) {
        std::vector<std::string> steps;
        out.trace.collect_steps(steps);
        std::string prov;
        for (const auto& s : steps) prov += (prov.empty() ? "" : ">") + s;
        out.hypothesis = raw->finish(prov);
    }
    return out;
}

}  // namespace rgmm
