#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <vector>

#include "rgmm/core/density.hpp"
#include "rgmm/core/error.hpp"
#include "rgmm/core/rng.hpp"
#include "rgmm/core/sampling.hpp"

namespace rgmm {

struct TournamentOptions {
    /// Samples drawn from each hypothesis to estimate its Scheffé-set masses.
    Index mc_samples = 20000;
    /// Required evaluation sample size C·log(#hyps)/η².
    double size_c = 1.0;
};

/// One Scheffé comparison on A = {x : p_i(x) > p_j(x)}: empirical mass of A, hypothesis masses,
/// and the deficits |H(A) − empirical|.
struct Comparison {
    std::size_t i = 0, j = 0;
    double empirical = 0.0;
    double mass_i = 0.0, mass_j = 0.0;
    double deficit_i = 0.0, deficit_j = 0.0;
    std::size_t winner = 0;
    /// Set for the champion re-check round.
    bool recheck = false;
};

struct TournamentResult {
    std::size_t winner = 0;
    std::vector<Comparison> ledger;
    /// Set when the re-check round cycled and the winner was taken as the visited champion
    /// with the smallest worst-case deficit excess.
    bool cycled = false;
};

namespace detail {

class ScheffeCache {
public:
    ScheffeCache(const std::vector<GaussianMixture>& hyps, const MatrixXd& points, Index mc, Rng& rng) {
        for (const auto& h : hyps) {
            h.validate();
            if (h.dim() != points.cols()) throw InvalidInput("tournament_select: hypothesis dimension mismatch");
            // One floor shared by all hypotheses keeps the Scheffé sets comparable.
            floor_ = std::max(floor_, default_density_floor(h));
        }
        for (const auto& h : hyps) {
            evaluators_.emplace_back(h, floor_);
            data_logp_.push_back(evaluators_.back().rows(points));
            samples_.push_back(sample_mixture(h, mc, rng).points);
            own_logp_.push_back(evaluators_.back().rows(samples_.back()));
        }
    }

    Comparison compare(std::size_t i, std::size_t j) const {
        Comparison c;
        c.i = i;
        c.j = j;
        const VectorXd& a = data_logp_[i];
        const VectorXd& b = data_logp_[j];
        c.empirical = static_cast<double>((a.array() > b.array()).count()) / static_cast<double>(a.size());
        c.mass_i = mass(i, i, j);
        c.mass_j = mass(j, i, j);
        c.deficit_i = std::abs(c.mass_i - c.empirical);
        c.deficit_j = std::abs(c.mass_j - c.empirical);
        c.winner = c.deficit_j < c.deficit_i ? j : i;
        return c;
    }

private:
    /// Fraction of samples from hypothesis `from` lying in {p_i > p_j}.
    double mass(std::size_t from, std::size_t i, std::size_t j) const {
        const MatrixXd& s = samples_[from];
        VectorXd li = from == i ? own_logp_[i] : evaluators_[i].rows(s);
        VectorXd lj = from == j ? own_logp_[j] : evaluators_[j].rows(s);
        return static_cast<double>((li.array() > lj.array()).count()) / static_cast<double>(s.rows());
    }

    double floor_ = 0.0;
    std::vector<DensityEvaluator> evaluators_;
    std::vector<VectorXd> data_logp_;
    std::vector<MatrixXd> samples_;
    std::vector<VectorXd> own_logp_;
};

}  // namespace detail

/// Scheffé tournament: single elimination in index order (the lower index wins ties), then a
/// re-check round in which the champion meets every other hypothesis. A challenger whose
/// deficit beats the champion's by more than 3η takes over and the round repeats.
inline TournamentResult tournament_select(const std::vector<GaussianMixture>& hyps, const MatrixXd& points, double eta, Rng& rng,
                                          const TournamentOptions& opt = {}) {
    if (hyps.empty()) throw InvalidInput("tournament_select: empty hypothesis list");
    if (!(eta > 0.0 && eta < 1.0)) throw InvalidInput("tournament_select: eta must lie in (0, 1)");
    if (opt.mc_samples < 1) throw InvalidInput("tournament_select: mc_samples must be positive");
    double need = opt.size_c * std::log(static_cast<double>(hyps.size())) / (eta * eta);
    if (static_cast<double>(points.rows()) < need || points.rows() < 1)
        throw InvalidInput("tournament_select: evaluation sample smaller than C log(#hyps)/eta^2");
    TournamentResult out;
    if (hyps.size() == 1) return out;
    detail::ScheffeCache cache(hyps, points, opt.mc_samples, rng);

    std::vector<std::size_t> alive(hyps.size());
    for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
    while (alive.size() > 1) {
        std::vector<std::size_t> next;
        for (std::size_t p = 0; p + 1 < alive.size(); p += 2) {
            Comparison c = cache.compare(alive[p], alive[p + 1]);
            out.ledger.push_back(c);
            next.push_back(c.winner);
        }
        if (alive.size() % 2 == 1) next.push_back(alive.back());
        alive = std::move(next);
    }

    std::size_t champion = alive.front();
    std::set<std::size_t> visited;
    std::vector<std::pair<double, std::size_t>> worst;
    while (visited.insert(champion).second) {
        double worst_excess = -1.0;
        std::optional<std::size_t> challenger;
        for (std::size_t j = 0; j < hyps.size(); ++j) {
            if (j == champion) continue;
            Comparison c = cache.compare(std::min(champion, j), std::max(champion, j));
            c.recheck = true;
            out.ledger.push_back(c);
            double mine = champion == c.i ? c.deficit_i : c.deficit_j;
            double theirs = champion == c.i ? c.deficit_j : c.deficit_i;
            double excess = mine - theirs;
            if (excess > worst_excess) {
                worst_excess = excess;
                if (excess > 3.0 * eta) challenger = j;
            }
        }
        worst.emplace_back(worst_excess, champion);
        if (!challenger) {
            out.winner = champion;
            return out;
        }
        champion = *challenger;
    }
    out.cycled = true;
    out.winner = std::min_element(worst.begin(), worst.end())->second;
    return out;
}

}  // namespace rgmm
