#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "rgmm/core/linalg.hpp"
#include "rgmm/core/model.hpp"

namespace rgmm {

struct Candidate {
    VectorXd mean;
    MatrixXd cov;
    std::map<std::string, std::string> tags;

    GaussianComponent component() const { return {mean, cov}; }
};

/// Single-component candidates plus, where a routine produced a whole parameter set at
/// once, the index tuples of those sets.
struct CandidateList {
    std::vector<Candidate> entries;
    std::vector<std::vector<std::size_t>> tuples;
    std::size_t budget = 0;
    bool truncated = false;
    std::vector<std::string> warnings;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

/// Drops entries within `tol` of an earlier entry in both ℓ₂ mean distance and Frobenius
/// covariance distance. Tuple indices are remapped onto the survivors.
inline void deduplicate_candidates(CandidateList& list, double tol) {
    std::vector<std::size_t> remap(list.entries.size());
    std::vector<Candidate> kept;
    for (std::size_t i = 0; i < list.entries.size(); ++i) {
        const Candidate& c = list.entries[i];
        std::size_t hit = kept.size();
        for (std::size_t j = 0; j < kept.size(); ++j) {
            if ((kept[j].mean - c.mean).norm() < tol && (kept[j].cov - c.cov).norm() < tol) {
                hit = j;
                break;
            }
        }
        if (hit == kept.size()) kept.push_back(c);
        remap[i] = hit;
    }
    for (auto& t : list.tuples)
        for (auto& i : t) i = remap[i];
    list.entries = std::move(kept);
}

}  // namespace rgmm
