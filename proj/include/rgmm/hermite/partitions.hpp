#pragma once

#include <utility>
#include <vector>

#include "rgmm/core/error.hpp"

namespace rgmm {

/// A partition of {0, …, m−1} into pairs and singletons.
struct PairPartition {
    std::vector<std::pair<int, int>> pairs;
    std::vector<int> singles;
};

inline constexpr int kMaxPartitionOrder = 10;

namespace detail {

inline void enumerate_pair_partitions(std::vector<int>& remaining, PairPartition& current, std::vector<PairPartition>& out) {
    if (remaining.empty()) {
        out.push_back(current);
        return;
    }
    int first = remaining.front();
    std::vector<int> rest(remaining.begin() + 1, remaining.end());
    current.singles.push_back(first);
    enumerate_pair_partitions(rest, current, out);
    current.singles.pop_back();
    for (std::size_t i = 0; i < rest.size(); ++i) {
        std::vector<int> next;
        for (std::size_t j = 0; j < rest.size(); ++j)
            if (j != i) next.push_back(rest[j]);
        current.pairs.emplace_back(first, rest[i]);
        enumerate_pair_partitions(next, current, out);
        current.pairs.pop_back();
    }
}

inline std::vector<PairPartition> build_pair_partitions(int m) {
    std::vector<int> items;
    for (int i = 0; i < m; ++i) items.push_back(i);
    PairPartition current;
    std::vector<PairPartition> out;
    enumerate_pair_partitions(items, current, out);
    return out;
}

}  // namespace detail

/// All singleton/pair partitions of [m], built once per order.
inline const std::vector<PairPartition>& pair_partitions(int m) {
    if (m < 0 || m > kMaxPartitionOrder) throw InvalidInput("pair_partitions: order out of range");
    static const std::vector<std::vector<PairPartition>> table = [] {
        std::vector<std::vector<PairPartition>> t;
        for (int i = 0; i <= kMaxPartitionOrder; ++i) t.push_back(detail::build_pair_partitions(i));
        return t;
    }();
    return table[static_cast<std::size_t>(m)];
}

/// Σ over partitions P of the multi-index positions: Π_pairs pair(i_a, i_b) · Π_singles single(i_s).
template <typename Single, typename Pair>
double partition_sum(const std::vector<int>& idx, Single&& single, Pair&& pair) {
    double total = 0.0;
    for (const auto& p : pair_partitions(static_cast<int>(idx.size()))) {
        double term = 1.0;
        for (const auto& [a, b] : p.pairs) {
            term *= pair(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
            if (term == 0.0) break;
        }
        if (term == 0.0) continue;
        for (int s : p.singles) term *= single(idx[static_cast<std::size_t>(s)]);
        total += term;
    }
    return total;
}

}  // namespace rgmm
