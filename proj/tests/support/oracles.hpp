#pragma once

// Independent reference computations used only by tests.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace rgmm_test {

/// Composite Simpson rule on [lo, hi] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double lo, double hi, int panels = 20000) {
    if (panels % 2 == 1) ++panels;
    double h = (hi - lo) / panels;
    double total = f(lo) + f(hi);
    for (int i = 1; i < panels; ++i) total += (i % 2 == 1 ? 4.0 : 2.0) * f(lo + i * h);
    return total * h / 3.0;
}

inline double normal_pdf(double x, double mu, double var) {
    return std::exp(-0.5 * (x - mu) * (x - mu) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Probabilists' Hermite polynomial He_n(x) by the three-term recurrence.
inline double hermite_he(int n, double x) {
    if (n == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 1; k < n; ++k) {
        double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// All set partitions of {0, …, n−1} (Bell-number enumeration).
inline void set_partitions(int n, std::vector<std::vector<int>>& current, std::vector<std::vector<std::vector<int>>>& out, int next = 0) {
    if (next == n) {
        out.push_back(current);
        return;
    }
    for (std::size_t b = 0; b < current.size(); ++b) {
        current[b].push_back(next);
        set_partitions(n, current, out, next + 1);
        current[b].pop_back();
    }
    current.push_back({next});
    set_partitions(n, current, out, next + 1);
    current.pop_back();
}

/// Brute-force partitions of [m] restricted to blocks of size 1 and 2, counted via full set partitions.
inline std::vector<std::vector<std::vector<int>>> pair_singleton_partitions(int m) {
    std::vector<std::vector<std::vector<int>>> all, out;
    std::vector<std::vector<int>> cur;
    set_partitions(m, cur, all);
    for (auto& p : all) {
        bool ok = true;
        for (auto& b : p) ok = ok && b.size() <= 2;
        if (ok) out.push_back(p);
    }
    return out;
}

}  // namespace rgmm_test
