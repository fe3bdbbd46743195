#pragma once

// Test-side oracles, independent of the library's computation paths.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracles {

// Central difference with one Richardson extrapolation step: O(h^4).
inline double richardson_diff(const std::function<double(double)>& f, double x,
                              double h = 1e-4) {
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + 2.0 * h) - f(x - 2.0 * h)) / (4.0 * h);
    return (4.0 * d1 - d2) / 3.0;
}

// Deterministic uniform samples in [lo, hi].
inline std::vector<double> random_uniform(std::size_t n, double lo, double hi,
                                          unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v)
        x = dist(rng);
    return v;
}

} // namespace oracles
