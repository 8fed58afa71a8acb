#pragma once

#include <cmath>
#include <vector>

#include "nustab/errors.hpp"

namespace nustab {

inline std::vector<double> linear_grid(double a, double b, int n) {
    if (n < 2 || !(b > a)) throw DataError("linear_grid: need n >= 2 and b > a");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
    return g;
}

inline std::vector<double> log_grid(double a, double b, int n) {
    if (!(a > 0.0) || !(b > a) || n < 2)
        throw DataError("log_grid: need 0 < a < b and n >= 2");
    std::vector<double> g(static_cast<std::size_t>(n));
    const double la = std::log(a), lb = std::log(b);
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] =
            std::exp(la + (lb - la) * static_cast<double>(i) / (n - 1));
    g.front() = a;
    g.back() = b;
    return g;
}

} // namespace nustab
