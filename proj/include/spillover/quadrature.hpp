#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace spillover {

/// Composite trapezoid rule on a uniform grid with spacing dz.
inline double trapezoid(std::span<const double> f, double dz) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * dz;
}

/// Cumulative trapezoid integral; result[0] = 0.
inline std::vector<double> cumulative_trapezoid(std::span<const double> f, double dz) {
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i)
        out[i] = out[i - 1] + 0.5 * dz * (f[i - 1] + f[i]);
    return out;
}

/// Discrete 1-norm of a grid function, dz * sum |f_i|.
inline double grid_norm1(std::span<const double> f, double dz) {
    double s = 0.0;
    for (double v : f) s += std::abs(v);
    return s * dz;
}

inline double max_abs(std::span<const double> f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace spillover
