#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "spillover/errors.hpp"

namespace spillover {

/// Tridiagonal system; row i reads lower[i]*x[i-1] + diag[i]*x[i] + upper[i]*x[i+1].
/// lower[0] and upper[n-1] are ignored. The two fringe coefficients carry the
/// single out-of-band entry produced by second-order one-sided boundary rows:
/// first_fringe multiplies x[2] in row 0 and last_fringe multiplies x[n-3] in
/// row n-1.
struct Tridiagonal {
    std::vector<double> lower, diag, upper;
    double first_fringe = 0.0;
    double last_fringe = 0.0;

    explicit Tridiagonal(std::size_t n = 0) : lower(n), diag(n), upper(n) {}
    std::size_t size() const { return diag.size(); }
};

/// Thomas algorithm with exact elimination of the two fringe entries first.
/// Destroys its arguments. Throws SingularJacobianError on a vanishing pivot.
inline std::vector<double> solve_tridiagonal(Tridiagonal sys, std::vector<double> rhs) {
    const std::size_t n = sys.size();
    if (rhs.size() != n) throw DimensionError("tridiagonal rhs size mismatch");
    if (n < 3) throw DimensionError("tridiagonal system needs at least 3 rows");

    auto check_pivot = [](double v) {
        if (!(std::abs(v) > 0.0) || !std::isfinite(v))
            throw SingularJacobianError("tridiagonal solve hit a zero or non-finite pivot");
    };

    // Fold row-0 fringe (column 2) into rows 0..2 using row 1.
    if (sys.first_fringe != 0.0) {
        check_pivot(sys.upper[1]);
        double f = sys.first_fringe / sys.upper[1];
        sys.diag[0] -= f * sys.lower[1];
        sys.upper[0] -= f * sys.diag[1];
        rhs[0] -= f * rhs[1];
        sys.first_fringe = 0.0;
    }
    // Fold row-(n-1) fringe (column n-3) using row n-2.
    if (sys.last_fringe != 0.0) {
        check_pivot(sys.lower[n - 2]);
        double f = sys.last_fringe / sys.lower[n - 2];
        sys.lower[n - 1] -= f * sys.diag[n - 2];
        sys.diag[n - 1] -= f * sys.upper[n - 2];
        rhs[n - 1] -= f * rhs[n - 2];
        sys.last_fringe = 0.0;
    }

    // Forward sweep.
    check_pivot(sys.diag[0]);
    for (std::size_t i = 1; i < n; ++i) {
        double w = sys.lower[i] / sys.diag[i - 1];
        sys.diag[i] -= w * sys.upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
        check_pivot(sys.diag[i]);
    }
    // Back substitution.
    std::vector<double> x(n);
    x[n - 1] = rhs[n - 1] / sys.diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] = (rhs[i] - sys.upper[i] * x[i + 1]) / sys.diag[i];
    return x;
}

}  // namespace spillover
