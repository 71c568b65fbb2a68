#pragma once

// Independent reference computations used by the test suites. Everything
// here deliberately avoids the library's own solution paths: different
// discretisations, brute-force extremisation, or plain enumeration.

#include <functional>
#include <span>
#include <vector>

#include "spillover/density.hpp"
#include "spillover/hjb.hpp"
#include "spillover/network.hpp"
#include "spillover/params.hpp"

namespace spillover::test {

/// sup over a logarithmic h grid of (h^gamma + k) lambda + z^alpha B^(1-alpha) - w h.
double hamiltonian_bruteforce(double z, double lambda, double k, const ModelParams& p,
                              double price);

/// Stationary density by a conservative finite-volume tridiagonal solve with
/// zero-flux boundaries, pinned at the last node and renormalised. Shares
/// only the grid and the converged V' with the closed-form path.
Density density_bvp_oracle(const ValueFunction& V, const ModelParams& params);

/// Composite Simpson rule (grid must have an odd number of nodes).
double simpson(std::span<const double> f, double dz);

/// Scalar fixed point of g(k) = coupling_map(k) - k for a single-sector
/// network by bisection on [0, zeta]. When endogenous is true the price
/// constant is resolved by an inner iteration at every probe.
double scalar_fixed_point_bisection(const ModelParams& params, const SpilloverNetwork& net,
                                    const Grid& grid, const SolverOptions& opts,
                                    bool endogenous, double tol = 1e-10);

/// Truncated geometric series sum_{n=0..N} f1^n S^{n+1} 1 with N chosen so
/// the tail bound (f1 |S|)^{N+1} / (1 - f1 |S|) drops below 1e-12.
std::vector<double> truncated_series(const SpilloverMatrix& S, double f0, double f1);

/// Kolmogorov-Smirnov statistic of samples against the uniform law on [0, hi].
double ks_uniform(std::span<const double> samples, double hi);

/// Path classification by explicit enumeration of all incoming paths up to
/// the given length.
PathClass path_class_bruteforce(const SpilloverNetwork& net, int sector, int max_len);

}  // namespace spillover::test
