#pragma once

#include <span>
#include <vector>

#include "spillover/params.hpp"
#include "spillover/tridiag.hpp"

namespace spillover {

/// Converged solution of the auxiliary boundary-value problem for one sector
/// and one coupling value. `derivative` uses central differences in the
/// interior and second-order one-sided differences at the endpoints, matching
/// the residual stencils.
struct ValueFunction {
    Grid grid;
    std::vector<double> values;
    std::vector<double> derivative;
    double k = 0.0;
    double price = 1.0;  // resolved B
    double residual_norm = 0.0;
    int newton_iterations = 0;
};

/// Nodewise first derivative with the solver's stencils.
std::vector<double> grid_derivative(std::span<const double> v, const Grid& grid);

/// Nonlinear residual of the discretised problem. Interior rows evaluate
///   -(sigma^2/2) v'' + rho v - k v'
///   - (1-gamma)(gamma/w)^(gamma/(1-gamma)) max(0,v')^(1/(1-gamma))
///   - z^alpha B^(1-alpha)
/// with central differences; the first and last rows enforce the reflecting
/// condition v' = 0 through one-sided second-order differences.
std::vector<double> hjb_residual(std::span<const double> v, double k,
                                 const ModelParams& params, double price, const Grid& grid);

/// Directional derivative of hjb_residual at v applied to u:
///   -(sigma^2/2) u'' + rho u - [k + (gamma max(0,v')/w)^(gamma/(1-gamma))] u'
/// with the same boundary rows acting on u.
std::vector<double> frechet_apply(std::span<const double> v, std::span<const double> u,
                                  double k, const ModelParams& params, double price,
                                  const Grid& grid);

/// The same linearisation assembled as a tridiagonal matrix (plus the two
/// boundary fringe entries).
Tridiagonal hjb_jacobian(std::span<const double> v, double k, const ModelParams& params,
                         const Grid& grid);

/// Damped Newton iteration for the auxiliary problem at coupling k and
/// resolved price. Throws NonConvergenceError after max_newton_iters and
/// SingularJacobianError if a linear solve fails. A non-empty initial_guess
/// warm-starts the iteration.
ValueFunction solve_auxiliary_hjb(double k, const ModelParams& params, double price,
                                  const Grid& grid, const SolverOptions& opts,
                                  std::span<const double> initial_guess = {});

}  // namespace spillover
