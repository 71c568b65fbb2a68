#pragma once

#include <span>
#include <vector>

#include "spillover/hjb.hpp"
#include "spillover/params.hpp"

namespace spillover {

/// Normalised stationary firm distribution on the grid. The trapezoid
/// integral of `values` is 1 by construction.
struct Density {
    Grid grid;
    std::vector<double> values;
    double k = 0.0;
    double norm_constant = 0.0;  // mass of the unnormalised exponential
};

/// Closed-form stationary density
///   m(z) ~ exp( (2/sigma^2) (k z + int_0^z (gamma max(0,V')/w)^(gamma/(1-gamma)) dy) )
/// with the inner integral accumulated by the trapezoid rule and the
/// exponent shifted by its maximum before exponentiation (normalisation
/// cancels the shift exactly).
Density density_from_value(const ValueFunction& V, const ModelParams& params);

/// Discrete residual of the stationary equation
///   -(sigma^2/2) m'' + ([ (gamma max(0,V')/w)^(gamma/(1-gamma)) + k ] m)' = 0
/// under the same stencils as the value-function solver. Returns the
/// dz-weighted 1-norm over interior nodes plus the two boundary flux
/// residuals -(sigma^2/2) m' + k m at z = 0 and z = z_max.
double fp_residual(const Density& m, const ValueFunction& V, const ModelParams& params);

/// Trapezoid integral of z m(z); lies strictly inside (0, z_max).
double mean_productivity(const Density& m);

/// Trapezoid integral of z^alpha m(z); the z = 0 node contributes zero.
double moment_alpha(const Density& m, double alpha);

}  // namespace spillover
