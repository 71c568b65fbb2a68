#include "spillover/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spillover/model.hpp"
#include "spillover/quadrature.hpp"

namespace spillover {

Density density_from_value(const ValueFunction& V, const ModelParams& params) {
    validate_params(params);
    if (!(V.k >= 0.0)) throw ParameterDomainError("coupling k must be non-negative");
    const Grid& grid = V.grid;
    const int n = grid.n;
    if (static_cast<int>(V.derivative.size()) != n)
        throw DimensionError("value-function derivative length does not match its grid");

    // Clip the derivative before the fractional power: the converged solution
    // has V' >= 0 but boundary nodes can dip below zero by the solver
    // tolerance.
    std::vector<double> yield(n);
    for (int i = 0; i < n; ++i) yield[i] = labour_yield(V.derivative[i], params);
    std::vector<double> inner = cumulative_trapezoid(yield, grid.dz);

    const double scale = 2.0 / (params.sigma * params.sigma);
    std::vector<double> exponent(n);
    double shift = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        exponent[i] = scale * (V.k * grid.z[i] + inner[i]);
        shift = std::max(shift, exponent[i]);
    }

    Density out;
    out.grid = grid;
    out.k = V.k;
    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = std::exp(exponent[i] - shift);
    double shifted_mass = trapezoid(out.values, grid.dz);
    for (double& v : out.values) v /= shifted_mass;
    out.norm_constant = shifted_mass * std::exp(shift);
    return out;
}

double fp_residual(const Density& m, const ValueFunction& V, const ModelParams& params) {
    validate_params(params);
    const Grid& grid = m.grid;
    const int n = grid.n;
    if (V.grid.n != n || static_cast<int>(m.values.size()) != n)
        throw DimensionError("density and value function must share one grid");

    const double dz = grid.dz;
    const double inv2dz = 1.0 / (2.0 * dz);
    const double invdz2 = 1.0 / (dz * dz);
    const double half_sigma2 = 0.5 * params.sigma * params.sigma;
    const double k = m.k;

    std::vector<double> flux_coef(n);  // drift under the optimal control
    for (int i = 0; i < n; ++i) flux_coef[i] = labour_yield(V.derivative[i], params) + k;

    double interior = 0.0;
    for (int i = 1; i + 1 < n; ++i) {
        double diff = (m.values[i + 1] - 2.0 * m.values[i] + m.values[i - 1]) * invdz2;
        double adv = (flux_coef[i + 1] * m.values[i + 1] - flux_coef[i - 1] * m.values[i - 1]) * inv2dz;
        interior += std::abs(-half_sigma2 * diff + adv);
    }

    double d_left = (-3.0 * m.values[0] + 4.0 * m.values[1] - m.values[2]) * inv2dz;
    double d_right = (3.0 * m.values[n - 1] - 4.0 * m.values[n - 2] + m.values[n - 3]) * inv2dz;
    double flux_left = -half_sigma2 * d_left + k * m.values[0];
    double flux_right = -half_sigma2 * d_right + k * m.values[n - 1];

    return interior * dz + std::abs(flux_left) + std::abs(flux_right);
}

double mean_productivity(const Density& m) {
    std::vector<double> integrand(m.values.size());
    for (std::size_t i = 0; i < m.values.size(); ++i) integrand[i] = m.grid.z[i] * m.values[i];
    return trapezoid(integrand, m.grid.dz);
}

double moment_alpha(const Density& m, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ParameterDomainError("alpha must lie strictly inside (0,1)");
    std::vector<double> integrand(m.values.size());
    integrand[0] = 0.0;
    for (std::size_t i = 1; i < m.values.size(); ++i)
        integrand[i] = std::pow(m.grid.z[i], alpha) * m.values[i];
    return trapezoid(integrand, m.grid.dz);
}

}  // namespace spillover
