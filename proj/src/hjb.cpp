#include "spillover/hjb.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spillover/model.hpp"

namespace spillover {

namespace {

double mean_abs(std::span<const double> f) {
    double s = 0.0;
    for (double v : f) s += std::abs(v);
    return s / static_cast<double>(f.size());
}

void check_inputs(std::span<const double> v, double k, const ModelParams& params,
                  double price, const Grid& grid) {
    validate_params(params);
    if (!(price > 0.0)) throw ParameterDomainError("resolved price B must be positive");
    if (!(k >= 0.0)) throw ParameterDomainError("coupling k must be non-negative");
    if (grid.n < 3) throw ValidationError("grid needs at least 3 nodes");
    if (static_cast<int>(v.size()) != grid.n)
        throw DimensionError("node vector length does not match the grid");
}

// Advection-vs-diffusion guard for the central scheme. The drift never
// exceeds k plus the labour yield at the derivative envelope.
void check_cell_peclet(double k, const ModelParams& params, double price, const Grid& grid) {
    double yield_max = labour_yield(derivative_upper_bound(params, price), params);
    double drift_sup = k + yield_max;
    double sigma2 = params.sigma * params.sigma;
    if (grid.dz * (k + drift_sup) > sigma2) {
        std::ostringstream os;
        os << "grid too coarse for central differences: dz=" << grid.dz
           << " exceeds sigma^2/(k + sup drift)=" << sigma2 / (k + drift_sup)
           << " (k=" << k << ", sup drift=" << drift_sup << ")";
        throw ConfigError(os.str());
    }
}

}  // namespace

std::vector<double> grid_derivative(std::span<const double> v, const Grid& grid) {
    const int n = grid.n;
    if (static_cast<int>(v.size()) != n)
        throw DimensionError("node vector length does not match the grid");
    const double inv2dz = 1.0 / (2.0 * grid.dz);
    std::vector<double> d(n);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2dz;
    for (int i = 1; i + 1 < n; ++i) d[i] = (v[i + 1] - v[i - 1]) * inv2dz;
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2dz;
    return d;
}

std::vector<double> hjb_residual(std::span<const double> v, double k,
                                 const ModelParams& params, double price, const Grid& grid) {
    check_inputs(v, k, params, price, grid);
    const int n = grid.n;
    const double dz = grid.dz;
    const double inv2dz = 1.0 / (2.0 * dz);
    const double invdz2 = 1.0 / (dz * dz);
    const double half_sigma2 = 0.5 * params.sigma * params.sigma;
    const double price_pow = std::pow(price, 1.0 - params.alpha);
    const double control_coef =
        (1.0 - params.gamma) * std::pow(params.gamma / params.wage, params.gamma / (1.0 - params.gamma));
    const double control_exp = 1.0 / (1.0 - params.gamma);

    std::vector<double> r(n);
    r[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv2dz;
    for (int i = 1; i + 1 < n; ++i) {
        double d1 = (v[i + 1] - v[i - 1]) * inv2dz;
        double d2 = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * invdz2;
        double clipped = std::max(0.0, d1);
        r[i] = -half_sigma2 * d2 + params.discount * v[i] - k * d1 -
               control_coef * std::pow(clipped, control_exp) -
               std::pow(grid.z[i], params.alpha) * price_pow;
    }
    r[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv2dz;
    return r;
}

Tridiagonal hjb_jacobian(std::span<const double> v, double k, const ModelParams& params,
                         const Grid& grid) {
    const int n = grid.n;
    const double dz = grid.dz;
    const double inv2dz = 1.0 / (2.0 * dz);
    const double invdz2 = 1.0 / (dz * dz);
    const double half_sigma2 = 0.5 * params.sigma * params.sigma;

    Tridiagonal J(n);
    J.diag[0] = -3.0 * inv2dz;
    J.upper[0] = 4.0 * inv2dz;
    J.first_fringe = -1.0 * inv2dz;
    for (int i = 1; i + 1 < n; ++i) {
        double d1 = (v[i + 1] - v[i - 1]) * inv2dz;
        // Subgradient at the kink: one-sided slope from v' > 0, zero below.
        double advect = k + labour_yield(d1, params);
        J.lower[i] = -half_sigma2 * invdz2 + advect * inv2dz;
        J.diag[i] = 2.0 * half_sigma2 * invdz2 + params.discount;
        J.upper[i] = -half_sigma2 * invdz2 - advect * inv2dz;
    }
    J.diag[n - 1] = 3.0 * inv2dz;
    J.lower[n - 1] = -4.0 * inv2dz;
    J.last_fringe = 1.0 * inv2dz;
    return J;
}

std::vector<double> frechet_apply(std::span<const double> v, std::span<const double> u,
                                  double k, const ModelParams& params, double price,
                                  const Grid& grid) {
    check_inputs(v, k, params, price, grid);
    if (u.size() != v.size()) throw DimensionError("direction vector length mismatch");
    Tridiagonal J = hjb_jacobian(v, k, params, grid);
    const int n = grid.n;
    std::vector<double> out(n);
    out[0] = J.diag[0] * u[0] + J.upper[0] * u[1] + J.first_fringe * u[2];
    for (int i = 1; i + 1 < n; ++i)
        out[i] = J.lower[i] * u[i - 1] + J.diag[i] * u[i] + J.upper[i] * u[i + 1];
    out[n - 1] = J.last_fringe * u[n - 3] + J.lower[n - 1] * u[n - 2] + J.diag[n - 1] * u[n - 1];
    return out;
}

ValueFunction solve_auxiliary_hjb(double k, const ModelParams& params, double price,
                                  const Grid& grid, const SolverOptions& opts,
                                  std::span<const double> initial_guess) {
    validate_options(opts);
    check_cell_peclet(k, params, price, grid);

    const int n = grid.n;
    std::vector<double> v(n);
    if (!initial_guess.empty()) {
        if (static_cast<int>(initial_guess.size()) != n)
            throw DimensionError("initial guess length does not match the grid");
        v.assign(initial_guess.begin(), initial_guess.end());
    } else {
        // Exact solution of the problem with sigma = k = 0 and no control
        // term; respects the value envelope.
        const double price_pow = std::pow(price, 1.0 - params.alpha);
        for (int i = 0; i < n; ++i)
            v[i] = std::pow(grid.z[i], params.alpha) * price_pow / params.discount;
    }
    check_inputs(v, k, params, price, grid);

    std::vector<double> residual = hjb_residual(v, k, params, price, grid);
    double norm = mean_abs(residual);
    int iter = 0;
    for (; iter < opts.max_newton_iters && norm > opts.newton_tol; ++iter) {
        Tridiagonal J = hjb_jacobian(v, k, params, grid);
        std::vector<double> rhs(residual.size());
        for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -residual[i];
        std::vector<double> delta = solve_tridiagonal(std::move(J), std::move(rhs));

        double step = opts.damping;
        std::vector<double> trial(n);
        std::vector<double> trial_residual;
        double trial_norm = 0.0;
        for (int backtrack = 0;; ++backtrack) {
            for (int i = 0; i < n; ++i) trial[i] = v[i] + step * delta[i];
            trial_residual = hjb_residual(trial, k, params, price, grid);
            trial_norm = mean_abs(trial_residual);
            if (trial_norm <= norm || backtrack >= 6) break;
            step *= 0.5;
        }
        v.swap(trial);
        residual.swap(trial_residual);
        norm = trial_norm;
    }
    if (norm > opts.newton_tol) {
        std::ostringstream os;
        os << "Newton iteration for the auxiliary problem stalled at residual " << norm
           << " after " << iter << " iterations (k=" << k << ", B=" << price << ")";
        throw NonConvergenceError(os.str(), norm, iter);
    }

    ValueFunction out;
    out.grid = grid;
    out.derivative = grid_derivative(v, grid);
    out.values = std::move(v);
    out.k = k;
    out.price = price;
    out.residual_norm = norm;
    out.newton_iterations = iter;
    return out;
}

}  // namespace spillover
