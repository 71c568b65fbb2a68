#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "spillover/errors.hpp"

namespace spillover {

enum class PriceMode { Fixed, Endogenous };

/// Economic and numerical scalars shared by every solver stage. Plain value
/// type; call validate_params() at the entry point of an operation that
/// requires a valid instance.
struct ModelParams {
    double sigma = 1.0;     // noise strength
    double wage = 1.0;      // cost per unit of labour
    double discount = 1.0;  // profit discount rate
    double gamma = 0.5;     // labour-conversion exponent, in (0,1)
    double alpha = 0.5;     // CES exponent, in (0,1)
    double z_max = 2.0;     // productivity ceiling
    double income = 1.0;    // aggregate income, normalised to 1
    PriceMode price_mode = PriceMode::Endogenous;
    double fixed_price = 1.0;  // B when price_mode == Fixed
};

inline void validate_params(const ModelParams& p) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ParameterDomainError(std::string(name) + " must be strictly positive");
    };
    positive(p.sigma, "sigma");
    positive(p.wage, "wage");
    positive(p.discount, "discount");
    positive(p.z_max, "z_max");
    positive(p.income, "income");
    if (!(p.gamma > 0.0 && p.gamma < 1.0))
        throw ParameterDomainError("gamma must lie strictly inside (0,1)");
    if (!(p.alpha > 0.0 && p.alpha < 1.0))
        throw ParameterDomainError("alpha must lie strictly inside (0,1)");
    if (p.price_mode == PriceMode::Fixed && !(p.fixed_price > 0.0))
        throw ParameterDomainError("fixed price B must be strictly positive");
}

/// Uniform grid on [0, z_max]. Endpoints are stored exactly.
struct Grid {
    int n = 0;
    double z_max = 0.0;
    double dz = 0.0;
    std::vector<double> z;

    static Grid uniform(int n_points, double z_max) {
        if (n_points < 3) throw ValidationError("grid needs at least 3 nodes");
        if (!(z_max > 0.0)) throw ParameterDomainError("z_max must be strictly positive");
        Grid g;
        g.n = n_points;
        g.z_max = z_max;
        g.dz = z_max / static_cast<double>(n_points - 1);
        g.z.resize(n_points);
        for (int i = 0; i < n_points; ++i) g.z[i] = g.dz * i;
        g.z.front() = 0.0;
        g.z.back() = z_max;
        return g;
    }
};

/// Tolerances and iteration caps for the inner Newton solver and the outer
/// fixed-point loop.
struct SolverOptions {
    double newton_tol = 1e-10;      // mean absolute residual per node
    double fixed_point_tol = 1e-8;  // combined coupling + price gap
    int max_newton_iters = 60;
    int max_fixed_point_iters = 500;
    double damping = 1.0;  // initial Newton step multiplier, in (0,1]
};

inline void validate_options(const SolverOptions& o) {
    if (!(o.newton_tol > 0.0)) throw ParameterDomainError("newton_tol must be positive");
    if (!(o.fixed_point_tol > 0.0)) throw ParameterDomainError("fixed_point_tol must be positive");
    if (o.max_newton_iters < 1) throw ParameterDomainError("max_newton_iters must be >= 1");
    if (o.max_fixed_point_iters < 1) throw ParameterDomainError("max_fixed_point_iters must be >= 1");
    if (!(o.damping > 0.0 && o.damping <= 1.0))
        throw ParameterDomainError("damping must lie in (0,1]");
}

}  // namespace spillover
