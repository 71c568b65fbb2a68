#pragma once

#include <algorithm>
#include <cmath>

#include "spillover/params.hpp"

namespace spillover {

/// Labour demand that maximises (h^gamma) * lambda - w * h. Zero whenever the
/// adjoint value lambda is non-positive.
inline double optimal_labour(double lambda, const ModelParams& p) {
    double clipped = std::max(0.0, lambda);
    return std::pow(p.gamma * clipped / p.wage, 1.0 / (1.0 - p.gamma));
}

/// Knowledge produced by the optimal labour choice, h*^gamma. The adjoint is
/// clipped at zero before exponentiation so fractional powers never see a
/// negative base.
inline double labour_yield(double lambda, const ModelParams& p) {
    double clipped = std::max(0.0, lambda);
    return std::pow(p.gamma * clipped / p.wage, p.gamma / (1.0 - p.gamma));
}

/// Productivity drift under the optimal control: h*^gamma + k. Continuous in
/// lambda; its lambda-derivative is unbounded at 0 for gamma > 1/2, but only
/// the drift itself is ever evaluated.
inline double drift(double lambda, double k, const ModelParams& p) {
    return labour_yield(lambda, p) + k;
}

/// Instantaneous profit z^alpha / B^(alpha-1) for a resolved price constant.
inline double profit(double z, double alpha, double price) {
    return std::pow(z, alpha) * std::pow(price, 1.0 - alpha);
}

/// Hamiltonian of the single-sector control problem with coupling k and
/// resolved price constant:
///   (1-gamma) (gamma/w)^(gamma/(1-gamma)) max(0,lambda)^(1/(1-gamma))
///   + k lambda + z^alpha / B^(alpha-1).
inline double hamiltonian(double z, double lambda, double k, const ModelParams& p, double price) {
    double clipped = std::max(0.0, lambda);
    double control_term = (1.0 - p.gamma) *
                          std::pow(p.gamma / p.wage, p.gamma / (1.0 - p.gamma)) *
                          std::pow(clipped, 1.0 / (1.0 - p.gamma));
    return control_term + k * lambda + profit(z, p.alpha, price);
}

/// Upper envelope of the value function, z_max^alpha B^(1-alpha) / rho.
inline double value_upper_bound(const ModelParams& p, double price) {
    return profit(p.z_max, p.alpha, price) / p.discount;
}

/// Uniform bound on the value-function derivative:
///   [z_max^alpha B^(1-alpha) / (1-gamma)]^(1-gamma) (w/gamma)^gamma.
inline double derivative_upper_bound(const ModelParams& p, double price) {
    return std::pow(profit(p.z_max, p.alpha, price) / (1.0 - p.gamma), 1.0 - p.gamma) *
           std::pow(p.wage / p.gamma, p.gamma);
}

}  // namespace spillover
