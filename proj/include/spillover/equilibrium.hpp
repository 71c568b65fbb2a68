#pragma once

#include <optional>
#include <span>
#include <vector>

#include "spillover/density.hpp"
#include "spillover/hjb.hpp"
#include "spillover/network.hpp"
#include "spillover/params.hpp"

namespace spillover {

/// Contraction diagnostics for a converged run: the a-priori coupling bound,
/// the per-sector products A_l P_l entering the uniqueness condition, and the
/// worst observed ratio of consecutive coupling gaps (absent when fewer than
/// two gaps were recorded).
struct UniquenessReport {
    double zeta = 0.0;
    std::vector<double> sector_products;
    std::optional<double> contraction_ratio;
    bool contraction_warning = false;
};

struct MfgSolution {
    std::vector<ValueFunction> values;
    std::vector<Density> densities;
    std::vector<double> k_star;
    double price = 1.0;  // equilibrium B
    PriceMode price_mode = PriceMode::Fixed;
    int iterations = 0;
    double final_gap = 0.0;
    std::vector<double> k_gap_history;  // |k^{i+1} - k^i|_1 per outer iteration
    std::vector<double> gap_history;    // combined coupling + price gap
    bool clamp_activated = false;       // some map output left [0, zeta] and was clamped
    int cache_hits = 0;
    UniquenessReport uniqueness;
};

/// Maps a coupling vector to the spillover inflows implied by the densities
/// it induces: component l is sum_{l'} S[l][l'] * mean productivity of the
/// sector-l' density solved at coupling k[l']. Sectors sharing a coupling
/// value share one solve. Solver failures are rethrown tagged with the
/// sector index.
std::vector<double> coupling_map(std::span<const double> k, const ModelParams& params,
                                 double price, const SpilloverNetwork& net, const Grid& grid,
                                 const SolverOptions& opts);

/// Price constant implied by a set of sector densities:
///   B = [ sum_l A_l int z^alpha m_l dz ]^(1/(alpha-1)).
double update_price(std::span<const Density> densities, const SpilloverNetwork& net,
                    const ModelParams& params);

/// Outer fixed-point iteration: couplings and (in endogenous mode) the price
/// constant are updated simultaneously each sweep until the combined gap
/// drops below fixed_point_tol. k0 defaults to zero and B0 to the fixed
/// price (or 1). Throws NonConvergenceError after max_fixed_point_iters.
MfgSolution solve_mfg(const ModelParams& params, const SpilloverNetwork& net, const Grid& grid,
                      const SolverOptions& opts, std::span<const double> k0 = {},
                      std::optional<double> B0 = std::nullopt);

/// Recomputes the uniqueness diagnostics for a converged solution.
UniquenessReport uniqueness_margin(const SpilloverNetwork& net, const MfgSolution& solution);

}  // namespace spillover
