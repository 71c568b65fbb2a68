#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spillover/equilibrium.hpp"
#include "spillover/network.hpp"
#include "spillover/params.hpp"

namespace spillover {

/// How the one-off link counts between ordered firm pairs are drawn.
///  - PairwiseMean: expected count per ordered pair equals the kernel entry
///    p(l,l'), so each firm's inflow (1/N) sum s_ij Z_j self-averages to
///    sum_l' A_l' p(l,l') E[Z_l'] as the populations grow.
///  - PerCapita: count 1 with probability p(l,l')/N_l', else 0; sparse graph
///    whose per-firm inflow under the 1/N normalisation vanishes with N.
///  - Explicit: take the provided link list verbatim (testing hook).
enum class LinkLaw { PairwiseMean, PerCapita, Explicit };

struct ExplicitLink {
    int to_sector = 0, to_firm = 0;
    int from_sector = 0, from_firm = 0;
    double count = 1.0;
};

struct SimConfig {
    std::vector<int> firms_per_sector;
    double horizon = 1.0;
    double dt = 0.01;
    std::uint64_t seed = 0;
    enum class InitialLaw { Uniform, FromDensity } initial_law = InitialLaw::Uniform;
    std::vector<Density> initial_densities;  // used when initial_law == FromDensity
    LinkLaw link_law = LinkLaw::PairwiseMean;
    std::vector<ExplicitLink> explicit_links;
    int snapshot_stride = 100;  // record every this many steps
};

void validate_sim_config(const SimConfig& config, const SpilloverNetwork& net);

/// Particle positions per sector at one instant; every coordinate stays
/// inside [0, z_max] through reflection.
struct EmpiricalState {
    double time = 0.0;
    std::vector<std::vector<double>> positions;
};

using SectorPolicy = std::function<double(double)>;

struct SimResult {
    std::vector<EmpiricalState> snapshots;  // includes the final state
    std::size_t total_links = 0;
};

/// Reflected Euler-Maruyama integration of the finite firm system under the
/// given per-sector labour policies. Per-step drift for firm i of sector l is
///   h_l(Z_i)^gamma + (1/N) sum_{l'} sum_j s_ij Z_j
/// with link counts drawn once at t = 0. Policies are sampled onto the model
/// grid at setup. Overshoot past a boundary is folded back inside. Requires
/// sigma >= 0 (sigma = 0 degenerates to the deterministic system).
SimResult simulate(const SimConfig& config, const SpilloverNetwork& net,
                   const ModelParams& params, std::span<const SectorPolicy> policies);

/// Optimal labour policy induced by a converged solution for one sector,
/// h(z) = (gamma max(0, V'(z)) / w)^(1/(1-gamma)) with V' interpolated
/// linearly between grid nodes.
SectorPolicy equilibrium_policy(const MfgSolution& solution, int sector,
                                const ModelParams& params);

struct SectorMatch {
    double mean_gap = 0.0;     // |empirical mean - model mean|
    double wasserstein = 0.0;  // W1 between late-time empirical law and the model density
};

struct MatchReport {
    bool applicable = true;
    std::string note;
    std::vector<SectorMatch> sectors;
};

/// Compares the late-time empirical measures (snapshots past the burn-in
/// fraction, pooled) against the model densities. Flags sigma = 0 configs as
/// not applicable.
MatchReport empirical_vs_mfg(const SimResult& result, const MfgSolution& solution,
                             const ModelParams& params, double burn_in_fraction = 0.5);

/// Quantile function of a grid density via its piecewise-linear CDF.
double density_quantile(const Density& m, double u);

/// W1 distance between a sample set and a grid density (sorted samples vs
/// inverse-CDF quadrature at midpoint ranks).
double wasserstein1(std::span<const double> samples, const Density& m);

}  // namespace spillover
