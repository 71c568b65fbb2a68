#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spillover/equilibrium.hpp"
#include "spillover/network.hpp"
#include "spillover/nls.hpp"
#include "spillover/params.hpp"

namespace spillover {

/// One-parameter sweep around a base configuration.
struct SweepSpec {
    std::string parameter;  // sigma | wage | discount | gamma | alpha
    std::vector<double> values;
    ModelParams base;
    SpilloverNetwork network;
    int grid_points = 401;
    SolverOptions options;
    bool keep_densities = true;
};

struct SweepPoint {
    double value = 0.0;
    bool ok = false;
    std::string error;
    std::vector<double> mean_productivity;
    std::vector<Density> densities;
    double price = 0.0;
};

ModelParams with_parameter(ModelParams base, const std::string& name, double value);

/// One equilibrium solve per swept value; solver failures are recorded on the
/// point and the sweep continues.
std::vector<SweepPoint> run_sweep(const SweepSpec& spec);

struct DensityComparison {
    int net_a = 0, net_b = 0;
    int sector = 0;
    std::vector<double> z;
    std::vector<double> delta;  // m_a - m_b nodewise
    double mean_a = 0.0, mean_b = 0.0;
};

/// Nodewise density difference for one sector between two canonical networks
/// (ids 1..6) solved under identical parameters.
DensityComparison compare_networks(int id_a, int id_b, int sector, const ModelParams& params,
                                   const Grid& grid, const SolverOptions& opts);

/// Mean productivity of the auxiliary-pipeline density as a function of the
/// coupling, at a fixed price constant.
std::vector<std::pair<double, double>> k_mean_curve(std::span<const double> ks,
                                                    const ModelParams& params, double price,
                                                    const Grid& grid, const SolverOptions& opts);

struct EnsembleRecord {
    int run = 0;
    SpilloverNetwork net;
    SpilloverMatrix S;
    double zeta = 0.0;
    std::vector<double> k_star;
    std::vector<double> mean_prod;
    std::vector<PathClass> classes;
    double price = 0.0;
};

struct EnsembleSpec {
    int n_runs = 0;
    int sectors = 3;
    // Connection probability per run: fixed value, or uniform on [0,1] when
    // unset.
    std::optional<double> fixed_connection_prob;
    double weight_max = 1.0;
    SectorWeights sector_weights = SectorWeights::Equal;
    std::uint64_t seed = 0;
    ModelParams params;
    int grid_points = 401;
    SolverOptions options;
    int threads = 1;
};

struct EnsembleResult {
    std::vector<EnsembleRecord> records;
    int failures = 0;
    std::vector<std::string> failure_messages;
};

/// Draws networks, solves each equilibrium, classifies spillover paths and
/// collects the records. Failed runs are excluded and counted. Deterministic
/// for a given seed at any thread count.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

RegressionData make_regression_data(std::span<const EnsembleRecord> records, double z_max);

/// Largest-modulus eigenvalue estimate by power iteration (exact zero for
/// nilpotent matrices).
double spectral_radius(const SpilloverMatrix& S);

/// Closed form f0 (I - f1 S)^(-1) S 1 of the geometric series of network
/// powers. Throws SeriesDivergentError unless f1 * spectral_radius(S) < 1.
std::vector<double> series_k_estimate(const SpilloverMatrix& S, double f0, double f1);

}  // namespace spillover
