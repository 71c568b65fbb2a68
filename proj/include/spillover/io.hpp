#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spillover/equilibrium.hpp"
#include "spillover/experiments.hpp"
#include "spillover/network.hpp"
#include "spillover/params.hpp"

namespace spillover {

/// Full-precision decimal rendering (%.17g) so outputs round-trip bitwise.
std::string format_double(double v);

/// Writes via a temp file in the same directory followed by a rename.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_text_file(const std::filesystem::path& path);

/// Parameter document: flat `key = value` lines (comments start with #).
/// Keys: sigma, wage, discount, gamma, alpha, z_max, price_mode. price_mode
/// is either the string "endogenous" or a positive number fixing B.
ModelParams parse_params(const std::string& text);
ModelParams load_params_file(const std::filesystem::path& path);
std::string params_to_text(const ModelParams& params);
nlohmann::json params_to_json(const ModelParams& params);

SpilloverNetwork load_network_file(const std::filesystem::path& path);
nlohmann::json network_to_json(const SpilloverNetwork& net);

/// CSV of the weighted influence matrix, header `sector,1..L`.
std::string spillover_matrix_csv(const SpilloverMatrix& S);

/// Per-sector solution table, header `z,V,dV,m`.
std::string sector_solution_csv(const MfgSolution& sol, int sector);

nlohmann::json solution_summary_json(const MfgSolution& sol);

std::string sweep_csv(const std::vector<SweepPoint>& points);
std::string density_csv(const Density& m);
std::string density_comparison_csv(const DensityComparison& cmp);
std::string ensemble_records_csv(const std::vector<EnsembleRecord>& records);
std::string regression_summary_csv(const std::vector<RegressionFit>& fits);
std::string k_mean_curve_csv(const std::vector<std::pair<double, double>>& samples);

nlohmann::json ensemble_to_json(const EnsembleResult& result);
EnsembleResult ensemble_from_json(const nlohmann::json& doc);

}  // namespace spillover
