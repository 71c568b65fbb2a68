#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spillover/errors.hpp"
#include "spillover/network.hpp"

namespace spillover {

/// Residual evaluator for least-squares problems. Returns false when the
/// parameter vector is outside the model's valid region (the trial step is
/// then rejected by the optimiser).
using ResidualFn = std::function<bool(std::span<const double> theta, std::vector<double>& out)>;

struct LmOptions {
    int max_iterations = 300;
    double step_tol = 1e-13;
    double gradient_tol = 1e-14;
    double lambda0 = 1e-3;
};

struct LmSolution {
    std::vector<double> theta;
    std::vector<double> std_errors;
    double rss = 0.0;
    bool converged = false;
    int iterations = 0;
};

/// Levenberg-Marquardt with a centrally differenced Jacobian and standard
/// errors from the Gauss-Newton approximation at the solution. Throws
/// RankDeficientError if a Jacobian column vanishes identically.
LmSolution levenberg_marquardt(const ResidualFn& residuals, int n_residuals,
                               std::vector<double> theta0, const LmOptions& opts = {});

enum class RegressionModel { KMeanCurve, IndirectSeries, FullIndirect, DirectOnly };

const char* to_string(RegressionModel m);

struct RegressionFit {
    RegressionModel model = RegressionModel::KMeanCurve;
    std::vector<std::string> parameter_names;
    std::vector<double> estimates;
    std::vector<double> std_errors;
    double rss = 0.0;
    double r_squared = 0.0;
    bool converged = true;
    int iterations = 0;
    std::size_t n_points = 0;
    bool series_condition_ok = true;  // f1 * spectral_radius(S) < 1 on every record used

    double estimate(const std::string& name) const;
};

/// One (record, sector) observation from an ensemble.
struct SectorObservation {
    int record = 0;
    int sector = 0;
    double k_star = 0.0;
    double mean_prod = 0.0;
    double s_row_sum = 0.0;
    PathClass cls = PathClass::NoSpillover;
};

struct RegressionData {
    std::vector<SectorObservation> points;
    std::vector<SpilloverMatrix> matrices;  // indexed by SectorObservation::record
    double z_max = 0.0;
};

/// Saturating-curve fit  y = z_max - b0 / (k^b1 + b2)  on (k, y) samples.
RegressionFit fit_k_mean_curve(std::span<const std::pair<double, double>> samples, double z_max,
                               std::span<const double> initial = {});

/// Ensemble fits. IndirectSeries regresses k* on the geometric series of
/// network powers over sectors with indirect spillovers; FullIndirect chains
/// that with the saturating mean curve (two stages, matching how the two
/// parameter groups are identified); DirectOnly uses the direct spillover row
/// sum as the only regressor.
RegressionFit fit_nls(RegressionModel model, const RegressionData& data,
                      std::span<const double> initial = {});

/// Model predictions for the mean-productivity models (FullIndirect /
/// DirectOnly) on every point of `data`.
std::vector<double> predict_mean(const RegressionFit& fit, const RegressionData& data);

struct ModelComparison {
    double rss_indirect = 0.0;
    double rss_direct = 0.0;
    double r2_indirect = 0.0;
    double r2_direct = 0.0;
    double error_reduction = 0.0;  // (rss_direct - rss_indirect) / rss_direct
};

ModelComparison model_comparison(const RegressionData& data, const RegressionFit& indirect,
                                 const RegressionFit& direct);

}  // namespace spillover
