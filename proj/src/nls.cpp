#include "spillover/nls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include <Eigen/Dense>

namespace spillover {

namespace {

bool finite_all(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

double sum_squares(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

// Central-difference Jacobian. Throws RankDeficientError when a column is
// identically zero (a parameter with no effect on any residual).
Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, std::span<const double> theta,
                                 int n_residuals) {
    const int p = static_cast<int>(theta.size());
    Eigen::MatrixXd J(n_residuals, p);
    std::vector<double> tp(theta.begin(), theta.end());
    std::vector<double> rp, rm;
    for (int j = 0; j < p; ++j) {
        double h = 1e-6 * std::max(1.0, std::abs(theta[j]));
        double save = tp[j];
        tp[j] = save + h;
        bool ok_p = f(tp, rp);
        tp[j] = save - h;
        bool ok_m = f(tp, rm);
        tp[j] = save;
        if (!ok_p || !ok_m || !finite_all(rp) || !finite_all(rm))
            throw NumericalError("residuals not evaluable near the current iterate");
        for (int i = 0; i < n_residuals; ++i) J(i, j) = (rp[i] - rm[i]) / (2.0 * h);
        if (J.col(j).cwiseAbs().maxCoeff() == 0.0) {
            std::ostringstream os;
            os << "Jacobian column " << j << " vanishes: parameter has no effect";
            throw RankDeficientError(os.str());
        }
    }
    return J;
}

}  // namespace

LmSolution levenberg_marquardt(const ResidualFn& residuals, int n_residuals,
                               std::vector<double> theta0, const LmOptions& opts) {
    const int p = static_cast<int>(theta0.size());
    if (p == 0) throw ValidationError("empty parameter vector");
    if (n_residuals < 1) throw ValidationError("no residuals to fit");

    std::vector<double> r;
    if (!residuals(theta0, r) || static_cast<int>(r.size()) != n_residuals || !finite_all(r))
        throw ValidationError("residuals cannot be evaluated at the initial guess");

    LmSolution sol;
    sol.theta = std::move(theta0);
    sol.rss = sum_squares(r);

    double lambda = opts.lambda0;
    Eigen::MatrixXd J = numeric_jacobian(residuals, sol.theta, n_residuals);
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        Eigen::VectorXd rv = Eigen::Map<const Eigen::VectorXd>(r.data(), n_residuals);
        Eigen::MatrixXd jtj = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * rv;
        if (g.cwiseAbs().maxCoeff() <= opts.gradient_tol * std::max(1.0, sol.rss)) {
            sol.converged = true;
            break;
        }

        bool accepted = false;
        for (int damp = 0; damp < 40 && !accepted; ++damp) {
            Eigen::MatrixXd A = jtj;
            for (int j = 0; j < p; ++j)
                A(j, j) += lambda * std::max(jtj(j, j), 1e-12);
            Eigen::VectorXd step = A.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial(sol.theta);
            for (int j = 0; j < p; ++j) trial[j] += step(j);
            std::vector<double> rt;
            if (residuals(trial, rt) && finite_all(rt)) {
                double rss_t = sum_squares(rt);
                if (rss_t <= sol.rss) {
                    double step_size = step.cwiseAbs().maxCoeff();
                    sol.theta = std::move(trial);
                    r = std::move(rt);
                    double drop = sol.rss - rss_t;
                    sol.rss = rss_t;
                    lambda = std::max(lambda * 0.25, 1e-12);
                    accepted = true;
                    if (step_size <= opts.step_tol * (1.0 + step_size) ||
                        drop <= opts.step_tol * std::max(1.0, sol.rss)) {
                        sol.converged = true;
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No downhill step found at any damping: treat the iterate as
            // final (flagged unconverged unless the gradient test passed).
            break;
        }
        if (sol.converged) break;
        J = numeric_jacobian(residuals, sol.theta, n_residuals);
    }
    sol.iterations = iter;

    // Gauss-Newton standard errors at the final iterate.
    sol.std_errors.assign(p, std::numeric_limits<double>::quiet_NaN());
    if (n_residuals > p) {
        Eigen::MatrixXd Jf = numeric_jacobian(residuals, sol.theta, n_residuals);
        Eigen::MatrixXd jtj = Jf.transpose() * Jf;
        double s2 = sol.rss / static_cast<double>(n_residuals - p);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
        if (lu.isInvertible()) {
            Eigen::MatrixXd cov = lu.inverse() * s2;
            for (int j = 0; j < p; ++j)
                sol.std_errors[j] = std::sqrt(std::max(0.0, cov(j, j)));
        }
    }
    return sol;
}

const char* to_string(RegressionModel m) {
    switch (m) {
        case RegressionModel::KMeanCurve: return "k_mean_curve";
        case RegressionModel::IndirectSeries: return "indirect_series";
        case RegressionModel::FullIndirect: return "full_indirect";
        case RegressionModel::DirectOnly: return "direct_only";
    }
    return "?";
}

double RegressionFit::estimate(const std::string& name) const {
    for (std::size_t i = 0; i < parameter_names.size(); ++i)
        if (parameter_names[i] == name) return estimates[i];
    throw ValidationError("unknown regression parameter: " + name);
}

namespace {

double r_squared_of(const std::vector<double>& y, double rss) {
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double tss = 0.0;
    for (double v : y) tss += (v - mean) * (v - mean);
    return tss > 0.0 ? 1.0 - rss / tss : 0.0;
}

// y = z_max - b0 / (x^b1 + b2); valid for b1 > 0 and positive denominators.
bool curve_residuals(std::span<const double> theta, std::span<const double> x,
                     std::span<const double> y, double z_max, std::vector<double>& out) {
    double b0 = theta[0], b1 = theta[1], b2 = theta[2];
    if (!(b1 > 0.0)) return false;
    out.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double denom = std::pow(x[i], b1) + b2;
        if (!(denom > 0.0) || !std::isfinite(denom)) return false;
        out[i] = y[i] - (z_max - b0 / denom);
    }
    return true;
}

struct SeriesRegressors {
    // Geometric-series regressor sum_l' [sum_n f1^n S^{n+1}]_{l,l'} for every
    // point, computed per record via a dense solve.
    const RegressionData& data;
    std::vector<Eigen::MatrixXd> mats;
    std::vector<Eigen::VectorXd> row_sums;  // S * 1 per record
    std::vector<double> radii;

    explicit SeriesRegressors(const RegressionData& d) : data(d) {
        mats.reserve(d.matrices.size());
        row_sums.reserve(d.matrices.size());
        for (const auto& S : d.matrices) {
            const int L = static_cast<int>(S.entries.size());
            Eigen::MatrixXd M(L, L);
            for (int i = 0; i < L; ++i)
                for (int j = 0; j < L; ++j) M(i, j) = S.entries[i][j];
            mats.push_back(M);
            row_sums.push_back(M * Eigen::VectorXd::Ones(L));
            radii.push_back(mats.back().eigenvalues().cwiseAbs().maxCoeff());
        }
    }

    // Returns false when the series diverges for some record.
    bool evaluate(double f1, std::vector<Eigen::VectorXd>& g) const {
        g.resize(mats.size());
        for (std::size_t r = 0; r < mats.size(); ++r) {
            if (f1 * radii[r] >= 0.999999) return false;
            const int L = static_cast<int>(mats[r].rows());
            Eigen::MatrixXd A = Eigen::MatrixXd::Identity(L, L) - f1 * mats[r];
            g[r] = A.partialPivLu().solve(row_sums[r]);
        }
        return true;
    }

    bool condition_ok(double f1) const {
        for (double rho : radii)
            if (!(f1 * rho < 1.0)) return false;
        return true;
    }
};

std::vector<const SectorObservation*> select_points(const RegressionData& data,
                                                    std::optional<PathClass> cls) {
    std::vector<const SectorObservation*> pts;
    for (const auto& p : data.points)
        if (!cls || p.cls == *cls) pts.push_back(&p);
    return pts;
}

double direct_slope_estimate(const RegressionData& data) {
    double num = 0.0, den = 0.0;
    for (const auto& p : data.points) {
        if (p.cls != PathClass::DirectOnly) continue;
        num += p.k_star * p.s_row_sum;
        den += p.s_row_sum * p.s_row_sum;
    }
    if (den > 0.0) return num / den;
    // Fall back to the average coupling per unit of direct inflow.
    double acc = 0.0;
    int n = 0;
    for (const auto& p : data.points) {
        if (p.s_row_sum > 0.0) {
            acc += p.k_star / p.s_row_sum;
            ++n;
        }
    }
    return n > 0 ? acc / n : 1.0;
}

RegressionFit fit_curve_on(std::span<const double> x, std::span<const double> y, double z_max,
                           std::span<const double> initial, RegressionModel tag) {
    std::vector<double> theta;
    if (!initial.empty()) {
        if (initial.size() != 3) throw ValidationError("curve fit expects 3 initial values");
        theta.assign(initial.begin(), initial.end());
    } else {
        double ymin = *std::min_element(y.begin(), y.end());
        theta = {std::max(1e-3, z_max - ymin), 2.0, 1.0};
    }
    ResidualFn fn = [&](std::span<const double> th, std::vector<double>& out) {
        return curve_residuals(th, x, y, z_max, out);
    };
    LmSolution sol = levenberg_marquardt(fn, static_cast<int>(x.size()), theta);

    RegressionFit fit;
    fit.model = tag;
    fit.parameter_names = {"b0", "b1", "b2"};
    fit.estimates = sol.theta;
    fit.std_errors = sol.std_errors;
    fit.rss = sol.rss;
    fit.r_squared = r_squared_of(std::vector<double>(y.begin(), y.end()), sol.rss);
    fit.converged = sol.converged;
    fit.iterations = sol.iterations;
    fit.n_points = x.size();
    return fit;
}

RegressionFit fit_indirect_series(const RegressionData& data, std::span<const double> initial) {
    auto pts = select_points(data, PathClass::HasIndirect);
    if (pts.empty())
        throw ValidationError("series regression needs sectors with indirect spillovers");
    SeriesRegressors reg(data);

    std::vector<double> theta;
    if (!initial.empty()) {
        if (initial.size() != 2) throw ValidationError("series fit expects 2 initial values");
        theta.assign(initial.begin(), initial.end());
    } else {
        theta = {std::max(1e-3, direct_slope_estimate(data)), 0.5};
    }

    std::vector<Eigen::VectorXd> g;
    ResidualFn fn = [&](std::span<const double> th, std::vector<double>& out) {
        double f0 = th[0], f1 = th[1];
        if (!(f1 >= 0.0)) return false;
        if (!reg.evaluate(f1, g)) return false;
        out.resize(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i)
            out[i] = pts[i]->k_star - f0 * g[pts[i]->record](pts[i]->sector);
        return true;
    };
    LmSolution sol = levenberg_marquardt(fn, static_cast<int>(pts.size()), theta);

    RegressionFit fit;
    fit.model = RegressionModel::IndirectSeries;
    fit.parameter_names = {"f0", "f1"};
    fit.estimates = sol.theta;
    fit.std_errors = sol.std_errors;
    fit.rss = sol.rss;
    std::vector<double> y(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) y[i] = pts[i]->k_star;
    fit.r_squared = r_squared_of(y, sol.rss);
    fit.converged = sol.converged;
    fit.iterations = sol.iterations;
    fit.n_points = pts.size();
    fit.series_condition_ok = reg.condition_ok(sol.theta[1]);
    return fit;
}

std::vector<double> series_regressor_values(const RegressionData& data, double f0, double f1) {
    SeriesRegressors reg(data);
    std::vector<Eigen::VectorXd> g;
    if (!reg.evaluate(f1, g))
        throw SeriesDivergentError("series does not converge for some record at this f1");
    std::vector<double> x(data.points.size());
    for (std::size_t i = 0; i < data.points.size(); ++i)
        x[i] = f0 * g[data.points[i].record](data.points[i].sector);
    return x;
}

RegressionFit fit_full_indirect(const RegressionData& data, std::span<const double> initial) {
    // Stage 1: couplings identify (f0, f1); stage 2: the mean curve
    // identifies (b0, b1, b2) with the series regressor frozen. A joint fit
    // would be unidentified: rescaling f0 can be absorbed into b0 and b2.
    std::span<const double> init_series, init_curve;
    if (!initial.empty()) {
        if (initial.size() != 5)
            throw ValidationError("full model expects 5 initial values (f0,f1,b0,b1,b2)");
        init_series = initial.subspan(0, 2);
        init_curve = initial.subspan(2, 3);
    }
    RegressionFit series = fit_indirect_series(data, init_series);
    double f0 = series.estimates[0], f1 = series.estimates[1];

    std::vector<double> x = series_regressor_values(data, f0, f1);
    std::vector<double> y(data.points.size());
    for (std::size_t i = 0; i < data.points.size(); ++i) y[i] = data.points[i].mean_prod;
    RegressionFit curve = fit_curve_on(x, y, data.z_max, init_curve, RegressionModel::FullIndirect);

    RegressionFit fit;
    fit.model = RegressionModel::FullIndirect;
    fit.parameter_names = {"f0", "f1", "b0", "b1", "b2"};
    fit.estimates = {f0, f1, curve.estimates[0], curve.estimates[1], curve.estimates[2]};
    fit.std_errors = {series.std_errors[0], series.std_errors[1], curve.std_errors[0],
                      curve.std_errors[1], curve.std_errors[2]};
    fit.rss = curve.rss;
    fit.r_squared = curve.r_squared;
    fit.converged = series.converged && curve.converged;
    fit.iterations = series.iterations + curve.iterations;
    fit.n_points = data.points.size();
    fit.series_condition_ok = series.series_condition_ok;
    return fit;
}

RegressionFit fit_direct_only(const RegressionData& data, std::span<const double> initial) {
    std::span<const double> init_slope, init_curve;
    if (!initial.empty()) {
        if (initial.size() != 4)
            throw ValidationError("direct model expects 4 initial values (f0,b0,b1,b2)");
        init_slope = initial.subspan(0, 1);
        init_curve = initial.subspan(1, 3);
    }

    // Stage 1: slope of k* against the direct inflow on sectors whose
    // spillovers are all direct.
    auto direct_pts = select_points(data, PathClass::DirectOnly);
    if (direct_pts.empty())
        throw RankDeficientError("no sectors with only direct spillovers: slope unidentified");
    std::vector<double> slope0;
    if (!init_slope.empty())
        slope0.assign(init_slope.begin(), init_slope.end());
    else
        slope0 = {std::max(1e-3, direct_slope_estimate(data))};
    ResidualFn slope_fn = [&](std::span<const double> th, std::vector<double>& out) {
        out.resize(direct_pts.size());
        for (std::size_t i = 0; i < direct_pts.size(); ++i)
            out[i] = direct_pts[i]->k_star - th[0] * direct_pts[i]->s_row_sum;
        return true;
    };
    LmSolution slope = levenberg_marquardt(slope_fn, static_cast<int>(direct_pts.size()), slope0);

    // Stage 2: mean curve against f0 * row sum over all points.
    std::vector<double> x(data.points.size()), y(data.points.size());
    for (std::size_t i = 0; i < data.points.size(); ++i) {
        x[i] = slope.theta[0] * data.points[i].s_row_sum;
        y[i] = data.points[i].mean_prod;
    }
    RegressionFit curve = fit_curve_on(x, y, data.z_max, init_curve, RegressionModel::DirectOnly);

    RegressionFit fit;
    fit.model = RegressionModel::DirectOnly;
    fit.parameter_names = {"f0", "b0", "b1", "b2"};
    fit.estimates = {slope.theta[0], curve.estimates[0], curve.estimates[1], curve.estimates[2]};
    fit.std_errors = {slope.std_errors[0], curve.std_errors[0], curve.std_errors[1],
                      curve.std_errors[2]};
    fit.rss = curve.rss;
    fit.r_squared = curve.r_squared;
    fit.converged = slope.converged && curve.converged;
    fit.iterations = slope.iterations + curve.iterations;
    fit.n_points = data.points.size();
    return fit;
}

}  // namespace

RegressionFit fit_k_mean_curve(std::span<const std::pair<double, double>> samples, double z_max,
                               std::span<const double> initial) {
    if (samples.empty()) throw ValidationError("curve fit needs at least one sample");
    std::vector<double> x(samples.size()), y(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        x[i] = samples[i].first;
        y[i] = samples[i].second;
    }
    RegressionFit fit = fit_curve_on(x, y, z_max, initial, RegressionModel::KMeanCurve);
    return fit;
}

RegressionFit fit_nls(RegressionModel model, const RegressionData& data,
                      std::span<const double> initial) {
    if (data.points.empty()) throw ValidationError("regression data is empty");
    switch (model) {
        case RegressionModel::IndirectSeries: return fit_indirect_series(data, initial);
        case RegressionModel::FullIndirect: return fit_full_indirect(data, initial);
        case RegressionModel::DirectOnly: return fit_direct_only(data, initial);
        case RegressionModel::KMeanCurve:
            throw ValidationError("the saturating curve is fit from (k, mean) samples; use fit_k_mean_curve");
    }
    throw ValidationError("unknown regression model");
}

std::vector<double> predict_mean(const RegressionFit& fit, const RegressionData& data) {
    std::vector<double> x;
    double b0, b1, b2;
    if (fit.model == RegressionModel::FullIndirect) {
        x = series_regressor_values(data, fit.estimate("f0"), fit.estimate("f1"));
        b0 = fit.estimate("b0");
        b1 = fit.estimate("b1");
        b2 = fit.estimate("b2");
    } else if (fit.model == RegressionModel::DirectOnly) {
        double f0 = fit.estimate("f0");
        x.resize(data.points.size());
        for (std::size_t i = 0; i < data.points.size(); ++i)
            x[i] = f0 * data.points[i].s_row_sum;
        b0 = fit.estimate("b0");
        b1 = fit.estimate("b1");
        b2 = fit.estimate("b2");
    } else {
        throw ValidationError("predict_mean applies to the mean-productivity models only");
    }
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = data.z_max - b0 / (std::pow(x[i], b1) + b2);
    return out;
}

ModelComparison model_comparison(const RegressionData& data, const RegressionFit& indirect,
                                 const RegressionFit& direct) {
    std::vector<double> pred_i = predict_mean(indirect, data);
    std::vector<double> pred_d = predict_mean(direct, data);
    std::vector<double> y(data.points.size());
    for (std::size_t i = 0; i < data.points.size(); ++i) y[i] = data.points[i].mean_prod;

    ModelComparison cmp;
    for (std::size_t i = 0; i < y.size(); ++i) {
        cmp.rss_indirect += (y[i] - pred_i[i]) * (y[i] - pred_i[i]);
        cmp.rss_direct += (y[i] - pred_d[i]) * (y[i] - pred_d[i]);
    }
    cmp.r2_indirect = r_squared_of(y, cmp.rss_indirect);
    cmp.r2_direct = r_squared_of(y, cmp.rss_direct);
    cmp.error_reduction =
        cmp.rss_direct > 0.0 ? (cmp.rss_direct - cmp.rss_indirect) / cmp.rss_direct : 0.0;
    return cmp;
}

}  // namespace spillover
