#include "spillover/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "spillover/rng.hpp"

namespace spillover {

ModelParams with_parameter(ModelParams base, const std::string& name, double value) {
    if (name == "sigma")
        base.sigma = value;
    else if (name == "wage")
        base.wage = value;
    else if (name == "discount")
        base.discount = value;
    else if (name == "gamma")
        base.gamma = value;
    else if (name == "alpha")
        base.alpha = value;
    else
        throw ValidationError("unknown sweep parameter: " + name);
    return base;
}

std::vector<SweepPoint> run_sweep(const SweepSpec& spec) {
    validate_network(spec.network);
    if (spec.values.empty()) throw ValidationError("sweep has no values");
    Grid grid = Grid::uniform(spec.grid_points, spec.base.z_max);

    std::vector<SweepPoint> out;
    out.reserve(spec.values.size());
    for (double value : spec.values) {
        SweepPoint point;
        point.value = value;
        try {
            ModelParams params = with_parameter(spec.base, spec.parameter, value);
            validate_params(params);
            MfgSolution sol = solve_mfg(params, spec.network, grid, spec.options);
            point.ok = true;
            point.price = sol.price;
            point.mean_productivity.reserve(sol.densities.size());
            for (const auto& m : sol.densities)
                point.mean_productivity.push_back(mean_productivity(m));
            if (spec.keep_densities) point.densities = std::move(sol.densities);
        } catch (const Error& e) {
            point.ok = false;
            point.error = e.what();
        }
        out.push_back(std::move(point));
    }
    return out;
}

DensityComparison compare_networks(int id_a, int id_b, int sector, const ModelParams& params,
                                   const Grid& grid, const SolverOptions& opts) {
    auto nets = canonical_networks();
    auto pick = [&](int id) -> const SpilloverNetwork& {
        if (id < 1 || id > static_cast<int>(nets.size()))
            throw ValidationError("canonical network ids run from 1 to 6");
        return nets[id - 1];
    };
    const SpilloverNetwork& net_a = pick(id_a);
    const SpilloverNetwork& net_b = pick(id_b);
    if (net_a.n_sectors != net_b.n_sectors)
        throw ValidationError("networks to compare must have the same sector count");
    if (sector < 0 || sector >= net_a.n_sectors)
        throw ValidationError("sector index out of range");

    MfgSolution sol_a = solve_mfg(params, net_a, grid, opts);
    MfgSolution sol_b = solve_mfg(params, net_b, grid, opts);

    DensityComparison cmp;
    cmp.net_a = id_a;
    cmp.net_b = id_b;
    cmp.sector = sector;
    cmp.z = grid.z;
    cmp.delta.resize(grid.n);
    for (int i = 0; i < grid.n; ++i)
        cmp.delta[i] = sol_a.densities[sector].values[i] - sol_b.densities[sector].values[i];
    cmp.mean_a = mean_productivity(sol_a.densities[sector]);
    cmp.mean_b = mean_productivity(sol_b.densities[sector]);
    return cmp;
}

std::vector<std::pair<double, double>> k_mean_curve(std::span<const double> ks,
                                                    const ModelParams& params, double price,
                                                    const Grid& grid, const SolverOptions& opts) {
    std::vector<std::pair<double, double>> out;
    out.reserve(ks.size());
    for (double k : ks) {
        ValueFunction V = solve_auxiliary_hjb(k, params, price, grid, opts);
        Density m = density_from_value(V, params);
        out.emplace_back(k, mean_productivity(m));
    }
    return out;
}

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
    if (spec.n_runs < 0) throw ValidationError("n_runs must be non-negative");
    validate_params(spec.params);
    Grid grid = Grid::uniform(spec.grid_points, spec.params.z_max);

    struct RunOutcome {
        bool ok = false;
        EnsembleRecord record;
        std::string error;
    };
    std::vector<RunOutcome> outcomes(spec.n_runs);

    auto run_one = [&](int r) {
        RunOutcome& out = outcomes[r];
        try {
            Rng draw(derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(r)));
            double prob = spec.fixed_connection_prob.value_or(draw.uniform());
            SpilloverNetwork net =
                random_network(spec.sectors, prob, spec.weight_max, spec.sector_weights,
                               derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(r) + 1));
            std::ostringstream label;
            label << "run-" << r;
            net.label = label.str();

            MfgSolution sol = solve_mfg(spec.params, net, grid, spec.options);

            EnsembleRecord rec;
            rec.run = r;
            rec.S = spillover_matrix(net, spec.params.z_max);
            rec.zeta = rec.S.zeta;
            rec.k_star = sol.k_star;
            rec.price = sol.price;
            rec.mean_prod.resize(net.n_sectors);
            rec.classes.resize(net.n_sectors);
            for (int l = 0; l < net.n_sectors; ++l) {
                rec.mean_prod[l] = mean_productivity(sol.densities[l]);
                rec.classes[l] = path_classification(net, l);
            }
            rec.net = std::move(net);
            out.record = std::move(rec);
            out.ok = true;
        } catch (const Error& e) {
            std::ostringstream os;
            os << "run " << r << ": " << e.what();
            out.error = os.str();
        }
    };

    int threads = std::max(1, spec.threads);
    if (threads == 1 || spec.n_runs <= 1) {
        for (int r = 0; r < spec.n_runs; ++r) run_one(r);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int r = next.fetch_add(1); r < spec.n_runs; r = next.fetch_add(1)) run_one(r);
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min(threads, spec.n_runs); ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    EnsembleResult result;
    for (auto& out : outcomes) {
        if (out.ok)
            result.records.push_back(std::move(out.record));
        else {
            ++result.failures;
            result.failure_messages.push_back(out.error);
        }
    }
    return result;
}

RegressionData make_regression_data(std::span<const EnsembleRecord> records, double z_max) {
    RegressionData data;
    data.z_max = z_max;
    data.matrices.reserve(records.size());
    for (std::size_t r = 0; r < records.size(); ++r) {
        const EnsembleRecord& rec = records[r];
        data.matrices.push_back(rec.S);
        for (int l = 0; l < rec.net.n_sectors; ++l) {
            SectorObservation p;
            p.record = static_cast<int>(r);
            p.sector = l;
            p.k_star = rec.k_star[l];
            p.mean_prod = rec.mean_prod[l];
            p.s_row_sum = spillover_row_sum(rec.S, l);
            p.cls = rec.classes[l];
            data.points.push_back(p);
        }
    }
    return data;
}

double spectral_radius(const SpilloverMatrix& S) {
    const int L = static_cast<int>(S.entries.size());
    if (L == 0) return 0.0;
    Eigen::VectorXd x = Eigen::VectorXd::Ones(L);
    Eigen::MatrixXd M(L, L);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) M(i, j) = S.entries[i][j];
    double rho = 0.0;
    for (int it = 0; it < 300; ++it) {
        Eigen::VectorXd y = M * x;
        double norm = y.lpNorm<1>();
        if (norm < 1e-300) return 0.0;  // nilpotent: the iterate dies out exactly
        double next = norm / x.lpNorm<1>();
        x = y / norm;
        if (it > 10 && std::abs(next - rho) <= 1e-13 * std::max(1.0, rho)) return next;
        rho = next;
    }
    return rho;
}

std::vector<double> series_k_estimate(const SpilloverMatrix& S, double f0, double f1) {
    if (!(f1 >= 0.0)) throw ParameterDomainError("f1 must be non-negative");
    const int L = static_cast<int>(S.entries.size());
    double rho = spectral_radius(S);
    if (!(f1 * rho < 1.0)) {
        std::ostringstream os;
        os << "series diverges: f1 * spectral_radius = " << f1 * rho;
        throw SeriesDivergentError(os.str());
    }
    Eigen::MatrixXd M(L, L);
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) M(i, j) = S.entries[i][j];
    Eigen::VectorXd rhs = M * Eigen::VectorXd::Ones(L);
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(L, L) - f1 * M;
    Eigen::VectorXd x = A.partialPivLu().solve(rhs);
    std::vector<double> out(L);
    for (int i = 0; i < L; ++i) out[i] = f0 * x(i);
    return out;
}

}  // namespace spillover
