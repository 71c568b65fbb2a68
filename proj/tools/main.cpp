#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spillover/io.hpp"
#include "spillover/microsim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spillover;

namespace {

struct CommonArgs {
    std::string params_path;
    std::string network_path;
    int grid_points = 401;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    int threads = 1;
    std::optional<double> fixed_b;
    SolverOptions options;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_network) {
    cmd->add_option("--params", args.params_path, "parameter document (key = value lines)")
        ->required();
    auto* net = cmd->add_option("--network", args.network_path, "network JSON document");
    if (needs_network) net->required();
    cmd->add_option("--grid", args.grid_points, "number of grid nodes")->check(CLI::Range(3, 100000));
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_option("--seed", args.seed, "random seed");
    cmd->add_option("--threads", args.threads, "worker thread cap")->check(CLI::Range(1, 256));
    cmd->add_option("--fixed-b", args.fixed_b, "override price mode with a fixed B");
    cmd->add_option("--newton-tol", args.options.newton_tol, "inner solver tolerance");
    cmd->add_option("--fp-tol", args.options.fixed_point_tol, "fixed-point tolerance");
    cmd->add_option("--max-newton", args.options.max_newton_iters, "inner iteration cap");
    cmd->add_option("--max-picard", args.options.max_fixed_point_iters, "outer iteration cap");
}

ModelParams load_params(const CommonArgs& args) {
    if (!fs::exists(args.params_path))
        throw ValidationError("params file does not exist: " + args.params_path);
    ModelParams p = load_params_file(args.params_path);
    if (args.fixed_b) {
        p.price_mode = PriceMode::Fixed;
        p.fixed_price = *args.fixed_b;
        validate_params(p);
    }
    return p;
}

SpilloverNetwork load_net(const CommonArgs& args) {
    if (!fs::exists(args.network_path))
        throw ValidationError("network file does not exist: " + args.network_path);
    return load_network_file(args.network_path);
}

class RunDir {
public:
    RunDir(const std::string& dir, const std::string& command, std::uint64_t seed)
        : dir_(dir), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
        manifest_["command"] = command;
        manifest_["seed"] = seed;
        manifest_["version"] = SPILLOVER_VERSION;
    }

    json& manifest() { return manifest_; }

    void write(const std::string& name, const std::string& content) {
        write_text_atomic(dir_ / name, content);
    }

    void write_json(const std::string& name, const json& doc) {
        write(name, doc.dump(2) + "\n");
    }

    void finish() {
        auto elapsed = std::chrono::steady_clock::now() - start_;
        manifest_["wall_time_s"] =
            std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
        write_json("manifest.json", manifest_);
    }

private:
    fs::path dir_;
    json manifest_;
    std::chrono::steady_clock::time_point start_;
};

int cmd_solve(const CommonArgs& args) {
    ModelParams params = load_params(args);
    SpilloverNetwork net = load_net(args);
    Grid grid = Grid::uniform(args.grid_points, params.z_max);

    RunDir run(args.out_dir, "solve", args.seed);
    run.manifest()["params"] = params_to_json(params);
    run.manifest()["network"] = network_to_json(net);
    run.manifest()["grid_points"] = args.grid_points;

    MfgSolution sol = solve_mfg(params, net, grid, args.options);
    for (int l = 0; l < net.n_sectors; ++l) {
        std::string name = "sector_" + std::to_string(l + 1) + ".csv";
        run.write(name, sector_solution_csv(sol, l));
    }
    run.write("spillover_matrix.csv", spillover_matrix_csv(spillover_matrix(net, params.z_max)));
    run.write_json("summary.json", solution_summary_json(sol));
    run.finish();
    std::cout << "k* = [";
    for (std::size_t l = 0; l < sol.k_star.size(); ++l)
        std::cout << (l ? ", " : "") << sol.k_star[l];
    std::cout << "], B = " << sol.price << ", iterations = " << sol.iterations << "\n";
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& vary, std::vector<double> values) {
    SweepSpec spec;
    spec.parameter = vary;
    spec.values = std::move(values);
    spec.base = load_params(args);
    spec.network = load_net(args);
    spec.grid_points = args.grid_points;
    spec.options = args.options;

    RunDir run(args.out_dir, "sweep", args.seed);
    run.manifest()["params"] = params_to_json(spec.base);
    run.manifest()["network"] = network_to_json(spec.network);
    run.manifest()["vary"] = vary;
    run.manifest()["values"] = spec.values;
    run.manifest()["grid_points"] = args.grid_points;

    auto points = run_sweep(spec);
    run.write("sweep.csv", sweep_csv(points));
    int failures = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!points[i].ok) {
            ++failures;
            continue;
        }
        for (std::size_t l = 0; l < points[i].densities.size(); ++l) {
            std::string name = "density_" + std::to_string(i) + "_sector_" +
                               std::to_string(l + 1) + ".csv";
            run.write(name, density_csv(points[i].densities[l]));
        }
    }
    run.manifest()["failed_points"] = failures;
    run.finish();
    std::cout << "sweep over " << vary << ": " << points.size() - failures << "/"
              << points.size() << " points solved\n";
    return 0;
}

int cmd_networks(const CommonArgs& args, std::vector<int> pair, int sector) {
    ModelParams params = load_params(args);
    Grid grid = Grid::uniform(args.grid_points, params.z_max);

    RunDir run(args.out_dir, "networks", args.seed);
    run.manifest()["params"] = params_to_json(params);
    run.manifest()["grid_points"] = args.grid_points;

    std::vector<std::array<int, 3>> jobs;
    if (!pair.empty()) {
        jobs.push_back({pair[0], pair[1], sector});
    } else {
        jobs.push_back({2, 1, 2});  // chain vs single edge, sector C
        jobs.push_back({3, 2, 2});  // fan-in vs chain, sector C
        jobs.push_back({5, 4, 3});  // longer chain, sector D
        jobs.push_back({6, 5, 3});  // cycle closure, sector D
    }
    json summary = json::array();
    for (auto [a, b, sec] : jobs) {
        DensityComparison cmp = compare_networks(a, b, sec, params, grid, args.options);
        std::string name = "diff_net" + std::to_string(a) + "_net" + std::to_string(b) +
                           "_sector" + std::to_string(sec + 1) + ".csv";
        run.write(name, density_comparison_csv(cmp));
        summary.push_back(json{{"net_a", a},
                               {"net_b", b},
                               {"sector", sec + 1},
                               {"mean_a", cmp.mean_a},
                               {"mean_b", cmp.mean_b},
                               {"mean_diff", cmp.mean_a - cmp.mean_b}});
        std::cout << "net" << a << " - net" << b << " (sector " << sec + 1
                  << "): mean diff = " << cmp.mean_a - cmp.mean_b << "\n";
    }
    run.write_json("comparisons.json", summary);
    run.finish();
    return 0;
}

int cmd_ensemble(const CommonArgs& args, int runs, int sectors, double weight_max,
                 std::optional<double> prob, const std::string& weights_mode) {
    EnsembleSpec spec;
    spec.n_runs = runs;
    spec.sectors = sectors;
    spec.fixed_connection_prob = prob;
    spec.weight_max = weight_max;
    if (weights_mode == "equal")
        spec.sector_weights = SectorWeights::Equal;
    else if (weights_mode == "simplex")
        spec.sector_weights = SectorWeights::RandomSimplex;
    else
        throw ValidationError("--sector-weights must be 'equal' or 'simplex'");
    spec.seed = args.seed;
    spec.params = load_params(args);
    spec.grid_points = args.grid_points;
    spec.options = args.options;
    spec.threads = args.threads;

    RunDir run(args.out_dir, "ensemble", args.seed);
    run.manifest()["params"] = params_to_json(spec.params);
    run.manifest()["runs"] = runs;
    run.manifest()["sectors"] = sectors;
    run.manifest()["weight_max"] = weight_max;
    run.manifest()["sector_weights"] = weights_mode;
    run.manifest()["grid_points"] = args.grid_points;
    if (prob) run.manifest()["connection_prob"] = *prob;

    EnsembleResult result = run_ensemble(spec);
    run.write("records.csv", ensemble_records_csv(result.records));
    run.write_json("ensemble.json", ensemble_to_json(result));
    run.finish();
    std::cout << result.records.size() << " runs recorded, " << result.failures
              << " failures\n";
    return 0;
}

int cmd_regress(const CommonArgs& args, const std::string& ensemble_path) {
    if (!fs::exists(ensemble_path))
        throw ValidationError("ensemble file does not exist: " + ensemble_path);
    ModelParams params = load_params(args);
    EnsembleResult ensemble = ensemble_from_json(json::parse(read_text_file(ensemble_path)));
    if (ensemble.records.empty()) throw ValidationError("ensemble has no records");

    RunDir run(args.out_dir, "regress", args.seed);
    run.manifest()["ensemble"] = ensemble_path;
    run.manifest()["params"] = params_to_json(params);

    RegressionData data = make_regression_data(ensemble.records, params.z_max);
    RegressionFit indirect = fit_nls(RegressionModel::FullIndirect, data);
    RegressionFit direct = fit_nls(RegressionModel::DirectOnly, data);
    ModelComparison cmp = model_comparison(data, indirect, direct);

    run.write("regression.csv", regression_summary_csv({indirect, direct}));
    run.write_json("comparison.json",
                   json{{"rss_indirect", cmp.rss_indirect},
                        {"rss_direct", cmp.rss_direct},
                        {"r2_indirect", cmp.r2_indirect},
                        {"r2_direct", cmp.r2_direct},
                        {"error_reduction", cmp.error_reduction}});
    run.finish();
    std::cout << "error reduction from indirect spillovers: " << cmp.error_reduction * 100.0
              << "%\n";
    return 0;
}

int cmd_simulate(const CommonArgs& args, std::vector<int> firms, double horizon, double dt,
                 int bins) {
    ModelParams params = load_params(args);
    SpilloverNetwork net = load_net(args);
    Grid grid = Grid::uniform(args.grid_points, params.z_max);

    RunDir run(args.out_dir, "simulate", args.seed);
    run.manifest()["params"] = params_to_json(params);
    run.manifest()["network"] = network_to_json(net);
    run.manifest()["firms"] = firms;
    run.manifest()["horizon"] = horizon;
    run.manifest()["dt"] = dt;
    run.manifest()["grid_points"] = args.grid_points;

    MfgSolution sol = solve_mfg(params, net, grid, args.options);

    SimConfig config;
    if (static_cast<int>(firms.size()) == 1 && net.n_sectors > 1)
        firms.assign(net.n_sectors, firms[0]);
    config.firms_per_sector = firms;
    config.horizon = horizon;
    config.dt = dt;
    config.seed = args.seed;
    config.initial_law = SimConfig::InitialLaw::Uniform;

    std::vector<SectorPolicy> policies;
    for (int l = 0; l < net.n_sectors; ++l)
        policies.push_back(equilibrium_policy(sol, l, params));

    SimResult sim = simulate(config, net, params, policies);

    std::ostringstream traj;
    traj << "t,sector,mean,std\n";
    for (const auto& snap : sim.snapshots) {
        for (int l = 0; l < net.n_sectors; ++l) {
            const auto& zs = snap.positions[l];
            double mean = 0.0;
            for (double z : zs) mean += z;
            mean /= static_cast<double>(zs.size());
            double var = 0.0;
            for (double z : zs) var += (z - mean) * (z - mean);
            double sd = zs.size() > 1 ? std::sqrt(var / (zs.size() - 1.0)) : 0.0;
            traj << format_double(snap.time) << "," << (l + 1) << "," << format_double(mean)
                 << "," << format_double(sd) << "\n";
        }
    }
    run.write("trajectory.csv", traj.str());

    std::ostringstream hist;
    hist << "sector,bin_left,bin_right,count\n";
    const auto& last = sim.snapshots.back();
    double width = params.z_max / bins;
    for (int l = 0; l < net.n_sectors; ++l) {
        std::vector<int> counts(bins, 0);
        for (double z : last.positions[l]) {
            int b = std::min(static_cast<int>(z / width), bins - 1);
            ++counts[b];
        }
        for (int b = 0; b < bins; ++b)
            hist << (l + 1) << "," << format_double(b * width) << ","
                 << format_double((b + 1) * width) << "," << counts[b] << "\n";
    }
    run.write("final_histogram.csv", hist.str());

    MatchReport report = empirical_vs_mfg(sim, sol, params);
    json match{{"applicable", report.applicable}};
    if (!report.note.empty()) match["note"] = report.note;
    json sectors = json::array();
    for (const auto& s : report.sectors)
        sectors.push_back(json{{"mean_gap", s.mean_gap}, {"wasserstein", s.wasserstein}});
    match["sectors"] = sectors;
    run.write_json("match.json", match);
    run.finish();

    for (std::size_t l = 0; l < report.sectors.size(); ++l)
        std::cout << "sector " << l + 1 << ": W1 gap to model density = "
                  << report.sectors[l].wasserstein << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stationary multi-population mean field game of knowledge spillovers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SPILLOVER_VERSION));

    CommonArgs args;

    auto* solve = app.add_subcommand("solve", "solve one equilibrium and export it");
    add_common(solve, args, true);

    auto* sweep = app.add_subcommand("sweep", "vary one parameter, one solve per value");
    add_common(sweep, args, true);
    std::string vary;
    std::vector<double> values;
    sweep->add_option("--vary", vary, "parameter name (sigma|wage|discount|gamma|alpha)")
        ->required();
    sweep->add_option("--values", values, "comma separated values")
        ->required()
        ->delimiter(',');

    auto* networks = app.add_subcommand("networks", "density differences between benchmark networks");
    add_common(networks, args, false);
    std::vector<int> pair;
    int net_sector = 2;
    networks->add_option("--pair", pair, "two network ids, e.g. 2,1")
        ->delimiter(',')
        ->expected(2);
    networks->add_option("--sector", net_sector, "0-based sector index for --pair");

    auto* ensemble = app.add_subcommand("ensemble", "random-network equilibrium ensemble");
    add_common(ensemble, args, false);
    int runs = 100, sectors = 3, bins = 40;
    double weight_max = 1.0;
    std::optional<double> prob;
    std::string weights_mode = "equal";
    ensemble->add_option("--runs", runs, "number of networks")->required();
    ensemble->add_option("--sectors", sectors, "sectors per network");
    ensemble->add_option("--weight-max", weight_max, "edge weights drawn from (0, this]");
    ensemble->add_option("--prob", prob, "fixed connection probability (default: uniform per run)");
    ensemble->add_option("--sector-weights", weights_mode, "equal | simplex");

    auto* regress = app.add_subcommand("regress", "fit spillover models to an ensemble");
    add_common(regress, args, false);
    std::string ensemble_path;
    regress->add_option("--ensemble", ensemble_path, "ensemble.json from the ensemble command")
        ->required();

    auto* simulate_cmd = app.add_subcommand("simulate", "finite-firm simulation at the equilibrium policy");
    add_common(simulate_cmd, args, true);
    std::vector<int> firms{1000};
    double horizon = 50.0, dt = 0.01;
    simulate_cmd->add_option("--firms", firms, "firms per sector (single value broadcasts)")
        ->delimiter(',');
    simulate_cmd->add_option("--horizon", horizon, "simulated time span");
    simulate_cmd->add_option("--dt", dt, "time step");
    simulate_cmd->add_option("--bins", bins, "histogram bins");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) return cmd_solve(args);
        if (sweep->parsed()) return cmd_sweep(args, vary, values);
        if (networks->parsed()) return cmd_networks(args, pair, net_sector);
        if (ensemble->parsed())
            return cmd_ensemble(args, runs, sectors, weight_max, prob, weights_mode);
        if (regress->parsed()) return cmd_regress(args, ensemble_path);
        if (simulate_cmd->parsed()) return cmd_simulate(args, firms, horizon, dt, bins);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
