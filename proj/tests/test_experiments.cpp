#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spillover/experiments.hpp"
#include "spillover/rng.hpp"
#include "support/oracles.hpp"

using namespace spillover;

namespace {

SpilloverNetwork one_sector(double p_self) {
    SpilloverNetwork net;
    net.n_sectors = 1;
    net.weights = {1.0};
    net.kernel = {{p_self}};
    return net;
}

}  // namespace

TEST_CASE("sweep points solve and keep per-sector means") {
    ModelParams p;
    SweepSpec spec;
    spec.parameter = "discount";
    spec.values = {0.5, 1.0, 2.0, 4.0};
    spec.base = p;
    spec.network = one_sector(0.1);
    spec.grid_points = 201;
    spec.keep_densities = true;

    auto points = run_sweep(spec);
    REQUIRE(points.size() == 4);
    double prev = 1e9;
    for (const auto& pt : points) {
        REQUIRE(pt.ok);
        REQUIRE(pt.mean_productivity.size() == 1);
        CHECK(pt.mean_productivity[0] < prev);  // impatience suppresses investment
        prev = pt.mean_productivity[0];
        CHECK(pt.densities.size() == 1);
    }
}

TEST_CASE("sweep continues past values that fail to solve") {
    ModelParams p;
    SweepSpec spec;
    spec.parameter = "sigma";
    spec.values = {1.0, 0.001, 2.0};  // the middle value violates the grid guard
    spec.base = p;
    spec.network = one_sector(0.1);
    spec.grid_points = 101;
    spec.keep_densities = false;

    auto points = run_sweep(spec);
    REQUIRE(points.size() == 3);
    CHECK(points[0].ok);
    CHECK_FALSE(points[1].ok);
    CHECK(!points[1].error.empty());
    CHECK(points[2].ok);
}

TEST_CASE("unknown sweep parameters are rejected") {
    ModelParams p;
    CHECK_THROWS_AS(with_parameter(p, "z_max", 3.0), ValidationError);
    CHECK_THROWS_AS(with_parameter(p, "nope", 1.0), ValidationError);
    CHECK(with_parameter(p, "gamma", 0.4).gamma == 0.4);
}

TEST_CASE("comparing a network with itself gives the zero curve") {
    ModelParams p;
    Grid grid = Grid::uniform(201, p.z_max);
    DensityComparison cmp = compare_networks(1, 1, 2, p, grid, SolverOptions{});
    CHECK(cmp.mean_a == cmp.mean_b);
    for (double d : cmp.delta) CHECK(d == 0.0);
}

TEST_CASE("an indirect feed shifts sector C mass toward high productivity") {
    ModelParams p;
    Grid grid = Grid::uniform(401, p.z_max);
    DensityComparison cmp = compare_networks(2, 1, 2, p, grid, SolverOptions{});
    CHECK(cmp.mean_a > cmp.mean_b);
    // Density difference is negative at the bottom of the range and positive
    // at the top.
    CHECK(cmp.delta.front() < 0.0);
    CHECK(cmp.delta.back() > 0.0);
}

TEST_CASE("comparison input validation") {
    ModelParams p;
    Grid grid = Grid::uniform(101, p.z_max);
    CHECK_THROWS_AS(compare_networks(0, 1, 0, p, grid, SolverOptions{}), ValidationError);
    CHECK_THROWS_AS(compare_networks(7, 1, 0, p, grid, SolverOptions{}), ValidationError);
    CHECK_THROWS_AS(compare_networks(1, 4, 0, p, grid, SolverOptions{}), ValidationError);
    CHECK_THROWS_AS(compare_networks(1, 2, 5, p, grid, SolverOptions{}), ValidationError);
}

TEST_CASE("coupling-to-mean curve rises to the productivity ceiling") {
    ModelParams p;
    p.price_mode = PriceMode::Fixed;
    p.fixed_price = 1.0;
    Grid grid = Grid::uniform(401, p.z_max);
    SolverOptions opts;
    std::vector<double> ks{0.0, 0.5, 1.0, 2.0, 5.0, 20.0};
    auto curve = k_mean_curve(ks, p, 1.0, grid, opts);
    REQUIRE(curve.size() == ks.size());
    for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].second > curve[i - 1].second);

    ValueFunction V0 = solve_auxiliary_hjb(0.0, p, 1.0, grid, opts);
    double mean0 = mean_productivity(density_from_value(V0, p));
    CHECK(curve[0].second == doctest::Approx(mean0).epsilon(1e-12));

    // Strong drift concentrates mass at the ceiling; the pure-coupling
    // truncated exponential is a lower bound on the mean.
    double theta = 2.0 * 20.0 / (p.sigma * p.sigma);
    double lower = p.z_max - 1.0 / theta;
    CHECK(curve.back().second >= lower - 1e-6);
    CHECK(curve.back().second >= 0.95 * p.z_max);
    CHECK(curve.back().second < p.z_max);
}

TEST_CASE("ensembles are deterministic, classified, and bounded") {
    EnsembleSpec spec;
    spec.n_runs = 20;
    spec.sectors = 3;
    spec.fixed_connection_prob = 0.2;
    spec.weight_max = 1.0;
    spec.sector_weights = SectorWeights::Equal;
    spec.seed = 321;
    spec.grid_points = 201;
    spec.params = ModelParams{};

    EnsembleResult a = run_ensemble(spec);
    CHECK(a.failures == 0);
    REQUIRE(a.records.size() == 20);
    spec.threads = 4;
    EnsembleResult b = run_ensemble(spec);
    REQUIRE(b.records.size() == 20);
    for (std::size_t r = 0; r < a.records.size(); ++r) {
        CHECK(a.records[r].k_star == b.records[r].k_star);
        CHECK(a.records[r].price == b.records[r].price);
        CHECK(a.records[r].net.kernel == b.records[r].net.kernel);
    }

    int with_direct = 0, with_indirect = 0;
    for (const auto& rec : a.records) {
        CHECK(rec.zeta >= 0.0);
        for (int l = 0; l < 3; ++l) {
            CHECK(rec.k_star[l] >= 0.0);
            CHECK(rec.k_star[l] <= rec.zeta + 1e-12);
            if (rec.classes[l] == PathClass::DirectOnly) ++with_direct;
            if (rec.classes[l] == PathClass::HasIndirect) ++with_indirect;
            if (rec.classes[l] == PathClass::NoSpillover) CHECK(rec.k_star[l] == 0.0);
        }
    }
    CHECK(with_direct > 0);
    CHECK(with_indirect > 0);
}

TEST_CASE("an empty ensemble is empty") {
    EnsembleSpec spec;
    spec.n_runs = 0;
    spec.params = ModelParams{};
    EnsembleResult out = run_ensemble(spec);
    CHECK(out.records.empty());
    CHECK(out.failures == 0);
}

TEST_CASE("spectral radius by power iteration") {
    SpilloverNetwork net = one_sector(0.1);
    SpilloverMatrix S = spillover_matrix(net, 2.0);
    CHECK(spectral_radius(S) == doctest::Approx(0.1).epsilon(1e-10));

    // Nilpotent chain: radius exactly zero.
    SpilloverNetwork chain;
    chain.n_sectors = 3;
    chain.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    chain.kernel = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    CHECK(spectral_radius(spillover_matrix(chain, 2.0)) == 0.0);

    // 2-cycle with known radius sqrt(ab)/L.
    SpilloverNetwork cyc;
    cyc.n_sectors = 2;
    cyc.weights = {0.5, 0.5};
    cyc.kernel = {{0, 2.0}, {0.5, 0}};
    CHECK(spectral_radius(spillover_matrix(cyc, 2.0)) ==
          doctest::Approx(0.5 * std::sqrt(1.0)).epsilon(1e-8));
}

TEST_CASE("series estimate matches the truncated sum and its trivial cases") {
    SpilloverNetwork net;
    net.n_sectors = 3;
    net.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    net.kernel = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    SpilloverMatrix zero = spillover_matrix(net, 2.0);
    auto out = series_k_estimate(zero, 1.5, 0.7);
    for (double v : out) CHECK(v == 0.0);

    auto rnet = random_network(3, 0.8, 0.4, SectorWeights::Equal, 2024);
    SpilloverMatrix S = spillover_matrix(rnet, 2.0);

    // f1 = 0 truncates the series at the direct term.
    auto direct = series_k_estimate(S, 1.3, 0.0);
    for (int l = 0; l < 3; ++l)
        CHECK(direct[l] == doctest::Approx(1.3 * spillover_row_sum(S, l)).epsilon(1e-13));

    double rho = spectral_radius(S);
    double f1 = 0.5 / std::max(rho, 0.25);
    auto closed = series_k_estimate(S, 1.3, f1);
    auto summed = test::truncated_series(S, 1.3, f1);
    for (int l = 0; l < 3; ++l) CHECK(std::abs(closed[l] - summed[l]) < 1e-10);
}

TEST_CASE("divergent series are refused") {
    SpilloverNetwork net = one_sector(1.0);  // radius 1 after weighting
    SpilloverMatrix S = spillover_matrix(net, 2.0);
    CHECK(spectral_radius(S) == doctest::Approx(1.0));
    CHECK_THROWS_AS(series_k_estimate(S, 1.0, 1.2), SeriesDivergentError);
    CHECK_THROWS_AS(series_k_estimate(S, 1.0, 1.0), SeriesDivergentError);
    CHECK_NOTHROW(series_k_estimate(S, 1.0, 0.9));
}

TEST_CASE("regression data flattens records with row sums and classes") {
    EnsembleSpec spec;
    spec.n_runs = 5;
    spec.sectors = 3;
    spec.fixed_connection_prob = 0.4;
    spec.weight_max = 1.0;
    spec.seed = 7;
    spec.grid_points = 201;
    spec.params = ModelParams{};
    EnsembleResult ens = run_ensemble(spec);
    RegressionData data = make_regression_data(ens.records, 2.0);
    CHECK(data.points.size() == 15);
    CHECK(data.matrices.size() == 5);
    for (const auto& pt : data.points) {
        CHECK(pt.s_row_sum ==
              doctest::Approx(spillover_row_sum(data.matrices[pt.record], pt.sector)));
        CHECK(pt.mean_prod > 0.0);
        CHECK(pt.mean_prod < 2.0);
    }
}
