#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "spillover/hjb.hpp"
#include "spillover/model.hpp"
#include "spillover/quadrature.hpp"
#include "spillover/rng.hpp"

using namespace spillover;

namespace {

ModelParams baseline() {
    ModelParams p;
    p.price_mode = PriceMode::Fixed;
    p.fixed_price = 1.0;
    return p;
}

double mean_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("residual of the zero function is minus the profit term") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(101, p.z_max);
    std::vector<double> v(grid.n, 0.0);
    auto r = hjb_residual(v, 0.0, p, 1.0, grid);
    CHECK(r.front() == 0.0);
    CHECK(r.back() == 0.0);
    for (int i = 1; i + 1 < grid.n; ++i)
        CHECK(r[i] == doctest::Approx(-std::pow(grid.z[i], p.alpha)).epsilon(1e-14));
}

TEST_CASE("residual of a constant keeps only discounting and profit") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(101, p.z_max);
    const double c = 0.7;
    std::vector<double> v(grid.n, c);
    auto r = hjb_residual(v, 2.0, p, 1.0, grid);
    CHECK(std::abs(r.front()) < 1e-12);
    CHECK(std::abs(r.back()) < 1e-12);
    for (int i = 1; i + 1 < grid.n; ++i)
        CHECK(r[i] ==
              doctest::Approx(p.discount * c - std::pow(grid.z[i], p.alpha)).epsilon(1e-12));
}

TEST_CASE("residual input validation") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(11, p.z_max);
    std::vector<double> wrong(grid.n + 1, 0.0);
    CHECK_THROWS_AS(hjb_residual(wrong, 0.0, p, 1.0, grid), DimensionError);
    std::vector<double> v(grid.n, 0.0);
    CHECK_THROWS_AS(hjb_residual(v, -0.1, p, 1.0, grid), ParameterDomainError);
    CHECK_THROWS_AS(hjb_residual(v, 0.1, p, -1.0, grid), ParameterDomainError);
}

TEST_CASE("linearisation is exact on directions when the power term is inactive") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(101, p.z_max);
    const double k = 1.5;
    std::vector<double> v(grid.n, 0.3);  // v' = 0 so the control term drops out
    Rng rng(1);
    std::vector<double> u(grid.n);
    for (double& x : u) x = rng.uniform(-1.0, 1.0);
    auto got = frechet_apply(v, u, k, p, 1.0, grid);
    const double inv2dz = 1.0 / (2.0 * grid.dz);
    const double invdz2 = 1.0 / (grid.dz * grid.dz);
    for (int i = 1; i + 1 < grid.n; ++i) {
        double u1 = (u[i + 1] - u[i - 1]) * inv2dz;
        double u2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * invdz2;
        double expected = -0.5 * p.sigma * p.sigma * u2 + p.discount * u[i] - k * u1;
        CHECK(got[i] == doctest::Approx(expected).epsilon(1e-12));
    }

    std::vector<double> zero(grid.n, 0.0);
    auto null = frechet_apply(v, zero, k, p, 1.0, grid);
    for (double x : null) CHECK(x == 0.0);
}

TEST_CASE("directional finite differences converge to the linearisation") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(201, p.z_max);
    // Smooth v with strictly positive slope keeps the iterate away from the
    // kink so the residual is differentiable along the direction.
    std::vector<double> v(grid.n), u(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        v[i] = 0.8 * grid.z[i] + 0.3 * std::sin(grid.z[i]);
        u[i] = std::cos(1.7 * grid.z[i]);
    }
    const double k = 0.4;
    auto r0 = hjb_residual(v, k, p, 1.0, grid);
    auto du = frechet_apply(v, u, k, p, 1.0, grid);

    double prev_ratio = 0.0;
    for (double eps : {1e-3, 1e-4, 1e-5}) {
        std::vector<double> vp(grid.n);
        for (int i = 0; i < grid.n; ++i) vp[i] = v[i] + eps * u[i];
        auto rp = hjb_residual(vp, k, p, 1.0, grid);
        double gap = 0.0;
        for (int i = 0; i < grid.n; ++i)
            gap = std::max(gap, std::abs(rp[i] - r0[i] - eps * du[i]));
        double ratio = gap / eps;  // must vanish with eps
        if (prev_ratio > 0.0) CHECK(ratio < 0.2 * prev_ratio);
        prev_ratio = ratio;
    }
    CHECK(prev_ratio < 1e-4);
}

TEST_CASE("converged solution meets tolerance and analytic envelopes") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(401, p.z_max);
    SolverOptions opts;
    ValueFunction V = solve_auxiliary_hjb(0.0, p, 1.0, grid, opts);

    CHECK(V.residual_norm <= opts.newton_tol);
    CHECK(mean_abs(hjb_residual(V.values, 0.0, p, 1.0, grid)) <= opts.newton_tol);

    const double eps_num = 10.0 * opts.newton_tol;
    const double v_bound = value_upper_bound(p, 1.0);
    CHECK(v_bound == doctest::Approx(std::sqrt(2.0)));
    for (int i = 0; i < grid.n; ++i) {
        CHECK(V.values[i] >= -eps_num);
        CHECK(V.values[i] <= v_bound + eps_num);
        CHECK(V.derivative[i] >= -eps_num);
        CHECK(std::abs(V.derivative[i]) <= derivative_upper_bound(p, 1.0) + eps_num);
    }
    CHECK(std::abs(V.derivative.front()) <= eps_num);
    CHECK(std::abs(V.derivative.back()) <= eps_num);
    // Slope is strictly positive away from the endpoints.
    for (int i = 2; i + 2 < grid.n; ++i) CHECK(V.derivative[i] > 0.0);
}

TEST_CASE("boundary curvature is convex at the floor and concave at the ceiling") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(401, p.z_max);
    ValueFunction V = solve_auxiliary_hjb(0.2, p, 1.0, grid, SolverOptions{});
    double dz2 = grid.dz * grid.dz;
    double at_floor = (V.values[0] - 2.0 * V.values[1] + V.values[2]) / dz2;
    double at_ceiling =
        (V.values[grid.n - 1] - 2.0 * V.values[grid.n - 2] + V.values[grid.n - 3]) / dz2;
    CHECK(at_floor > 0.0);
    CHECK(at_ceiling < 0.0);
}

TEST_CASE("solutions increase with the coupling and obey the Lipschitz envelopes") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(201, p.z_max);
    SolverOptions opts;
    const double eps_num = 10.0 * opts.newton_tol;
    const double envelope = derivative_upper_bound(p, 1.0);

    Rng rng(21);
    for (int trial = 0; trial < 12; ++trial) {
        double k1 = rng.uniform(0.0, 0.6);
        double k2 = rng.uniform(0.0, 0.6);
        if (k1 > k2) std::swap(k1, k2);
        ValueFunction V1 = solve_auxiliary_hjb(k1, p, 1.0, grid, opts);
        ValueFunction V2 = solve_auxiliary_hjb(k2, p, 1.0, grid, opts);
        double dv = 0.0, ddv = 0.0;
        for (int i = 0; i < grid.n; ++i) {
            CHECK(V2.values[i] - V1.values[i] >= -eps_num);
            dv = std::max(dv, std::abs(V1.values[i] - V2.values[i]));
            ddv = std::max(ddv, std::abs(V1.derivative[i] - V2.derivative[i]));
        }
        double gap = k2 - k1;
        CHECK(dv <= envelope / p.discount * gap + 1e-6);
        CHECK(ddv <= 4.0 * p.z_max / (p.sigma * p.sigma) * envelope * gap + 1e-6);
    }
}

TEST_CASE("self-convergence under refinement runs at order one plus alpha") {
    // The z^alpha profit term caps the observable order at 1+alpha: its
    // second derivative is unbounded at z = 0, so successive sup-norm
    // differences shrink by about 2^(1+alpha) per halving rather than 4.
    ModelParams p = baseline();
    SolverOptions opts;
    std::vector<std::vector<double>> sols;
    for (int M : {201, 401, 801}) {
        Grid g = Grid::uniform(M, p.z_max);
        sols.push_back(solve_auxiliary_hjb(0.2, p, 1.0, g, opts).values);
    }
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < sols[0].size(); ++i)
        d1 = std::max(d1, std::abs(sols[0][i] - sols[1][2 * i]));
    for (std::size_t i = 0; i < sols[1].size(); ++i)
        d2 = std::max(d2, std::abs(sols[1][i] - sols[2][2 * i]));
    CHECK(d1 <= 3e-4);  // difference itself is small at these resolutions
    double predicted = std::pow(2.0, 1.0 + p.alpha);
    CHECK(d1 / d2 == doctest::Approx(predicted).epsilon(0.08));
}

TEST_CASE("refinement order approaches two as the profit term smooths out") {
    ModelParams p = baseline();
    p.alpha = 0.99;
    SolverOptions opts;
    std::vector<std::vector<double>> sols;
    for (int M : {201, 401, 801}) {
        Grid g = Grid::uniform(M, p.z_max);
        sols.push_back(solve_auxiliary_hjb(0.2, p, 1.0, g, opts).values);
    }
    double d1 = 0.0, d2 = 0.0;
    for (std::size_t i = 0; i < sols[0].size(); ++i)
        d1 = std::max(d1, std::abs(sols[0][i] - sols[1][2 * i]));
    for (std::size_t i = 0; i < sols[1].size(); ++i)
        d2 = std::max(d2, std::abs(sols[1][i] - sols[2][2 * i]));
    CHECK(d1 / d2 == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("warm starts reach the same solution") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(201, p.z_max);
    SolverOptions opts;
    ValueFunction cold = solve_auxiliary_hjb(0.3, p, 1.0, grid, opts);
    ValueFunction near = solve_auxiliary_hjb(0.31, p, 1.0, grid, opts);
    ValueFunction warm = solve_auxiliary_hjb(0.3, p, 1.0, grid, opts, near.values);
    for (int i = 0; i < grid.n; ++i)
        CHECK(warm.values[i] == doctest::Approx(cold.values[i]).epsilon(1e-9));
    CHECK(warm.newton_iterations <= cold.newton_iterations);
}

TEST_CASE("iteration cap raises a non-convergence error carrying the residual") {
    ModelParams p = baseline();
    Grid grid = Grid::uniform(201, p.z_max);
    SolverOptions opts;
    opts.max_newton_iters = 1;
    try {
        solve_auxiliary_hjb(0.3, p, 1.0, grid, opts);
        FAIL("expected NonConvergenceError");
    } catch (const NonConvergenceError& e) {
        CHECK(e.last_residual > opts.newton_tol);
        CHECK(e.iterations == 1);
    }
}

TEST_CASE("advection-dominated grids are rejected") {
    ModelParams p = baseline();
    p.sigma = 0.05;
    Grid grid = Grid::uniform(11, p.z_max);  // dz = 0.2 >> sigma^2
    CHECK_THROWS_AS(solve_auxiliary_hjb(1.0, p, 1.0, grid, SolverOptions{}), ConfigError);
}
