#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "spillover/equilibrium.hpp"
#include "spillover/model.hpp"
#include "spillover/quadrature.hpp"
#include "spillover/tridiag.hpp"

namespace spillover::test {

double hamiltonian_bruteforce(double z, double lambda, double k, const ModelParams& p,
                              double price) {
    double base = profit(z, p.alpha, price);
    double best = k * lambda + base;  // h = 0
    for (double log_h = -4.0; log_h <= 2.0; log_h += 0.0005) {
        double h = std::pow(10.0, log_h);
        double cand = (std::pow(h, p.gamma) + k) * lambda + base - p.wage * h;
        best = std::max(best, cand);
    }
    return best;
}

Density density_bvp_oracle(const ValueFunction& V, const ModelParams& params) {
    const Grid& grid = V.grid;
    const int n = grid.n;
    const double dz = grid.dz;
    const double diffusion = 0.5 * params.sigma * params.sigma / dz;

    std::vector<double> advect(n);
    for (int i = 0; i < n; ++i) advect[i] = labour_yield(V.derivative[i], params) + V.k;

    // Zero-flux finite volumes: row i states flux(i+1/2) - flux(i-1/2) = 0
    // with flux(i+1/2) = -diffusion (m[i+1]-m[i]) + c(i+1/2) (m[i]+m[i+1])/2
    // and zero flux through both walls. The last row is linearly dependent on
    // the rest, so replace it with a pin and renormalise afterwards.
    Tridiagonal sys(n);
    std::vector<double> rhs(n, 0.0);
    auto half = [&](int i) { return 0.5 * (advect[i] + advect[i + 1]); };
    {
        double c = half(0);
        sys.diag[0] = diffusion + 0.5 * c;
        sys.upper[0] = -diffusion + 0.5 * c;
    }
    for (int i = 1; i + 1 < n; ++i) {
        double cl = half(i - 1), cr = half(i);
        sys.lower[i] = -(diffusion + 0.5 * cl);
        sys.diag[i] = (diffusion + 0.5 * cr) - (-diffusion + 0.5 * cl);
        sys.upper[i] = -diffusion + 0.5 * cr;
    }
    sys.lower[n - 1] = 0.0;
    sys.diag[n - 1] = 1.0;
    rhs[n - 1] = 1.0;

    std::vector<double> m = solve_tridiagonal(std::move(sys), std::move(rhs));
    double mass = trapezoid(m, dz);
    for (double& v : m) v /= mass;

    Density out;
    out.grid = grid;
    out.values = std::move(m);
    out.k = V.k;
    out.norm_constant = mass;
    return out;
}

double simpson(std::span<const double> f, double dz) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0) throw ValidationError("Simpson rule needs an odd node count");
    double s = f.front() + f.back();
    for (std::size_t i = 1; i + 1 < n; ++i) s += f[i] * (i % 2 == 1 ? 4.0 : 2.0);
    return s * dz / 3.0;
}

double scalar_fixed_point_bisection(const ModelParams& params, const SpilloverNetwork& net,
                                    const Grid& grid, const SolverOptions& opts,
                                    bool endogenous, double tol) {
    if (net.n_sectors != 1) throw ValidationError("bisection oracle is single-sector");
    SpilloverMatrix S = spillover_matrix(net, params.z_max);
    const double zeta = S.zeta;
    const double s00 = S.entries[0][0];

    auto mean_at = [&](double k) {
        double price = params.price_mode == PriceMode::Fixed ? params.fixed_price : 1.0;
        if (endogenous) {
            for (int i = 0; i < 400; ++i) {
                ValueFunction V = solve_auxiliary_hjb(k, params, price, grid, opts);
                Density m = density_from_value(V, params);
                double next = std::pow(moment_alpha(m, params.alpha) * net.weights[0],
                                       1.0 / (params.alpha - 1.0));
                if (std::abs(next - price) <= 1e-12) {
                    price = next;
                    break;
                }
                price = next;
            }
        }
        ValueFunction V = solve_auxiliary_hjb(k, params, price, grid, opts);
        Density m = density_from_value(V, params);
        return mean_productivity(m);
    };
    auto g = [&](double k) { return s00 * mean_at(k) - k; };

    double lo = 0.0, hi = zeta;
    double glo = g(lo);
    if (glo <= 0.0) return 0.0;  // no inflow at all
    double ghi = g(hi);
    if (ghi > 0.0) throw NumericalError("bisection oracle found no sign change on [0, zeta]");
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> truncated_series(const SpilloverMatrix& S, double f0, double f1) {
    const int L = static_cast<int>(S.entries.size());
    double norm_inf = 0.0;
    for (int i = 0; i < L; ++i) {
        double row = 0.0;
        for (int j = 0; j < L; ++j) row += std::abs(S.entries[i][j]);
        norm_inf = std::max(norm_inf, row);
    }
    double q = f1 * norm_inf;
    int terms = 1;
    if (q > 0.0 && q < 1.0) {
        while (std::pow(q, terms + 1) / (1.0 - q) > 1e-12 && terms < 100000) ++terms;
    }

    auto apply = [&](const std::vector<double>& x) {
        std::vector<double> y(L, 0.0);
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) y[i] += S.entries[i][j] * x[j];
        return y;
    };

    std::vector<double> power = apply(std::vector<double>(L, 1.0));  // S^1 1
    std::vector<double> acc = power;
    double coef = 1.0;
    for (int nterm = 1; nterm <= terms; ++nterm) {
        power = apply(power);
        coef *= f1;
        for (int i = 0; i < L; ++i) acc[i] += coef * power[i];
    }
    for (double& v : acc) v *= f0;
    return acc;
}

double ks_uniform(std::span<const double> samples, double hi) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = sorted[i] / hi;
        worst = std::max(worst, std::abs((i + 1) / n - f));
        worst = std::max(worst, std::abs(f - i / n));
    }
    return worst;
}

PathClass path_class_bruteforce(const SpilloverNetwork& net, int sector, int max_len) {
    const int L = net.n_sectors;
    // frontier holds every node from which a path of the current length
    // reaches `sector`.
    std::vector<char> frontier(L, 0);
    frontier[sector] = 1;
    int longest = 0;
    for (int len = 1; len <= max_len; ++len) {
        std::vector<char> next(L, 0);
        bool any = false;
        for (int to = 0; to < L; ++to) {
            if (!frontier[to]) continue;
            for (int from = 0; from < L; ++from) {
                if (net.kernel[to][from] > 0.0) {
                    next[from] = 1;
                    any = true;
                }
            }
        }
        if (!any) break;
        longest = len;
        frontier.swap(next);
    }
    if (longest == 0) return PathClass::NoSpillover;
    return longest == 1 ? PathClass::DirectOnly : PathClass::HasIndirect;
}

}  // namespace spillover::test
