#include "spillover/microsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "spillover/model.hpp"
#include "spillover/quadrature.hpp"
#include "spillover/rng.hpp"

namespace spillover {

namespace {

// Per-firm inbound link lists in flattened CSR-like form.
struct LinkTable {
    // For receiving firm index r (global), edges_[offsets_[r]..offsets_[r+1])
    struct Edge {
        int source;  // global firm index
        double count;
    };
    std::vector<std::size_t> offsets;
    std::vector<Edge> edges;
};

struct Layout {
    std::vector<int> sector_of;     // global index -> sector
    std::vector<int> first_index;   // sector -> first global index
    int total = 0;
};

Layout make_layout(const std::vector<int>& firms_per_sector) {
    Layout lay;
    lay.first_index.resize(firms_per_sector.size() + 1, 0);
    for (std::size_t l = 0; l < firms_per_sector.size(); ++l)
        lay.first_index[l + 1] = lay.first_index[l] + firms_per_sector[l];
    lay.total = lay.first_index.back();
    lay.sector_of.resize(lay.total);
    for (std::size_t l = 0; l < firms_per_sector.size(); ++l)
        for (int i = lay.first_index[l]; i < lay.first_index[l + 1]; ++i)
            lay.sector_of[i] = static_cast<int>(l);
    return lay;
}

// Bernoulli(p) visits over 0..n-1 via geometric gap sampling.
template <typename F>
void sample_bernoulli_indices(Rng& rng, int n, double p, F&& visit) {
    if (p <= 0.0) return;
    if (p >= 1.0) {
        for (int j = 0; j < n; ++j) visit(j);
        return;
    }
    double log1mp = std::log1p(-p);
    int j = -1;
    while (true) {
        double u = rng.uniform_pos();
        double skip = std::floor(std::log(u) / log1mp);
        if (skip > static_cast<double>(n)) break;
        j += 1 + static_cast<int>(skip);
        if (j >= n) break;
        visit(j);
    }
}

LinkTable sample_links(const SimConfig& config, const SpilloverNetwork& net, Rng& rng,
                       const Layout& lay) {
    const int L = net.n_sectors;
    std::vector<std::vector<std::pair<int, double>>> inbound(lay.total);

    if (config.link_law == LinkLaw::Explicit) {
        for (const auto& e : config.explicit_links) {
            int to = lay.first_index[e.to_sector] + e.to_firm;
            int from = lay.first_index[e.from_sector] + e.from_firm;
            inbound[to].push_back({from, e.count});
        }
    } else {
        for (int l = 0; l < L; ++l) {
            for (int lp = 0; lp < L; ++lp) {
                double p = net.kernel[l][lp];
                if (p <= 0.0) continue;
                int n_src = config.firms_per_sector[lp];
                double pair_mean =
                    config.link_law == LinkLaw::PairwiseMean ? p : p / n_src;
                double whole = std::floor(pair_mean);
                double frac = pair_mean - whole;
                for (int i = lay.first_index[l]; i < lay.first_index[l + 1]; ++i) {
                    if (whole > 0.0) {
                        // Every ordered pair carries the integer part.
                        for (int j = 0; j < n_src; ++j)
                            inbound[i].push_back(
                                {lay.first_index[lp] + j, whole});
                    }
                    sample_bernoulli_indices(rng, n_src, frac, [&](int j) {
                        inbound[i].push_back({lay.first_index[lp] + j, 1.0});
                    });
                }
            }
        }
    }

    LinkTable table;
    table.offsets.resize(lay.total + 1, 0);
    std::size_t total = 0;
    for (int i = 0; i < lay.total; ++i) {
        total += inbound[i].size();
        table.offsets[i + 1] = total;
    }
    table.edges.reserve(total);
    for (int i = 0; i < lay.total; ++i)
        for (auto [src, c] : inbound[i]) table.edges.push_back({src, c});
    return table;
}

double fold_into(double z, double z_max) {
    // Reflect overshoot; repeats in case a huge step crosses several times.
    while (z < 0.0 || z > z_max) {
        if (z < 0.0) z = -z;
        if (z > z_max) z = 2.0 * z_max - z;
    }
    return z;
}

}  // namespace

void validate_sim_config(const SimConfig& config, const SpilloverNetwork& net) {
    validate_network(net);
    if (static_cast<int>(config.firms_per_sector.size()) != net.n_sectors)
        throw ConfigError("firms_per_sector must list one count per sector");
    for (int n : config.firms_per_sector)
        if (n < 1) throw ConfigError("every sector needs at least one firm");
    if (!(config.dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(config.horizon >= config.dt)) throw ConfigError("horizon must be at least dt");
    if (config.snapshot_stride < 1) throw ConfigError("snapshot_stride must be >= 1");
    if (config.initial_law == SimConfig::InitialLaw::FromDensity &&
        static_cast<int>(config.initial_densities.size()) != net.n_sectors)
        throw ConfigError("initial_densities must list one density per sector");
}

SimResult simulate(const SimConfig& config, const SpilloverNetwork& net,
                   const ModelParams& params, std::span<const SectorPolicy> policies) {
    validate_sim_config(config, net);
    if (static_cast<int>(policies.size()) != net.n_sectors)
        throw ConfigError("expected one policy per sector");
    if (!(params.sigma >= 0.0)) throw ConfigError("sigma must be non-negative");

    const int L = net.n_sectors;
    const double z_max = params.z_max;
    Layout lay = make_layout(config.firms_per_sector);
    const double inv_total = 1.0 / static_cast<double>(lay.total);

    // Tabulate h(z)^gamma for each sector on a fixed fine grid; policies are
    // assumed continuous and bounded on [0, z_max].
    const int table_n = 2048;
    const double table_step = z_max / (table_n - 1);
    std::vector<std::vector<double>> yield_table(L, std::vector<double>(table_n));
    double max_policy_drift = 0.0;
    for (int l = 0; l < L; ++l) {
        for (int i = 0; i < table_n; ++i) {
            double h = policies[l](i * table_step);
            if (!(h >= 0.0) || !std::isfinite(h))
                throw ConfigError("policies must be non-negative and bounded");
            yield_table[l][i] = std::pow(h, params.gamma);
            max_policy_drift = std::max(max_policy_drift, yield_table[l][i]);
        }
    }
    auto yield_at = [&](int l, double z) {
        double x = z / table_step;
        int i = std::min(static_cast<int>(x), table_n - 2);
        double w = x - i;
        const auto& tab = yield_table[l];
        return tab[i] + w * (tab[i + 1] - tab[i]);
    };

    // Coarse drift guard: labour yield plus the largest possible spillover
    // inflow per firm (every source at z_max).
    double kernel_mass = 0.0;
    for (int l = 0; l < L; ++l) {
        double row = 0.0;
        for (int lp = 0; lp < L; ++lp) row += net.kernel[l][lp];
        kernel_mass = std::max(kernel_mass, row);
    }
    double drift_guard = max_policy_drift + kernel_mass * z_max;
    if (config.dt * drift_guard > 0.5 * z_max) {
        std::ostringstream os;
        os << "dt too large: dt * sup drift = " << config.dt * drift_guard << " exceeds z_max/2";
        throw ConfigError(os.str());
    }

    Rng link_rng(derive_seed(config.seed, 0));
    LinkTable links = sample_links(config, net, link_rng, lay);

    Rng path_rng(derive_seed(config.seed, 1));
    std::vector<double> z(lay.total);
    for (int l = 0; l < L; ++l) {
        for (int i = lay.first_index[l]; i < lay.first_index[l + 1]; ++i) {
            if (config.initial_law == SimConfig::InitialLaw::Uniform)
                z[i] = z_max * path_rng.uniform();
            else
                z[i] = density_quantile(config.initial_densities[l], path_rng.uniform());
        }
    }

    const int n_steps = static_cast<int>(std::ceil(config.horizon / config.dt - 1e-12));
    const double noise_scale = params.sigma * std::sqrt(config.dt);

    SimResult result;
    result.total_links = links.edges.size();
    auto snapshot = [&](double t) {
        EmpiricalState state;
        state.time = t;
        state.positions.resize(L);
        for (int l = 0; l < L; ++l)
            state.positions[l].assign(z.begin() + lay.first_index[l],
                                      z.begin() + lay.first_index[l + 1]);
        result.snapshots.push_back(std::move(state));
    };
    snapshot(0.0);

    std::vector<double> z_next(lay.total);
    for (int step = 1; step <= n_steps; ++step) {
        for (int i = 0; i < lay.total; ++i) {
            double spill = 0.0;
            for (std::size_t e = links.offsets[i]; e < links.offsets[i + 1]; ++e)
                spill += links.edges[e].count * z[links.edges[e].source];
            double drift = yield_at(lay.sector_of[i], z[i]) + spill * inv_total;
            double next = z[i] + config.dt * drift + noise_scale * path_rng.normal();
            next = fold_into(next, z_max);
            z_next[i] = next;
        }
        z.swap(z_next);
        if (step % config.snapshot_stride == 0 || step == n_steps)
            snapshot(step * config.dt);
    }
    return result;
}

SectorPolicy equilibrium_policy(const MfgSolution& solution, int sector,
                                const ModelParams& params) {
    if (sector < 0 || sector >= static_cast<int>(solution.values.size()))
        throw ValidationError("sector index out of range");
    const ValueFunction& V = solution.values[sector];
    // Capture by value so the policy outlives the solution.
    Grid grid = V.grid;
    std::vector<double> dv = V.derivative;
    double gamma = params.gamma, wage = params.wage;
    return [grid, dv = std::move(dv), gamma, wage](double zq) {
        double zc = std::clamp(zq, 0.0, grid.z_max);
        double x = zc / grid.dz;
        int i = std::min(static_cast<int>(x), grid.n - 2);
        double w = x - i;
        double lambda = dv[i] + w * (dv[i + 1] - dv[i]);
        return std::pow(gamma * std::max(0.0, lambda) / wage, 1.0 / (1.0 - gamma));
    };
}

double density_quantile(const Density& m, double u) {
    u = std::clamp(u, 0.0, 1.0);
    const Grid& grid = m.grid;
    std::vector<double> cdf = cumulative_trapezoid(m.values, grid.dz);
    double total = cdf.back();
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u * total);
    if (it == cdf.begin()) return grid.z.front();
    if (it == cdf.end()) return grid.z.back();
    std::size_t hi = static_cast<std::size_t>(it - cdf.begin());
    double c0 = cdf[hi - 1], c1 = cdf[hi];
    double w = c1 > c0 ? (u * total - c0) / (c1 - c0) : 0.0;
    return grid.z[hi - 1] + w * grid.dz;
}

double wasserstein1(std::span<const double> samples, const Density& m) {
    if (samples.empty()) return 0.0;
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    // Precompute the CDF once; walk quantiles in rank order.
    const Grid& grid = m.grid;
    std::vector<double> cdf = cumulative_trapezoid(m.values, grid.dz);
    double total = cdf.back();
    double acc = 0.0;
    std::size_t node = 1;
    const std::size_t n = sorted.size();
    for (std::size_t r = 0; r < n; ++r) {
        double target = (static_cast<double>(r) + 0.5) / static_cast<double>(n) * total;
        while (node + 1 < cdf.size() && cdf[node] < target) ++node;
        double c0 = cdf[node - 1], c1 = cdf[node];
        double w = c1 > c0 ? std::clamp((target - c0) / (c1 - c0), 0.0, 1.0) : 0.0;
        double q = grid.z[node - 1] + w * grid.dz;
        acc += std::abs(sorted[r] - q);
    }
    return acc / static_cast<double>(n);
}

MatchReport empirical_vs_mfg(const SimResult& result, const MfgSolution& solution,
                             const ModelParams& params, double burn_in_fraction) {
    MatchReport report;
    if (params.sigma == 0.0) {
        report.applicable = false;
        report.note = "sigma = 0: the stationary density comparison is undefined";
        return report;
    }
    if (result.snapshots.empty()) {
        report.applicable = false;
        report.note = "empty trajectory";
        return report;
    }
    double t_end = result.snapshots.back().time;
    double t_min = burn_in_fraction * t_end;
    const int L = static_cast<int>(solution.densities.size());
    report.sectors.resize(L);
    for (int l = 0; l < L; ++l) {
        std::vector<double> pooled;
        for (const auto& snap : result.snapshots) {
            if (snap.time < t_min || snap.time == 0.0) continue;
            pooled.insert(pooled.end(), snap.positions[l].begin(), snap.positions[l].end());
        }
        if (pooled.empty())
            for (const auto& zl : result.snapshots.back().positions[l])
                pooled.push_back(zl);
        double mean = std::accumulate(pooled.begin(), pooled.end(), 0.0) /
                      static_cast<double>(pooled.size());
        report.sectors[l].mean_gap = std::abs(mean - mean_productivity(solution.densities[l]));
        report.sectors[l].wasserstein = wasserstein1(pooled, solution.densities[l]);
    }
    return report;
}

}  // namespace spillover
