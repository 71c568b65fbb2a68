#include "spillover/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

#include "spillover/model.hpp"

namespace spillover {

namespace {

struct SectorSolve {
    ValueFunction value;
    Density density;
    double mean = 0.0;
    double moment = 0.0;
};

// Solves keyed by (k, B) rounded to 12 decimal digits; repeated map
// evaluations across outer iterations hit identical keys, and the nearest
// cached value function warm-starts Newton otherwise.
class SolveCache {
public:
    using Key = std::pair<std::int64_t, std::int64_t>;

    static Key key(double k, double price) {
        return {llround_checked(k), llround_checked(price)};
    }

    std::shared_ptr<const SectorSolve> find(const Key& key) {
        auto it = cache_.find(key);
        if (it == cache_.end()) return nullptr;
        ++hits_;
        return it->second;
    }

    std::shared_ptr<const SectorSolve> nearest(double k) const {
        std::shared_ptr<const SectorSolve> best;
        double best_gap = std::numeric_limits<double>::infinity();
        for (const auto& [key, solve] : cache_) {
            double gap = std::abs(solve->value.k - k);
            if (gap < best_gap) {
                best_gap = gap;
                best = solve;
            }
        }
        return best;
    }

    void insert(const Key& key, std::shared_ptr<const SectorSolve> solve) {
        cache_.emplace(key, std::move(solve));
    }

    int hits() const { return hits_; }

private:
    static std::int64_t llround_checked(double v) {
        double scaled = v * 1e12;
        if (!(std::abs(scaled) < 9.0e18)) throw NumericalError("cache key out of range");
        return std::llround(scaled);
    }

    std::map<Key, std::shared_ptr<const SectorSolve>> cache_;
    int hits_ = 0;
};

std::shared_ptr<const SectorSolve> solve_sector(double k, double price, const ModelParams& params,
                                                const Grid& grid, const SolverOptions& opts,
                                                SolveCache& cache) {
    auto key = SolveCache::key(k, price);
    if (auto hit = cache.find(key)) return hit;

    auto warm = cache.nearest(k);
    auto solve = std::make_shared<SectorSolve>();
    if (warm)
        solve->value = solve_auxiliary_hjb(k, params, price, grid, opts, warm->value.values);
    else
        solve->value = solve_auxiliary_hjb(k, params, price, grid, opts);
    solve->density = density_from_value(solve->value, params);
    solve->mean = mean_productivity(solve->density);
    solve->moment = moment_alpha(solve->density, params.alpha);
    cache.insert(key, solve);
    return solve;
}

std::vector<std::shared_ptr<const SectorSolve>> solve_all_sectors(
    std::span<const double> k, double price, const ModelParams& params,
    const SpilloverNetwork& net, const Grid& grid, const SolverOptions& opts,
    SolveCache& cache) {
    std::vector<std::shared_ptr<const SectorSolve>> out(net.n_sectors);
    for (int l = 0; l < net.n_sectors; ++l) {
        try {
            out[l] = solve_sector(k[l], price, params, grid, opts, cache);
        } catch (const NonConvergenceError& e) {
            std::ostringstream os;
            os << "sector " << l << ": " << e.what();
            throw NonConvergenceError(os.str(), e.last_residual, e.iterations);
        }
    }
    return out;
}

std::vector<double> apply_matrix(const SpilloverMatrix& S, std::span<const double> means) {
    const int L = static_cast<int>(S.entries.size());
    std::vector<double> out(L, 0.0);
    for (int l = 0; l < L; ++l)
        for (int s = 0; s < L; ++s) out[l] += S.entries[l][s] * means[s];
    return out;
}

double norm1_diff(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

}  // namespace

std::vector<double> coupling_map(std::span<const double> k, const ModelParams& params,
                                 double price, const SpilloverNetwork& net, const Grid& grid,
                                 const SolverOptions& opts) {
    validate_params(params);
    validate_network(net);
    if (static_cast<int>(k.size()) != net.n_sectors)
        throw DimensionError("coupling vector length must equal the sector count");
    for (double v : k)
        if (!(v >= 0.0)) throw ParameterDomainError("coupling entries must be non-negative");

    SpilloverMatrix S = spillover_matrix(net, params.z_max);
    SolveCache cache;
    auto solves = solve_all_sectors(k, price, params, net, grid, opts, cache);
    std::vector<double> means(net.n_sectors);
    for (int l = 0; l < net.n_sectors; ++l) means[l] = solves[l]->mean;
    return apply_matrix(S, means);
}

double update_price(std::span<const Density> densities, const SpilloverNetwork& net,
                    const ModelParams& params) {
    validate_params(params);
    validate_network(net);
    if (static_cast<int>(densities.size()) != net.n_sectors)
        throw DimensionError("expected one density per sector");
    double aggregate = 0.0;
    for (int l = 0; l < net.n_sectors; ++l)
        aggregate += net.weights[l] * moment_alpha(densities[l], params.alpha);
    if (!(aggregate > 0.0))
        throw DegenerateAggregateError("sector moment aggregate is not positive");
    return std::pow(aggregate, 1.0 / (params.alpha - 1.0));
}

MfgSolution solve_mfg(const ModelParams& params, const SpilloverNetwork& net, const Grid& grid,
                      const SolverOptions& opts, std::span<const double> k0,
                      std::optional<double> B0) {
    validate_params(params);
    validate_network(net);
    validate_options(opts);

    const int L = net.n_sectors;
    SpilloverMatrix S = spillover_matrix(net, params.z_max);
    const double zeta = S.zeta;
    const bool endogenous = params.price_mode == PriceMode::Endogenous;

    std::vector<double> k(L, 0.0);
    if (!k0.empty()) {
        if (static_cast<int>(k0.size()) != L)
            throw DimensionError("k0 length must equal the sector count");
        for (int l = 0; l < L; ++l) {
            if (!(k0[l] >= 0.0) || k0[l] > zeta + 1e-12)
                throw ParameterDomainError("k0 entries must lie in [0, zeta]");
            k[l] = k0[l];
        }
    }
    if (B0 && !(*B0 > 0.0)) throw ParameterDomainError("B0 must be strictly positive");
    double price = endogenous ? B0.value_or(1.0) : params.fixed_price;

    MfgSolution out;
    out.price_mode = params.price_mode;

    SolveCache cache;
    bool converged = false;
    double gap = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < opts.max_fixed_point_iters; ++iter) {
        auto solves = solve_all_sectors(k, price, params, net, grid, opts, cache);
        std::vector<double> means(L), moments(L);
        for (int l = 0; l < L; ++l) {
            means[l] = solves[l]->mean;
            moments[l] = solves[l]->moment;
        }

        std::vector<double> k_next = apply_matrix(S, means);
        for (double& v : k_next) {
            if (v < 0.0 || v > zeta) {
                out.clamp_activated = true;
                v = std::clamp(v, 0.0, zeta);
            }
        }
        double price_next = price;
        if (endogenous) {
            double aggregate = 0.0;
            for (int l = 0; l < L; ++l) aggregate += net.weights[l] * moments[l];
            if (!(aggregate > 0.0))
                throw DegenerateAggregateError("sector moment aggregate is not positive");
            price_next = std::pow(aggregate, 1.0 / (params.alpha - 1.0));
        }

        double k_gap = norm1_diff(k_next, k);
        gap = k_gap + std::abs(price_next - price);
        out.k_gap_history.push_back(k_gap);
        out.gap_history.push_back(gap);
        k = std::move(k_next);
        price = price_next;
        if (gap <= opts.fixed_point_tol) {
            converged = true;
            ++iter;
            break;
        }
    }
    if (!converged) {
        std::ostringstream os;
        os << "fixed-point iteration stalled with gap " << gap << " after " << iter
           << " iterations (gap trace:";
        std::size_t tail = out.gap_history.size() > 8 ? out.gap_history.size() - 8 : 0;
        for (std::size_t i = tail; i < out.gap_history.size(); ++i) os << " " << out.gap_history[i];
        os << ")";
        throw NonConvergenceError(os.str(), gap, iter);
    }

    // Final pass at the converged couplings so the reported value functions
    // and densities are consistent with (k*, B).
    auto solves = solve_all_sectors(k, price, params, net, grid, opts, cache);
    out.values.reserve(L);
    out.densities.reserve(L);
    for (int l = 0; l < L; ++l) {
        out.values.push_back(solves[l]->value);
        out.densities.push_back(solves[l]->density);
    }
    out.k_star = std::move(k);
    out.price = price;
    out.iterations = iter;
    out.final_gap = gap;
    out.cache_hits = cache.hits();
    out.uniqueness = uniqueness_margin(net, out);
    return out;
}

UniquenessReport uniqueness_margin(const SpilloverNetwork& net, const MfgSolution& solution) {
    UniquenessReport report;
    double z_max = solution.values.empty() ? 0.0 : solution.values.front().grid.z_max;
    if (z_max > 0.0) {
        SpilloverMatrix S = spillover_matrix(net, z_max);
        report.zeta = S.zeta;
        report.sector_products.resize(net.n_sectors);
        for (int l = 0; l < net.n_sectors; ++l)
            report.sector_products[l] = net.weights[l] * S.column_sums[l];
    }
    const auto& gaps = solution.k_gap_history;
    double worst = 0.0;
    bool seen = false;
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        if (gaps[i - 1] > 0.0) {
            worst = std::max(worst, gaps[i] / gaps[i - 1]);
            seen = true;
        }
    }
    if (seen) {
        report.contraction_ratio = worst;
        report.contraction_warning = worst >= 1.0;
    }
    return report;
}

}  // namespace spillover
