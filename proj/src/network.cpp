#include "spillover/network.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spillover/rng.hpp"

namespace spillover {

using nlohmann::json;

void validate_network(const SpilloverNetwork& net) {
    if (net.n_sectors < 1) throw ValidationError("sectors: must be at least 1");
    if (static_cast<int>(net.weights.size()) != net.n_sectors)
        throw ValidationError("weights: expected one entry per sector");
    double sum = 0.0;
    for (int l = 0; l < net.n_sectors; ++l) {
        double a = net.weights[l];
        if (!std::isfinite(a) || !(a > 0.0) || a > 1.0) {
            std::ostringstream os;
            os << "weights[" << l << "]: must lie in (0,1], got " << a;
            throw ValidationError(os.str());
        }
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "weights: must sum to 1 within 1e-12, got " << sum;
        throw ValidationError(os.str());
    }
    if (static_cast<int>(net.kernel.size()) != net.n_sectors)
        throw ValidationError("kernel: expected one row per sector");
    for (int l = 0; l < net.n_sectors; ++l) {
        if (static_cast<int>(net.kernel[l].size()) != net.n_sectors) {
            std::ostringstream os;
            os << "kernel[" << l << "]: expected " << net.n_sectors << " columns";
            throw ValidationError(os.str());
        }
        for (int s = 0; s < net.n_sectors; ++s) {
            double p = net.kernel[l][s];
            if (!std::isfinite(p) || p < 0.0) {
                std::ostringstream os;
                os << "kernel[" << l << "][" << s << "]: must be finite and >= 0, got " << p;
                throw ValidationError(os.str());
            }
        }
    }
}

SpilloverNetwork load_network(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("network document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("network document must be a JSON object");

    SpilloverNetwork net;
    try {
        if (!doc.contains("sectors")) throw ValidationError("sectors: missing");
        net.n_sectors = doc.at("sectors").get<int>();
        if (!doc.contains("weights")) throw ValidationError("weights: missing");
        net.weights = doc.at("weights").get<std::vector<double>>();
        if (!doc.contains("kernel")) throw ValidationError("kernel: missing");
        net.kernel = doc.at("kernel").get<std::vector<std::vector<double>>>();
        if (doc.contains("label")) net.label = doc.at("label").get<std::string>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("network document has a malformed field: ") + e.what());
    }
    validate_network(net);
    return net;
}

SpilloverNetwork random_network(int n_sectors, double connection_prob, double weight_max,
                                SectorWeights sector_weights, std::uint64_t seed) {
    if (n_sectors < 1) throw ValidationError("sectors: must be at least 1");
    if (!(connection_prob >= 0.0 && connection_prob <= 1.0))
        throw ValidationError("connection_prob: must lie in [0,1]");
    if (!(weight_max > 0.0)) throw ValidationError("weight_max: must be positive");

    Rng rng(seed);
    SpilloverNetwork net;
    net.n_sectors = n_sectors;
    net.kernel.assign(n_sectors, std::vector<double>(n_sectors, 0.0));
    for (int l = 0; l < n_sectors; ++l)
        for (int s = 0; s < n_sectors; ++s)
            if (rng.bernoulli(connection_prob)) net.kernel[l][s] = weight_max * rng.uniform_pos();

    if (sector_weights == SectorWeights::Equal) {
        net.weights.assign(n_sectors, 1.0 / n_sectors);
    } else {
        // Normalised exponentials sample the simplex uniformly.
        net.weights.resize(n_sectors);
        double sum = 0.0;
        for (double& a : net.weights) {
            a = rng.exponential();
            sum += a;
        }
        for (double& a : net.weights) a /= sum;
    }
    validate_network(net);
    return net;
}

SpilloverMatrix spillover_matrix(const SpilloverNetwork& net, double z_max) {
    validate_network(net);
    if (!(z_max > 0.0)) throw ParameterDomainError("z_max must be strictly positive");
    const int L = net.n_sectors;
    SpilloverMatrix S;
    S.entries.assign(L, std::vector<double>(L, 0.0));
    S.column_sums.assign(L, 0.0);
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
        for (int s = 0; s < L; ++s) {
            S.entries[l][s] = net.weights[s] * net.kernel[l][s];
            S.column_sums[s] += net.kernel[l][s];
            total += S.entries[l][s];
        }
    }
    S.zeta = z_max * total;
    return S;
}

double spillover_row_sum(const SpilloverMatrix& S, int sector) {
    double sum = 0.0;
    for (double v : S.entries.at(sector)) sum += v;
    return sum;
}

const char* to_string(PathClass c) {
    switch (c) {
        case PathClass::NoSpillover: return "none";
        case PathClass::DirectOnly: return "direct";
        case PathClass::HasIndirect: return "indirect";
    }
    return "?";
}

PathClass path_classification(const SpilloverNetwork& net, int sector) {
    validate_network(net);
    if (sector < 0 || sector >= net.n_sectors)
        throw ValidationError("sector index out of range");
    auto has_in_edges = [&](int l) {
        for (double p : net.kernel[l])
            if (p > 0.0) return true;
        return false;
    };
    if (!has_in_edges(sector)) return PathClass::NoSpillover;
    // A path of length >= 2 into `sector` exists iff some source of `sector`
    // has an incoming edge of its own (cycles included).
    for (int s = 0; s < net.n_sectors; ++s)
        if (net.kernel[sector][s] > 0.0 && has_in_edges(s)) return PathClass::HasIndirect;
    return PathClass::DirectOnly;
}

std::vector<SpilloverNetwork> canonical_networks() {
    auto make = [](int L, std::initializer_list<std::pair<int, int>> edges, const char* label) {
        SpilloverNetwork net;
        net.n_sectors = L;
        net.weights.assign(L, 1.0 / L);
        net.kernel.assign(L, std::vector<double>(L, 0.0));
        for (auto [from, to] : edges) net.kernel[to][from] = 1.0;
        net.label = label;
        return net;
    };
    // Sectors 0..2 are A,B,C; networks 4-6 add D as sector 3.
    const int A = 0, B = 1, C = 2, D = 3;
    std::vector<SpilloverNetwork> nets;
    nets.push_back(make(3, {{B, C}}, "network-1"));
    nets.push_back(make(3, {{A, B}, {B, C}}, "network-2"));
    nets.push_back(make(3, {{A, C}, {B, C}}, "network-3"));
    nets.push_back(make(4, {{B, C}, {C, D}}, "network-4"));
    nets.push_back(make(4, {{A, B}, {B, C}, {C, D}}, "network-5"));
    nets.push_back(make(4, {{A, B}, {B, C}, {C, D}, {D, A}}, "network-6"));
    return nets;
}

}  // namespace spillover
