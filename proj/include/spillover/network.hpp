#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spillover/errors.hpp"

namespace spillover {

/// Sector-level spillover network. kernel[receiver][source] is the strength
/// of knowledge flow from `source` into `receiver`; weights are the sector
/// population shares and must sum to one.
struct SpilloverNetwork {
    int n_sectors = 0;
    std::vector<double> weights;
    std::vector<std::vector<double>> kernel;
    std::string label;
};

/// Throws ValidationError naming the offending field. No silent
/// renormalisation of the weights.
void validate_network(const SpilloverNetwork& net);

/// Parses the JSON document {sectors, weights, kernel, label?} and validates.
SpilloverNetwork load_network(const std::string& json_text);

enum class SectorWeights { Equal, RandomSimplex };

/// Erdos-Renyi style directed network including self-loops: each ordered pair
/// receives an edge with probability connection_prob, weighted uniformly on
/// (0, weight_max]. Deterministic for a given seed.
SpilloverNetwork random_network(int n_sectors, double connection_prob, double weight_max,
                                SectorWeights sector_weights, std::uint64_t seed);

/// Weighted influence matrix S[l][l'] = A_{l'} p(l,l') together with the
/// kernel column sums P_l = sum_{l'} p(l',l) and the coupling box bound
/// zeta = z_max * sum of all S entries.
struct SpilloverMatrix {
    std::vector<std::vector<double>> entries;
    std::vector<double> column_sums;
    double zeta = 0.0;
};

SpilloverMatrix spillover_matrix(const SpilloverNetwork& net, double z_max);

/// Sum over sources of S[sector][.], the total direct spillover strength
/// received by one sector.
double spillover_row_sum(const SpilloverMatrix& S, int sector);

enum class PathClass { NoSpillover, DirectOnly, HasIndirect };

const char* to_string(PathClass c);

/// NoSpillover: the sector has no incoming edges. DirectOnly: it has incoming
/// edges but none of its sources does. HasIndirect: some incoming path of
/// length >= 2 exists (cycles included).
PathClass path_classification(const SpilloverNetwork& net, int sector);

/// The six hard-wired benchmark topologies (three- and four-sector chains,
/// fan-ins and a cycle) with equal sector weights and unit edge weights.
std::vector<SpilloverNetwork> canonical_networks();

}  // namespace spillover
