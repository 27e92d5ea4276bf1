#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "rss/graph.hpp"
#include "rss/objective.hpp"
#include "rss/polynomial.hpp"
#include "rss/types.hpp"

namespace rss {

// A vector per directed link (from, to).
using DirectedField = std::map<DirectedEdge, Point>;

// s^{j,i}_k for every ordered neighbor pair j != i at one round. Entry
// {from = j, to = i} is the share agent j sends to agent i.
struct ShareTable {
  int round = 0;
  int dimension = 0;
  DirectedField shares;
};

ShareTable DrawNbShares(const Topology& topology, int round, double delta, int dimension,
                        std::uint64_t seed);

// d^j = sum_i s^{i,j} - sum_i s^{j,i}. Throws InvalidArgument if a neighbor
// pair has no share.
std::vector<Point> NbPerturbation(const ShareTable& shares, const Topology& topology);

// d^{j,i}_k keyed {from = j, to = i} over non-self neighbor pairs; the self
// term d^{j,j} is zero and not stored.
struct LbPerturbation {
  int round = 0;
  int dimension = 0;
  DirectedField d;

  // Zero for self pairs and non-neighbors.
  Point At(AgentId from, AgentId to) const;
};

// For each agent j: raw r^{j,i} uniform on [-1,1]^D, recentred by the
// B[i,j]-weighted mean so that sum_i B[i,j] d^{j,i} = 0, then the family is
// scaled by min(1, delta / max_i |d^{j,i}|).
LbPerturbation DrawLbPerturbation(const Topology& topology, const FusionMatrix& fusion, int round,
                                  double delta, int dimension, std::uint64_t seed);

// max_j |sum_i B[i,j] d^{j,i}|.
double LbLocalBalanceError(const LbPerturbation& pert, const Topology& topology,
                           const FusionMatrix& fusion);

// s^{j,i}(x) for every ordered neighbor pair, one univariate part per
// coordinate, coefficients uniform in [-delta_coeff, delta_coeff].
using NoiseFunctions = std::map<DirectedEdge, SeparablePolynomial>;

NoiseFunctions DrawNoiseFunctions(const Topology& topology, double delta_coeff, int d_max,
                                  int dimension, std::uint64_t seed);

// p_j = sum_i s^{i,j} - sum_i s^{j,i} for every agent, each with d_max + 1
// coefficients per coordinate.
std::vector<SeparablePolynomial> NoiseSums(const NoiseFunctions& noise, const Topology& topology,
                                           int dimension, int d_max);

// f_hat_j = f_j + p_j. Every objective must be polynomial of degree <= d_max.
std::vector<Objective> Obfuscate(const std::vector<Objective>& objectives,
                                 const NoiseFunctions& noise, const Topology& topology, int d_max);

// max_j sup over the box of |grad p_j|.
double NoiseGradientBound(const std::vector<SeparablePolynomial>& sums, const FeasibleSet& set);

}  // namespace rss
