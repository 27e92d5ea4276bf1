#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rss/types.hpp"

namespace rss {

// Undirected edge with u < v.
struct Edge {
  AgentId u = 0;
  AgentId v = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Ordered pair (from, to); used for per-link messages and noise.
struct DirectedEdge {
  AgentId from = 0;
  AgentId to = 0;

  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
  friend auto operator<=>(const DirectedEdge&, const DirectedEdge&) = default;
};

// Connected undirected communication graph over agents 0..n-1.
//
// Edges are stored in ascending (u, v) order and neighbor lists in ascending
// order, so anything iterating over them is reproducible.
class Topology {
 public:
  // Validates: n >= 1, endpoints in range, no self loops, no duplicates, and
  // the graph is connected. Throws InvalidArgument / ConnectivityError.
  static Topology FromEdges(int n, std::vector<std::pair<int, int>> edges);

  static Topology Cycle(int n);
  static Topology Complete(int n);
  // Agent 0 is the hub; agents 1..n-1 are leaves.
  static Topology Star(int n);
  static Topology Path(int n);
  // The Petersen graph: 10 agents, 3-regular, vertex connectivity 3.
  static Topology Petersen();

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Self-exclusive neighbor list, ascending.
  const std::vector<AgentId>& Neighbors(AgentId j) const { return adj_.at(j); }
  // Self-inclusive neighborhood N_j = {i : {i,j} in E} U {j}, ascending.
  std::vector<AgentId> Neighborhood(AgentId j) const;
  int Degree(AgentId j) const { return static_cast<int>(adj_.at(j).size()); }
  bool Adjacent(AgentId a, AgentId b) const;

  // Every ordered (j, i) with {i, j} an edge, sorted by (from, to).
  std::vector<DirectedEdge> DirectedEdges() const;

  // Connected components of the subgraph induced on agents not in `removed`.
  // Each component is ascending; components are ordered by smallest member.
  std::vector<std::vector<AgentId>> ComponentsWithout(const AgentSet& removed) const;

  std::string Describe() const;

 private:
  Topology(int n, std::vector<Edge> edges);

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<AgentId>> adj_;
};

// Which neighborhood size goes into the Metropolis formula.
enum class DegreeConvention {
  kSelfExclusive,  // d_i = number of neighbors (standard)
  kSelfInclusive,  // |N_i| = d_i + 1
};

// Doubly stochastic weight matrix supported on the self-inclusive
// neighborhoods of a topology.
class FusionMatrix {
 public:
  // Metropolis weights: 1/(1 + max(d_i, d_j)) on edges, remainder on the
  // diagonal.
  static FusionMatrix Metropolis(const Topology& topology,
                                 DegreeConvention convention = DegreeConvention::kSelfExclusive);

  // Wraps a user-supplied matrix after checking support, nonnegativity and
  // double stochasticity (1e-12).
  static FusionMatrix FromDense(const Topology& topology, Eigen::MatrixXd weights);

  int size() const { return static_cast<int>(weights_.rows()); }
  double operator()(AgentId i, AgentId j) const { return weights_(i, j); }
  const Eigen::MatrixXd& dense() const { return weights_; }

  // Smallest positive entry.
  double rho() const { return rho_; }

  // max over rows and columns of |sum - 1|.
  double StochasticityError() const;

 private:
  explicit FusionMatrix(Eigen::MatrixXd weights);

  Eigen::MatrixXd weights_;
  double rho_ = 0.0;
};

int MinDegree(const Topology& topology);

// kappa(G): fewest vertex deletions that disconnect the graph, n-1 for complete
// graphs. Computed as the minimum over non-adjacent pairs of the number of
// vertex-disjoint paths (unit vertex capacities, max-flow).
int VertexConnectivity(const Topology& topology);

// Partition of the edges among non-excluded ("good") agents.
struct SpanningSplit {
  std::vector<Edge> tree;   // breadth-first tree, in discovery order
  std::vector<Edge> extra;  // remaining induced edges, ascending
  AgentId root = -1;
  // parent[j] for good non-root agents, -1 otherwise.
  std::vector<AgentId> parent;
  // Good agents in breadth-first order starting at root.
  std::vector<AgentId> order;
};

// Breadth-first spanning tree of the subgraph induced on agents outside
// `excluded`, rooted at the lowest-index good agent and expanding neighbors in
// ascending order. Throws ConnectivityError if that subgraph is disconnected.
SpanningSplit SpanningTreeSplit(const Topology& topology, const AgentSet& excluded);

// Signed incidence matrix over a list of directed edges: column c has +1 in
// the row of edge c's head (`to`) and -1 in the row of its tail (`from`).
class IncidenceMatrix {
 public:
  IncidenceMatrix(int num_agents, std::vector<DirectedEdge> columns);

  const Eigen::MatrixXd& dense() const { return entries_; }
  const std::vector<DirectedEdge>& columns() const { return columns_; }
  int rows() const { return static_cast<int>(entries_.rows()); }
  int cols() const { return static_cast<int>(entries_.cols()); }

 private:
  std::vector<DirectedEdge> columns_;
  Eigen::MatrixXd entries_;
};

}  // namespace rss
