#include "rss/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace rss {

namespace {

std::vector<bool> Membership(int n, const AgentSet& agents) {
  std::vector<bool> in(n, false);
  for (AgentId a : agents) {
    if (a < 0 || a >= n) throw InvalidArgument("agent index out of range: " + std::to_string(a));
    in[a] = true;
  }
  return in;
}

// Unit-capacity max flow (Edmonds-Karp) on a small dense residual graph.
class UnitFlow {
 public:
  explicit UnitFlow(int nodes) : cap_(nodes, std::vector<int>(nodes, 0)) {}

  void AddArc(int a, int b, int c) { cap_[a][b] += c; }

  int Run(int source, int sink) {
    const int n = static_cast<int>(cap_.size());
    int flow = 0;
    while (true) {
      std::vector<int> prev(n, -1);
      prev[source] = source;
      std::deque<int> queue{source};
      while (!queue.empty() && prev[sink] < 0) {
        const int u = queue.front();
        queue.pop_front();
        for (int w = 0; w < n; ++w) {
          if (prev[w] < 0 && cap_[u][w] > 0) {
            prev[w] = u;
            queue.push_back(w);
          }
        }
      }
      if (prev[sink] < 0) return flow;
      int bottleneck = std::numeric_limits<int>::max();
      for (int w = sink; w != source; w = prev[w]) bottleneck = std::min(bottleneck, cap_[prev[w]][w]);
      for (int w = sink; w != source; w = prev[w]) {
        cap_[prev[w]][w] -= bottleneck;
        cap_[w][prev[w]] += bottleneck;
      }
      flow += bottleneck;
    }
  }

 private:
  std::vector<std::vector<int>> cap_;
};

}  // namespace

Topology::Topology(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)), adj_(n) {
  for (const Edge& e : edges_) {
    adj_[e.u].push_back(e.v);
    adj_[e.v].push_back(e.u);
  }
  for (auto& list : adj_) std::sort(list.begin(), list.end());
}

Topology Topology::FromEdges(int n, std::vector<std::pair<int, int>> edges) {
  if (n < 1) throw InvalidArgument("topology needs at least one agent");
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n) {
      throw InvalidArgument("edge endpoint out of range: {" + std::to_string(a) + "," +
                            std::to_string(b) + "}");
    }
    if (a == b) throw InvalidArgument("self-loop at agent " + std::to_string(a));
    canon.push_back({std::min(a, b), std::max(a, b)});
  }
  std::sort(canon.begin(), canon.end());
  if (std::adjacent_find(canon.begin(), canon.end()) != canon.end()) {
    throw InvalidArgument("duplicate edge in topology");
  }
  Topology topo(n, std::move(canon));
  if (topo.ComponentsWithout({}).size() != 1) {
    throw ConnectivityError("topology is not connected");
  }
  return topo;
}

Topology Topology::Cycle(int n) {
  if (n < 3) throw InvalidArgument("cycle needs n >= 3");
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return FromEdges(n, std::move(e));
}

Topology Topology::Complete(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) e.emplace_back(i, j);
  return FromEdges(n, std::move(e));
}

Topology Topology::Star(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 1; i < n; ++i) e.emplace_back(0, i);
  return FromEdges(n, std::move(e));
}

Topology Topology::Path(int n) {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
  return FromEdges(n, std::move(e));
}

Topology Topology::Petersen() {
  std::vector<std::pair<int, int>> e;
  for (int i = 0; i < 5; ++i) {
    e.emplace_back(i, (i + 1) % 5);          // outer 5-cycle
    e.emplace_back(i, i + 5);                // spokes
    e.emplace_back(5 + i, 5 + (i + 2) % 5);  // inner pentagram
  }
  return FromEdges(10, std::move(e));
}

std::vector<AgentId> Topology::Neighborhood(AgentId j) const {
  std::vector<AgentId> out = adj_.at(j);
  out.insert(std::lower_bound(out.begin(), out.end(), j), j);
  return out;
}

bool Topology::Adjacent(AgentId a, AgentId b) const {
  const auto& list = adj_.at(a);
  return std::binary_search(list.begin(), list.end(), b);
}

std::vector<DirectedEdge> Topology::DirectedEdges() const {
  std::vector<DirectedEdge> out;
  out.reserve(2 * edges_.size());
  for (int j = 0; j < n_; ++j)
    for (AgentId i : adj_[j]) out.push_back({j, i});
  return out;
}

std::vector<std::vector<AgentId>> Topology::ComponentsWithout(const AgentSet& removed) const {
  std::vector<bool> gone = Membership(n_, removed);
  std::vector<int> label(n_, -1);
  std::vector<std::vector<AgentId>> comps;
  for (int s = 0; s < n_; ++s) {
    if (gone[s] || label[s] >= 0) continue;
    const int id = static_cast<int>(comps.size());
    comps.emplace_back();
    std::deque<int> queue{s};
    label[s] = id;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      comps[id].push_back(u);
      for (AgentId w : adj_[u]) {
        if (!gone[w] && label[w] < 0) {
          label[w] = id;
          queue.push_back(w);
        }
      }
    }
    std::sort(comps[id].begin(), comps[id].end());
  }
  return comps;
}

std::string Topology::Describe() const {
  std::ostringstream os;
  os << "n=" << n_ << " edges=[";
  for (size_t k = 0; k < edges_.size(); ++k) {
    if (k) os << ",";
    os << "{" << edges_[k].u << "," << edges_[k].v << "}";
  }
  os << "]";
  return os.str();
}

FusionMatrix::FusionMatrix(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  rho_ = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < weights_.rows(); ++i)
    for (Eigen::Index j = 0; j < weights_.cols(); ++j)
      if (weights_(i, j) > 0.0) rho_ = std::min(rho_, weights_(i, j));
}

FusionMatrix FusionMatrix::Metropolis(const Topology& topology, DegreeConvention convention) {
  const int n = topology.size();
  const int shift = convention == DegreeConvention::kSelfInclusive ? 1 : 0;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : topology.edges()) {
    const int d = std::max(topology.Degree(e.u), topology.Degree(e.v)) + shift;
    w(e.u, e.v) = w(e.v, e.u) = 1.0 / (1.0 + d);
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (AgentId j : topology.Neighbors(i)) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return FusionMatrix(std::move(w));
}

FusionMatrix FusionMatrix::FromDense(const Topology& topology, Eigen::MatrixXd weights) {
  const int n = topology.size();
  if (weights.rows() != n || weights.cols() != n) throw InvalidArgument("fusion matrix shape mismatch");
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool support = i == j || topology.Adjacent(i, j);
      if (weights(i, j) < 0.0 || weights(i, j) > 1.0) throw InvalidArgument("fusion entry outside [0,1]");
      if (support != (weights(i, j) > 0.0)) {
        throw InvalidArgument("fusion matrix support differs from neighborhoods at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
  FusionMatrix out(std::move(weights));
  if (out.StochasticityError() > 1e-12) throw InvalidArgument("fusion matrix is not doubly stochastic");
  return out;
}

double FusionMatrix::StochasticityError() const {
  const double rows = (weights_.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (weights_.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

int MinDegree(const Topology& topology) {
  int best = std::numeric_limits<int>::max();
  for (int j = 0; j < topology.size(); ++j) best = std::min(best, topology.Degree(j));
  return topology.size() == 0 ? 0 : best;
}

int VertexConnectivity(const Topology& topology) {
  const int n = topology.size();
  int best = n - 1;
  // Vertex v splits into v_in = v and v_out = v + n joined by a unit arc.
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) {
      if (topology.Adjacent(s, t)) continue;
      UnitFlow flow(2 * n);
      for (int v = 0; v < n; ++v) flow.AddArc(v, v + n, (v == s || v == t) ? n : 1);
      for (const Edge& e : topology.edges()) {
        flow.AddArc(e.u + n, e.v, n);
        flow.AddArc(e.v + n, e.u, n);
      }
      best = std::min(best, flow.Run(s + n, t));
    }
  }
  return best;
}

SpanningSplit SpanningTreeSplit(const Topology& topology, const AgentSet& excluded) {
  const int n = topology.size();
  const std::vector<bool> bad = Membership(n, excluded);
  SpanningSplit out;
  out.parent.assign(n, -1);
  for (int j = 0; j < n; ++j) {
    if (!bad[j]) {
      out.root = j;
      break;
    }
  }
  if (out.root < 0) return out;

  std::vector<bool> seen(n, false);
  std::deque<AgentId> queue{out.root};
  seen[out.root] = true;
  while (!queue.empty()) {
    const AgentId u = queue.front();
    queue.pop_front();
    out.order.push_back(u);
    for (AgentId w : topology.Neighbors(u)) {
      if (bad[w] || seen[w]) continue;
      seen[w] = true;
      out.parent[w] = u;
      out.tree.push_back({std::min(u, w), std::max(u, w)});
      queue.push_back(w);
    }
  }
  for (int j = 0; j < n; ++j) {
    if (!bad[j] && !seen[j]) {
      throw ConnectivityError("connectivity precondition violated: agents outside the coalition are "
                              "split into several components");
    }
  }
  for (const Edge& e : topology.edges()) {
    if (bad[e.u] || bad[e.v]) continue;
    if (out.parent[e.u] == e.v || out.parent[e.v] == e.u) continue;
    out.extra.push_back(e);
  }
  return out;
}

IncidenceMatrix::IncidenceMatrix(int num_agents, std::vector<DirectedEdge> columns)
    : columns_(std::move(columns)), entries_(Eigen::MatrixXd::Zero(num_agents, columns_.size())) {
  for (size_t c = 0; c < columns_.size(); ++c) {
    const auto [from, to] = columns_[c];
    if (from == to || from < 0 || to < 0 || from >= num_agents || to >= num_agents) {
      throw InvalidArgument("invalid incidence column");
    }
    entries_(to, c) = 1.0;
    entries_(from, c) = -1.0;
  }
}

}  // namespace rss
