#include "rss/noise.hpp"

#include <algorithm>
#include <cmath>

#include "rss/rng.hpp"

namespace rss {

namespace {

// Uniform in the D-ball of the given radius.
Point UniformInBall(Stream& rng, int dimension, double radius) {
  Point dir(dimension);
  double norm = 0.0;
  do {
    for (int k = 0; k < dimension; ++k) dir[k] = rng.Normal();
    norm = dir.norm();
  } while (norm == 0.0);
  const double r = radius * std::pow(rng.Uniform01(), 1.0 / dimension);
  return dir * (r / norm);
}

void CheckDelta(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("noise bound must be finite and >= 0");
}

}  // namespace

ShareTable DrawNbShares(const Topology& topology, int round, double delta, int dimension,
                        std::uint64_t seed) {
  CheckDelta(delta);
  if (round < 1) throw InvalidArgument("rounds start at 1");
  ShareTable table{round, dimension, {}};
  const double radius = delta / (2.0 * topology.size());
  for (int j = 0; j < topology.size(); ++j) {
    Stream rng(seed, StreamPurpose::kNbShares, j, round);
    for (AgentId i : topology.Neighbors(j)) {
      Point s = Point::Zero(dimension);
      if (round > 1 && radius > 0.0) s = UniformInBall(rng, dimension, radius);
      table.shares.emplace(DirectedEdge{j, i}, std::move(s));
    }
  }
  return table;
}

std::vector<Point> NbPerturbation(const ShareTable& shares, const Topology& topology) {
  std::vector<Point> d(topology.size(), Point::Zero(shares.dimension));
  for (int j = 0; j < topology.size(); ++j) {
    for (AgentId i : topology.Neighbors(j)) {
      const auto in = shares.shares.find({i, j});
      const auto out = shares.shares.find({j, i});
      if (in == shares.shares.end() || out == shares.shares.end()) {
        throw InvalidArgument("missing share between agents " + std::to_string(i) + " and " +
                              std::to_string(j));
      }
      d[j] += in->second;
      d[j] -= out->second;
    }
  }
  return d;
}

Point LbPerturbation::At(AgentId from, AgentId to) const {
  const auto it = d.find({from, to});
  return it == d.end() ? Point::Zero(dimension) : it->second;
}

LbPerturbation DrawLbPerturbation(const Topology& topology, const FusionMatrix& fusion, int round,
                                  double delta, int dimension, std::uint64_t seed) {
  CheckDelta(delta);
  LbPerturbation out{round, dimension, {}};
  for (int j = 0; j < topology.size(); ++j) {
    const auto& nbrs = topology.Neighbors(j);
    if (nbrs.empty()) {
      if (topology.size() > 1) throw InvalidArgument("agent without neighbors");
      continue;
    }
    Stream rng(seed, StreamPurpose::kLbPerturbation, j, round);
    std::vector<Point> r;
    Point centre = Point::Zero(dimension);
    double weight = 0.0;
    for (AgentId i : nbrs) {
      Point raw(dimension);
      for (int k = 0; k < dimension; ++k) raw[k] = rng.Uniform(-1.0, 1.0);
      centre += fusion(i, j) * raw;
      weight += fusion(i, j);
      r.push_back(std::move(raw));
    }
    centre /= weight;
    double biggest = 0.0;
    for (auto& v : r) {
      v -= centre;
      biggest = std::max(biggest, v.norm());
    }
    const double factor = biggest > 0.0 ? std::min(1.0, delta / biggest) : 1.0;
    for (size_t t = 0; t < nbrs.size(); ++t) out.d.emplace(DirectedEdge{j, nbrs[t]}, r[t] * factor);
  }
  return out;
}

double LbLocalBalanceError(const LbPerturbation& pert, const Topology& topology,
                           const FusionMatrix& fusion) {
  double worst = 0.0;
  for (int j = 0; j < topology.size(); ++j) {
    Point acc = Point::Zero(pert.dimension);
    for (AgentId i : topology.Neighbors(j)) acc += fusion(i, j) * pert.At(j, i);
    worst = std::max(worst, acc.norm());
  }
  return worst;
}

NoiseFunctions DrawNoiseFunctions(const Topology& topology, double delta_coeff, int d_max,
                                  int dimension, std::uint64_t seed) {
  CheckDelta(delta_coeff);
  if (d_max < 0) throw InvalidArgument("d_max must be >= 0");
  NoiseFunctions out;
  for (int j = 0; j < topology.size(); ++j) {
    Stream rng(seed, StreamPurpose::kNoiseFunctions, j, 0);
    for (AgentId i : topology.Neighbors(j)) {
      SeparablePolynomial s = SeparablePolynomial::Zero(dimension, d_max + 1);
      for (auto& part : s.parts()) {
        for (int p = 0; p <= d_max; ++p) {
          const double u = rng.Uniform(-delta_coeff, delta_coeff);
          part.set_coefficient(p, delta_coeff > 0.0 ? u : 0.0);
        }
      }
      out.emplace(DirectedEdge{j, i}, std::move(s));
    }
  }
  return out;
}

std::vector<SeparablePolynomial> NoiseSums(const NoiseFunctions& noise, const Topology& topology,
                                           int dimension, int d_max) {
  std::vector<SeparablePolynomial> p(topology.size(), SeparablePolynomial::Zero(dimension, d_max + 1));
  for (int j = 0; j < topology.size(); ++j) {
    for (AgentId i : topology.Neighbors(j)) {
      const auto in = noise.find({i, j});
      const auto out = noise.find({j, i});
      if (in == noise.end() || out == noise.end()) {
        throw InvalidArgument("missing noise function between agents " + std::to_string(i) + " and " +
                              std::to_string(j));
      }
      p[j] += in->second;
      p[j] -= out->second;
    }
  }
  return p;
}

std::vector<Objective> Obfuscate(const std::vector<Objective>& objectives,
                                 const NoiseFunctions& noise, const Topology& topology, int d_max) {
  if (static_cast<int>(objectives.size()) != topology.size()) {
    throw InvalidArgument("one objective per agent required");
  }
  const int dim = objectives.front().dimension();
  const auto sums = NoiseSums(noise, topology, dim, d_max);
  std::vector<Objective> out;
  out.reserve(objectives.size());
  for (int j = 0; j < topology.size(); ++j) {
    const SeparablePolynomial* f = objectives[j].polynomial();
    if (f == nullptr) throw InvalidArgument("function sharing requires polynomial objectives");
    if (f->Degree() > d_max) throw InvalidArgument("objective degree exceeds d_max");
    out.push_back(Objective::FromPolynomial(f->Resized(d_max + 1) + sums[j]));
  }
  return out;
}

double NoiseGradientBound(const std::vector<SeparablePolynomial>& sums, const FeasibleSet& set) {
  double worst = 0.0;
  for (const auto& p : sums) {
    worst = std::max(worst, EstimateConstants(Objective::FromPolynomial(p), set).L);
  }
  return worst;
}

}  // namespace rss
