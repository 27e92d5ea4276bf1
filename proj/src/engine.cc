#include "rss/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace rss {

std::string AlgorithmName(Algorithm a) {
  switch (a) {
    case Algorithm::kDgd:
      return "dgd";
    case Algorithm::kRssNb:
      return "rss-nb";
    case Algorithm::kRssLb:
      return "rss-lb";
    case Algorithm::kFs:
      return "fs";
  }
  return "?";
}

Algorithm ParseAlgorithm(const std::string& name) {
  std::string s;
  for (char c : name) s.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(c)));
  if (s == "dgd") return Algorithm::kDgd;
  if (s == "rss-nb" || s == "nb") return Algorithm::kRssNb;
  if (s == "rss-lb" || s == "lb") return Algorithm::kRssLb;
  if (s == "fs") return Algorithm::kFs;
  throw InvalidArgument("unknown algorithm '" + name + "'");
}

StepSchedule StepSchedule::InvK(double a, double b) {
  if (!(a > 0.0) || !(1.0 + b > 0.0)) throw InvalidArgument("inv_k schedule needs a > 0 and b > -1");
  return StepSchedule(Kind::kInvK, a, b);
}

StepSchedule StepSchedule::Constant(double a) {
  if (!(a > 0.0)) throw InvalidArgument("constant step must be positive");
  return StepSchedule(Kind::kConstant, a, 0.0);
}

double StepSchedule::Alpha(int k) const {
  if (k < 1) throw InvalidArgument("step index starts at 1");
  switch (kind_) {
    case Kind::kInvSqrt:
      return 1.0 / std::sqrt(static_cast<double>(k));
    case Kind::kInvK:
      return a_ / (k + b_);
    case Kind::kConstant:
      return a_;
  }
  return 0.0;
}

std::string StepSchedule::Name() const {
  switch (kind_) {
    case Kind::kInvSqrt:
      return "inv_sqrt";
    case Kind::kInvK:
      return "inv_k";
    case Kind::kConstant:
      return "constant";
  }
  return "?";
}

std::vector<Point> EvenlySpaced(const FeasibleSet& box, int n) {
  std::vector<Point> out;
  out.reserve(n);
  for (int j = 0; j < n; ++j) {
    const double t = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
    out.push_back(box.lower() + t * (box.upper() - box.lower()));
  }
  return out;
}

Point ExecutionTrace::State(int k, AgentId j) const {
  const size_t base = (static_cast<size_t>(k - 1) * num_agents + j) * dimension;
  if (k < 1 || j < 0 || j >= num_agents || base + dimension > states.size()) {
    throw InvalidArgument("state index out of range");
  }
  return Eigen::Map<const Point>(states.data() + base, dimension);
}

std::vector<Point> ExecutionTrace::StatesAt(int k) const {
  std::vector<Point> out;
  out.reserve(num_agents);
  for (int j = 0; j < num_agents; ++j) out.push_back(State(k, j));
  return out;
}

void ExecutionTrace::SetState(int k, AgentId j, const Point& x) {
  const size_t base = (static_cast<size_t>(k - 1) * num_agents + j) * dimension;
  if (base + dimension > states.size()) states.resize(base + dimension, 0.0);
  for (int d = 0; d < dimension; ++d) states[base + d] = x[d];
}

std::uint64_t ExecutionTrace::StateDigest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    v += 0.0;
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  };
  for (double v : states) mix(v);
  for (double a : alphas) mix(a);
  return h;
}

std::string DigestHex(std::uint64_t digest) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << digest;
  return os.str();
}

namespace {

Point Fuse(const Topology& topo, const FusionMatrix& b, AgentId j, const std::function<Point(AgentId)>& msg) {
  Point acc;
  bool first = true;
  for (AgentId i : topo.Neighborhood(j)) {
    const Point term = b(j, i) * msg(i);
    if (first) {
      acc = term;
      first = false;
    } else {
      acc += term;
    }
  }
  return acc;
}

void ValidateInit(const std::vector<Point>& init, const GlobalProblem& problem) {
  if (static_cast<int>(init.size()) != problem.num_agents()) {
    throw InvalidArgument("init must give one point per agent");
  }
  for (const Point& x : init) {
    if (x.size() != problem.dimension()) throw InvalidArgument("init point has wrong dimension");
    if (!problem.feasible().Contains(x)) throw InvalidArgument("init point outside the feasible set");
  }
}

}  // namespace

ExecutionTrace Run(const GlobalProblem& input_problem, const Topology& topology,
                   const FusionProvider& fusion, const RunOptions& options) {
  const int n = topology.size();
  const int dim = input_problem.dimension();
  if (input_problem.num_agents() != n) throw InvalidArgument("problem and topology disagree on n");
  if (options.max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  if (options.record_every < 0) throw InvalidArgument("record_every must be >= 0");
  if (!(options.delta >= 0.0) || !(options.delta_coeff >= 0.0)) throw InvalidArgument("noise bounds must be >= 0");

  ExecutionTrace trace;
  trace.algorithm = options.algorithm;
  trace.schedule = options.schedule;
  trace.delta = options.delta;
  trace.delta_coeff = options.delta_coeff;
  trace.d_max = options.d_max;
  trace.seed = options.seed;
  trace.max_iter = options.max_iter;
  trace.record_every = options.record_every;
  trace.num_agents = n;
  trace.dimension = dim;
  trace.states.assign(static_cast<size_t>(options.max_iter + 1) * n * dim, 0.0);
  trace.alphas.reserve(options.max_iter);

  std::optional<GlobalProblem> obfuscated;
  if (options.algorithm == Algorithm::kFs) {
    if (!input_problem.AllPolynomial()) throw InvalidArgument("function sharing requires polynomial objectives");
    FsRecord rec;
    rec.noise = DrawNoiseFunctions(topology, options.delta_coeff, options.d_max, dim, options.seed);
    auto objs = Obfuscate(input_problem.objectives(), rec.noise, topology, options.d_max);
    for (const auto& o : objs) rec.obfuscated.push_back(*o.polynomial());
    rec.noise_gradient_bound =
        NoiseGradientBound(NoiseSums(rec.noise, topology, dim, options.d_max), input_problem.feasible());
    trace.fs = std::move(rec);
    obfuscated.emplace(std::move(objs), input_problem.feasible());
  }
  const GlobalProblem& problem = obfuscated ? *obfuscated : input_problem;
  const FeasibleSet& box = problem.feasible();

  std::vector<Point> x = options.init ? *options.init : EvenlySpaced(box, n);
  ValidateInit(x, problem);
  for (int j = 0; j < n; ++j) trace.SetState(1, j, x[j]);

  const bool nb = options.algorithm == Algorithm::kRssNb;
  const bool lb = options.algorithm == Algorithm::kRssLb;
  InvariantLog& log = trace.invariants;
  const FusionMatrix* checked = nullptr;

  for (int k = 1; k <= options.max_iter; ++k) {
    const double alpha = options.schedule.Alpha(k);
    trace.alphas.push_back(alpha);
    const FusionMatrix& b = fusion(k);
    if (b.size() != n) throw InvalidArgument("fusion matrix size differs from n");
    if (&b != checked) {
      log.max_stochasticity_error = std::max(log.max_stochasticity_error, b.StochasticityError());
      checked = &b;
    }

    std::vector<Point> d;
    ShareTable shares;
    LbPerturbation lbp;
    std::vector<Point> w(n);
    if (nb) {
      shares = DrawNbShares(topology, k, options.delta, dim, options.seed);
      d = NbPerturbation(shares, topology);
      for (int j = 0; j < n; ++j) w[j] = x[j] + alpha * d[j];
    } else if (lb) {
      lbp = DrawLbPerturbation(topology, b, k, options.delta, dim, options.seed);
      for (int j = 0; j < n; ++j) w[j] = x[j];
    } else {
      for (int j = 0; j < n; ++j) w[j] = x[j];
    }

    std::vector<Point> v(n);
    for (int j = 0; j < n; ++j) {
      if (lb) {
        v[j] = Fuse(topology, b, j, [&](AgentId i) -> Point {
          return i == j ? x[i] : Point(x[i] + alpha * lbp.At(i, j));
        });
      } else {
        v[j] = Fuse(topology, b, j, [&](AgentId i) -> Point { return w[i]; });
      }
    }

    std::vector<Point> next(n);
    for (int j = 0; j < n; ++j) {
      next[j] = box.Project(v[j] - alpha * problem.objective(j).Gradient(v[j]));
    }

    // Audit: true-state fusion, fused perturbation, and the noisy-gradient
    // form of the update.
    Point x_bar = Point::Zero(dim);
    Point v_hat_mean = Point::Zero(dim);
    Point d_sum = Point::Zero(dim);
    Point e_sum = Point::Zero(dim);
    for (int j = 0; j < n; ++j) x_bar += x[j];
    x_bar /= n;
    for (int j = 0; j < n; ++j) {
      const Point v_hat = Fuse(topology, b, j, [&](AgentId i) { return x[i]; });
      Point e = Point::Zero(dim);
      if (nb) {
        e = Fuse(topology, b, j, [&](AgentId i) { return d[i]; });
        d_sum += d[j];
        log.max_perturbation_norm = std::max(log.max_perturbation_norm, d[j].norm());
      } else if (lb) {
        e = Fuse(topology, b, j, [&](AgentId i) { return lbp.At(i, j); });
        for (AgentId i : topology.Neighbors(j)) {
          log.max_perturbation_norm = std::max(log.max_perturbation_norm, lbp.At(j, i).norm());
        }
      }
      e_sum += e;
      log.max_fused_norm = std::max(log.max_fused_norm, e.norm());
      v_hat_mean += v_hat;
      const Point alt = box.Project(v_hat - alpha * (problem.objective(j).Gradient(v[j]) - e));
      log.max_perspective_gap = std::max(log.max_perspective_gap, (alt - next[j]).norm());
      if (!box.Contains(next[j])) log.states_in_box = false;
    }
    v_hat_mean /= n;
    log.max_perturbation_sum = std::max(log.max_perturbation_sum, d_sum.norm());
    log.max_fused_sum = std::max(log.max_fused_sum, e_sum.norm());
    log.max_average_drift = std::max(log.max_average_drift, (v_hat_mean - x_bar).norm());
    if (lb) log.max_local_balance = std::max(log.max_local_balance, LbLocalBalanceError(lbp, topology, b));
    ++log.rounds_audited;

    if (options.record_every > 0 && (k == 1 || k % options.record_every == 0)) {
      RoundDetail det;
      det.round = k;
      det.v = v;
      if (lb) {
        det.lb_d = lbp.d;
        for (const auto& [edge, dv] : lbp.d) det.w_links.emplace(edge, x[edge.from] + alpha * dv);
      } else {
        det.w = w;
      }
      if (nb) {
        det.d = d;
        det.shares = shares.shares;
      }
      trace.details.push_back(std::move(det));
    }

    x = std::move(next);
    for (int j = 0; j < n; ++j) trace.SetState(k + 1, j, x[j]);
  }
  return trace;
}

ExecutionTrace Run(const GlobalProblem& problem, const Topology& topology, const FusionMatrix& fusion,
                   const RunOptions& options) {
  return Run(problem, topology, [&fusion](int) -> const FusionMatrix& { return fusion; }, options);
}

ExecutionTrace RunDgd(const GlobalProblem& problem, const Topology& topology, const FusionMatrix& fusion,
                      RunOptions options) {
  options.algorithm = Algorithm::kDgd;
  return Run(problem, topology, fusion, options);
}

ExecutionTrace RunRssNb(const GlobalProblem& problem, const Topology& topology, const FusionMatrix& fusion,
                        RunOptions options) {
  options.algorithm = Algorithm::kRssNb;
  return Run(problem, topology, fusion, options);
}

ExecutionTrace RunRssLb(const GlobalProblem& problem, const Topology& topology, const FusionMatrix& fusion,
                        RunOptions options) {
  options.algorithm = Algorithm::kRssLb;
  return Run(problem, topology, fusion, options);
}

ExecutionTrace RunFs(const GlobalProblem& problem, const Topology& topology, const FusionMatrix& fusion,
                     RunOptions options) {
  options.algorithm = Algorithm::kFs;
  return Run(problem, topology, fusion, options);
}

}  // namespace rss
