#include "rss/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace rss {

namespace {

constexpr int kMaxListedViolations = 20;

void NoteViolation(CheckReport& r, int k) {
  r.pass = false;
  ++r.violation_count;
  if (static_cast<int>(r.violations.size()) < kMaxListedViolations) r.violations.push_back(k);
}

Point Mean(const std::vector<Point>& xs) {
  Point m = Point::Zero(xs.front().size());
  for (const auto& x : xs) m += x;
  return m / static_cast<double>(xs.size());
}

double MaxDeviation(const std::vector<Point>& xs, const Point& centre) {
  double worst = 0.0;
  for (const auto& x : xs) worst = std::max(worst, (x - centre).norm());
  return worst;
}

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

BoundParams ComputeBoundParams(const Topology& topology, const FusionMatrix& fusion,
                               const GlobalProblem& problem, double delta, double alpha1) {
  BoundParams b;
  b.n = topology.size();
  b.rho = fusion.rho();
  b.beta = 1.0 - b.rho / (4.0 * b.n * b.n);
  b.theta = 1.0 / (b.beta * b.beta);
  b.delta = delta;
  const FeasibleSet grown = problem.feasible().Inflate(alpha1 * delta);
  for (const auto& obj : problem.objectives()) {
    const Constants c = EstimateConstants(obj, grown);
    b.L = std::max(b.L, c.L);
    b.N = std::max(b.N, c.N);
  }
  return b;
}

GlobalProblem EffectiveProblem(const ExecutionTrace& trace, const GlobalProblem& problem) {
  if (!trace.fs) return problem;
  std::vector<Objective> objs;
  for (const auto& p : trace.fs->obfuscated) objs.push_back(Objective::FromPolynomial(p));
  return GlobalProblem(std::move(objs), problem.feasible());
}

BoundParams BoundParamsForTrace(const ExecutionTrace& trace, const Scenario& scenario) {
  const bool perturbed = trace.algorithm == Algorithm::kRssNb || trace.algorithm == Algorithm::kRssLb;
  const double delta = perturbed ? trace.delta : 0.0;
  return ComputeBoundParams(scenario.topology, scenario.fusion, EffectiveProblem(trace, scenario.problem), delta,
                            trace.alphas.empty() ? 1.0 : trace.alphas.front());
}

std::vector<RoundMetrics> ComputeMetrics(const ExecutionTrace& trace, const GlobalProblem& problem,
                                         const Point& y, double f_star, const BoundParams& b) {
  std::vector<RoundMetrics> rows;
  const int rounds = trace.num_rounds();
  rows.reserve(rounds + 1);
  for (int k = 1; k <= rounds + 1; ++k) {
    const auto xs = trace.StatesAt(k);
    RoundMetrics m;
    m.k = k;
    m.x_bar = Mean(xs);
    m.max_disagreement = MaxDeviation(xs, m.x_bar);
    m.suboptimality = problem.Value(m.x_bar) - f_star;
    for (const auto& x : xs) m.eta2 += (x - y).squaredNorm();
    const double a = k <= rounds ? trace.Alpha(k) : trace.schedule.Alpha(k);
    m.F = a * b.N * (m.max_disagreement + a * b.delta);
    m.H = 2.0 * a * b.n * (b.L + b.N / 2.0 + b.delta) * m.max_disagreement +
          a * a * b.n * (b.N * b.delta + (b.L + b.delta) * (b.L + b.delta));
    rows.push_back(std::move(m));
  }
  return rows;
}

CheckReport CheckDisagreementBound(const ExecutionTrace& trace, const BoundParams& b) {
  CheckReport r;
  r.name = "disagreement_bound";
  r.worst_margin = std::numeric_limits<double>::infinity();
  double x1_max = 0.0;
  for (const auto& x : trace.StatesAt(1)) x1_max = std::max(x1_max, x.norm());
  double s = 0.0;  // sum_{l=2}^k beta^{k+1-l} alpha_{l-1}
  double beta_k = 1.0;
  for (int k = 1; k <= trace.num_rounds(); ++k) {
    beta_k *= b.beta;
    if (k >= 2) s = b.beta * s + b.beta * trace.Alpha(k - 1);
    const auto xs = trace.StatesAt(k + 1);
    const double lhs = MaxDeviation(xs, Mean(xs));
    const double rhs = b.n * b.theta * beta_k * x1_max + 2.0 * trace.Alpha(k) * (b.L + b.delta) +
                       b.n * b.theta * (b.L + b.delta) * s;
    r.worst_margin = std::min(r.worst_margin, rhs - lhs);
    if (lhs > rhs) NoteViolation(r, k);
  }
  if (trace.num_rounds() == 0) r.worst_margin = 0.0;
  r.message = r.pass ? "disagreement within bound at every round"
                     : std::to_string(r.violation_count) + " rounds exceed the disagreement bound";
  return r;
}

CheckReport CheckRecursionBound(const ExecutionTrace& trace, const GlobalProblem& problem, const Point& y,
                        const BoundParams& b, double slack) {
  CheckReport r;
  r.name = "recursion_bound";
  r.worst_margin = std::numeric_limits<double>::infinity();
  const double fy = problem.Value(y);
  // Histogram of margins by decade: [<0], [0,1e-9), [1e-9,1e-6), ... , [1e3, inf).
  std::vector<int> hist(8, 0);
  auto eta2 = [&](int k) {
    double acc = 0.0;
    for (const auto& x : trace.StatesAt(k)) acc += (x - y).squaredNorm();
    return acc;
  };
  double eta_k = eta2(1);
  for (int k = 1; k <= trace.num_rounds(); ++k) {
    const auto xs = trace.StatesAt(k);
    const Point x_bar = Mean(xs);
    const double dis = MaxDeviation(xs, x_bar);
    const double a = trace.Alpha(k);
    const double F = a * b.N * (dis + a * b.delta);
    const double H = 2.0 * a * b.n * (b.L + b.N / 2.0 + b.delta) * dis +
                     a * a * b.n * (b.N * b.delta + (b.L + b.delta) * (b.L + b.delta));
    const double eta_next = eta2(k + 1);
    const double rhs = (1.0 + F) * eta_k - 2.0 * a * (problem.Value(x_bar) - fy) + H;
    const double margin = rhs - eta_next;
    r.worst_margin = std::min(r.worst_margin, margin);
    if (margin < -slack) NoteViolation(r, k);
    int bin = 0;
    if (margin >= 0.0) {
      bin = 1;
      for (double edge : {1e-9, 1e-6, 1e-3, 1.0, 1e3}) {
        if (margin >= edge) ++bin;
      }
      bin = std::min(bin, 7);
    }
    ++hist[bin];
    eta_k = eta_next;
  }
  if (trace.num_rounds() == 0) r.worst_margin = 0.0;
  r.detail["margin_histogram"] = {{"negative", hist[0]},     {"[0,1e-9)", hist[1]}, {"[1e-9,1e-6)", hist[2]},
                                  {"[1e-6,1e-3)", hist[3]},  {"[1e-3,1)", hist[4]}, {"[1,1e3)", hist[5]},
                                  {"[1e3,inf)", hist[6] + hist[7]}};
  r.message = r.pass ? "distance recursion holds at every round"
                     : std::to_string(r.violation_count) + " rounds violate the distance recursion";
  return r;
}

CheckReport CheckConsensus(const ExecutionTrace& trace, double tail_fraction, double threshold) {
  CheckReport r;
  r.name = "consensus";
  if (!(tail_fraction > 0.0 && tail_fraction <= 0.5)) throw InvalidArgument("tail fraction must be in (0, 0.5]");
  const int total = trace.num_rounds() + 1;
  const int width = std::max(1, static_cast<int>(std::floor(total * tail_fraction)));
  double head = 0.0;
  double tail = 0.0;
  for (int k = 1; k <= width; ++k) {
    const auto xs = trace.StatesAt(k);
    head = std::max(head, MaxDeviation(xs, Mean(xs)));
  }
  for (int k = total - width + 1; k <= total; ++k) {
    const auto xs = trace.StatesAt(k);
    tail = std::max(tail, MaxDeviation(xs, Mean(xs)));
  }
  r.detail = {{"head_max_disagreement", head}, {"tail_max_disagreement", tail}, {"threshold", threshold},
              {"schedule_convergent", trace.schedule.Convergent()}};
  r.worst_margin = threshold - tail;
  const bool shrinking = tail < head || (head == 0.0 && tail == 0.0);
  r.pass = tail < threshold && shrinking;
  if (r.pass) {
    r.message = "tail disagreement " + Num(tail) + " below threshold";
  } else if (!trace.schedule.Convergent()) {
    r.message = "schedule is non-convergent; consensus not expected (tail " + Num(tail) + ")";
  } else {
    r.message = "tail disagreement " + Num(tail) + " vs head " + Num(head) + " and threshold " + Num(threshold);
  }
  return r;
}

CheckReport CheckInvariants(const ExecutionTrace& trace, const FeasibleSet& box, double tol) {
  CheckReport r;
  r.name = "invariants";
  for (int k = 1; k <= trace.num_rounds() + 1; ++k) {
    for (const auto& x : trace.StatesAt(k)) {
      if (!box.Contains(x)) {
        NoteViolation(r, k);
        break;
      }
    }
  }
  const InvariantLog& log = trace.invariants;
  std::vector<std::string> failed;
  if (r.violation_count > 0 || !log.states_in_box) failed.push_back("states outside the feasible set");
  if (log.max_perturbation_sum > tol) failed.push_back("perturbations do not sum to zero");
  if (log.max_fused_sum > tol) failed.push_back("fused perturbations do not sum to zero");
  if (log.max_local_balance > tol) failed.push_back("local balance violated");
  if (log.max_average_drift > tol) failed.push_back("fusion moved the average");
  if (log.max_perspective_gap > tol) failed.push_back("update differs from its noisy-gradient form");
  if (log.max_stochasticity_error > tol) failed.push_back("fusion matrix not doubly stochastic");
  if (log.rounds_audited != trace.num_rounds()) failed.push_back("audit did not cover every round");
  r.pass = failed.empty();
  r.detail = {{"max_perturbation_sum", log.max_perturbation_sum},
              {"max_fused_sum", log.max_fused_sum},
              {"max_local_balance", log.max_local_balance},
              {"max_average_drift", log.max_average_drift},
              {"max_perspective_gap", log.max_perspective_gap},
              {"max_stochasticity_error", log.max_stochasticity_error},
              {"rounds_audited", log.rounds_audited}};
  r.worst_margin = tol - std::max({log.max_perturbation_sum, log.max_fused_sum, log.max_local_balance,
                                   log.max_average_drift, log.max_perspective_gap, log.max_stochasticity_error});
  std::string msg;
  for (const auto& f : failed) msg += (msg.empty() ? "" : "; ") + f;
  r.message = r.pass ? "all per-round invariants hold" : msg;
  return r;
}

std::vector<Point> WeightedAverages(const ExecutionTrace& trace, int horizon) {
  if (horizon < 1 || horizon > trace.num_rounds()) throw InvalidArgument("horizon outside the trace");
  double total = 0.0;
  std::vector<Point> acc(trace.num_agents, Point::Zero(trace.dimension));
  for (int k = 1; k <= horizon; ++k) {
    const double a = trace.Alpha(k);
    total += a;
    for (int j = 0; j < trace.num_agents; ++j) acc[j] += a * trace.State(k, j);
  }
  for (auto& p : acc) p /= total;
  return acc;
}

GapEnvelopeSeries AnalyzeGapEnvelope(const ExecutionTrace& trace, const GlobalProblem& problem, double f_star) {
  if (trace.schedule.kind() != StepSchedule::Kind::kInvSqrt) {
    throw InvalidArgument("finite-time envelope needs the 1/sqrt(k) schedule, trace used " + trace.schedule.Name());
  }
  GapEnvelopeSeries s;
  s.delta = trace.algorithm == Algorithm::kFs ? trace.delta_coeff : trace.delta;
  // Running sums so every horizon costs O(1) extra.
  double total = 0.0;
  std::vector<Point> acc(trace.num_agents, Point::Zero(trace.dimension));
  size_t next = 0;
  for (int k = 1; k <= trace.num_rounds() && next < kGapEnvelopeHorizons.size(); ++k) {
    const double a = trace.Alpha(k);
    total += a;
    for (int j = 0; j < trace.num_agents; ++j) acc[j] += a * trace.State(k, j);
    if (k != kGapEnvelopeHorizons[next]) continue;
    double gap = -std::numeric_limits<double>::infinity();
    for (const auto& p : acc) gap = std::max(gap, problem.Value(p / total) - f_star);
    s.horizons.push_back(k);
    s.gaps.push_back(gap);
    s.ratios.push_back(gap * std::sqrt(static_cast<double>(k)) / std::log(static_cast<double>(k)));
    ++next;
  }
  double num = 0.0;
  double den = 0.0;
  double early = 0.0;
  double late = 0.0;
  bool have_late = false;
  for (size_t t = 0; t < s.horizons.size(); ++t) {
    const int T = s.horizons[t];
    if (T < 100) continue;
    const double g = std::log(static_cast<double>(T)) / std::sqrt(static_cast<double>(T));
    s.envelope_c = std::max(s.envelope_c, s.ratios[t]);
    num += s.gaps[t] * g;
    den += g * g;
    if (T <= 500) {
      early = std::max(early, s.ratios[t]);
    } else if (T >= 1000) {
      late = std::max(late, s.ratios[t]);
      have_late = true;
    }
  }
  s.least_squares_c = den > 0.0 ? num / den : 0.0;
  s.trend_ok = !have_late || late <= early;
  return s;
}

CheckReport CheckGapEnvelope(const std::vector<const ExecutionTrace*>& traces, const GlobalProblem& problem,
                          double f_star) {
  CheckReport r;
  r.name = "gap_envelope";
  std::vector<GapEnvelopeSeries> series;
  std::vector<std::uint64_t> seeds;
  for (const auto* t : traces) {
    series.push_back(AnalyzeGapEnvelope(*t, problem, f_star));
    seeds.push_back(t->seed);
  }
  // c(delta) must cover every run sharing that delta.
  std::map<double, double> pooled;
  std::map<std::uint64_t, std::map<double, double>> by_seed;
  Json list = Json::array();
  for (size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    for (size_t t = 0; t < ser.horizons.size(); ++t) {
      if (ser.horizons[t] < 100) continue;
      const double g = std::log(static_cast<double>(ser.horizons[t])) / std::sqrt(static_cast<double>(ser.horizons[t]));
      if (ser.gaps[t] > ser.envelope_c * g * (1.0 + 1e-12)) NoteViolation(r, ser.horizons[t]);
    }
    if (!ser.trend_ok) {
      r.pass = false;
      r.message += "ratio trend increases for delta=" + Num(ser.delta) + " seed=" + std::to_string(seeds[s]) + "; ";
    }
    double& c = pooled[ser.delta];
    c = std::max(c, ser.envelope_c);
    by_seed[seeds[s]][ser.delta] = ser.envelope_c;
    list.push_back({{"delta", ser.delta},
                    {"seed", seeds[s]},
                    {"horizons", ser.horizons},
                    {"gaps", ser.gaps},
                    {"ratios", ser.ratios},
                    {"envelope_c", ser.envelope_c},
                    {"least_squares_c", ser.least_squares_c},
                    {"trend_ok", ser.trend_ok}});
  }
  Json pooled_json = Json::array();
  const std::pair<const double, double>* prev = nullptr;
  for (const auto& entry : pooled) {
    if (prev && entry.second < prev->second * (1.0 - 1e-12)) {
      r.pass = false;
      r.message += "envelope constant decreases from delta=" + Num(prev->first) + " to " + Num(entry.first) + "; ";
    }
    pooled_json.push_back({{"delta", entry.first}, {"envelope_c", entry.second}});
    prev = &entry;
  }
  Json per_seed = Json::array();
  for (const auto& [seed, cs] : by_seed) {
    bool monotone = true;
    double last = -1.0;
    for (const auto& [d, c] : cs) {
      if (c < last * (1.0 - 1e-12)) monotone = false;
      last = c;
    }
    per_seed.push_back({{"seed", seed}, {"monotone", monotone}});
  }
  r.detail["series"] = std::move(list);
  r.detail["pooled"] = std::move(pooled_json);
  r.detail["per_seed_ordering"] = std::move(per_seed);
  if (r.pass) r.message = "envelope and delta ordering hold";
  return r;
}

CheckReport CheckTransitionMatrix(const FusionMatrix& fusion, int horizon) {
  CheckReport r;
  r.name = "transition_matrix";
  const int n = fusion.size();
  const double beta = 1.0 - fusion.rho() / (4.0 * n * n);
  const double theta = 1.0 / (beta * beta);
  const Eigen::MatrixXd uniform = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  Eigen::MatrixXd phi = fusion.dense();
  double previous = std::numeric_limits<double>::infinity();
  double beta_k = 1.0;
  r.worst_margin = std::numeric_limits<double>::infinity();
  double final_dev = 0.0;
  for (int k = 1; k <= horizon; ++k) {
    if (k > 1) phi = fusion.dense() * phi;
    beta_k *= beta;
    const double dev = (phi - uniform).cwiseAbs().maxCoeff();
    const double bound = theta * beta_k;
    r.worst_margin = std::min(r.worst_margin, bound - dev);
    if (dev > bound || dev > previous + 4.0 * std::numeric_limits<double>::epsilon()) NoteViolation(r, k);
    previous = dev;
    final_dev = dev;
  }
  r.detail = {{"theta", theta}, {"beta", beta}, {"horizon", horizon}, {"final_deviation", final_dev}};
  r.message = r.pass ? "deviation within theta*beta^k and non-increasing"
                     : std::to_string(r.violation_count) + " rounds break the envelope or monotonicity";
  return r;
}

void WriteMetricsHeader(std::ostream& out, const std::string& timestamp, const Json& config) {
  out << "# rss metrics artifact_version=" << kArtifactVersion << " generated_at=" << timestamp << "\n";
  out << "# config=" << config.dump() << "\n";
  out << "k,algorithm,delta,seed,suboptimality,max_disagreement,eta2,F_k,H_k\n";
}

void WriteMetricsRows(std::ostream& out, const std::vector<RoundMetrics>& rows, Algorithm algorithm, double delta,
                      std::uint64_t seed) {
  const std::string alg = AlgorithmName(algorithm);
  const std::string d = Num(delta);
  for (const auto& m : rows) {
    out << m.k << ',' << alg << ',' << d << ',' << seed << ',' << Num(m.suboptimality) << ','
        << Num(m.max_disagreement) << ',' << Num(m.eta2) << ',' << Num(m.F) << ',' << Num(m.H) << '\n';
  }
}

void WriteFigureCsv(std::ostream& out, const std::vector<RoundMetrics>& rows, const std::string& timestamp,
                    const Json& config) {
  out << "# rss figure artifact_version=" << kArtifactVersion << " generated_at=" << timestamp << "\n";
  out << "# config=" << config.dump() << "\n";
  out << "k,suboptimality\n";
  for (const auto& m : rows) out << m.k << ',' << Num(m.suboptimality) << '\n';
}

Json ReportToJson(const CheckReport& r) {
  return Json{{"name", r.name},
              {"pass", r.pass},
              {"message", r.message},
              {"violation_count", r.violation_count},
              {"violations", r.violations},
              {"worst_margin", std::isfinite(r.worst_margin) ? Json(r.worst_margin) : Json(nullptr)},
              {"detail", r.detail}};
}

Json BoundParamsToJson(const BoundParams& b) {
  return Json{{"n", b.n}, {"rho", b.rho}, {"beta", b.beta}, {"theta", b.theta},
              {"L", b.L}, {"N", b.N},     {"delta", b.delta}};
}

}  // namespace rss
