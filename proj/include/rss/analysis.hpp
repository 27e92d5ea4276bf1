#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rss/config.hpp"
#include "rss/engine.hpp"
#include "rss/graph.hpp"
#include "rss/objective.hpp"

namespace rss {

struct BoundParams {
  int n = 1;
  double rho = 1.0;
  double beta = 0.0;   // 1 - rho / (4 n^2)
  double theta = 1.0;  // beta^-2
  double L = 0.0;
  double N = 0.0;
  double delta = 0.0;
};

// rho from `fusion`; L and N are the largest per-agent constants over the
// feasible box grown by alpha_1 * delta, since gradients are taken at fused
// points that may sit outside the box.
BoundParams ComputeBoundParams(const Topology& topology, const FusionMatrix& fusion,
                               const GlobalProblem& problem, double delta, double alpha1 = 1.0);

// The problem the iterates actually descend on: the obfuscated objectives for
// FS traces, the original ones otherwise.
GlobalProblem EffectiveProblem(const ExecutionTrace& trace, const GlobalProblem& problem);

// Bound parameters for a trace: DGD and FS use delta = 0.
BoundParams BoundParamsForTrace(const ExecutionTrace& trace, const Scenario& scenario);

struct RoundMetrics {
  int k = 0;
  Point x_bar;
  double max_disagreement = 0.0;
  double suboptimality = 0.0;
  double eta2 = 0.0;
  double F = 0.0;
  double H = 0.0;
};

// Rounds 1 .. K+1 of the trace.
std::vector<RoundMetrics> ComputeMetrics(const ExecutionTrace& trace, const GlobalProblem& problem,
                                         const Point& y, double f_star, const BoundParams& bounds);

struct CheckReport {
  std::string name;
  bool pass = true;
  std::string message;
  int violation_count = 0;
  std::vector<int> violations;  // first few offending rounds
  double worst_margin = 0.0;    // smallest (bound - observed) seen
  Json detail = Json::object();
};

CheckReport CheckDisagreementBound(const ExecutionTrace& trace, const BoundParams& bounds);
CheckReport CheckRecursionBound(const ExecutionTrace& trace, const GlobalProblem& problem, const Point& y,
                        const BoundParams& bounds, double slack = 1e-9);
// Tail and head are the last and first `tail_fraction` of the rounds.
CheckReport CheckConsensus(const ExecutionTrace& trace, double tail_fraction = 0.1, double threshold = 1e-3);
// Recomputes the state-in-box property from the stored states and compares
// the online invariant log against `tol`.
CheckReport CheckInvariants(const ExecutionTrace& trace, const FeasibleSet& box, double tol = 1e-12);

// x_hat^j_T = sum_{k<=T} alpha_k x^j_k / sum_{k<=T} alpha_k.
std::vector<Point> WeightedAverages(const ExecutionTrace& trace, int horizon);

struct GapEnvelopeSeries {
  double delta = 0.0;
  std::vector<int> horizons;
  std::vector<double> gaps;    // max_j f(x_hat^j_T) - f*
  std::vector<double> ratios;  // gap * sqrt(T) / log(T)
  double envelope_c = 0.0;     // max ratio over T >= 100
  double least_squares_c = 0.0;
  bool trend_ok = true;        // late ratios do not exceed early-tail ratios
};

inline const std::vector<int> kGapEnvelopeHorizons{10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000};

// Throws InvalidArgument unless the trace used alpha_k = 1/sqrt(k).
GapEnvelopeSeries AnalyzeGapEnvelope(const ExecutionTrace& trace, const GlobalProblem& problem, double f_star);

// Per-trace envelope and trend. Traces sharing a delta are pooled: c(delta)
// is the largest envelope constant among them and must be non-decreasing in
// delta.
CheckReport CheckGapEnvelope(const std::vector<const ExecutionTrace*>& traces, const GlobalProblem& problem,
                          double f_star);

CheckReport CheckTransitionMatrix(const FusionMatrix& fusion, int horizon);

// Line 1: "# <title> ... generated_at=<timestamp>", line 2: "# config=<json>",
// then the column header and rows.
void WriteMetricsHeader(std::ostream& out, const std::string& timestamp, const Json& config);
void WriteMetricsRows(std::ostream& out, const std::vector<RoundMetrics>& rows, Algorithm algorithm,
                      double delta, std::uint64_t seed);
void WriteFigureCsv(std::ostream& out, const std::vector<RoundMetrics>& rows, const std::string& timestamp,
                    const Json& config);

Json ReportToJson(const CheckReport& r);
Json BoundParamsToJson(const BoundParams& b);

}  // namespace rss
