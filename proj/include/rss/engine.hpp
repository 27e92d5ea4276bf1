#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rss/graph.hpp"
#include "rss/noise.hpp"
#include "rss/objective.hpp"
#include "rss/types.hpp"

namespace rss {

enum class Algorithm { kDgd, kRssNb, kRssLb, kFs };

std::string AlgorithmName(Algorithm a);
// Accepts "dgd", "rss-nb", "rss-lb", "fs" (case-insensitive, '_' or '-').
Algorithm ParseAlgorithm(const std::string& name);

class StepSchedule {
 public:
  enum class Kind { kInvSqrt, kInvK, kConstant };

  static StepSchedule InvSqrt() { return StepSchedule(Kind::kInvSqrt, 1.0, 0.0); }
  // alpha_k = a / (k + b); requires a > 0 and k + b > 0 for k >= 1.
  static StepSchedule InvK(double a, double b);
  // Debug only: violates sum alpha_k^2 < infinity.
  static StepSchedule Constant(double a);

  double Alpha(int k) const;
  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  bool Convergent() const { return kind_ != Kind::kConstant; }
  std::string Name() const;

 private:
  StepSchedule(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

// B_k for round k. The built-in runs use a constant matrix.
using FusionProvider = std::function<const FusionMatrix&(int round)>;

struct RunOptions {
  Algorithm algorithm = Algorithm::kDgd;
  StepSchedule schedule = StepSchedule::InvSqrt();
  int max_iter = 10000;
  double delta = 0.0;        // RSS-NB / RSS-LB perturbation bound
  double delta_coeff = 0.0;  // FS noise coefficient bound
  int d_max = kDefaultMaxDegree;
  std::uint64_t seed = 0;
  // Keep per-link messages every `record_every` rounds; 0 keeps none.
  int record_every = 0;
  // Explicit x^j_1; defaults to EvenlySpaced over the feasible box.
  std::optional<std::vector<Point>> init;
};

// n points on the diagonal of `box`, from lower to upper (the centre if
// n == 1).
std::vector<Point> EvenlySpaced(const FeasibleSet& box, int n);

// Messages and perturbations of one round.
struct RoundDetail {
  int round = 0;
  std::vector<Point> d;       // RSS-NB: d^j
  DirectedField shares;       // RSS-NB: s^{j,i}
  DirectedField lb_d;         // RSS-LB: d^{j,i}
  std::vector<Point> w;       // RSS-NB / DGD / FS: broadcast w^j
  DirectedField w_links;      // RSS-LB: w^{j,i}
  std::vector<Point> v;       // fused v^j
};

// Worst values seen by the per-round audit over the whole run.
struct InvariantLog {
  int rounds_audited = 0;
  double max_perturbation_sum = 0.0;  // |sum_j d^j| (NB)
  double max_fused_sum = 0.0;         // |sum_j e^j|
  double max_local_balance = 0.0;     // max_j |sum_i B[i,j] d^{j,i}| (LB)
  double max_average_drift = 0.0;     // |(1/n) sum_j v_hat^j - x_bar|
  double max_perspective_gap = 0.0;   // |x_{k+1} - P[v_hat - a(grad f(v) - e)]|
  double max_perturbation_norm = 0.0; // max |d| (NB: d^j, LB: d^{j,i})
  double max_fused_norm = 0.0;        // max_j |e^j|
  double max_stochasticity_error = 0.0;
  bool states_in_box = true;
};

struct FsRecord {
  NoiseFunctions noise;
  std::vector<SeparablePolynomial> obfuscated;  // f_hat_j
  double noise_gradient_bound = 0.0;            // max_j sup |grad p_j|
};

class ExecutionTrace {
 public:
  Algorithm algorithm = Algorithm::kDgd;
  StepSchedule schedule = StepSchedule::InvSqrt();
  double delta = 0.0;
  double delta_coeff = 0.0;
  int d_max = kDefaultMaxDegree;
  std::uint64_t seed = 0;
  int max_iter = 0;
  int record_every = 0;
  int num_agents = 0;
  int dimension = 0;

  // alpha_1 .. alpha_K.
  std::vector<double> alphas;
  // x^j_k for k = 1 .. K+1, row-major (round, agent, coordinate).
  std::vector<double> states;
  std::vector<RoundDetail> details;
  InvariantLog invariants;
  std::optional<FsRecord> fs;

  int num_rounds() const { return static_cast<int>(alphas.size()); }
  // x^j_k, 1 <= k <= K+1.
  Point State(int k, AgentId j) const;
  std::vector<Point> StatesAt(int k) const;
  double Alpha(int k) const { return alphas.at(k - 1); }
  void SetState(int k, AgentId j, const Point& x);

  // FNV-1a 64 over states and step sizes; -0.0 hashes as +0.0.
  std::uint64_t StateDigest() const;
};

std::string DigestHex(std::uint64_t digest);

ExecutionTrace Run(const GlobalProblem& problem, const Topology& topology,
                   const FusionProvider& fusion, const RunOptions& options);
ExecutionTrace Run(const GlobalProblem& problem, const Topology& topology,
                   const FusionMatrix& fusion, const RunOptions& options);

ExecutionTrace RunDgd(const GlobalProblem& problem, const Topology& topology,
                      const FusionMatrix& fusion, RunOptions options);
ExecutionTrace RunRssNb(const GlobalProblem& problem, const Topology& topology,
                        const FusionMatrix& fusion, RunOptions options);
ExecutionTrace RunRssLb(const GlobalProblem& problem, const Topology& topology,
                        const FusionMatrix& fusion, RunOptions options);
ExecutionTrace RunFs(const GlobalProblem& problem, const Topology& topology,
                     const FusionMatrix& fusion, RunOptions options);

}  // namespace rss
