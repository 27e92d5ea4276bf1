#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rss/config.hpp"
#include "rss/engine.hpp"
#include "rss/graph.hpp"
#include "rss/noise.hpp"
#include "rss/polynomial.hpp"

namespace rss {

// Everything a coalition learns from a function-sharing run under the
// conservative observation model: every obfuscated objective, the
// coalition's own objectives, and every noise function on a link touching
// the coalition. The replay fields let a verifier re-run DGD on f_hat.
struct AdversaryView {
  Topology topology;
  FusionMatrix fusion;
  FeasibleSet box;
  int d_max = kDefaultMaxDegree;
  int dimension = 1;
  AgentSet coalition;  // ascending
  std::vector<SeparablePolynomial> observed;          // f_hat_j, all j
  std::map<AgentId, SeparablePolynomial> local;       // f_a, a in coalition
  NoiseFunctions incident;                            // s^{j,i}, j or i in coalition
  // Replay data for the DGD-on-f_hat digest comparison.
  StepSchedule schedule = StepSchedule::InvSqrt();
  int max_iter = 0;
  std::vector<Point> init;
  std::uint64_t trace_digest = 0;

  bool InCoalition(AgentId j) const;
  std::vector<AgentId> GoodAgents() const;
};

// Throws InvalidArgument for non-FS traces or out-of-range coalitions.
AdversaryView ExtractView(const ExecutionTrace& trace, const Scenario& scenario, AgentSet coalition);

// Keeps g_a = f_a on the coalition, uses `alternatives` on the targets, and
// sets g = f on the remaining good agents except the lowest-index one, which
// absorbs the residual so that the good agents' sum is unchanged. Throws
// InvalidArgument when targets cover every good agent.
std::vector<SeparablePolynomial> CompleteAlternativeObjectives(
    const std::vector<SeparablePolynomial>& objectives, const AgentSet& coalition,
    const std::map<AgentId, SeparablePolynomial>& alternatives, int d_max);

struct AlternativeInstance {
  std::vector<SeparablePolynomial> objectives;  // g_i
  NoiseFunctions noise;                         // t^{j,i}, every directed link
  SpanningSplit split;
  double root_residual = 0.0;  // max coefficient of the root's balance error
};

// How the free link functions (extra edges, and child-to-parent tree links)
// are chosen.
struct FreeChoice {
  enum class Mode { kSeeded, kCopy } mode = Mode::kSeeded;
  std::uint64_t seed = 0;
  double scale = 1.0;                 // kSeeded: coefficients uniform in [-scale, scale]
  const NoiseFunctions* copy_from = nullptr;  // kCopy
};

// Fixes coalition-incident links to the observed noise, chooses the free
// links, then solves each parent-to-child tree link by eliminating leaves in
// reverse breadth-first order. Throws ConnectivityError when the good agents
// are disconnected.
AlternativeInstance ConstructAlternative(const AdversaryView& view,
                                         const std::vector<SeparablePolynomial>& objectives,
                                         const FreeChoice& choice = {});

struct Mismatch {
  std::string what;  // "obfuscated", "local", "incident_noise", "missing_noise"
  AgentId agent = -1;
  DirectedEdge edge{-1, -1};
  int coordinate = 0;
  int power = 0;
  double expected = 0.0;
  double actual = 0.0;
};

struct VerifyReport {
  bool pass = false;
  double max_residual = 0.0;
  std::optional<Mismatch> first_mismatch;
  bool digest_checked = false;
  bool digest_equal = false;
  std::string message;
};

// Replays obfuscation under the alternative through an incidence matrix,
// compares every observation within `tol`, and when those match re-runs DGD
// on the replayed objectives and compares the state digest with the
// observed run.
VerifyReport VerifyIndistinguishable(const AdversaryView& view, const AlternativeInstance& instance,
                                     double tol = 1e-9, bool check_digest = true);

struct ComponentRecovery {
  std::vector<AgentId> agents;
  SeparablePolynomial reconstructed;
  SeparablePolynomial truth;
  double residual = 0.0;
};

struct NecessityReport {
  bool pass = false;
  std::vector<ComponentRecovery> components;
  double max_residual = 0.0;
};

// Recovers the objective sum of every component left after removing the
// coalition, using only the view, and compares it against `truth`. Throws
// InvalidArgument if the coalition is not a vertex cut.
NecessityReport NecessityDemo(const AdversaryView& view, const std::vector<SeparablePolynomial>& truth,
                              double tol = 1e-9);

Json VerifyReportToJson(const VerifyReport& r);
Json NecessityReportToJson(const NecessityReport& r);

}  // namespace rss
