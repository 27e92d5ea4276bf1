#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rss/engine.hpp"
#include "rss/graph.hpp"
#include "rss/objective.hpp"

namespace rss {

using Json = nlohmann::ordered_json;

// Topology, fusion weights and problem built from a config.
struct Scenario {
  Topology topology;
  DegreeConvention convention = DegreeConvention::kSelfExclusive;
  FusionMatrix fusion;
  GlobalProblem problem;
};

struct OutputPaths {
  std::string trace = "trace.json";
  std::string metrics = "metrics.csv";
  std::string figure = "figure.csv";
};

// A validated run description. `source` keeps the normalized JSON so traces
// and CSV headers can embed it.
struct RunConfig {
  Json source;
  RunOptions options;
  OutputPaths outputs;
  // Optional reference optimum; computed by the centralized solver otherwise.
  double solver_tolerance = 1e-10;
  // Consensus threshold used by the audit's consensus check.
  double consensus_threshold = 1e-3;

  Scenario BuildScenario() const;
};

// All parsers throw ConfigError with a path-qualified message on malformed
// input, including unknown keys.
RunConfig ParseRunConfig(const Json& j);
RunConfig LoadRunConfig(const std::string& path);

struct SweepCell {
  Algorithm algorithm;
  double delta;
  std::uint64_t seed;
};

struct SweepConfig {
  Json source;
  RunConfig base;
  std::vector<SweepCell> cells;  // DGD appears once per seed with delta 0
  std::string metrics = "sweep.csv";
};

SweepConfig ParseSweepConfig(const Json& j);
SweepConfig LoadSweepConfig(const std::string& path);

Topology ParseTopology(const Json& j);
Json TopologyToJson(const Topology& t);
Objective ParseObjective(const Json& j, int dimension);
std::vector<double> ParseNumberList(const Json& j, const std::string& where);

}  // namespace rss
