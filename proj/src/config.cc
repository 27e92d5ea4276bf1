#include "rss/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace rss {

namespace {

[[noreturn]] void Fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void RejectUnknown(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) Fail(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ok.count(it.key())) Fail(where, "unknown key '" + it.key() + "'");
  }
}

double Number(const Json& j, const std::string& where) {
  if (!j.is_number()) Fail(where, "expected a number");
  return j.get<double>();
}

int Integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) Fail(where, "expected an integer");
  return j.get<int>();
}

std::uint64_t Seed(const Json& j, const std::string& where) {
  if (!j.is_number_integer() || (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)) {
    Fail(where, "expected a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

std::string String(const Json& j, const std::string& where) {
  if (!j.is_string()) Fail(where, "expected a string");
  return j.get<std::string>();
}

StepSchedule ParseSchedule(const Json& j) {
  const std::string where = "schedule";
  RejectUnknown(j, where, {"kind", "a", "b"});
  if (!j.contains("kind")) Fail(where, "missing 'kind'");
  const std::string kind = String(j["kind"], where + ".kind");
  try {
    if (kind == "inv_sqrt") {
      if (j.contains("a") || j.contains("b")) Fail(where, "inv_sqrt takes no parameters");
      return StepSchedule::InvSqrt();
    }
    if (kind == "inv_k") {
      return StepSchedule::InvK(j.contains("a") ? Number(j["a"], where + ".a") : 1.0,
                                j.contains("b") ? Number(j["b"], where + ".b") : 0.0);
    }
    if (kind == "constant") {
      if (!j.contains("a")) Fail(where, "constant schedule needs 'a'");
      return StepSchedule::Constant(Number(j["a"], where + ".a"));
    }
  } catch (const InvalidArgument& e) {
    Fail(where, e.what());
  }
  Fail(where + ".kind", "unknown schedule '" + kind + "'");
}

Json ScheduleToJson(const StepSchedule& s) {
  Json j;
  j["kind"] = s.Name();
  if (s.kind() == StepSchedule::Kind::kInvK) {
    j["a"] = s.a();
    j["b"] = s.b();
  } else if (s.kind() == StepSchedule::Kind::kConstant) {
    j["a"] = s.a();
  }
  return j;
}

FeasibleSet ParseFeasible(const Json& j) {
  RejectUnknown(j, "feasible", {"lower", "upper"});
  if (!j.contains("lower") || !j.contains("upper")) Fail("feasible", "needs 'lower' and 'upper'");
  const auto lo = ParseNumberList(j["lower"], "feasible.lower");
  const auto hi = ParseNumberList(j["upper"], "feasible.upper");
  try {
    return FeasibleSet(Eigen::Map<const Point>(lo.data(), lo.size()), Eigen::Map<const Point>(hi.data(), hi.size()));
  } catch (const InvalidArgument& e) {
    Fail("feasible", e.what());
  }
}

std::vector<Point> ParseInit(const Json& j, const FeasibleSet& box, int n) {
  if (j.is_object()) {
    RejectUnknown(j, "init", {"evenly_spaced"});
    if (!j.contains("evenly_spaced")) Fail("init", "expected 'evenly_spaced' or a list of points");
    const auto range = ParseNumberList(j["evenly_spaced"], "init.evenly_spaced");
    if (range.size() != 2 || range[0] > range[1]) Fail("init.evenly_spaced", "expected [lo, hi] with lo <= hi");
    const FeasibleSet sub = FeasibleSet::Cube(box.dimension(), range[0], range[1]);
    return EvenlySpaced(sub, n);
  }
  if (!j.is_array()) Fail("init", "expected an object or a list of points");
  std::vector<Point> pts;
  for (size_t a = 0; a < j.size(); ++a) {
    const auto v = ParseNumberList(j[a], "init[" + std::to_string(a) + "]");
    pts.push_back(Eigen::Map<const Point>(v.data(), v.size()));
  }
  return pts;
}

}  // namespace

std::vector<double> ParseNumberList(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) Fail(where, "expected a number or a list of numbers");
  std::vector<double> out;
  for (size_t k = 0; k < j.size(); ++k) out.push_back(Number(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

Topology ParseTopology(const Json& j) {
  const std::string where = "topology";
  RejectUnknown(j, where, {"family", "n", "edges"});
  try {
    if (j.contains("family")) {
      if (j.contains("edges")) Fail(where, "give either 'family' or 'edges', not both");
      const std::string fam = String(j["family"], where + ".family");
      if (fam == "petersen") {
        if (j.contains("n") && Integer(j["n"], where + ".n") != 10) Fail(where, "petersen has n = 10");
        return Topology::Petersen();
      }
      if (!j.contains("n")) Fail(where, "missing 'n'");
      const int n = Integer(j["n"], where + ".n");
      if (n < 1) Fail(where + ".n", "must be >= 1");
      if (fam == "cycle") return Topology::Cycle(n);
      if (fam == "complete") return Topology::Complete(n);
      if (fam == "star") return Topology::Star(n);
      if (fam == "path") return Topology::Path(n);
      Fail(where + ".family", "unknown family '" + fam + "'");
    }
    if (!j.contains("n") || !j.contains("edges")) Fail(where, "needs 'family' or 'n' with 'edges'");
    const int n = Integer(j["n"], where + ".n");
    if (!j["edges"].is_array()) Fail(where + ".edges", "expected a list of pairs");
    std::vector<std::pair<int, int>> edges;
    for (size_t k = 0; k < j["edges"].size(); ++k) {
      const Json& e = j["edges"][k];
      const std::string w = where + ".edges[" + std::to_string(k) + "]";
      if (!e.is_array() || e.size() != 2) Fail(w, "expected [u, v]");
      edges.emplace_back(Integer(e[0], w), Integer(e[1], w));
    }
    return Topology::FromEdges(n, std::move(edges));
  } catch (const InvalidArgument& e) {
    Fail(where, e.what());
  } catch (const ConnectivityError& e) {
    Fail(where, e.what());
  }
}

Json TopologyToJson(const Topology& t) {
  Json j;
  j["n"] = t.size();
  j["edges"] = Json::array();
  for (const Edge& e : t.edges()) j["edges"].push_back({e.u, e.v});
  return j;
}

Objective ParseObjective(const Json& j, int dimension) {
  const std::string where = "objective";
  if (!j.is_object() || !j.contains("type")) Fail(where, "expected an object with 'type'");
  const std::string type = String(j["type"], where + ".type");
  try {
    if (type == "polynomial") {
      RejectUnknown(j, where, {"type", "coefficients", "parts"});
      if (j.contains("coefficients") == j.contains("parts")) Fail(where, "give exactly one of 'coefficients' or 'parts'");
      std::vector<Polynomial> parts;
      if (j.contains("coefficients")) {
        if (dimension != 1) Fail(where, "'coefficients' is for D = 1; use 'parts'");
        parts.emplace_back(ParseNumberList(j["coefficients"], where + ".coefficients"));
      } else {
        if (!j["parts"].is_array()) Fail(where + ".parts", "expected a list");
        for (size_t d = 0; d < j["parts"].size(); ++d) {
          parts.emplace_back(ParseNumberList(j["parts"][d], where + ".parts[" + std::to_string(d) + "]"));
        }
        if (static_cast<int>(parts.size()) != dimension) Fail(where + ".parts", "one part per coordinate required");
      }
      return Objective::FromPolynomial(SeparablePolynomial(std::move(parts)));
    }
    if (type == "quadratic") {
      RejectUnknown(j, where, {"type", "q", "b", "c"});
      if (!j.contains("q") || !j["q"].is_array()) Fail(where, "missing matrix 'q'");
      Eigen::MatrixXd q(dimension, dimension);
      if (static_cast<int>(j["q"].size()) != dimension) Fail(where + ".q", "wrong row count");
      for (int r = 0; r < dimension; ++r) {
        const auto row = ParseNumberList(j["q"][r], where + ".q");
        if (static_cast<int>(row.size()) != dimension) Fail(where + ".q", "wrong column count");
        for (int c = 0; c < dimension; ++c) q(r, c) = row[c];
      }
      Eigen::VectorXd b = Eigen::VectorXd::Zero(dimension);
      if (j.contains("b")) {
        const auto bv = ParseNumberList(j["b"], where + ".b");
        if (static_cast<int>(bv.size()) != dimension) Fail(where + ".b", "wrong length");
        b = Eigen::Map<const Eigen::VectorXd>(bv.data(), dimension);
      }
      const double c = j.contains("c") ? Number(j["c"], where + ".c") : 0.0;
      return Objective::Quadratic(std::move(q), std::move(b), c);
    }
    if (type == "logistic") {
      RejectUnknown(j, where, {"type", "seed", "samples", "lambda"});
      if (!j.contains("seed")) Fail(where, "logistic needs 'seed'");
      return Objective::Logistic(dimension, Seed(j["seed"], where + ".seed"),
                                 j.contains("samples") ? Integer(j["samples"], where + ".samples") : 40,
                                 j.contains("lambda") ? Number(j["lambda"], where + ".lambda") : 0.1);
    }
  } catch (const InvalidArgument& e) {
    Fail(where, e.what());
  }
  Fail(where + ".type", "unknown objective type '" + type + "'");
}

Scenario RunConfig::BuildScenario() const {
  const Json& j = source;
  Topology topo = ParseTopology(j.at("topology"));
  DegreeConvention conv = DegreeConvention::kSelfExclusive;
  if (j.contains("metropolis") && j["metropolis"] == "self_inclusive") conv = DegreeConvention::kSelfInclusive;
  FeasibleSet box = ParseFeasible(j.at("feasible"));
  std::vector<Objective> objs;
  for (size_t a = 0; a < j.at("objectives").size(); ++a) {
    try {
      objs.push_back(ParseObjective(j["objectives"][a], box.dimension()));
    } catch (const ConfigError& e) {
      throw ConfigError("objectives[" + std::to_string(a) + "]." + e.what());
    }
  }
  if (static_cast<int>(objs.size()) != topo.size()) {
    throw ConfigError("objectives: expected " + std::to_string(topo.size()) + " entries, one per agent");
  }
  FusionMatrix fusion = FusionMatrix::Metropolis(topo, conv);
  GlobalProblem problem(std::move(objs), std::move(box));
  return Scenario{std::move(topo), conv, std::move(fusion), std::move(problem)};
}

RunConfig ParseRunConfig(const Json& j) {
  RejectUnknown(j, "config",
                {"algorithm", "topology", "metropolis", "objectives", "feasible", "schedule", "delta",
                 "delta_coeff", "d_max", "max_iter", "seed", "record_every", "init", "outputs",
                 "solver_tolerance", "consensus_threshold"});
  for (const char* key : {"algorithm", "topology", "objectives", "feasible"}) {
    if (!j.contains(key)) Fail("config", std::string("missing required key '") + key + "'");
  }
  RunConfig cfg;
  cfg.source = j;
  RunOptions& o = cfg.options;
  try {
    o.algorithm = ParseAlgorithm(String(j["algorithm"], "algorithm"));
  } catch (const InvalidArgument& e) {
    Fail("algorithm", e.what());
  }
  if (j.contains("metropolis")) {
    const std::string m = String(j["metropolis"], "metropolis");
    if (m != "self_exclusive" && m != "self_inclusive") Fail("metropolis", "expected self_exclusive or self_inclusive");
  }
  if (!j["objectives"].is_array()) Fail("objectives", "expected a list");
  o.schedule = j.contains("schedule") ? ParseSchedule(j["schedule"]) : StepSchedule::InvSqrt();
  if (j.contains("delta")) o.delta = Number(j["delta"], "delta");
  if (j.contains("delta_coeff")) o.delta_coeff = Number(j["delta_coeff"], "delta_coeff");
  if (o.delta < 0.0) Fail("delta", "must be >= 0");
  if (o.delta_coeff < 0.0) Fail("delta_coeff", "must be >= 0");
  if (j.contains("d_max")) o.d_max = Integer(j["d_max"], "d_max");
  if (o.d_max < 0) Fail("d_max", "must be >= 0");
  if (j.contains("max_iter")) o.max_iter = Integer(j["max_iter"], "max_iter");
  if (o.max_iter < 1) Fail("max_iter", "must be >= 1");
  if (j.contains("seed")) o.seed = Seed(j["seed"], "seed");
  if (j.contains("record_every")) o.record_every = Integer(j["record_every"], "record_every");
  if (o.record_every < 0) Fail("record_every", "must be >= 0");
  if (j.contains("solver_tolerance")) cfg.solver_tolerance = Number(j["solver_tolerance"], "solver_tolerance");
  if (!(cfg.solver_tolerance > 0.0)) Fail("solver_tolerance", "must be > 0");
  if (j.contains("consensus_threshold")) {
    cfg.consensus_threshold = Number(j["consensus_threshold"], "consensus_threshold");
  }
  if (j.contains("outputs")) {
    RejectUnknown(j["outputs"], "outputs", {"trace", "metrics", "figure"});
    if (j["outputs"].contains("trace")) cfg.outputs.trace = String(j["outputs"]["trace"], "outputs.trace");
    if (j["outputs"].contains("metrics")) cfg.outputs.metrics = String(j["outputs"]["metrics"], "outputs.metrics");
    if (j["outputs"].contains("figure")) cfg.outputs.figure = String(j["outputs"]["figure"], "outputs.figure");
  }

  // Building the scenario validates topology, objectives and the box.
  const Scenario sc = cfg.BuildScenario();
  if (o.algorithm == Algorithm::kFs) {
    if (!sc.problem.AllPolynomial()) Fail("objectives", "fs requires polynomial objectives");
    for (const auto& obj : sc.problem.objectives()) {
      if (obj.polynomial()->Degree() > o.d_max) Fail("objectives", "polynomial degree exceeds d_max");
    }
  }
  if (j.contains("init")) {
    o.init = ParseInit(j["init"], sc.problem.feasible(), sc.topology.size());
    if (static_cast<int>(o.init->size()) != sc.topology.size()) Fail("init", "one point per agent required");
    for (const Point& x : *o.init) {
      if (x.size() != sc.problem.dimension() || !sc.problem.feasible().Contains(x)) {
        Fail("init", "every point must lie in the feasible box");
      }
    }
  }
  cfg.source["schedule"] = ScheduleToJson(o.schedule);
  return cfg;
}

namespace {

Json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace

RunConfig LoadRunConfig(const std::string& path) { return ParseRunConfig(ReadJsonFile(path)); }

SweepConfig ParseSweepConfig(const Json& j) {
  RejectUnknown(j, "sweep", {"base", "grid", "outputs"});
  if (!j.contains("base") || !j.contains("grid")) Fail("sweep", "needs 'base' and 'grid'");
  SweepConfig sw;
  sw.source = j;
  sw.base = ParseRunConfig(j["base"]);
  const Json& g = j["grid"];
  RejectUnknown(g, "grid", {"algorithm", "delta", "seed"});
  std::vector<Algorithm> algs;
  std::vector<double> deltas{sw.base.options.delta};
  std::vector<std::uint64_t> seeds{sw.base.options.seed};
  if (g.contains("algorithm")) {
    if (!g["algorithm"].is_array()) Fail("grid.algorithm", "expected a list");
    for (const auto& a : g["algorithm"]) {
      try {
        algs.push_back(ParseAlgorithm(String(a, "grid.algorithm")));
      } catch (const InvalidArgument& e) {
        Fail("grid.algorithm", e.what());
      }
    }
  } else {
    algs.push_back(sw.base.options.algorithm);
  }
  if (g.contains("delta")) {
    if (!g["delta"].is_array()) Fail("grid.delta", "expected a list");
    deltas = ParseNumberList(g["delta"], "grid.delta");
    for (double d : deltas) {
      if (d < 0.0) Fail("grid.delta", "values must be >= 0");
    }
  }
  if (g.contains("seed")) {
    if (!g["seed"].is_array()) Fail("grid.seed", "expected a list");
    seeds.clear();
    for (const auto& s : g["seed"]) seeds.push_back(Seed(s, "grid.seed"));
  }
  if (j.contains("outputs")) {
    RejectUnknown(j["outputs"], "outputs", {"metrics"});
    if (j["outputs"].contains("metrics")) sw.metrics = String(j["outputs"]["metrics"], "outputs.metrics");
  }
  for (Algorithm a : algs) {
    if (a == Algorithm::kDgd) {
      if (deltas.empty()) continue;
      for (std::uint64_t s : seeds) sw.cells.push_back({a, 0.0, s});
      continue;
    }
    for (double d : deltas)
      for (std::uint64_t s : seeds) sw.cells.push_back({a, d, s});
  }
  return sw;
}

SweepConfig LoadSweepConfig(const std::string& path) { return ParseSweepConfig(ReadJsonFile(path)); }

}  // namespace rss
