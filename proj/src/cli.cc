#include "rss/cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "rss/analysis.hpp"
#include "rss/config.hpp"
#include "rss/engine.hpp"
#include "rss/privacy.hpp"
#include "rss/trace_io.hpp"

namespace rss {

namespace {

namespace fs = std::filesystem;

// Raised for usage problems discovered after argument parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunArtifacts {
  std::string trace;
  std::string metrics;
  std::string figure;
  Json summary;
};

void WriteFile(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

Json PointJson(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) a.push_back(p[k]);
  return a;
}

struct Solved {
  Point x_star;
  double f_star;
};

Solved Optimum(const GlobalProblem& problem, double tol) {
  const CentralSolution s = SolveCentralized(problem, tol);
  return {s.x, s.f};
}

RunArtifacts ExecuteRun(const RunConfig& cfg, const std::string& timestamp) {
  const Scenario sc = cfg.BuildScenario();
  const Solved opt = Optimum(sc.problem, cfg.solver_tolerance);
  const ExecutionTrace trace = Run(sc.problem, sc.topology, sc.fusion, cfg.options);
  const BoundParams bounds = BoundParamsForTrace(trace, sc);
  const auto rows = ComputeMetrics(trace, sc.problem, opt.x_star, opt.f_star, bounds);

  RunArtifacts art;
  art.trace = TraceToString(trace, cfg, timestamp);
  std::ostringstream metrics;
  WriteMetricsHeader(metrics, timestamp, cfg.source);
  const double delta = trace.algorithm == Algorithm::kFs ? trace.delta_coeff : trace.delta;
  WriteMetricsRows(metrics, rows, trace.algorithm, delta, trace.seed);
  art.metrics = metrics.str();
  std::ostringstream figure;
  WriteFigureCsv(figure, rows, timestamp, cfg.source);
  art.figure = figure.str();
  art.summary = {{"algorithm", AlgorithmName(trace.algorithm)},
                 {"delta", delta},
                 {"seed", trace.seed},
                 {"rounds", trace.num_rounds()},
                 {"digest", DigestHex(trace.StateDigest())},
                 {"f_star", opt.f_star},
                 {"x_star", PointJson(opt.x_star)},
                 {"final_suboptimality", rows.back().suboptimality},
                 {"final_max_disagreement", rows.back().max_disagreement},
                 {"bounds", BoundParamsToJson(bounds)}};
  return art;
}

int CmdRun(const std::string& config_path, const std::string& out_dir, std::optional<int> record_every,
           std::ostream& out) {
  RunConfig cfg = LoadRunConfig(config_path);
  if (record_every) {
    if (*record_every < 0) throw ConfigError("--record-every must be >= 0");
    cfg.options.record_every = *record_every;
    cfg.source["record_every"] = *record_every;
  }
  const std::string ts = UtcTimestamp();
  const RunArtifacts art = ExecuteRun(cfg, ts);
  const fs::path dir(out_dir);
  WriteFile(dir / cfg.outputs.trace, art.trace);
  WriteFile(dir / cfg.outputs.metrics, art.metrics);
  WriteFile(dir / cfg.outputs.figure, art.figure);
  out << art.summary.dump(2) << "\n";
  return kExitOk;
}

int CmdSweep(const std::string& config_path, const std::string& out_dir, int jobs, std::optional<int> record_every,
             std::ostream& out, std::ostream& err) {
  const SweepConfig sw = LoadSweepConfig(config_path);
  if (jobs < 1) throw ConfigError("--jobs must be >= 1");
  const std::string ts = UtcTimestamp();
  const size_t cells = sw.cells.size();
  std::vector<std::string> rows(cells);
  std::vector<Json> status(cells);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t c = next++; c < cells; c = next++) {
      const SweepCell& cell = sw.cells[c];
      RunConfig cfg = sw.base;
      cfg.options.algorithm = cell.algorithm;
      cfg.options.seed = cell.seed;
      if (record_every) cfg.options.record_every = *record_every;
      if (cell.algorithm == Algorithm::kFs) {
        cfg.options.delta_coeff = cell.delta;
      } else {
        cfg.options.delta = cell.delta;
      }
      Json st = {{"algorithm", AlgorithmName(cell.algorithm)}, {"delta", cell.delta}, {"seed", cell.seed}};
      try {
        const Scenario sc = cfg.BuildScenario();
        const Solved opt = Optimum(sc.problem, cfg.solver_tolerance);
        const ExecutionTrace trace = Run(sc.problem, sc.topology, sc.fusion, cfg.options);
        const auto metrics = ComputeMetrics(trace, sc.problem, opt.x_star, opt.f_star, BoundParamsForTrace(trace, sc));
        std::ostringstream os;
        WriteMetricsRows(os, metrics, cell.algorithm, cell.delta, cell.seed);
        rows[c] = os.str();
        st["ok"] = true;
        st["final_suboptimality"] = metrics.back().suboptimality;
        st["digest"] = DigestHex(trace.StateDigest());
      } catch (const std::exception& e) {
        st["ok"] = false;
        st["error"] = e.what();
      }
      status[c] = std::move(st);
    }
  };
  std::vector<std::thread> pool;
  const int threads = static_cast<int>(std::min<size_t>(jobs, std::max<size_t>(cells, 1)));
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  WriteMetricsHeader(csv, ts, sw.source);
  bool all_ok = true;
  for (size_t c = 0; c < cells; ++c) {
    csv << rows[c];
    if (!status[c]["ok"].get<bool>()) {
      all_ok = false;
      err << "sweep cell " << c << " failed: " << status[c]["error"].get<std::string>() << "\n";
    }
  }
  WriteFile(fs::path(out_dir) / sw.metrics, csv.str());
  Json summary = {{"cells", cells}, {"all_ok", all_ok}, {"status", status}};
  out << summary.dump(2) << "\n";
  return all_ok ? kExitOk : kExitFailure;
}

const std::vector<std::string> kAllChecks{"invariants", "disagreement_bound", "recursion_bound", "consensus", "gap_envelope"};

// Aligned columns: check, verdict, violations, worst margin, message.
void WriteAuditText(const Json& report, std::ostream& out) {
  auto row = [&](const Json& c) {
    std::ostringstream margin;
    margin << std::setprecision(4) << c.value("worst_margin", 0.0);
    out << "  " << std::left << std::setw(20) << c["name"].get<std::string>() << std::setw(6)
        << (c["pass"].get<bool>() ? "PASS" : "FAIL") << std::right << std::setw(8) << c.value("violation_count", 0)
        << std::setw(14) << margin.str() << "  " << c["message"].get<std::string>() << "\n";
  };
  for (const auto& t : report["traces"]) {
    out << t["path"].get<std::string>() << " (" << t["algorithm"].get<std::string>() << ", delta "
        << t["delta"].get<double>() << ", seed " << t["seed"].get<std::uint64_t>() << ")\n";
    for (const auto& c : t["checks"]) row(c);
  }
  if (report.contains("gap_envelope")) {
    out << "family of " << report["traces"].size() << " traces\n";
    row(report["gap_envelope"]);
  }
  out << (report["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
}

int CmdAudit(const std::vector<std::string>& traces, std::vector<std::string> checks, bool text,
             std::ostream& out) {
  if (traces.empty()) throw UsageError("audit needs at least one --trace");
  if (checks.empty()) checks = kAllChecks;
  for (const auto& c : checks) {
    if (std::find(kAllChecks.begin(), kAllChecks.end(), c) == kAllChecks.end()) {
      throw UsageError("unknown check '" + c + "'");
    }
  }
  auto wants = [&](const std::string& c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };

  std::vector<LoadedTrace> loaded;
  for (const auto& path : traces) loaded.push_back(ReadTraceFile(path));
  if (wants("gap_envelope")) {
    for (const auto& l : loaded) {
      if (l.trace.schedule.kind() != StepSchedule::Kind::kInvSqrt) {
        throw UsageError("gap_envelope requires the inv_sqrt schedule; trace uses " + l.trace.schedule.Name());
      }
    }
  }

  bool pass = true;
  Json report = {{"traces", Json::array()}};
  std::optional<Scenario> first_scenario;
  std::optional<Solved> first_opt;
  for (size_t t = 0; t < loaded.size(); ++t) {
    const LoadedTrace& l = loaded[t];
    const Scenario sc = l.config.BuildScenario();
    const Solved opt = Optimum(sc.problem, l.config.solver_tolerance);
    Json entry = {{"path", traces[t]},
                  {"algorithm", AlgorithmName(l.trace.algorithm)},
                  {"delta", l.trace.delta},
                  {"seed", l.trace.seed},
                  {"checks", Json::array()}};
    std::vector<CheckReport> reps;
    if (wants("invariants")) reps.push_back(CheckInvariants(l.trace, sc.problem.feasible()));
    if (wants("disagreement_bound") || wants("recursion_bound")) {
      const BoundParams b = BoundParamsForTrace(l.trace, sc);
      entry["bounds"] = BoundParamsToJson(b);
      if (wants("disagreement_bound")) reps.push_back(CheckDisagreementBound(l.trace, b));
      if (wants("recursion_bound")) reps.push_back(CheckRecursionBound(l.trace, EffectiveProblem(l.trace, sc.problem), opt.x_star, b));
    }
    if (wants("consensus")) reps.push_back(CheckConsensus(l.trace, 0.1, l.config.consensus_threshold));
    for (const auto& r : reps) {
      pass = pass && r.pass;
      entry["checks"].push_back(ReportToJson(r));
    }
    report["traces"].push_back(std::move(entry));
    if (t == 0) {
      first_scenario.emplace(sc);
      first_opt = opt;
    }
  }
  if (wants("gap_envelope")) {
    std::vector<const ExecutionTrace*> family;
    for (const auto& l : loaded) family.push_back(&l.trace);
    const CheckReport r = CheckGapEnvelope(family, first_scenario->problem, first_opt->f_star);
    pass = pass && r.pass;
    report["gap_envelope"] = ReportToJson(r);
  }
  report["pass"] = pass;
  if (text) {
    WriteAuditText(report, out);
  } else {
    out << report.dump(2) << "\n";
  }
  return pass ? kExitOk : kExitFailure;
}

std::map<AgentId, SeparablePolynomial> LoadAlternatives(const std::string& path, int dimension) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open alternatives file '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("alternatives file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("alternatives") || j.size() != 1 || !j["alternatives"].is_object()) {
    throw ConfigError("alternatives file must be {\"alternatives\": {\"<agent>\": <polynomial objective>}}");
  }
  std::map<AgentId, SeparablePolynomial> out;
  for (auto it = j["alternatives"].begin(); it != j["alternatives"].end(); ++it) {
    int agent = 0;
    try {
      size_t used = 0;
      agent = std::stoi(it.key(), &used);
      if (used != it.key().size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("alternatives: key '" + it.key() + "' is not an agent index");
    }
    const Objective obj = ParseObjective(it.value(), dimension);
    if (!obj.polynomial()) throw ConfigError("alternatives: agent " + it.key() + " must be polynomial");
    out.emplace(agent, *obj.polynomial());
  }
  return out;
}

int CmdPrivacy(const std::string& trace_path, const std::vector<int>& coalition, const std::vector<int>& targets,
               const std::string& alt_path, std::uint64_t seed, std::ostream& out) {
  const LoadedTrace l = ReadTraceFile(trace_path);
  if (l.trace.algorithm != Algorithm::kFs) throw UsageError("privacy check needs a function-sharing (fs) trace");
  const Scenario sc = l.config.BuildScenario();
  AdversaryView view = [&] {
    try {
      return ExtractView(l.trace, sc, coalition);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  }();
  const auto good = view.GoodAgents();
  if (good.empty()) throw UsageError("coalition contains every agent; target set is empty");

  std::map<AgentId, SeparablePolynomial> alts;
  if (!alt_path.empty()) alts = LoadAlternatives(alt_path, view.dimension);
  std::vector<int> chosen = targets;
  if (chosen.empty()) {
    for (const auto& [a, p] : alts) chosen.push_back(a);
  }
  if (chosen.empty()) chosen.push_back(good.front());
  for (int t : chosen) {
    if (!alts.count(t)) {
      SeparablePolynomial g = *sc.problem.objective(t).polynomial();
      g = g.Resized(std::max(g.parts().front().size(), 3));
      for (auto& part : g.parts()) part.set_coefficient(2, part.coefficient(2) + 1.0);
      alts.emplace(t, std::move(g));
    }
  }
  for (const auto& [a, p] : alts) {
    if (std::find(chosen.begin(), chosen.end(), a) == chosen.end()) {
      throw UsageError("alternative given for agent " + std::to_string(a) + " which is not a target");
    }
  }

  std::vector<SeparablePolynomial> truth;
  for (const auto& o : sc.problem.objectives()) truth.push_back(*o.polynomial());
  std::vector<SeparablePolynomial> g;
  try {
    g = CompleteAlternativeObjectives(truth, view.coalition, alts, view.d_max);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  Json report = {{"trace", trace_path}, {"coalition", view.coalition}, {"targets", chosen}};
  try {
    FreeChoice choice;
    choice.seed = seed;
    const AlternativeInstance inst = ConstructAlternative(view, g, choice);
    const VerifyReport v = VerifyIndistinguishable(view, inst);
    report["root_residual"] = inst.root_residual;
    report["verify"] = VerifyReportToJson(v);
    report["pass"] = v.pass && inst.root_residual < 1e-12;
  } catch (const ConnectivityError& e) {
    report["pass"] = false;
    report["error"] = e.what();
    if (sc.topology.ComponentsWithout(view.coalition).size() >= 2) {
      report["necessity_demo"] = NecessityReportToJson(NecessityDemo(view, truth));
    }
  }
  out << report.dump(2) << "\n";
  return report["pass"].get<bool>() ? kExitOk : kExitFailure;
}

int CmdBounds(const std::string& config_path, std::ostream& out) {
  const RunConfig cfg = LoadRunConfig(config_path);
  const Scenario sc = cfg.BuildScenario();
  const bool perturbed = cfg.options.algorithm == Algorithm::kRssNb || cfg.options.algorithm == Algorithm::kRssLb;
  const double delta = perturbed ? cfg.options.delta : 0.0;
  const double alpha1 = cfg.options.schedule.Alpha(1);
  const BoundParams b = ComputeBoundParams(sc.topology, sc.fusion, sc.problem, delta, alpha1);
  Json agents = Json::array();
  const FeasibleSet grown = sc.problem.feasible().Inflate(alpha1 * delta);
  for (int j = 0; j < sc.problem.num_agents(); ++j) {
    const Constants c = EstimateConstants(sc.problem.objective(j), grown);
    agents.push_back({{"agent", j},
                      {"L", c.L},
                      {"N", c.N},
                      {"grid_L", c.grid_L},
                      {"fine_grid_L", c.fine_grid_L},
                      {"grid_N", c.grid_N},
                      {"fine_grid_N", c.fine_grid_N},
                      {"convex", IsConvexOn(sc.problem.objective(j), sc.problem.feasible())}});
  }
  Json report = {{"bounds", BoundParamsToJson(b)},
                 {"agents", agents},
                 {"vertex_connectivity", VertexConnectivity(sc.topology)},
                 {"min_degree", MinDegree(sc.topology)},
                 {"schedule", cfg.options.schedule.Name()},
                 {"schedule_convergent", cfg.options.schedule.Convergent()}};
  out << report.dump(2) << "\n";
  return kExitOk;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulator and auditor for privacy-preserving distributed optimization", "rss"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kArtifactVersion));

  std::string config;
  std::string out_dir = ".";
  int jobs = 1;
  std::optional<int> record_every;
  std::vector<std::string> traces;
  std::vector<std::string> checks;
  bool text = false;
  std::vector<int> coalition;
  std::vector<int> targets;
  std::string alt;
  std::uint64_t seed = 0;

  auto* run = app.add_subcommand("run", "execute one configured run");
  run->add_option("--config", config, "run config (JSON)")->required();
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_option("--record-every", record_every, "keep per-link messages every N rounds");

  auto* sweep = app.add_subcommand("sweep", "run a parameter grid into one CSV");
  sweep->add_option("--config", config, "sweep config (JSON)")->required();
  sweep->add_option("--out-dir", out_dir, "output directory");
  sweep->add_option("--jobs", jobs, "parallel cells");
  sweep->add_option("--record-every", record_every, "keep per-link messages every N rounds");

  auto* audit = app.add_subcommand("audit", "check invariants and bounds on stored traces");
  audit->add_option("--trace", traces, "trace file (repeatable)")->required();
  audit->add_option("--checks", checks, "comma list of: invariants,disagreement_bound,recursion_bound,consensus,gap_envelope")->delimiter(',');
  audit->add_flag("--text", text, "aligned human-readable table instead of JSON");

  auto* privacy = app.add_subcommand("privacy", "build and verify an indistinguishable alternative instance");
  privacy->add_option("--trace", traces, "fs trace file")->required()->expected(1);
  privacy->add_option("--coalition", coalition, "comma list of compromised agents")->delimiter(',');
  privacy->add_option("--targets", targets, "comma list of agents whose objectives change")->delimiter(',');
  privacy->add_option("--alt", alt, "alternative objectives file (JSON)");
  privacy->add_option("--seed", seed, "seed for the free link functions");

  auto* bounds = app.add_subcommand("bounds", "print bound parameters for a config");
  bounds->add_option("--config", config, "run config (JSON)")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kArtifactVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*run) return CmdRun(config, out_dir, record_every, out);
    if (*sweep) return CmdSweep(config, out_dir, jobs, record_every, out, err);
    if (*audit) return CmdAudit(traces, checks, text, out);
    if (*privacy) return CmdPrivacy(traces.front(), coalition, targets, alt, seed, out);
    if (*bounds) return CmdBounds(config, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rss
