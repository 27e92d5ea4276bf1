#include "rss/trace_io.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace rss {

namespace {

Json PointToJson(const Point& p) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < p.size(); ++k) a.push_back(p[k]);
  return a;
}

Point PointFromJson(const Json& j) {
  Point p(j.size());
  for (size_t k = 0; k < j.size(); ++k) p[k] = j[k].get<double>();
  return p;
}

Json PointsToJson(const std::vector<Point>& pts) {
  Json a = Json::array();
  for (const auto& p : pts) a.push_back(PointToJson(p));
  return a;
}

std::vector<Point> PointsFromJson(const Json& j) {
  std::vector<Point> out;
  for (const auto& e : j) out.push_back(PointFromJson(e));
  return out;
}

Json FieldToJson(const DirectedField& f) {
  Json a = Json::array();
  for (const auto& [edge, v] : f) a.push_back({{"from", edge.from}, {"to", edge.to}, {"value", PointToJson(v)}});
  return a;
}

DirectedField FieldFromJson(const Json& j) {
  DirectedField f;
  for (const auto& e : j) f.emplace(DirectedEdge{e.at("from").get<int>(), e.at("to").get<int>()}, PointFromJson(e.at("value")));
  return f;
}

Json InvariantsToJson(const InvariantLog& l) {
  return Json{{"rounds_audited", l.rounds_audited},
              {"max_perturbation_sum", l.max_perturbation_sum},
              {"max_fused_sum", l.max_fused_sum},
              {"max_local_balance", l.max_local_balance},
              {"max_average_drift", l.max_average_drift},
              {"max_perspective_gap", l.max_perspective_gap},
              {"max_perturbation_norm", l.max_perturbation_norm},
              {"max_fused_norm", l.max_fused_norm},
              {"max_stochasticity_error", l.max_stochasticity_error},
              {"states_in_box", l.states_in_box}};
}

InvariantLog InvariantsFromJson(const Json& j) {
  InvariantLog l;
  l.rounds_audited = j.at("rounds_audited").get<int>();
  l.max_perturbation_sum = j.at("max_perturbation_sum").get<double>();
  l.max_fused_sum = j.at("max_fused_sum").get<double>();
  l.max_local_balance = j.at("max_local_balance").get<double>();
  l.max_average_drift = j.at("max_average_drift").get<double>();
  l.max_perspective_gap = j.at("max_perspective_gap").get<double>();
  l.max_perturbation_norm = j.at("max_perturbation_norm").get<double>();
  l.max_fused_norm = j.at("max_fused_norm").get<double>();
  l.max_stochasticity_error = j.at("max_stochasticity_error").get<double>();
  l.states_in_box = j.at("states_in_box").get<bool>();
  return l;
}

}  // namespace

Json PolynomialToJson(const SeparablePolynomial& p) {
  Json a = Json::array();
  for (const auto& part : p.parts()) a.push_back(part.coefficients());
  return a;
}

SeparablePolynomial PolynomialFromJson(const Json& j) {
  std::vector<Polynomial> parts;
  for (const auto& part : j) parts.emplace_back(part.get<std::vector<double>>());
  return SeparablePolynomial(std::move(parts));
}

void WriteTrace(std::ostream& out, const ExecutionTrace& t, const RunConfig& config, const std::string& timestamp) {
  Json details = Json::array();
  for (const auto& d : t.details) {
    Json r;
    r["round"] = d.round;
    if (!d.d.empty()) r["d"] = PointsToJson(d.d);
    if (!d.shares.empty()) r["shares"] = FieldToJson(d.shares);
    if (!d.lb_d.empty()) r["lb_d"] = FieldToJson(d.lb_d);
    if (!d.w.empty()) r["w"] = PointsToJson(d.w);
    if (!d.w_links.empty()) r["w_links"] = FieldToJson(d.w_links);
    r["v"] = PointsToJson(d.v);
    details.push_back(std::move(r));
  }
  Json fs = nullptr;
  if (t.fs) {
    fs = Json::object();
    Json noise = Json::array();
    for (const auto& [edge, poly] : t.fs->noise) {
      noise.push_back({{"from", edge.from}, {"to", edge.to}, {"parts", PolynomialToJson(poly)}});
    }
    fs["noise"] = std::move(noise);
    fs["obfuscated"] = Json::array();
    for (const auto& p : t.fs->obfuscated) fs["obfuscated"].push_back(PolynomialToJson(p));
    fs["noise_gradient_bound"] = t.fs->noise_gradient_bound;
  }

  const std::vector<std::pair<std::string, Json>> fields{
      {"format", "rss-trace"},
      {"format_version", kTraceFormatVersion},
      {"artifact_version", kArtifactVersion},
      {"generated_at", timestamp},
      {"config", config.source},
      {"algorithm", AlgorithmName(t.algorithm)},
      {"seed", t.seed},
      {"delta", t.delta},
      {"delta_coeff", t.delta_coeff},
      {"d_max", t.d_max},
      {"max_iter", t.max_iter},
      {"record_every", t.record_every},
      {"num_agents", t.num_agents},
      {"dimension", t.dimension},
      {"alphas", t.alphas},
      {"states", t.states},
      {"details", std::move(details)},
      {"invariants", InvariantsToJson(t.invariants)},
      {"fs", std::move(fs)},
      {"digest", DigestHex(t.StateDigest())},
  };
  out << "{\n";
  for (size_t k = 0; k < fields.size(); ++k) {
    out << Json(fields[k].first).dump() << ": " << fields[k].second.dump() << (k + 1 < fields.size() ? ",\n" : "\n");
  }
  out << "}\n";
}

std::string TraceToString(const ExecutionTrace& trace, const RunConfig& config, const std::string& timestamp) {
  std::ostringstream os;
  WriteTrace(os, trace, config, timestamp);
  return os.str();
}

LoadedTrace ReadTrace(std::istream& in) {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("trace is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "rss-trace") throw ConfigError("not a trace file");
    if (j.at("format_version").get<int>() != kTraceFormatVersion) throw ConfigError("unsupported trace version");
    RunConfig cfg = ParseRunConfig(j.at("config"));
    ExecutionTrace t;
    t.algorithm = ParseAlgorithm(j.at("algorithm").get<std::string>());
    t.schedule = cfg.options.schedule;
    t.seed = j.at("seed").get<std::uint64_t>();
    t.delta = j.at("delta").get<double>();
    t.delta_coeff = j.at("delta_coeff").get<double>();
    t.d_max = j.at("d_max").get<int>();
    t.max_iter = j.at("max_iter").get<int>();
    t.record_every = j.at("record_every").get<int>();
    t.num_agents = j.at("num_agents").get<int>();
    t.dimension = j.at("dimension").get<int>();
    t.alphas = j.at("alphas").get<std::vector<double>>();
    t.states = j.at("states").get<std::vector<double>>();
    if (t.states.size() != static_cast<size_t>(t.alphas.size() + 1) * t.num_agents * t.dimension) {
      throw ConfigError("trace state array has the wrong length");
    }
    for (const auto& r : j.at("details")) {
      RoundDetail d;
      d.round = r.at("round").get<int>();
      if (r.contains("d")) d.d = PointsFromJson(r["d"]);
      if (r.contains("shares")) d.shares = FieldFromJson(r["shares"]);
      if (r.contains("lb_d")) d.lb_d = FieldFromJson(r["lb_d"]);
      if (r.contains("w")) d.w = PointsFromJson(r["w"]);
      if (r.contains("w_links")) d.w_links = FieldFromJson(r["w_links"]);
      d.v = PointsFromJson(r.at("v"));
      t.details.push_back(std::move(d));
    }
    t.invariants = InvariantsFromJson(j.at("invariants"));
    if (!j.at("fs").is_null()) {
      FsRecord rec;
      for (const auto& e : j["fs"].at("noise")) {
        rec.noise.emplace(DirectedEdge{e.at("from").get<int>(), e.at("to").get<int>()}, PolynomialFromJson(e.at("parts")));
      }
      for (const auto& p : j["fs"].at("obfuscated")) rec.obfuscated.push_back(PolynomialFromJson(p));
      rec.noise_gradient_bound = j["fs"].at("noise_gradient_bound").get<double>();
      t.fs = std::move(rec);
    }
    return LoadedTrace{std::move(cfg), std::move(t)};
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed trace: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("malformed trace: ") + e.what());
  }
}

LoadedTrace ReadTraceFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace '" + path + "'");
  return ReadTrace(in);
}

std::string UtcTimestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace rss
