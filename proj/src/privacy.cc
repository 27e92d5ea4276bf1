#include "rss/privacy.hpp"

#include <algorithm>
#include <cmath>

#include "rss/rng.hpp"
#include "rss/trace_io.hpp"

namespace rss {

namespace {

SeparablePolynomial Normalize(const SeparablePolynomial& p, int d_max) {
  if (p.Degree() > d_max) throw InvalidArgument("polynomial degree exceeds d_max");
  return p.Resized(d_max + 1);
}

double MaxAbsCoefficient(const SeparablePolynomial& p) {
  double worst = 0.0;
  for (const auto& part : p.parts())
    for (double c : part.coefficients()) worst = std::max(worst, std::abs(c));
  return worst;
}

// First coefficient where |a - b| > tol, reported against `expected` = a.
std::optional<Mismatch> Compare(const SeparablePolynomial& expected, const SeparablePolynomial& actual, double tol,
                                double& max_residual) {
  std::optional<Mismatch> first;
  for (int d = 0; d < expected.dimension(); ++d) {
    const Polynomial& e = expected.part(d);
    const Polynomial& a = actual.part(d);
    const int n = std::max(e.size(), a.size());
    for (int p = 0; p < n; ++p) {
      const double gap = std::abs(e.coefficient(p) - a.coefficient(p));
      max_residual = std::max(max_residual, gap);
      if (!(gap <= tol) && !first) {
        Mismatch m;
        m.coordinate = d;
        m.power = p;
        m.expected = e.coefficient(p);
        m.actual = a.coefficient(p);
        first = m;
      }
    }
  }
  return first;
}

Json MismatchToJson(const Mismatch& m) {
  return Json{{"what", m.what},          {"agent", m.agent},   {"from", m.edge.from},
              {"to", m.edge.to},         {"coordinate", m.coordinate}, {"power", m.power},
              {"expected", m.expected},  {"actual", m.actual}};
}

}  // namespace

bool AdversaryView::InCoalition(AgentId j) const {
  return std::binary_search(coalition.begin(), coalition.end(), j);
}

std::vector<AgentId> AdversaryView::GoodAgents() const {
  std::vector<AgentId> good;
  for (int j = 0; j < topology.size(); ++j)
    if (!InCoalition(j)) good.push_back(j);
  return good;
}

AdversaryView ExtractView(const ExecutionTrace& trace, const Scenario& scenario, AgentSet coalition) {
  if (trace.algorithm != Algorithm::kFs || !trace.fs) throw InvalidArgument("adversary view needs a function-sharing trace");
  const int n = scenario.topology.size();
  std::sort(coalition.begin(), coalition.end());
  coalition.erase(std::unique(coalition.begin(), coalition.end()), coalition.end());
  for (AgentId a : coalition) {
    if (a < 0 || a >= n) throw InvalidArgument("coalition member out of range: " + std::to_string(a));
  }
  AdversaryView view{scenario.topology, scenario.fusion, scenario.problem.feasible(), trace.d_max, trace.dimension,
                     coalition, {}, {}, {}, trace.schedule, trace.max_iter, {}, 0};
  for (const auto& p : trace.fs->obfuscated) view.observed.push_back(Normalize(p, trace.d_max));
  for (AgentId a : coalition) {
    const SeparablePolynomial* f = scenario.problem.objective(a).polynomial();
    if (!f) throw InvalidArgument("function sharing requires polynomial objectives");
    view.local.emplace(a, Normalize(*f, trace.d_max));
  }
  for (const auto& [edge, poly] : trace.fs->noise) {
    if (view.InCoalition(edge.from) || view.InCoalition(edge.to)) view.incident.emplace(edge, poly);
  }
  view.max_iter = trace.num_rounds();
  view.init = trace.StatesAt(1);
  view.trace_digest = trace.StateDigest();
  return view;
}

std::vector<SeparablePolynomial> CompleteAlternativeObjectives(
    const std::vector<SeparablePolynomial>& objectives, const AgentSet& coalition,
    const std::map<AgentId, SeparablePolynomial>& alternatives, int d_max) {
  const int n = static_cast<int>(objectives.size());
  std::vector<bool> bad(n, false);
  for (AgentId a : coalition) {
    if (a < 0 || a >= n) throw InvalidArgument("coalition member out of range");
    bad[a] = true;
  }
  std::vector<SeparablePolynomial> g;
  for (const auto& f : objectives) g.push_back(Normalize(f, d_max));
  SeparablePolynomial shift = SeparablePolynomial::Zero(g.front().dimension(), d_max + 1);
  for (const auto& [i, alt] : alternatives) {
    if (i < 0 || i >= n || bad[i]) throw InvalidArgument("target " + std::to_string(i) + " is not a good agent");
    const SeparablePolynomial gi = Normalize(alt, d_max);
    if (gi.dimension() != g[i].dimension()) throw InvalidArgument("alternative has the wrong dimension");
    shift += g[i];
    shift -= gi;
    g[i] = gi;
  }
  AgentId free_agent = -1;
  for (int j = 0; j < n && free_agent < 0; ++j) {
    if (!bad[j] && !alternatives.count(j)) free_agent = j;
  }
  if (free_agent < 0) {
    throw InvalidArgument("targets cover every good agent; their total is always learnable, so no free agent remains");
  }
  g[free_agent] += shift;
  return g;
}

AlternativeInstance ConstructAlternative(const AdversaryView& view, const std::vector<SeparablePolynomial>& objectives,
                                         const FreeChoice& choice) {
  const Topology& topo = view.topology;
  const int n = topo.size();
  const int size = view.d_max + 1;
  if (static_cast<int>(objectives.size()) != n) throw InvalidArgument("one alternative objective per agent required");

  AlternativeInstance inst;
  for (const auto& g : objectives) inst.objectives.push_back(Normalize(g, view.d_max));
  inst.split = SpanningTreeSplit(topo, view.coalition);

  for (const auto& [edge, poly] : view.incident) inst.noise.emplace(edge, Normalize(poly, view.d_max));

  auto choose = [&](const DirectedEdge& e) {
    if (choice.mode == FreeChoice::Mode::kCopy) {
      if (!choice.copy_from) throw InvalidArgument("copy mode needs a source noise table");
      const auto it = choice.copy_from->find(e);
      if (it == choice.copy_from->end()) throw InvalidArgument("source noise table lacks a link");
      return Normalize(it->second, view.d_max);
    }
    Stream rng(choice.seed, StreamPurpose::kExtraEdges, static_cast<std::uint64_t>(e.from) * n + e.to, 0);
    SeparablePolynomial s = SeparablePolynomial::Zero(view.dimension, size);
    for (auto& part : s.parts())
      for (int p = 0; p < size; ++p) part.set_coefficient(p, rng.Uniform(-choice.scale, choice.scale));
    return s;
  };
  for (const Edge& e : inst.split.extra) {
    inst.noise.emplace(DirectedEdge{e.u, e.v}, choose({e.u, e.v}));
    inst.noise.emplace(DirectedEdge{e.v, e.u}, choose({e.v, e.u}));
  }
  for (AgentId c : inst.split.order) {
    const AgentId p = inst.split.parent[c];
    if (p >= 0) inst.noise.emplace(DirectedEdge{c, p}, choose({c, p}));
  }

  // Balance at good agent j: g_j + sum_i t^{i,j} - sum_i t^{j,i} = f_hat_j.
  auto balance = [&](AgentId j, const DirectedEdge* skip) {
    SeparablePolynomial acc = inst.objectives[j];
    for (AgentId i : topo.Neighbors(j)) {
      const DirectedEdge in{i, j};
      const DirectedEdge out{j, i};
      if (!(skip && in == *skip)) acc += inst.noise.at(in);
      acc -= inst.noise.at(out);
    }
    return acc;
  };
  for (auto it = inst.split.order.rbegin(); it != inst.split.order.rend(); ++it) {
    const AgentId c = *it;
    const AgentId p = inst.split.parent[c];
    if (p < 0) continue;
    const DirectedEdge down{p, c};
    inst.noise.emplace(down, view.observed[c] - balance(c, &down));
  }
  if (inst.split.root >= 0) {
    inst.root_residual = MaxAbsCoefficient(balance(inst.split.root, nullptr) - view.observed[inst.split.root]);
  }
  return inst;
}

VerifyReport VerifyIndistinguishable(const AdversaryView& view, const AlternativeInstance& instance, double tol,
                                     bool check_digest) {
  VerifyReport rep;
  const Topology& topo = view.topology;
  const int n = topo.size();
  const int size = view.d_max + 1;
  const int width = view.dimension * size;
  auto fail = [&](Mismatch m, const std::string& msg) {
    if (!rep.first_mismatch) rep.first_mismatch = std::move(m);
    if (rep.message.empty()) rep.message = msg;
  };

  const IncidenceMatrix inc(n, topo.DirectedEdges());
  Eigen::MatrixXd t(inc.cols(), width);
  t.setZero();
  for (int c = 0; c < inc.cols(); ++c) {
    const DirectedEdge e = inc.columns()[c];
    const auto it = instance.noise.find(e);
    if (it == instance.noise.end()) {
      Mismatch m;
      m.what = "missing_noise";
      m.edge = e;
      fail(m, "alternative instance lacks a noise function");
      continue;
    }
    const SeparablePolynomial s = it->second.Resized(size);
    for (int d = 0; d < view.dimension; ++d)
      for (int p = 0; p < size; ++p) t(c, d * size + p) = s.part(d).coefficient(p);
  }
  const Eigen::MatrixXd sums = inc.dense() * t;

  std::vector<SeparablePolynomial> replay;
  for (int j = 0; j < n; ++j) {
    SeparablePolynomial r = instance.objectives.at(j).Resized(size);
    for (int d = 0; d < view.dimension; ++d)
      for (int p = 0; p < size; ++p) r.parts()[d].set_coefficient(p, r.part(d).coefficient(p) + sums(j, d * size + p));
    if (auto m = Compare(view.observed[j], r, tol, rep.max_residual)) {
      m->what = "obfuscated";
      m->agent = j;
      fail(*m, "obfuscated objective of agent " + std::to_string(j) + " differs");
    }
    replay.push_back(std::move(r));
  }
  for (const auto& [a, f] : view.local) {
    if (auto m = Compare(f, instance.objectives.at(a), tol, rep.max_residual)) {
      m->what = "local";
      m->agent = a;
      fail(*m, "coalition objective of agent " + std::to_string(a) + " differs");
    }
  }
  for (const auto& [edge, s] : view.incident) {
    const auto it = instance.noise.find(edge);
    if (it == instance.noise.end()) continue;
    if (auto m = Compare(s, it->second, tol, rep.max_residual)) {
      m->what = "incident_noise";
      m->edge = edge;
      fail(*m, "observed noise on link " + std::to_string(edge.from) + "->" + std::to_string(edge.to) + " differs");
    }
  }
  rep.pass = !rep.first_mismatch.has_value();

  if (rep.pass && check_digest && view.max_iter > 0) {
    // Coefficients equal within tolerance are replaced by the observed value
    // so the replayed run evaluates identical polynomials.
    std::vector<Objective> objs;
    for (int j = 0; j < n; ++j) {
      SeparablePolynomial snapped = replay[j];
      for (int d = 0; d < view.dimension; ++d)
        for (int p = 0; p < size; ++p) {
          const double seen = view.observed[j].part(d).coefficient(p);
          if (std::abs(snapped.part(d).coefficient(p) - seen) <= tol) snapped.parts()[d].set_coefficient(p, seen);
        }
      objs.push_back(Objective::FromPolynomial(snapped));
    }
    RunOptions opt;
    opt.algorithm = Algorithm::kDgd;
    opt.schedule = view.schedule;
    opt.max_iter = view.max_iter;
    opt.init = view.init;
    const ExecutionTrace rerun = Run(GlobalProblem(std::move(objs), view.box), topo, view.fusion, opt);
    rep.digest_checked = true;
    rep.digest_equal = rerun.StateDigest() == view.trace_digest;
    if (!rep.digest_equal) {
      rep.pass = false;
      rep.message = "replayed DGD run has a different state digest";
    }
  }
  if (rep.pass) rep.message = "all observations reproduced";
  return rep;
}

NecessityReport NecessityDemo(const AdversaryView& view, const std::vector<SeparablePolynomial>& truth, double tol) {
  const auto comps = view.topology.ComponentsWithout(view.coalition);
  if (comps.size() < 2) throw InvalidArgument("coalition is not a vertex cut; recovery demo does not apply");
  NecessityReport rep;
  rep.pass = true;
  const int size = view.d_max + 1;
  for (const auto& comp : comps) {
    ComponentRecovery rec;
    rec.agents = comp;
    rec.reconstructed = SeparablePolynomial::Zero(view.dimension, size);
    rec.truth = SeparablePolynomial::Zero(view.dimension, size);
    for (AgentId l : comp) {
      rec.reconstructed += view.observed[l];
      rec.truth += Normalize(truth.at(l), view.d_max);
      for (AgentId a : view.topology.Neighbors(l)) {
        if (!view.InCoalition(a)) continue;
        rec.reconstructed -= view.incident.at({a, l});
        rec.reconstructed += view.incident.at({l, a});
      }
    }
    rec.residual = SeparablePolynomial::MaxCoefficientGap(rec.reconstructed, rec.truth);
    rep.max_residual = std::max(rep.max_residual, rec.residual);
    if (!(rec.residual < tol)) rep.pass = false;
    rep.components.push_back(std::move(rec));
  }
  return rep;
}

Json VerifyReportToJson(const VerifyReport& r) {
  Json j{{"pass", r.pass},
         {"message", r.message},
         {"max_residual", r.max_residual},
         {"digest_checked", r.digest_checked},
         {"digest_equal", r.digest_equal}};
  j["first_mismatch"] = r.first_mismatch ? MismatchToJson(*r.first_mismatch) : Json(nullptr);
  return j;
}

Json NecessityReportToJson(const NecessityReport& r) {
  Json comps = Json::array();
  for (const auto& c : r.components) {
    comps.push_back({{"agents", c.agents},
                     {"reconstructed_sum", PolynomialToJson(c.reconstructed)},
                     {"true_sum", PolynomialToJson(c.truth)},
                     {"residual", c.residual}});
  }
  return Json{{"pass", r.pass}, {"max_residual", r.max_residual}, {"components", comps}};
}

}  // namespace rss
