#include "pabs/verifier.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <regex>

#include "pabs/error.hpp"

namespace pabs {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Counterexample: return "counterexample";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "pass";
}

namespace {

bool in_ball(const Percept& z, const Percept& c, double r, Norm norm) {
  if (std::isinf(r)) return true;
  return percept_distance(z, c, norm) < r;
}

bool in_search_box(const Percept& z, const ScenarioConfig& cfg) {
  return cfg.search_d.contains(z.d) && cfg.search_psi.contains(z.psi);
}

// Grid search for a concrete violating point inside a terminal box.
std::optional<VerificationWitness> search_box(const SearchBox& box, const CellAbstraction& ca,
                                              const ScenarioConfig& cfg) {
  constexpr int n = 5;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) {
          auto at = [](const Interval& iv, int i) { return iv.lo + iv.width() * i / (n - 1); };
          const State s{0.0, at(box.y, a), at(box.theta, b)};
          const Percept z{at(box.d, c), at(box.psi, d)};
          if (!in_ball(z, ball_center(s, ca.map), ca.radius, cfg.norm)) continue;
          if (!unsafe_percept(s, z, cfg)) continue;
          return VerificationWitness{ca.cell.iy, ca.cell.itheta, s, z, dynamics_step(s, controller(z, cfg.params), cfg.params),
                                     "invariant", 0, {}};
        }
  return std::nullopt;
}

struct CellCheck {
  Verdict verdict = Verdict::Pass;
  std::optional<VerificationWitness> witness;
  std::int64_t nodes = 0;
};

CellCheck check_cell(const CellAbstraction& ca, const ScenarioConfig& cfg) {
  CellCheck out;
  if (ca.radius == 0.0) return out;

  const Witness w = falsify(ca.cell, ca.map, cfg);
  if (w.distance < ca.radius && in_ball(w.percept, ball_center(w.state, ca.map), ca.radius, cfg.norm)) {
    out.verdict = Verdict::Counterexample;
    out.witness = VerificationWitness{ca.cell.iy, ca.cell.itheta, w.state, w.percept,
                                      dynamics_step(w.state, controller(w.percept, cfg.params), cfg.params),
                                      "invariant", 0, {}};
    return out;
  }

  const double r = ca.radius;
  BnbProblem prob;
  prob.root = root_box(ca.cell, cfg);
  prob.floor = cfg.solver.min_box_width;
  prob.max_nodes = cfg.solver.max_nodes;
  prob.dist = [&](const SearchBox& b) { return enclose_dist(b, ca.map, cfg.norm); };
  prob.prune = [&](const SearchBox& b, const Interval& dist) {
    return dist.lo >= r || classify(b, cfg.params, cfg.error_fn) == Violation::Never;
  };
  const BnbOutcome res = branch_and_bound(prob);
  out.nodes = res.nodes;
  if (res.kind == BnbOutcome::Kind::Exhausted) return out;
  if (res.kind == BnbOutcome::Kind::Terminal) {
    out.witness = search_box(*res.terminal, ca, cfg);
    if (out.witness) {
      out.verdict = Verdict::Counterexample;
      return out;
    }
  }
  out.verdict = Verdict::Inconclusive;
  return out;
}

}  // namespace

VerificationReport check_induction(const Abstraction& abst, int threads) {
  const ScenarioConfig& cfg = abst.scenario;
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < abst.cells.size(); ++i)
    if (abst.cells[i].status != CellStatus::Infeasible) todo.push_back(i);

  std::vector<CellCheck> results(todo.size());
  parallel_for(todo.size(), threads, [&](std::size_t k) { results[k] = check_cell(abst.cells[todo[k]], cfg); });

  VerificationReport rep;
  rep.cells_checked = todo.size();
  for (const auto& r : results) {
    rep.nodes += r.nodes;
    if (rep.verdict == Verdict::Counterexample) continue;
    if (r.verdict == Verdict::Counterexample) {
      rep.verdict = Verdict::Counterexample;
      rep.witness = r.witness;
    } else if (r.verdict == Verdict::Inconclusive) {
      rep.verdict = Verdict::Inconclusive;
    }
  }
  return rep;
}

bool replay_induction_witness(const Abstraction& abst, const VerificationWitness& w) {
  const ScenarioConfig& cfg = abst.scenario;
  const Partition part(cfg.partition);
  if (w.iy < 0 || w.iy >= cfg.partition.n_y || w.itheta < 0 || w.itheta >= cfg.partition.n_theta) return false;
  const CellAbstraction& ca = abst.cells[part.index(w.iy, w.itheta)];
  if (!ca.cell.contains(w.state.y, w.state.theta)) return false;
  if (!in_ball(w.percept, ball_center(w.state, ca.map), ca.radius, cfg.norm) || !in_search_box(w.percept, cfg))
    return false;
  const State next = dynamics_step(w.state, controller(w.percept, cfg.params), cfg.params);
  return next.y == w.next.y && next.theta == w.next.theta && unsafe_percept(w.state, w.percept, cfg);
}

Adversary parse_adversary(std::string_view text) {
  static const std::regex worst(R"(^worst(?:-?grid)?(?:\((\d+)\)|:(\d+))?$)");
  static const std::regex random(R"(^random(?:\((\d+)\s*,\s*(\d+)\)|:(\d+):(\d+))?$)");
  const std::string s(text);
  std::smatch m;
  Adversary a;
  if (std::regex_match(s, m, worst)) {
    a.kind = Adversary::Kind::WorstGrid;
    if (m[1].matched) a.k = std::stoi(m[1]);
    if (m[2].matched) a.k = std::stoi(m[2]);
  } else if (std::regex_match(s, m, random)) {
    a.kind = Adversary::Kind::Random;
    if (m[1].matched) a.seed = std::stoull(m[1]), a.n = std::stoi(m[2]);
    if (m[3].matched) a.seed = std::stoull(m[3]), a.n = std::stoi(m[4]);
  } else {
    throw ConfigError("unknown adversary '" + s + "' (expected worst(k) or random(seed,n))");
  }
  if (a.k < 1 || a.n < 1) throw ConfigError("adversary counts must be positive");
  return a;
}

namespace {

// Candidate percepts on the boundary of the ball (or of the percept box when r is infinite).
std::vector<Percept> boundary_candidates(const Percept& c, double r, int k, const ScenarioConfig& cfg) {
  std::vector<Percept> out;
  if (std::isinf(r)) {
    const double ds[3] = {cfg.search_d.lo, cfg.search_d.mid(), cfg.search_d.hi};
    const double ps[3] = {cfg.search_psi.lo, cfg.search_psi.mid(), cfg.search_psi.hi};
    for (double d : ds)
      for (double p : ps) out.push_back({d, p});
    return out;
  }
  out.push_back(c);
  const double rr = r * (1.0 - 1e-9);
  for (int i = 0; i < k; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / k;
    Percept z;
    if (cfg.norm == Norm::LInf) {
      const double s = std::max(std::abs(std::cos(phi)), std::abs(std::sin(phi)));
      z = {c.d + rr * std::cos(phi) / s, c.psi + rr * std::sin(phi) / s};
    } else {
      z = {c.d + rr * std::cos(phi), c.psi + rr * std::sin(phi)};
    }
    z.d = std::clamp(z.d, cfg.search_d.lo, cfg.search_d.hi);
    z.psi = std::clamp(z.psi, cfg.search_psi.lo, cfg.search_psi.hi);
    if (in_ball(z, c, r, cfg.norm)) out.push_back(z);
  }
  return out;
}

std::optional<Percept> random_percept(const Percept& c, double r, const ScenarioConfig& cfg, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Percept z;
    if (std::isinf(r)) {
      z = {cfg.search_d.lo + cfg.search_d.width() * u(rng), cfg.search_psi.lo + cfg.search_psi.width() * u(rng)};
    } else if (cfg.norm == Norm::LInf) {
      z = {c.d + r * (2.0 * u(rng) - 1.0), c.psi + r * (2.0 * u(rng) - 1.0)};
    } else {
      const double rad = r * std::sqrt(u(rng));
      const double phi = 2.0 * std::numbers::pi * u(rng);
      z = {c.d + rad * std::cos(phi), c.psi + rad * std::sin(phi)};
    }
    if (in_search_box(z, cfg) && in_ball(z, c, r, cfg.norm)) return z;
  }
  return std::nullopt;
}

struct Rollout {
  std::optional<VerificationWitness> witness;
  std::int64_t executions = 0;
  std::int64_t blocked = 0;
  std::int64_t samples = 0;
  std::int64_t unsafe = 0;
  std::int64_t left_domain = 0;
};

Rollout roll(const Abstraction& abst, const Partition& part, const State& s0, int horizon, const Adversary& adv,
             std::size_t point_index) {
  const ScenarioConfig& cfg = abst.scenario;
  const VehicleParams& p = cfg.params;
  Rollout out;
  const int runs = adv.kind == Adversary::Kind::Random ? adv.n : 1;
  std::seed_seq seq{static_cast<std::uint32_t>(adv.seed), static_cast<std::uint32_t>(adv.seed >> 32),
                    static_cast<std::uint32_t>(point_index)};
  std::mt19937_64 rng(seq);
  for (int run = 0; run < runs; ++run) {
    ++out.executions;
    State s = s0;
    for (int step = 1; step <= horizon; ++step) {
      const auto idx = part.locate_index(s);
      if (!idx) {
        // s0 is in the domain and successors are checked below, so this is defensive
        ++out.left_domain;
        if (!out.witness) out.witness = VerificationWitness{-1, -1, s, {}, s, "left_domain", step - 1, s0};
        break;
      }
      const CellAbstraction& ca = abst.cells[*idx];
      const Percept c = ball_center(s, ca.map);
      if (ca.radius == 0.0) {
        ++out.blocked;
        break;
      }
      Percept z;
      if (adv.kind == Adversary::Kind::WorstGrid) {
        double worst = -kInf;
        for (const Percept& cand : boundary_candidates(c, ca.radius, adv.k, cfg)) {
          ++out.samples;
          const State next = dynamics_step(s, controller(cand, p), p);
          const double v = tracking_error(cfg.error_fn, ground_truth_percept(next), p);
          if (v > worst) worst = v, z = cand;
        }
        if (!std::isfinite(worst)) {
          ++out.blocked;
          break;
        }
      } else {
        const auto drawn = random_percept(c, ca.radius, cfg, rng);
        ++out.samples;
        if (!drawn) {
          ++out.blocked;
          break;
        }
        z = *drawn;
      }
      const State next = dynamics_step(s, controller(z, p), p);
      const auto next_idx = part.locate_index(next);
      const bool unsafe = in_unsafe(next, cfg.unsafe);
      if (unsafe || !next_idx) {
        ++(unsafe ? out.unsafe : out.left_domain);
        // an unsafe trace outranks one that merely left the domain
        if (!out.witness || (unsafe && out.witness->reason != "unsafe"))
          out.witness = VerificationWitness{ca.cell.iy, ca.cell.itheta, s, z, next,
                                            unsafe ? "unsafe" : "left_domain", step, s0};
        break;
      }
      s = next;
    }
  }
  return out;
}

}  // namespace

VerificationReport bounded_reach(const Abstraction& abst, int horizon, const Adversary& adv, int grid_per_axis,
                                 int threads) {
  if (horizon < 0) throw ConfigError("horizon must be >= 0");
  if (grid_per_axis < 1) throw ConfigError("initial grid needs at least one point per axis");
  const ScenarioConfig& cfg = abst.scenario;
  const Partition part(cfg.partition);
  std::vector<State> starts;
  for (int i = 0; i < grid_per_axis; ++i)
    for (int j = 0; j < grid_per_axis; ++j) {
      auto at = [&](const Interval& iv, int k) {
        return grid_per_axis == 1 ? iv.mid() : (k == grid_per_axis - 1 ? iv.hi : iv.lo + iv.width() * k / (grid_per_axis - 1));
      };
      starts.push_back({0.0, at(cfg.initial_y, i), at(cfg.initial_theta, j)});
    }

  VerificationReport rep;
  for (const State& s : starts) {
    if (in_unsafe(s, cfg.unsafe)) {
      rep.verdict = Verdict::Counterexample;
      rep.witness = VerificationWitness{-1, -1, s, {}, s, "unsafe", 0, s};
      return rep;
    }
  }

  std::vector<Rollout> results(starts.size());
  parallel_for(starts.size(), threads, [&](std::size_t i) { results[i] = roll(abst, part, starts[i], horizon, adv, i); });
  for (const auto& r : results) {
    rep.executions += r.executions;
    rep.blocked += r.blocked;
    rep.samples += r.samples;
    rep.unsafe += r.unsafe;
    rep.left_domain += r.left_domain;
    if (!r.witness) continue;
    rep.verdict = Verdict::Counterexample;
    if (!rep.witness || (r.witness->reason == "unsafe" && rep.witness->reason != "unsafe")) rep.witness = r.witness;
  }
  return rep;
}

bool replay_reach_witness(const Abstraction& abst, const VerificationWitness& w) {
  const ScenarioConfig& cfg = abst.scenario;
  if (w.step == 0) return in_unsafe(w.state, cfg.unsafe);
  const Partition part(cfg.partition);
  const auto idx = part.locate_index(w.state);
  if (!idx) return false;
  const CellAbstraction& ca = abst.cells[*idx];
  if (!in_ball(w.percept, ball_center(w.state, ca.map), ca.radius, cfg.norm)) return false;
  const State next = dynamics_step(w.state, controller(w.percept, cfg.params), cfg.params);
  if (next.y != w.next.y || next.theta != w.next.theta) return false;
  return in_unsafe(next, cfg.unsafe) || !part.locate_index(next);
}

namespace {

nlohmann::json state_json(const State& s) { return {s.x, s.y, s.theta}; }

}  // namespace

nlohmann::json report_to_json(const VerificationReport& r) {
  nlohmann::json j = {{"verdict", to_string(r.verdict)},
                      {"cells_checked", r.cells_checked},
                      {"effort",
                       {{"nodes", r.nodes}, {"samples", r.samples}, {"executions", r.executions}, {"blocked", r.blocked}}},
                      {"unsafe_executions", r.unsafe},
                      {"left_domain_executions", r.left_domain}};
  if (!r.note.empty()) j["note"] = r.note;
  if (r.witness) {
    const auto& w = *r.witness;
    j["witness"] = {{"cell", {w.iy, w.itheta}},
                    {"state", state_json(w.state)},
                    {"percept", {w.percept.d, w.percept.psi}},
                    {"next_state", state_json(w.next)},
                    {"reason", w.reason},
                    {"step", w.step},
                    {"initial", state_json(w.initial)}};
  }
  return j;
}

}  // namespace pabs
