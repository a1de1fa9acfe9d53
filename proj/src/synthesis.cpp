#include "pabs/synthesis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <queue>
#include <thread>

#include <gsl/gsl_multimin.h>

#include "pabs/error.hpp"

namespace pabs {

SearchBox root_box(const Cell& cell, const ScenarioConfig& cfg) {
  return {cell.y_bounds, cell.theta_bounds, cfg.search_d, cfg.search_psi};
}

namespace {

struct StepEnclosure {
  Interval dy;
  Interval dtheta;
};

StepEnclosure enclose_step(const SearchBox& b, const VehicleParams& p) {
  const Interval slope_arg = iv_div_pos(iv_scale(b.d, p.gain), p.v_f);
  const Interval raw = iv_add(b.psi, iv_atan(slope_arg));
  StepEnclosure e;
  if (p.kind == VehicleKind::Bicycle) {
    const Interval delta = iv_clamp(raw, -p.sat_limit, p.sat_limit);
    e.dy = iv_scale(iv_scale(iv_sin(iv_add(b.theta, delta)), p.v_f), p.dt);
    e.dtheta = iv_scale(iv_div_pos(iv_scale(iv_sin(delta), p.v_f), p.wheel_base), p.dt);
  } else {
    const Interval omega = iv_clamp(iv_div_pos(raw, p.dt), -p.sat_limit, p.sat_limit);
    e.dy = iv_scale(iv_scale(iv_sin(b.theta), p.v_f), p.dt);
    e.dtheta = iv_scale(omega, p.dt);
  }
  return e;
}

// q (2 x + q): sign of (x + q)^2 - x^2
Interval square_change(const Interval& x, const Interval& q) { return iv_mul(q, iv_add(iv_scale(x, 2.0), q)); }

}  // namespace

Interval enclose_error_change(const SearchBox& b, const VehicleParams& p, ErrorFn fn) {
  const StepEnclosure st = enclose_step(b, p);
  switch (fn) {
    case ErrorFn::V2:
      return square_change(b.y, st.dy);
    case ErrorFn::V3:
      return iv_add(square_change(b.y, st.dy), square_change(b.theta, st.dtheta));
    case ErrorFn::V1: {
      const double k = p.gain;
      const Interval xi = iv_div_pos(iv_scale(b.y, k), p.v_f);
      const Interval xi_next = iv_div_pos(iv_scale(iv_add(b.y, st.dy), k), p.v_f);
      const Interval e = iv_add(b.theta, iv_atan(xi));
      // atan(xi') - atan(xi) = (xi' - xi) / (1 + c^2) for some c between them
      const Interval w = iv_atan_slope(hull(xi, xi_next));
      const Interval de = iv_add(st.dtheta, iv_mul(iv_div_pos(iv_scale(st.dy, k), p.v_f), w));
      return square_change(e, de);
    }
  }
  return {};
}

Violation classify(const SearchBox& box, const VehicleParams& p, ErrorFn fn) {
  const Interval h = enclose_error_change(box, p, fn);
  if (h.hi < 0.0) return Violation::Never;
  if (h.lo >= 0.0) return Violation::Always;
  return Violation::Maybe;
}

Interval enclose_dist(const SearchBox& b, const AffineMap& m, Norm norm) {
  // z - (A (-y, -theta) + b); every variable occurs once
  const Interval e1 = iv_sub(iv_add(iv_add(b.d, iv_scale(b.y, m.A(0, 0))), iv_scale(b.theta, m.A(0, 1))), m.b(0));
  const Interval e2 = iv_sub(iv_add(iv_add(b.psi, iv_scale(b.y, m.A(1, 0))), iv_scale(b.theta, m.A(1, 1))), m.b(1));
  if (norm == Norm::LInf) return iv_max(iv_abs(e1), iv_abs(e2));
  return iv_sqrt(iv_add(iv_sqr(e1), iv_sqr(e2)));
}

double percept_distance(const Percept& z, const Percept& c, Norm norm) {
  const double a = z.d - c.d;
  const double b = z.psi - c.psi;
  return norm == Norm::LInf ? std::max(std::abs(a), std::abs(b)) : std::hypot(a, b);
}

bool unsafe_percept(const State& s, const Percept& z, const VehicleParams& p, ErrorFn fn) {
  const double before = tracking_error(fn, ground_truth_percept(s), p);
  const State next = dynamics_step(s, controller(z, p), p);
  return tracking_error(fn, ground_truth_percept(next), p) > before;
}

bool unsafe_percept(const State& s, const Percept& z, const ScenarioConfig& cfg) {
  return unsafe_percept(s, z, cfg.params, cfg.error_fn);
}

namespace {

std::vector<double> linspace(const Interval& iv, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? iv.mid() : iv.lo + (iv.hi - iv.lo) * i / (n - 1);
  if (n > 1) v.back() = iv.hi;
  return v;
}

struct Falsifier {
  const Cell& cell;
  const AffineMap& map;
  const ScenarioConfig& cfg;
  Witness best;

  void offer(const State& s, const Percept& z, double dist) {
    if (dist < best.distance) best = {s, z, dist};
  }

  // Distance from the center to the first unsafe percept along the ray at angle phi.
  double ray_hit(const State& s, double phi) {
    constexpr int kSteps = 128;
    constexpr int kBisect = 50;
    const Percept c = ball_center(s, map);
    const double dir[2] = {std::cos(phi), std::sin(phi)};
    const double lo[2] = {cfg.search_d.lo, cfg.search_psi.lo};
    const double hi[2] = {cfg.search_d.hi, cfg.search_psi.hi};
    const double org[2] = {c.d, c.psi};
    double t0 = 0.0;
    double t1 = kInf;
    for (int k = 0; k < 2; ++k) {
      if (dir[k] == 0.0) {
        if (org[k] < lo[k] || org[k] > hi[k]) return kInf;
        continue;
      }
      double a = (lo[k] - org[k]) / dir[k];
      double b = (hi[k] - org[k]) / dir[k];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    if (!(t0 <= t1)) return kInf;
    auto point = [&](double t) {
      Percept z{std::clamp(c.d + t * dir[0], lo[0], hi[0]), std::clamp(c.psi + t * dir[1], lo[1], hi[1])};
      return z;
    };
    const VehicleParams& p = cfg.params;
    const double before = tracking_error(cfg.error_fn, ground_truth_percept(s), p);
    auto bad = [&](const Percept& z) {
      const State next = dynamics_step(s, controller(z, p), p);
      return tracking_error(cfg.error_fn, ground_truth_percept(next), p) > before;
    };
    double prev = t0;
    for (int i = 0; i <= kSteps; ++i) {
      const double t = t0 + (t1 - t0) * i / kSteps;
      if (!bad(point(t))) {
        prev = t;
        continue;
      }
      double good_t = prev;
      double bad_t = t;
      if (i == 0) good_t = bad_t;
      for (int j = 0; j < kBisect && good_t < bad_t; ++j) {
        const double m = 0.5 * (good_t + bad_t);
        if (m <= good_t || m >= bad_t) break;
        (bad(point(m)) ? bad_t : good_t) = m;
      }
      const Percept z = point(bad_t);
      const double dist = percept_distance(z, c, cfg.norm);
      offer(s, z, dist);
      return dist;
    }
    return kInf;
  }

  State clamp_state(double y, double theta) const {
    return {0.0, std::clamp(y, cell.y_bounds.lo, cell.y_bounds.hi),
            std::clamp(theta, cell.theta_bounds.lo, cell.theta_bounds.hi)};
  }

  static double nm_objective(const gsl_vector* v, void* self) {
    auto* f = static_cast<Falsifier*>(self);
    const State s = f->clamp_state(gsl_vector_get(v, 0), gsl_vector_get(v, 1));
    const double r = f->ray_hit(s, gsl_vector_get(v, 2));
    return std::isfinite(r) ? r : 1e3;
  }

  void descend(const State& s0, double phi0) {
    const int iters = cfg.solver.nm_iters;
    if (iters <= 0) return;
    gsl_multimin_function fn{&nm_objective, 3, this};
    gsl_vector* x = gsl_vector_alloc(3);
    gsl_vector* step = gsl_vector_alloc(3);
    gsl_vector_set(x, 0, s0.y);
    gsl_vector_set(x, 1, s0.theta);
    gsl_vector_set(x, 2, phi0);
    gsl_vector_set(step, 0, std::max(cell.y_bounds.width() / 4.0, 1e-6));
    gsl_vector_set(step, 1, std::max(cell.theta_bounds.width() / 4.0, 1e-6));
    gsl_vector_set(step, 2, 0.1);
    gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
    gsl_multimin_fminimizer_set(nm, &fn, x, step);
    for (int i = 0; i < iters; ++i) {
      if (gsl_multimin_fminimizer_iterate(nm) != GSL_SUCCESS) break;
      if (gsl_multimin_fminimizer_size(nm) < 1e-10) break;
    }
    gsl_multimin_fminimizer_free(nm);
    gsl_vector_free(step);
    gsl_vector_free(x);
  }

  Witness run() {
    const int g = cfg.solver.falsifier_grid;
    const VehicleParams& p = cfg.params;
    const auto ys = linspace(cell.y_bounds, g);
    const auto ts = linspace(cell.theta_bounds, g);
    const auto ds = linspace(cfg.search_d, g);
    const auto ps = linspace(cfg.search_psi, g);
    std::vector<Percept> zs;
    std::vector<Control> us;
    for (double d : ds)
      for (double psi : ps) {
        zs.push_back({d, psi});
        us.push_back(controller({d, psi}, p));
      }

    struct Seed {
      double dist;
      State s;
      Percept z;
    };
    std::vector<Seed> seeds;
    for (double y : ys) {
      for (double th : ts) {
        const State s{0.0, y, th};
        const Percept c = ball_center(s, map);
        const double before = tracking_error(cfg.error_fn, ground_truth_percept(s), p);
        const Percept cz{std::clamp(c.d, cfg.search_d.lo, cfg.search_d.hi),
                         std::clamp(c.psi, cfg.search_psi.lo, cfg.search_psi.hi)};
        if (unsafe_percept(s, cz, p, cfg.error_fn)) offer(s, cz, percept_distance(cz, c, cfg.norm));
        Seed local{kInf, s, {}};
        for (std::size_t k = 0; k < zs.size(); ++k) {
          const State next = dynamics_step(s, us[k], p);
          if (!(tracking_error(cfg.error_fn, ground_truth_percept(next), p) > before)) continue;
          const double dist = percept_distance(zs[k], c, cfg.norm);
          offer(s, zs[k], dist);
          if (dist < local.dist) local = {dist, s, zs[k]};
        }
        if (std::isfinite(local.dist)) seeds.push_back(local);
      }
    }
    if (best.distance == 0.0 || seeds.empty()) return best;

    std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) { return a.dist < b.dist; });
    constexpr std::size_t kSeeds = 4;
    for (std::size_t i = 0; i < std::min(kSeeds, seeds.size()); ++i) {
      const Percept c = ball_center(seeds[i].s, map);
      const double phi = std::atan2(seeds[i].z.psi - c.psi, seeds[i].z.d - c.d);
      ray_hit(seeds[i].s, phi);
      descend(seeds[i].s, phi);
    }
    // polish around the incumbent, which may come from another seed's descent
    if (std::isfinite(best.distance) && best.distance > 0.0) {
      const Witness w = best;
      const Percept c = ball_center(w.state, map);
      descend(w.state, std::atan2(w.percept.psi - c.psi, w.percept.d - c.d));
    }
    return best;
  }
};

}  // namespace

Witness falsify(const Cell& cell, const AffineMap& map, const ScenarioConfig& cfg) {
  Falsifier f{cell, map, cfg, {}};
  return f.run();
}

BnbOutcome branch_and_bound(const BnbProblem& prob) {
  struct Node {
    double key;
    int depth;
    SearchBox box;
  };
  auto later = [](const Node& a, const Node& b) {
    if (a.key != b.key) return a.key > b.key;
    return a.depth < b.depth;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(later)> queue(later);

  BnbOutcome out;
  const Interval root_dist = prob.dist(prob.root);
  if (!prob.prune(prob.root, root_dist)) queue.push({root_dist.lo, 0, prob.root});

  while (!queue.empty()) {
    if (out.nodes >= prob.max_nodes) {
      out.kind = BnbOutcome::Kind::Budget;
      out.lower = queue.top().key;
      return out;
    }
    const Node node = queue.top();
    queue.pop();
    ++out.nodes;

    int dim = -1;
    double widest = prob.floor;
    for (int k = 0; k < 4; ++k) {
      const double w = node.box[k].width();
      if (w > widest) {
        widest = w;
        dim = k;
      }
    }
    if (dim < 0) {
      out.kind = BnbOutcome::Kind::Terminal;
      out.lower = node.key;
      out.terminal = node.box;
      return out;
    }
    const auto [left, right] = bisect(node.box[dim]);
    for (const Interval& half : {left, right}) {
      SearchBox child = node.box;
      child[dim] = half;
      const Interval dist = prob.dist(child);
      if (prob.prune(child, dist)) continue;
      queue.push({std::max(node.key, dist.lo), node.depth + 1, child});
    }
  }
  out.kind = BnbOutcome::Kind::Exhausted;
  out.lower = kInf;
  return out;
}

DistBounds min_dist_certified(const Cell& cell, const AffineMap& map, const ScenarioConfig& cfg) {
  DistBounds res;
  res.witness = falsify(cell, map, cfg);
  res.upper = res.witness.distance;

  const VehicleParams& p = cfg.params;
  const ErrorFn fn = cfg.error_fn;
  const double upper = res.upper;
  BnbProblem prob;
  prob.root = root_box(cell, cfg);
  prob.floor = cfg.solver.min_box_width;
  prob.max_nodes = cfg.solver.max_nodes;
  prob.dist = [&](const SearchBox& b) { return enclose_dist(b, map, cfg.norm); };
  prob.prune = [&](const SearchBox& b, const Interval& dist) {
    return dist.lo > upper || classify(b, p, fn) == Violation::Never;
  };
  const BnbOutcome out = branch_and_bound(prob);
  res.nodes = out.nodes;
  switch (out.kind) {
    case BnbOutcome::Kind::Terminal:
      res.lower = out.lower;
      break;
    case BnbOutcome::Kind::Exhausted:
      // only reachable without a falsifier hit: nothing unsafe in the search box
      res.lower = upper;
      break;
    case BnbOutcome::Kind::Budget: {
      const double root_key = enclose_dist(prob.root, map, cfg.norm).lo;
      if (!(out.lower > root_key))
        throw SolverBudget("node budget of " + std::to_string(prob.max_nodes) + " exhausted without progress");
      res.lower = out.lower;
      break;
    }
  }
  res.lower = std::min(res.lower, res.upper);
  return res;
}

double safe_radius(double lower, double upper, const SolverConfig& solver) {
  (void)upper;
  if (std::isinf(lower)) return kInf;
  if (solver.margin == MarginPolicy::FixedEpsilon) return std::max(0.0, lower - solver.epsilon);
  return std::max(0.0, lower);
}

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Certified: return "certified";
    case CellStatus::Fallback: return "fallback";
    case CellStatus::Infeasible: return "infeasible";
  }
  return "certified";
}

CellStatus parse_cell_status(std::string_view s) {
  if (s == "certified") return CellStatus::Certified;
  if (s == "fallback") return CellStatus::Fallback;
  if (s == "infeasible") return CellStatus::Infeasible;
  throw ParseError("unknown cell status '" + std::string(s) + "'");
}

std::optional<std::size_t> Abstraction::locate(const State& s) const {
  const Partition part(scenario.partition);
  return part.locate_index(s);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::clamp<std::size_t>(threads < 1 ? 1 : threads, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

CellAbstraction certify_cell(const Cell& cell, const AffineMap& map, const ScenarioConfig& cfg) {
  CellAbstraction ca;
  ca.cell = cell;
  ca.map = map;
  const DistBounds b = min_dist_certified(cell, map, cfg);
  ca.lower = b.lower;
  ca.upper = b.upper;
  ca.nodes = b.nodes;
  ca.radius = safe_radius(b.lower, b.upper, cfg.solver);
  ca.status = std::isinf(ca.radius) ? CellStatus::Infeasible : CellStatus::Certified;
  return ca;
}

SynthesisResult compute_abstraction(const ScenarioConfig& cfg, const Dataset& data, int threads,
                                    const std::function<void(std::size_t, std::size_t)>& progress) {
  cfg.validate();
  const Partition part(cfg.partition);
  const auto& cells = part.cells();

  SynthesisResult result;
  result.abstraction.scenario = cfg;
  std::vector<std::vector<PerceptPair>> grouped(cells.size());
  for (const auto& s : data.samples) {
    if (!cfg.search_d.contains(s.perceived.d) || !cfg.search_psi.contains(s.perceived.psi))
      throw ConfigError("dataset percept (" + std::to_string(s.perceived.d) + ", " + std::to_string(s.perceived.psi) +
                        ") lies outside percept_search");
    const auto idx = part.locate_index(s.state);
    if (!idx) {
      ++result.outside_domain;
      continue;
    }
    grouped[*idx].emplace_back(s.truth, s.perceived);
  }

  std::vector<CellAbstraction> out(cells.size());
  std::vector<std::optional<std::string>> errors(cells.size());
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const Cell& cell = cells[i];
    const std::string ctx = "cell (" + std::to_string(cell.iy) + ", " + std::to_string(cell.itheta) + ")";
    AffineMap map;
    bool fallback = false;
    try {
      map = fit_affine(grouped[i], ctx);
    } catch (const DegenerateFit& e) {
      fallback = true;
      errors[i] = e.what();
    }
    CellAbstraction ca;
    try {
      ca = certify_cell(cell, map, cfg);
    } catch (const SolverBudget& e) {
      ca.cell = cell;
      ca.map = map;
      ca.radius = 0.0;
      ca.lower = 0.0;
      ca.status = CellStatus::Fallback;
      errors[i] = errors[i] ? *errors[i] + "; " + ctx + ": " + e.what() : ctx + ": " + e.what();
    }
    ca.samples = grouped[i].size();
    ca.fit_fallback = fallback;
    if (fallback && ca.status == CellStatus::Certified) ca.status = CellStatus::Fallback;
    out[i] = ca;
    if (progress) {
      const std::lock_guard lock(progress_mutex);
      progress(++done, cells.size());
    }
  });

  result.abstraction.cells = std::move(out);
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (errors[i]) result.errors.push_back({i, cells[i].iy, cells[i].itheta, *errors[i]});
  return result;
}

}  // namespace pabs
