// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pabs/artifact_io.hpp"
#include "pabs/contracts.hpp"
#include "pabs/error.hpp"
#include "pabs/precision.hpp"
#include "pabs/regression.hpp"
#include "pabs/synthesis.hpp"
#include "pabs/verifier.hpp"
#include "support/oracle.hpp"

namespace fs = std::filesystem;
using namespace pabs;

namespace {

const int kThreads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

double pick(std::mt19937_64& rng, const Interval& iv) {
  return std::uniform_real_distribution<double>(iv.lo, iv.hi)(rng);
}

Dataset preset_data(const ScenarioFile& sf, std::uint64_t seed) {
  const Partition part(sf.config.partition);
  std::vector<int> ids;
  for (const auto& e : sf.perception.envs) ids.push_back(e.env.id);
  return sample_dataset(part.cells(), ids, sf.perception, sf.per_cell, seed, kThreads);
}

Abstraction synthesize(const ScenarioFile& sf) {
  const SynthesisResult res = compute_abstraction(sf.config, preset_data(sf, sf.seed), kThreads);
  if (!res.errors.empty()) throw Error("synthesis reported " + std::to_string(res.errors.size()) + " cell errors");
  return res.abstraction;
}

ScenarioFile with_error_fn(ScenarioFile sf, ErrorFn fn) {
  sf.config.error_fn = fn;
  return sf;
}

const Abstraction& gem_v1() {
  static const Abstraction a = synthesize(gem_preset());
  return a;
}

const Abstraction& agbot_v1() {
  static const Abstraction a = synthesize(agbot_preset());
  return a;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PABS_EXE) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "pabs_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Uniform draw from the ball of radius r (open, up to measure zero) around c.
Percept draw_in_ball(std::mt19937_64& rng, const Percept& c, double r, Norm norm) {
  if (norm == Norm::LInf) return {c.d + pick(rng, {-r, r}), c.psi + pick(rng, {-r, r})};
  const double rho = r * std::sqrt(pick(rng, {0, 1}));
  const double phi = pick(rng, {0, 2 * std::numbers::pi});
  return {c.d + rho * std::cos(phi), c.psi + rho * std::sin(phi)};
}

// Draws n (state, percept) pairs per cell from the percept set R = ball ∩ search box
// and counts invariant violations.
std::int64_t in_ball_violations(const Abstraction& a, int n, std::uint64_t seed, std::int64_t& drawn) {
  const ScenarioConfig& cfg = a.scenario;
  std::int64_t bad = 0;
  std::mt19937_64 rng(seed);
  for (const auto& c : a.cells) {
    if (!(c.radius > 0.0)) continue;  // empty percept set
    for (int i = 0; i < n; ++i) {
      const State s{0, pick(rng, c.cell.y_bounds), pick(rng, c.cell.theta_bounds)};
      Percept z;
      if (std::isinf(c.radius)) {
        z = {pick(rng, cfg.search_d), pick(rng, cfg.search_psi)};
      } else {
        do z = draw_in_ball(rng, ball_center(s, c.map), c.radius, cfg.norm);
        while (!cfg.search_d.contains(z.d) || !cfg.search_psi.contains(z.psi));
      }
      ++drawn;
      if (unsafe_percept(s, z, cfg)) ++bad;
    }
  }
  return bad;
}

// 1. Soundness of freshly synthesized GEM and AgBot artifacts.
void soundness(Outcome& o) {
  for (const auto* a : {&gem_v1(), &agbot_v1()}) {
    const VerificationReport r = check_induction(*a, kThreads);
    std::int64_t drawn = 0;
    const std::int64_t bad = in_ball_violations(*a, 100000, 11, drawn);
    o.detail << ' ' << a->scenario.name << ": induction " << to_string(r.verdict) << ", " << bad << " violations in "
             << drawn << " draws;";
    o.require(r.verdict == Verdict::Pass, a->scenario.name + " induction");
    o.require(bad == 0, a->scenario.name + " in-ball draws");
  }
}

// 2. Certified lower bound vs falsifier upper bound, and point cells vs the 2D oracle.
void oracle_agreement(Outcome& o) {
  std::mt19937_64 rng(5);
  double worst_gap = 0.0;
  int finite = 0;
  for (int k = 0; k < 10; ++k) {
    const Abstraction& a = k % 2 == 0 ? gem_v1() : agbot_v1();
    const auto& c = a.cells[std::uniform_int_distribution<std::size_t>(0, a.cells.size() - 1)(rng)];
    const DistBounds b = min_dist_certified(c.cell, c.map, a.scenario);
    o.require(b.lower <= b.upper, "lower <= upper in " + a.scenario.name + " cell (" + std::to_string(c.cell.iy) + ", " +
                                      std::to_string(c.cell.itheta) + ")");
    if (std::isfinite(b.upper)) {
      ++finite;
      const double gap = b.upper > 0.0 ? (b.upper - b.lower) / b.upper : 0.0;
      worst_gap = std::max(worst_gap, gap);
      o.require(b.upper - b.lower <= 0.1 * b.upper, "relative gap in " + a.scenario.name + " cell (" +
                                                        std::to_string(c.cell.iy) + ", " +
                                                        std::to_string(c.cell.itheta) + ")");
    }
  }
  o.detail << " 10 cells, " << finite << " with finite upper bound, worst relative gap " << worst_gap << ';';

  // point-degenerate cells at a finer solver floor
  double worst_err = 0.0;
  for (ScenarioConfig cfg : {gem_preset().config, agbot_preset().config}) {
    cfg.solver.min_box_width = 1e-5;
    const Partition part(cfg.partition);
    for (int k = 0; k < 3; ++k) {
      const State s{0, pick(rng, cfg.partition.y_range), pick(rng, cfg.partition.theta_range)};
      const Cell cell{0, 0, {s.y, s.y}, {s.theta, s.theta}};
      const double ref = oracle::min_unsafe_distance_2d(s, ground_truth_percept(s), cfg);
      const DistBounds b = min_dist_certified(cell, AffineMap::identity(), cfg);
      const double err = std::isinf(ref) && std::isinf(b.lower) ? 0.0 : std::abs(b.lower - ref);
      worst_err = std::max(worst_err, err);
      o.require(err <= 1e-4, cfg.name + " point cell y=" + std::to_string(s.y) + " theta=" + std::to_string(s.theta));
    }
  }
  o.detail << " 6 point cells, worst |certified - oracle| " << worst_err << " (tolerance 1e-4)";
}

// Minimum Euclidean distance from the truth-image box of a cell to psi = -atan(K d / v).
double curve_distance(const Cell& c, const VehicleParams& p) {
  const Interval d{-c.y_bounds.hi, -c.y_bounds.lo};
  const Interval psi{-c.theta_bounds.hi, -c.theta_bounds.lo};
  double best = kInf;
  for (int i = 0; i <= 60000; ++i) {
    const double x = -3.0 + 6.0 * i / 60000;
    const double y = -std::atan2(p.gain * x, p.v_f);
    const double dx = std::max({d.lo - x, 0.0, x - d.hi});
    const double dy = std::max({psi.lo - y, 0.0, y - psi.hi});
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

bool curve_intersects(const Cell& c, const VehicleParams& p) {
  // psi on the curve decreases in d, so its range over the cell's d interval is an interval
  const double d_lo = -c.y_bounds.hi, d_hi = -c.y_bounds.lo;
  const double hi = -std::atan2(p.gain * d_lo, p.v_f), lo = -std::atan2(p.gain * d_hi, p.v_f);
  return lo <= -c.theta_bounds.lo && -c.theta_bounds.hi <= hi;
}

std::string radius_str(double r) {
  std::ostringstream os;
  os << std::setprecision(4) << r;
  return os.str();
}

// 3. Low-radius band locations for V1, V2 and V3.
void white_bands(Outcome& o) {
  {
    const Abstraction& a = gem_v1();
    double band_max = 0.0, far_min = kInf;
    int band = 0, far = 0;
    for (const auto& c : a.cells) {
      if (curve_intersects(c.cell, a.scenario.params)) band_max = std::max(band_max, c.radius), ++band;
      if (curve_distance(c.cell, a.scenario.params) >= 0.1) far_min = std::min(far_min, c.radius), ++far;
    }
    o.detail << " V1: " << band << " curve cells max r " << radius_str(band_max) << ", " << far
             << " far cells min r " << radius_str(far_min) << ';';
    o.require(band > 0 && far > 0 && band_max <= far_min, "V1 band");
  }
  auto relocated = [&](ErrorFn fn, const std::function<bool(const Cell&)>& in_band, const std::string& label) {
    const Abstraction a = synthesize(with_error_fn(gem_preset(), fn));
    double band_max = 0.0, rest_min = kInf;
    int band = 0;
    for (const auto& c : a.cells) {
      if (in_band(c.cell)) band_max = std::max(band_max, c.radius), ++band;
      else rest_min = std::min(rest_min, c.radius);
    }
    o.detail << ' ' << label << ": " << band << " band cells max r " << radius_str(band_max) << ", others min r "
             << radius_str(rest_min) << ';';
    o.require(band > 0 && band_max <= rest_min, label + " band");
  };
  relocated(ErrorFn::V2, [](const Cell& c) { return c.y_bounds.contains(0.0); }, "V2");
  relocated(
      ErrorFn::V3, [](const Cell& c) { return c.y_bounds.contains(0.0) && c.theta_bounds.contains(0.0); }, "V3");
}

// 4. Refinement 8x5 -> 8x10 -> 8x20.
void refinement(Outcome& o) {
  const ScenarioFile base = gem_preset();
  // noiseless single-environment training data: every cell recovers the same map,
  // so differences in radius come from the partition alone
  SyntheticPerceptionModel train_model;
  train_model.envs = {base.perception.env(0)};
  SyntheticPerceptionModel test_model = train_model;
  test_model.noise_bound = base.perception.noise_bound;

  PartitionSpec finest = base.config.partition;
  finest.n_theta = 20;
  // equal counts per finest cell, so every coarser cell score is the mean of its children
  const Dataset test = sample_dataset(Partition(finest).cells(), {0}, test_model, 40, 99, kThreads);

  std::vector<Abstraction> levels;
  std::vector<double> means;
  for (int n_theta : {5, 10, 20}) {
    ScenarioConfig cfg = base.config;
    cfg.partition.n_theta = n_theta;
    const Partition part(cfg.partition);
    const Dataset train = sample_dataset(part.cells(), {0}, train_model, base.per_cell, 1, kThreads);
    const SynthesisResult res = compute_abstraction(cfg, train, kThreads);
    o.require(res.errors.empty(), "synthesis at 8x" + std::to_string(n_theta));
    levels.push_back(res.abstraction);
    means.push_back(evaluate(res.abstraction, test).mean_score().value_or(0.0));
  }
  double worst = kInf;
  for (std::size_t k = 1; k < levels.size(); ++k) {
    for (const auto& [fine, coarse] : refine_map(levels[k - 1].scenario.partition, levels[k].scenario.partition)) {
      const double child = levels[k].cells[Partition(levels[k].scenario.partition).index(fine.iy, fine.itheta)].radius;
      const double parent =
          levels[k - 1].cells[Partition(levels[k - 1].scenario.partition).index(coarse.iy, coarse.itheta)].radius;
      if (std::isinf(parent) && !std::isinf(child)) worst = -kInf;
      else if (std::isfinite(parent)) worst = std::min(worst, child - parent);
    }
  }
  o.detail << " min(child r - parent r) " << worst << "; mean precision " << means[0] << " -> " << means[1] << " -> "
           << means[2];
  o.require(worst >= -1e-9, "child radius below parent");
  o.require(means[0] <= means[1] && means[1] <= means[2], "mean precision decreased");
}

// 5. Single-environment vs all-environment precision.
void environment_narrowing(Outcome& o) {
  const Abstraction& a = gem_v1();
  const Dataset test = preset_data(gem_preset(), 77);
  const PrecisionMap one = evaluate(a, test.filter_envs({0}));
  const PrecisionMap all = evaluate(a, test);
  int finite = 0, better = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (!std::isfinite(a.cells[i].radius)) continue;
    ++finite;
    if (one.cells[i].score().value_or(0.0) >= all.cells[i].score().value_or(0.0)) ++better;
  }
  const double m1 = one.mean_score().value_or(0.0), ma = all.mean_score().value_or(0.0);
  o.detail << " env 0 mean " << m1 << ", all envs mean " << ma << ", env 0 >= all in " << better << " of " << finite
           << " finite-radius cells";
  o.require(m1 >= ma, "mean precision");
  o.require(finite > 0 && better >= 0.9 * finite, "cell-wise share below 90%");
}

// 6. Regression recovery and residual orthogonality.
void regression(Outcome& o) {
  std::mt19937_64 rng(3);
  double worst_err = 0.0, worst_orth = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    AffineMap truth;
    truth.A << pick(rng, {0.8, 1.2}), pick(rng, {-0.1, 0.1}), pick(rng, {-0.1, 0.1}), pick(rng, {0.8, 1.2});
    truth.b << pick(rng, {-0.1, 0.1}), pick(rng, {-0.1, 0.1});
    std::vector<PerceptPair> clean, noisy;
    for (int i = 0; i < 300; ++i) {
      const Percept t{pick(rng, {-1.2, 1.2}), pick(rng, {-0.3, 0.3})};
      const Percept z = truth.apply(t);
      clean.push_back({t, z});
      noisy.push_back({t, {z.d + pick(rng, {-0.02, 0.02}), z.psi + pick(rng, {-0.02, 0.02})}});
    }
    const AffineMap fit = fit_affine(clean);
    worst_err = std::max({worst_err, (fit.A - truth.A).cwiseAbs().maxCoeff(), (fit.b - truth.b).cwiseAbs().maxCoeff()});

    const AffineMap nf = fit_affine(noisy);
    for (int out = 0; out < 2; ++out) {
      Eigen::Vector3d g = Eigen::Vector3d::Zero(), col_norm = Eigen::Vector3d::Zero();
      double res_norm = 0.0;
      for (const auto& [t, z] : noisy) {
        const Percept f = nf.apply(t);
        const double r = out == 0 ? z.d - f.d : z.psi - f.psi;
        const Eigen::Vector3d row(t.d, t.psi, 1.0);
        g += row * r;
        col_norm += row.cwiseAbs2();
        res_norm += r * r;
      }
      for (int k = 0; k < 3; ++k)
        worst_orth = std::max(worst_orth, std::abs(g(k)) / (std::sqrt(col_norm(k)) * std::sqrt(res_norm)));
    }
  }
  o.detail << " worst noiseless max-abs error " << worst_err << " (tolerance 1e-9), worst residual cosine "
           << worst_orth << " (tolerance 1e-7)";
  o.require(worst_err <= 1e-9, "recovery");
  o.require(worst_orth <= 1e-7, "orthogonality");
}

// 7. Tampered radius through the CLI, and bounded reach on the untampered artifact.
void verifier_sensitivity(Outcome& o) {
  const fs::path dir = work_dir();
  const fs::path clean = dir / "gem.json";
  save_abstraction(gem_v1(), clean);

  Abstraction tampered = gem_v1();
  std::size_t target = 0;
  for (std::size_t i = 0; i < tampered.cells.size(); ++i) {
    const double r = tampered.cells[i].radius;
    if (std::isfinite(r) && r > tampered.cells[target].radius) target = i;
  }
  tampered.cells[target].radius *= 10;
  const fs::path bad = dir / "gem_tampered.json";
  save_abstraction(tampered, bad);
  const int code = run_cli("verify --abstraction " + bad.string() + " --induction --report " +
                               (dir / "tampered.report.json").string(),
                           dir / "verify_tampered.log");
  const auto report = read_json(dir / "tampered.report.json");
  bool replayed = false;
  if (report["induction"].contains("witness")) {
    const auto& w = report["induction"]["witness"];
    VerificationWitness vw;
    vw.iy = w["cell"][0];
    vw.itheta = w["cell"][1];
    vw.state = {w["state"][0], w["state"][1], w["state"][2]};
    vw.percept = {w["percept"][0], w["percept"][1]};
    vw.next = {w["next_state"][0], w["next_state"][1], w["next_state"][2]};
    vw.reason = w["reason"];
    replayed = replay_induction_witness(load_abstraction(bad), vw) && vw.iy == tampered.cells[target].cell.iy &&
               vw.itheta == tampered.cells[target].cell.itheta;
  }
  o.detail << " tampered cell (" << tampered.cells[target].cell.iy << ", " << tampered.cells[target].cell.itheta
           << ") exit " << code << ", witness replayed " << (replayed ? "yes" : "no") << ';';
  o.require(code == 4, "tampered exit code");
  o.require(replayed, "witness replay");

  for (const char* adv : {"worst(8)", "random(1,10)"}) {
    const fs::path rep = dir / "reach.report.json";
    const int rc = run_cli("verify --abstraction " + clean.string() + " --reach --horizon 100 --adversary '" + adv +
                               "' --report " + rep.string(),
                           dir / "verify_reach.log");
    const auto j = read_json(rep)["reach"];
    const std::int64_t unsafe = j["unsafe_executions"];
    o.detail << " reach " << adv << ": exit " << rc << ", " << j["effort"]["executions"] << " executions, " << unsafe
             << " entered |y| > " << gem_v1().scenario.unsafe.y_limit << ", " << j["left_domain_executions"]
             << " left the partition domain;";
    o.require(rc == 0 || rc == 4, std::string("reach ") + adv + " ran");
    o.require(unsafe == 0, std::string("reach ") + adv + " entered the unsafe set");
  }
}

// Rasterized containment check used to cross-check the exact box subtraction.
bool agrees_with_raster(const BoxSet& a, const BoxSet& b, std::mt19937_64& rng) {
  const auto w = uncovered_point(a, b);
  if (w) return a.contains(*w) && !b.contains(*w);
  if (a.empty()) return true;
  for (int i = 0; i < 10000; ++i) {
    const Box& box = a.boxes()[std::uniform_int_distribution<std::size_t>(0, a.boxes().size() - 1)(rng)];
    Point x;
    for (const auto& iv : box) x.push_back(pick(rng, iv));
    if (!b.contains(x)) return false;
  }
  return true;
}

BoxSet union_of(int dim, const std::vector<ContractPair>& pairs, bool guarantees) {
  BoxSet s(dim);
  for (const auto& p : pairs)
    for (const auto& b : (guarantees ? p.guarantee : p.assume).boxes()) s.add(b);
  return s;
}

BoxSet box1(double lo, double hi) { return BoxSet(1, {{{lo, hi}}}); }

// 8. Contracts.
void contracts(Outcome& o) {
  std::vector<std::pair<BoxSet, BoxSet>> instances;

  const ContractPipeline p = load_pipeline(std::string(PABS_SCENARIO_DIR) + "/lane_keeping_pipeline.toml");
  const bool init_ok = check_init(p).ok;
  bool seq_ok = true;
  for (const auto& r : check_seq(p)) seq_ok = seq_ok && r.ok;
  const bool sat_ok = check_sat(p).ok;
  o.detail << " example pipeline init " << init_ok << " seq " << seq_ok << " sat " << sat_ok << ';';
  o.require(init_ok && seq_ok && sat_ok, "example pipeline");
  instances.push_back({p.initial, union_of(p.initial.dim(), p.stages[0].pairs, false)});
  for (std::size_t i = 0; i + 1 < p.stages.size(); ++i) {
    const int dim = p.stages[i].component.out_dim;
    instances.push_back({union_of(dim, p.stages[i].pairs, true), union_of(dim, p.stages[i + 1].pairs, false)});
  }

  // documented mutations and their witnesses
  int matched = 0;
  {
    ContractStage st{"shift", affine_component({{1.0}}, {1.0}), {{box1(0, 1), box1(0, 1)}}};
    const CertResult r = falsify_cert(st, 1000, 3);
    const bool ok = r.witness && r.witness->input[0] > 0 && r.witness->input[0] <= 1 &&
                    !box1(0, 1).contains(r.witness->output);
    matched += ok;
    o.require(ok, "cert x+1 witness");
  }
  {
    ContractPipeline m;
    m.initial = box1(0, 1);
    m.stages.push_back({"s", identity_component(1), {{box1(0, 0.6), box1(0, 1)}, {box1(0.7, 1), box1(0, 1)}}});
    const CheckResult r = check_init(m);
    const bool ok = !r.ok && r.witness && (*r.witness)[0] > 0.6 && (*r.witness)[0] < 0.7;
    matched += ok;
    o.require(ok, "init remainder witness");
    instances.push_back({m.initial, union_of(1, m.stages[0].pairs, false)});
  }
  {
    ContractPipeline m;
    m.initial = box1(0, 2);
    m.stages.push_back({"a", identity_component(1), {{box1(0, 2), box1(0, 2)}}});
    m.stages.push_back({"b", identity_component(1), {{box1(0, 1.5), box1(0, 2)}}});
    const auto r = check_seq(m);
    const bool ok = !r[0].ok && r[0].witness && (*r[0].witness)[0] > 1.5 && (*r[0].witness)[0] <= 2;
    matched += ok;
    o.require(ok, "seq remainder witness");
    instances.push_back({box1(0, 2), box1(0, 1.5)});
  }
  {
    ContractPipeline m;
    m.initial = box1(0, 1);
    m.stages.push_back({"a", identity_component(1), {{box1(0, 1), BoxSet(1)}}});
    const CheckResult r = check_sat(m);
    const bool ok = !r.ok && r.stage == 0 && r.pair == 0;
    matched += ok;
    o.require(ok, "sat names the empty guarantee");
  }
  {
    const PresumeAchievePair pa{"square", box1(0, 1), box1(0, 2), square_component(1)};
    const CheckResult r = falsify_presume_cert(pa, 200, 200, 4);
    const bool ok = !r.ok && r.candidate && r.witness && (*r.witness)[0] > 1;
    matched += ok;
    o.require(ok, "presume x^2 candidate witness");
  }
  {
    const std::vector<PresumeAchievePair> chain{{"a", box1(0, 1), box1(0, 1.5), identity_component(1)},
                                                {"b", box1(0, 2), box1(0, 2), identity_component(1)}};
    const auto r = check_presume_seq(chain);
    const bool ok = !r[0].ok && r[0].witness && (*r[0].witness)[0] > 1.5 && (*r[0].witness)[0] <= 2;
    matched += ok;
    o.require(ok, "presume-seq remainder witness");
    instances.push_back({box1(0, 2), box1(0, 1.5)});
  }
  o.detail << ' ' << matched << " of 6 mutation witnesses matched;";

  // swapped next-stage assumptions: the union still covers, index-wise containment fails
  {
    const BoxSet left(1, {{{0, 1}}}), right(1, {{{1, 2}}});
    ContractPipeline m;
    m.initial = box1(0, 2);
    m.stages.push_back({"a", identity_component(1), {{left, left}, {right, right}}});
    m.stages.push_back({"b", identity_component(1), {{right, right}, {left, left}}});
    const bool plain = check_seq(m)[0].ok;
    const bool strict = check_seq_strengthened(m)[0].ok;
    o.detail << " swapped instance plain " << plain << " strengthened " << strict << ';';
    o.require(plain && !strict, "strengthened separation");
    instances.push_back({left, right});
  }

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0, 1);
  auto random_set = [&](int dim, int max_boxes) {
    BoxSet s(dim);
    const int n = std::uniform_int_distribution<int>(0, max_boxes)(rng);
    for (int i = 0; i < n; ++i) {
      Box b;
      for (int k = 0; k < dim; ++k) {
        double x = u(rng), y = u(rng);
        if (x > y) std::swap(x, y);
        b.push_back({x, y});
      }
      s.add(b);
    }
    return s;
  };
  for (int dim : {1, 2, 3})
    for (int i = 0; i < 100; ++i) instances.push_back({random_set(dim, 3), random_set(dim, 5)});
  int agree = 0;
  for (const auto& [a, b] : instances) agree += agrees_with_raster(a, b, rng);
  o.detail << " raster agreement " << agree << " of " << instances.size() << " instances";
  o.require(agree == static_cast<int>(instances.size()), "raster agreement");
}

// 9. One Euler step of the closed loop against the continuous cross-track rate.
void ode_consistency(Outcome& o) {
  const VehicleParams p = gem_params();
  double worst = 0.0;
  int points = 0;
  for (int i = -40; i <= 40; ++i) {
    const double d = i / 40.0;
    for (int j = -4; j <= 4; ++j) {
      const double theta = 0.05 * j;
      const State s{0, -d, theta};
      const Percept z = ground_truth_percept(s);
      if (std::abs(stanley_raw(z, p)) >= p.sat_limit) continue;  // unsaturated regime only
      const State n = dynamics_step(s, controller(z, p), p);
      const double rate = (-n.y - d) / p.dt;
      const double ode = -p.gain * d / std::sqrt(1 + std::pow(p.gain * d / p.v_f, 2));
      const double rel = std::abs(rate - ode) / std::max(std::abs(ode), 1e-12);
      if (d != 0.0) worst = std::max(worst, rel);
      else o.require(std::abs(rate - ode) <= 5 * p.dt * 1e-12, "d = 0");
      ++points;
    }
  }
  o.detail << ' ' << points << " unsaturated grid points, worst relative deviation " << worst << " (tolerance "
           << 5 * p.dt << ")";
  o.require(worst <= 5 * p.dt, "relative deviation");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"soundness", soundness},
      {"oracle agreement", oracle_agreement},
      {"white bands", white_bands},
      {"refinement monotonicity", refinement},
      {"environment narrowing", environment_narrowing},
      {"regression recovery", regression},
      {"verifier sensitivity", verifier_sensitivity},
      {"contracts", contracts},
      {"ode consistency", ode_consistency},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ":"
              << o.detail.str() << " (" << std::fixed << std::setprecision(1) << secs << " s)" << std::defaultfloat
              << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
