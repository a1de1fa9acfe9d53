#include "pabs/contracts.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gsl/gsl_multimin.h>
#include <toml.hpp>

#include "pabs/error.hpp"

namespace pabs {

BoxSet::BoxSet(int dim, std::vector<Box> boxes) : dim_(dim) {
  for (auto& b : boxes) add(std::move(b));
}

void BoxSet::add(Box b) {
  if (static_cast<int>(b.size()) != dim_)
    throw ConfigError("box of dimension " + std::to_string(b.size()) + " in a set of dimension " + std::to_string(dim_));
  for (const auto& iv : b)
    if (!iv.valid()) throw ConfigError("box sides must be finite with lo <= hi");
  boxes_.push_back(std::move(b));
}

bool BoxSet::contains(const Point& p) const {
  for (const auto& b : boxes_)
    if (box_contains(b, p)) return true;
  return false;
}

std::vector<Box> subtract(const Box& r, const Box& b) {
  for (std::size_t k = 0; k < r.size(); ++k)
    if (r[k].hi < b[k].lo || b[k].hi < r[k].lo) return {r};
  std::vector<Box> out;
  Box cur = r;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (cur[k].lo < b[k].lo) {
      Box piece = cur;
      piece[k] = {cur[k].lo, b[k].lo};
      out.push_back(std::move(piece));
    }
    if (b[k].hi < cur[k].hi) {
      Box piece = cur;
      piece[k] = {b[k].hi, cur[k].hi};
      out.push_back(std::move(piece));
    }
    cur[k] = {std::max(cur[k].lo, b[k].lo), std::min(cur[k].hi, b[k].hi)};
  }
  return out;
}

std::optional<Point> uncovered_point(const BoxSet& a, const BoxSet& b) {
  if (a.dim() != b.dim() && !a.empty() && !b.empty()) throw ConfigError("containment between sets of different dimension");
  std::vector<Box> rest = a.boxes();
  for (const auto& cover : b.boxes()) {
    std::vector<Box> next;
    for (const auto& piece : rest) {
      auto parts = subtract(piece, cover);
      next.insert(next.end(), std::make_move_iterator(parts.begin()), std::make_move_iterator(parts.end()));
    }
    rest = std::move(next);
    if (rest.empty()) return std::nullopt;
  }
  if (rest.empty()) return std::nullopt;
  Point mid;
  for (const auto& iv : rest.front()) mid.push_back(iv.mid());
  return mid;
}

Component identity_component(int dim) {
  return {"identity", dim, dim, [](const Point& x) { return x; }};
}

Component affine_component(const std::vector<std::vector<double>>& matrix, const std::vector<double>& offset) {
  if (matrix.empty() || matrix.front().empty()) throw ConfigError("affine component needs a non-empty matrix");
  const std::size_t cols = matrix.front().size();
  for (const auto& row : matrix)
    if (row.size() != cols) throw ConfigError("affine matrix rows differ in length");
  if (offset.size() != matrix.size()) throw ConfigError("affine offset length must equal the number of rows");
  return {"affine", static_cast<int>(cols), static_cast<int>(matrix.size()), [matrix, offset](const Point& x) {
            Point y(offset);
            for (std::size_t i = 0; i < matrix.size(); ++i)
              for (std::size_t j = 0; j < x.size(); ++j) y[i] += matrix[i][j] * x[j];
            return y;
          }};
}

Component square_component(int dim) {
  return {"square", dim, dim, [](const Point& x) {
            Point y(x);
            for (auto& v : y) v *= v;
            return y;
          }};
}

Component scenario_component(const std::string& kind, const ScenarioConfig& cfg) {
  const VehicleParams p = cfg.params;
  if (kind == "perceive")
    return {kind, 2, 4, [](const Point& x) {
              const Percept z = ground_truth_percept({0.0, x[0], x[1]});
              return Point{x[0], x[1], z.d, z.psi};
            }};
  if (kind == "control")
    return {kind, 4, 3, [p](const Point& x) { return Point{x[0], x[1], controller({x[2], x[3]}, p).value}; }};
  if (kind == "dynamics")
    return {kind, 3, 2, [p](const Point& x) {
              const State n = dynamics_step({0.0, x[0], x[1]}, {x[2]}, p);
              return Point{n.y, n.theta};
            }};
  if (kind == "closed_loop")
    return {kind, 2, 2, [p](const Point& x) {
              const State s{0.0, x[0], x[1]};
              const State n = dynamics_step(s, controller(ground_truth_percept(s), p), p);
              return Point{n.y, n.theta};
            }};
  throw ConfigError("unknown scenario component '" + kind + "'");
}

void ContractPipeline::validate() const {
  if (stages.empty()) throw ConfigError("pipeline needs at least one stage");
  if (initial.dim() != stages.front().component.in_dim)
    throw ConfigError("initial domain dimension does not match the first stage input");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& st = stages[i];
    if (i + 1 < stages.size() && st.component.out_dim != stages[i + 1].component.in_dim)
      throw ConfigError("stage " + std::to_string(i + 1) + " output does not chain into stage " + std::to_string(i + 2));
    for (const auto& pr : st.pairs)
      if (pr.assume.dim() != st.component.in_dim || pr.guarantee.dim() != st.component.out_dim)
        throw ConfigError("stage " + std::to_string(i + 1) + " contract dimensions do not match its component");
  }
  if (stages.back().component.out_dim != initial.dim())
    throw ConfigError("last stage must map back into the initial domain's space");
  for (const auto& pa : presume)
    if (pa.presume.dim() != pa.component.in_dim || pa.achieve.dim() != pa.component.out_dim)
      throw ConfigError("presume-achieve pair '" + pa.name + "' dimensions do not match its component");
}

namespace {

Point sample_set(const BoxSet& set, std::mt19937_64& rng) {
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& b : set.boxes()) {
    double v = 1.0;
    for (const auto& iv : b) v *= iv.width();
    weights.push_back(v);
    total += v;
  }
  if (!(total > 0.0)) std::fill(weights.begin(), weights.end(), 1.0);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  const Box& b = set.boxes()[pick(rng)];
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x;
  for (const auto& iv : b) x.push_back(iv.lo + iv.width() * u(rng));
  return x;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), index};
  return std::mt19937_64(seq);
}

BoxSet union_of(int dim, const std::vector<ContractPair>& pairs, bool guarantees) {
  BoxSet out(dim);
  for (const auto& p : pairs)
    for (const auto& b : (guarantees ? p.guarantee : p.assume).boxes()) out.add(b);
  return out;
}

}  // namespace

CertResult falsify_cert(const ContractStage& stage, int samples, std::uint64_t seed) {
  if (samples < 1) throw ConfigError("falsify_cert needs at least one sample");
  CertResult res;
  res.vacuous = true;
  for (std::size_t j = 0; j < stage.pairs.size(); ++j) {
    const auto& pr = stage.pairs[j];
    if (pr.assume.empty()) continue;
    res.vacuous = false;
    auto rng = stream(seed, static_cast<std::uint32_t>(j));
    for (int k = 0; k < samples; ++k) {
      const Point x = sample_set(pr.assume, rng);
      const Point y = stage.component.f(x);
      if (!pr.guarantee.contains(y)) {
        res.witness = CertWitness{static_cast<int>(j), x, y};
        return res;
      }
    }
  }
  return res;
}

CheckResult check_init(const ContractPipeline& p) {
  CheckResult r;
  r.stage = 0;
  const auto& first = p.stages.front();
  r.witness = uncovered_point(p.initial, union_of(first.component.in_dim, first.pairs, false));
  r.ok = !r.witness;
  r.vacuous = p.initial.empty();
  return r;
}

std::vector<CheckResult> check_seq(const ContractPipeline& p) {
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i + 1 < p.stages.size(); ++i) {
    const auto& a = p.stages[i];
    const auto& b = p.stages[i + 1];
    const BoxSet q = union_of(a.component.out_dim, a.pairs, true);
    CheckResult r;
    r.stage = static_cast<int>(i);
    r.witness = uncovered_point(q, union_of(b.component.in_dim, b.pairs, false));
    r.ok = !r.witness;
    r.vacuous = q.empty();
    out.push_back(r);
  }
  return out;
}

std::vector<CheckResult> check_seq_strengthened(const ContractPipeline& p) {
  for (const auto& st : p.stages)
    if (st.pairs.size() != p.stages.front().pairs.size())
      throw ConfigError("strengthened sequencing needs the same number of pairs in every stage");
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i + 1 < p.stages.size(); ++i) {
    CheckResult r;
    r.stage = static_cast<int>(i);
    for (std::size_t j = 0; j < p.stages[i].pairs.size() && r.ok; ++j) {
      r.witness = uncovered_point(p.stages[i].pairs[j].guarantee, p.stages[i + 1].pairs[j].assume);
      if (r.witness) {
        r.ok = false;
        r.pair = static_cast<int>(j);
      }
    }
    out.push_back(r);
  }
  return out;
}

CheckResult check_sat(const ContractPipeline& p) {
  CheckResult r;
  for (std::size_t i = 0; i < p.stages.size(); ++i)
    for (std::size_t j = 0; j < p.stages[i].pairs.size(); ++j) {
      const auto& pr = p.stages[i].pairs[j];
      if (!pr.assume.empty() && pr.guarantee.empty()) {
        r.ok = false;
        r.stage = static_cast<int>(i);
        r.pair = static_cast<int>(j);
        return r;
      }
    }
  return r;
}

namespace {

struct ResidualProblem {
  const Component* comp;
  const Box* box;
  const Point* target;
};

Point clamp_into(const gsl_vector* v, const Box& box) {
  Point x(box.size());
  for (std::size_t i = 0; i < box.size(); ++i) x[i] = std::clamp(gsl_vector_get(v, i), box[i].lo, box[i].hi);
  return x;
}

double residual(const Point& fx, const Point& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (fx[i] - y[i]) * (fx[i] - y[i]);
  return std::sqrt(s);
}

double residual_objective(const gsl_vector* v, void* params) {
  const auto* rp = static_cast<const ResidualProblem*>(params);
  const Point x = clamp_into(v, *rp->box);
  // the clamp makes the outside flat; the penalty pulls the simplex back in
  double outside = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) outside += std::abs(gsl_vector_get(v, i) - x[i]);
  return residual(rp->comp->f(x), *rp->target) + outside;
}

double descend(const Component& comp, const Box& box, const Point& x0, const Point& y) {
  const std::size_t n = x0.size();
  ResidualProblem rp{&comp, &box, &y};
  gsl_multimin_function fn{&residual_objective, n, &rp};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0[i]);
    const double h = std::max(box[i].width() / 10.0, 1e-6);
    gsl_vector_set(step, i, x0[i] + h <= box[i].hi ? h : -h);
  }
  gsl_multimin_fminimizer* nm = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(nm, &fn, x, step);
  for (int i = 0; i < 500; ++i) {
    if (gsl_multimin_fminimizer_iterate(nm) != GSL_SUCCESS) break;
    if (gsl_multimin_fminimizer_size(nm) < 1e-12) break;
  }
  const double best = nm->fval;
  gsl_multimin_fminimizer_free(nm);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return best;
}

}  // namespace

CheckResult falsify_presume_cert(const PresumeAchievePair& pair, int y_samples, int x_samples, std::uint64_t seed,
                                 double tolerance) {
  CheckResult r;
  r.candidate = true;
  if (pair.achieve.empty()) {
    r.vacuous = true;
    return r;
  }
  auto rng = stream(seed, 0);
  for (int k = 0; k < y_samples; ++k) {
    const Point y = sample_set(pair.achieve, rng);
    double best = kInf;
    Point best_x;
    std::size_t best_box = 0;
    for (std::size_t bi = 0; bi < pair.presume.boxes().size(); ++bi) {
      const BoxSet one(pair.presume.dim(), {pair.presume.boxes()[bi]});
      for (int s = 0; s < x_samples; ++s) {
        const Point x = sample_set(one, rng);
        const double res = residual(pair.component.f(x), y);
        if (res < best) best = res, best_x = x, best_box = bi;
      }
    }
    if (best > tolerance && !best_x.empty()) best = std::min(best, descend(pair.component, pair.presume.boxes()[best_box], best_x, y));
    if (best > tolerance) {
      r.ok = false;
      r.witness = y;
      return r;
    }
  }
  return r;
}

std::vector<CheckResult> check_presume_seq(const std::vector<PresumeAchievePair>& pairs) {
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i) {
    CheckResult r;
    r.stage = static_cast<int>(i);
    r.witness = uncovered_point(pairs[i + 1].presume, pairs[i].achieve);
    r.ok = !r.witness;
    r.vacuous = pairs[i + 1].presume.empty();
    out.push_back(r);
  }
  return out;
}

ContractStage export_abstraction_as_contract(const Abstraction& abst, std::vector<std::string>* warnings) {
  if (abst.cells.empty()) throw ConfigError("cannot export an abstraction without cells");
  const ScenarioConfig& cfg = abst.scenario;
  ContractStage stage;
  stage.name = "abstraction";
  const auto cells = abst.cells;
  const Partition part(cfg.partition);
  stage.component = {"abstraction_center", 2, 2, [cells, part](const Point& x) {
                       const auto idx = part.locate_index({0.0, x[0], x[1]});
                       if (!idx) return Point{std::nan(""), std::nan("")};
                       const Percept c = ball_center({0.0, x[0], x[1]}, cells[*idx].map);
                       return Point{c.d, c.psi};
                     }};
  for (const auto& c : abst.cells) {
    if (c.status == CellStatus::Fallback) {
      if (warnings)
        warnings->push_back("cell (" + std::to_string(c.cell.iy) + ", " + std::to_string(c.cell.itheta) +
                            ") has a fallback fit and is excluded");
      continue;
    }
    Box guarantee;
    if (std::isinf(c.radius)) {
      guarantee = {cfg.search_d, cfg.search_psi};
    } else {
      const Interval ny = iv_neg(c.cell.y_bounds);
      const Interval nt = iv_neg(c.cell.theta_bounds);
      const Interval cd = iv_add(iv_add(iv_scale(ny, c.map.A(0, 0)), iv_scale(nt, c.map.A(0, 1))), c.map.b(0));
      const Interval cp = iv_add(iv_add(iv_scale(ny, c.map.A(1, 0)), iv_scale(nt, c.map.A(1, 1))), c.map.b(1));
      guarantee = {iv_add(cd, Interval(-c.radius, c.radius)), iv_add(cp, Interval(-c.radius, c.radius))};
    }
    stage.pairs.push_back({BoxSet(2, {{c.cell.y_bounds, c.cell.theta_bounds}}), BoxSet(2, {guarantee})});
  }
  return stage;
}

namespace {

class PipelineReader {
 public:
  PipelineReader(std::string source, std::filesystem::path base) : source_(std::move(source)), base_(std::move(base)) {}

  [[noreturn]] void fail(const std::string& where, const std::string& why) const {
    throw ConfigError(source_ + ": " + where + ": " + why);
  }

  double number(const toml::node* n, const std::string& where) const {
    if (n == nullptr) fail(where, "missing value");
    if (auto v = n->value<double>()) return *v;
    if (auto s = n->value<std::string>()) {
      try {
        return parse_angle_expr(*s);
      } catch (const ConfigError& e) {
        fail(where, e.what());
      }
    }
    fail(where, "expected a number");
  }

  BoxSet boxes(const toml::table& t, const std::string& key, int dim, const std::string& where) const {
    const auto* arr = t[key].as_array();
    if (arr == nullptr) fail(where + "." + key, "expected a list of boxes");
    BoxSet set(dim);
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string w = where + "." + key + "[" + std::to_string(i) + "]";
      const auto* box = arr->get(i)->as_array();
      if (box == nullptr || static_cast<int>(box->size()) != dim)
        fail(w, "expected " + std::to_string(dim) + " [lo, hi] sides");
      Box b;
      for (std::size_t k = 0; k < box->size(); ++k) {
        const auto* side = box->get(k)->as_array();
        if (side == nullptr || side->size() != 2) fail(w, "each side must be [lo, hi]");
        const Interval iv{number(side->get(0), w), number(side->get(1), w)};
        if (!iv.valid()) fail(w, "side must have finite lo <= hi");
        b.push_back(iv);
      }
      set.add(std::move(b));
    }
    return set;
  }

  std::vector<std::vector<double>> matrix(const toml::table& t, const std::string& where) const {
    const auto* m = t["matrix"].as_array();
    if (m == nullptr) fail(where + ".matrix", "expected an array of rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : *m) {
      const auto* r = row.as_array();
      if (r == nullptr) fail(where + ".matrix", "expected an array of rows");
      std::vector<double> vals;
      for (const auto& v : *r) vals.push_back(number(&v, where + ".matrix"));
      out.push_back(std::move(vals));
    }
    return out;
  }

  Component component(const toml::table& t, const std::string& where, const std::optional<ScenarioConfig>& scen) const {
    const auto name = t["component"].value<std::string>();
    if (!name) fail(where + ".component", "missing component name");
    auto dim = [&]() {
      const auto d = t["dim"].value<std::int64_t>();
      if (!d || *d < 1) fail(where + ".dim", "expected a positive integer");
      return static_cast<int>(*d);
    };
    if (*name == "identity") return identity_component(dim());
    if (*name == "square") return square_component(dim());
    if (*name == "affine") {
      const auto m = matrix(t, where);
      std::vector<double> offset(m.size(), 0.0);
      if (const auto* o = t["offset"].as_array()) {
        offset.clear();
        for (const auto& v : *o) offset.push_back(number(&v, where + ".offset"));
      }
      try {
        return affine_component(m, offset);
      } catch (const ConfigError& e) {
        fail(where, e.what());
      }
    }
    if (!scen) fail(where + ".component", "'" + *name + "' needs a top-level scenario");
    try {
      return scenario_component(*name, *scen);
    } catch (const ConfigError& e) {
      fail(where + ".component", e.what());
    }
  }

  std::optional<ScenarioConfig> scenario(const toml::table& root) const {
    const auto s = root["scenario"].value<std::string>();
    if (!s) return std::nullopt;
    if (*s == "gem") return gem_preset().config;
    if (*s == "agbot") return agbot_preset().config;
    std::filesystem::path p(*s);
    if (p.is_relative()) p = base_ / p;
    return load_scenario(p).config;
  }

 private:
  std::string source_;
  std::filesystem::path base_;
};

}  // namespace

ContractPipeline parse_pipeline(std::string_view text, const std::filesystem::path& base_dir, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  const PipelineReader r(source, base_dir);
  const auto scen = r.scenario(root);
  ContractPipeline p;

  const auto* stages = root["stage"].as_array();
  if (stages == nullptr || stages->empty()) r.fail("stage", "at least one [[stage]] is required");
  for (std::size_t i = 0; i < stages->size(); ++i) {
    const std::string where = "stage[" + std::to_string(i) + "]";
    const auto* st = stages->get(i)->as_table();
    if (st == nullptr) r.fail(where, "expected a table");
    ContractStage stage;
    stage.name = (*st)["name"].value_or(std::string("stage") + std::to_string(i + 1));
    stage.component = r.component(*st, where, scen);
    if (const auto* pairs = (*st)["pair"].as_array()) {
      for (std::size_t j = 0; j < pairs->size(); ++j) {
        const std::string pw = where + ".pair[" + std::to_string(j) + "]";
        const auto* pt = pairs->get(j)->as_table();
        if (pt == nullptr) r.fail(pw, "expected a table");
        stage.pairs.push_back({r.boxes(*pt, "assume", stage.component.in_dim, pw),
                               r.boxes(*pt, "guarantee", stage.component.out_dim, pw)});
      }
    }
    p.stages.push_back(std::move(stage));
  }

  const auto* init = root["initial"].as_table();
  if (init == nullptr) r.fail("initial", "missing table");
  p.initial = r.boxes(*init, "boxes", p.stages.front().component.in_dim, "initial");

  if (const auto* pres = root["presume"].as_array()) {
    for (std::size_t i = 0; i < pres->size(); ++i) {
      const std::string where = "presume[" + std::to_string(i) + "]";
      const auto* pt = pres->get(i)->as_table();
      if (pt == nullptr) r.fail(where, "expected a table");
      PresumeAchievePair pa;
      pa.name = (*pt)["name"].value_or(std::string("presume") + std::to_string(i + 1));
      pa.component = r.component(*pt, where, scen);
      pa.presume = r.boxes(*pt, "presume", pa.component.in_dim, where);
      pa.achieve = r.boxes(*pt, "achieve", pa.component.out_dim, where);
      p.presume.push_back(std::move(pa));
    }
  }
  p.validate();
  return p;
}

ContractPipeline load_pipeline(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open pipeline file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_pipeline(os.str(), path.parent_path(), path.string());
}

}  // namespace pabs
