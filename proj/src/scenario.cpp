#include "pabs/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "pabs/error.hpp"
#include "preset_data.hpp"

namespace pabs {

std::string_view to_string(Norm n) { return n == Norm::L2 ? "l2" : "linf"; }

Norm parse_norm(std::string_view s) {
  if (s == "l2") return Norm::L2;
  if (s == "linf") return Norm::LInf;
  throw ConfigError("unknown norm '" + std::string(s) + "'");
}

double parse_angle_expr(std::string_view text) {
  static const std::regex re(R"(^\s*([+-]?)\s*(?:([0-9]+(?:\.[0-9]*)?)\s*\*\s*)?pi\s*(?:/\s*([0-9]+(?:\.[0-9]*)?))?\s*$)");
  const std::string s(text);
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ConfigError("cannot parse '" + s + "' (expected a number or k*pi/n)");
  double v = std::numbers::pi;
  if (m[2].matched) v = std::stod(m[2].str()) * v;
  if (m[3].matched) {
    const double den = std::stod(m[3].str());
    if (!(den > 0.0)) throw ConfigError("cannot parse '" + s + "' (division by zero)");
    v = v / den;
  }
  return m[1].str() == "-" ? -v : v;
}

void SolverConfig::validate() const {
  if (!(min_box_width > 0.0) || !std::isfinite(min_box_width)) throw ConfigError("solver.min_box_width must be positive");
  if (max_nodes < 1) throw ConfigError("solver.max_nodes must be positive");
  if (falsifier_grid < 2) throw ConfigError("solver.falsifier_grid must be at least 2");
  if (nm_iters < 0) throw ConfigError("solver.nm_iters must be non-negative");
  if (margin == MarginPolicy::FixedEpsilon && (!(epsilon >= 0.0) || !std::isfinite(epsilon)))
    throw ConfigError("solver.epsilon must be finite and >= 0");
}

namespace {

void check_interval(const Interval& iv, const std::string& what) {
  if (!iv.valid()) throw ConfigError(what + " must be a finite interval with lo <= hi");
}

void check_angle(const Interval& iv, const std::string& what) {
  check_interval(iv, what);
  if (iv.lo < -std::numbers::pi || iv.hi > std::numbers::pi) throw ConfigError(what + " must lie within [-pi, pi]");
}

}  // namespace

void ScenarioConfig::validate() const {
  params.validate();
  unsafe.validate();
  partition.validate();
  solver.validate();
  check_interval(partition.y_range, "domain.y");
  check_angle(partition.theta_range, "domain.theta");
  check_interval(initial_y, "initial.y");
  check_angle(initial_theta, "initial.theta");
  check_interval(search_d, "percept_search.d");
  check_angle(search_psi, "percept_search.psi");
  if (!partition.y_range.contains(initial_y) || !partition.theta_range.contains(initial_theta))
    throw ConfigError("initial set must lie inside the partition domain");
  // truth image of the domain is d = -y, psi = -theta
  if (!search_d.contains(iv_neg(partition.y_range)) || !search_psi.contains(iv_neg(partition.theta_range)))
    throw ConfigError("percept_search must contain the ground-truth image of the domain");
}

void ScenarioFile::validate() const {
  config.validate();
  perception.validate();
  for (int id : train_envs) perception.env(id);
  if (per_cell < 1) throw ConfigError("data.per_cell must be >= 1");
  const auto& c = config;
  const double err = perception.max_error(c.partition.y_range.mag(), c.partition.theta_range.mag());
  const Interval need_d{-c.partition.y_range.hi - err, -c.partition.y_range.lo + err};
  const Interval need_psi{-c.partition.theta_range.hi - err, -c.partition.theta_range.lo + err};
  if (!c.search_d.contains(need_d) || !c.search_psi.contains(need_psi))
    throw ConfigError("percept_search does not cover the truth image inflated by the perception error bound");
}

namespace {

class Reader {
 public:
  Reader(const toml::table& root, std::string source) : root_(root), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    throw ConfigError(source_ + ": " + key + ": " + why);
  }

  const toml::table* table(const toml::table& parent, const std::string& key, bool required = true) const {
    const auto* t = parent[key].as_table();
    if (t == nullptr && required) fail(key, "missing table");
    return t;
  }

  void allow_keys(const toml::table& t, const std::string& where, std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : t) {
      if (std::find(keys.begin(), keys.end(), k.str()) == keys.end())
        fail(where.empty() ? std::string(k.str()) : where + "." + std::string(k.str()), "unknown key");
    }
  }

  double number(const toml::node* n, const std::string& key) const {
    if (n == nullptr) fail(key, "missing value");
    if (auto v = n->value<double>()) return *v;
    if (auto s = n->value<std::string>()) return angle_expr(*s, key);
    fail(key, "expected a number");
  }

  double number(const toml::table& t, const std::string& where, const std::string& key) const {
    return number(t.get(key), where + "." + key);
  }

  std::optional<double> opt_number(const toml::table& t, const std::string& where, const std::string& key) const {
    if (!t.contains(key)) return std::nullopt;
    return number(t, where, key);
  }

  std::int64_t integer(const toml::table& t, const std::string& where, const std::string& key) const {
    const auto* n = t.get(key);
    if (n == nullptr) fail(where + "." + key, "missing value");
    if (auto v = n->value_exact<std::int64_t>()) return *v;
    fail(where + "." + key, "expected an integer");
  }

  std::string string(const toml::table& t, const std::string& where, const std::string& key) const {
    const auto* n = t.get(key);
    if (n == nullptr) fail(where.empty() ? key : where + "." + key, "missing value");
    if (auto v = n->value<std::string>()) return *v;
    fail(where.empty() ? key : where + "." + key, "expected a string");
  }

  Interval interval(const toml::table& t, const std::string& where, const std::string& key) const {
    const std::string name = where + "." + key;
    const auto* arr = t[key].as_array();
    if (arr == nullptr || arr->size() != 2) fail(name, "expected [lo, hi]");
    const Interval iv{number(arr->get(0), name), number(arr->get(1), name)};
    if (!iv.valid()) fail(name, "expected finite lo <= hi");
    return iv;
  }

  double angle_expr(const std::string& s, const std::string& key) const {
    try {
      return parse_angle_expr(s);
    } catch (const ConfigError& e) {
      fail(key, e.what());
    }
  }

  const toml::table& root() const { return root_; }

 private:
  const toml::table& root_;
  std::string source_;
};

AffineMap read_affine(const Reader& r, const toml::table& t, const std::string& where) {
  AffineMap m;
  const auto* a = t["A"].as_array();
  if (a == nullptr || a->size() != 2) r.fail(where + ".A", "expected a 2x2 array");
  for (int i = 0; i < 2; ++i) {
    const auto* row = a->get(i)->as_array();
    if (row == nullptr || row->size() != 2) r.fail(where + ".A", "expected a 2x2 array");
    for (int j = 0; j < 2; ++j) m.A(i, j) = r.number(row->get(j), where + ".A");
  }
  const auto* b = t["b"].as_array();
  if (b == nullptr || b->size() != 2) r.fail(where + ".b", "expected a 2-vector");
  for (int i = 0; i < 2; ++i) m.b(i) = r.number(b->get(i), where + ".b");
  return m;
}

}  // namespace

ScenarioFile parse_scenario(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  const Reader r(root, source);
  r.allow_keys(root, "",
               {"name", "error_fn", "norm", "vehicle", "unsafe", "domain", "initial", "percept_search", "solver", "data",
                "perception"});

  ScenarioFile file;
  auto& c = file.config;
  c.name = r.string(root, "", "name");
  c.error_fn = parse_error_fn(r.string(root, "", "error_fn"));
  if (root.contains("norm")) c.norm = parse_norm(r.string(root, "", "norm"));

  const auto& veh = *r.table(root, "vehicle");
  r.allow_keys(veh, "vehicle", {"kind", "v_f", "wheel_base", "dt", "sat_limit", "gain"});
  c.params.kind = parse_vehicle_kind(r.string(veh, "vehicle", "kind"));
  c.params.v_f = r.number(veh, "vehicle", "v_f");
  c.params.wheel_base = r.opt_number(veh, "vehicle", "wheel_base").value_or(0.0);
  c.params.dt = r.number(veh, "vehicle", "dt");
  c.params.sat_limit = r.number(veh, "vehicle", "sat_limit");
  c.params.gain = r.number(veh, "vehicle", "gain");

  const auto& uns = *r.table(root, "unsafe");
  r.allow_keys(uns, "unsafe", {"y_limit", "theta_limit", "combiner"});
  c.unsafe.y_limit = r.number(uns, "unsafe", "y_limit");
  c.unsafe.theta_limit = r.opt_number(uns, "unsafe", "theta_limit");
  if (uns.contains("combiner")) c.unsafe.combiner = parse_combiner(r.string(uns, "unsafe", "combiner"));

  const auto& dom = *r.table(root, "domain");
  r.allow_keys(dom, "domain", {"y", "theta", "n_y", "n_theta"});
  c.partition.y_range = r.interval(dom, "domain", "y");
  c.partition.theta_range = r.interval(dom, "domain", "theta");
  c.partition.n_y = static_cast<int>(r.integer(dom, "domain", "n_y"));
  c.partition.n_theta = static_cast<int>(r.integer(dom, "domain", "n_theta"));

  if (const auto* init = r.table(root, "initial", false)) {
    r.allow_keys(*init, "initial", {"y", "theta"});
    c.initial_y = r.interval(*init, "initial", "y");
    c.initial_theta = r.interval(*init, "initial", "theta");
  } else {
    c.initial_y = c.partition.y_range;
    c.initial_theta = c.partition.theta_range;
  }

  const auto& ps = *r.table(root, "percept_search");
  r.allow_keys(ps, "percept_search", {"d", "psi"});
  c.search_d = r.interval(ps, "percept_search", "d");
  c.search_psi = r.interval(ps, "percept_search", "psi");

  if (const auto* sol = r.table(root, "solver", false)) {
    r.allow_keys(*sol, "solver", {"min_box_width", "max_nodes", "falsifier_grid", "nm_iters", "margin", "epsilon"});
    auto& s = c.solver;
    if (sol->contains("min_box_width")) s.min_box_width = r.number(*sol, "solver", "min_box_width");
    if (sol->contains("max_nodes")) s.max_nodes = r.integer(*sol, "solver", "max_nodes");
    if (sol->contains("falsifier_grid")) s.falsifier_grid = static_cast<int>(r.integer(*sol, "solver", "falsifier_grid"));
    if (sol->contains("nm_iters")) s.nm_iters = static_cast<int>(r.integer(*sol, "solver", "nm_iters"));
    if (sol->contains("margin")) {
      const auto m = r.string(*sol, "solver", "margin");
      if (m == "interval_gap") {
        s.margin = MarginPolicy::IntervalGap;
      } else if (m == "fixed_epsilon") {
        s.margin = MarginPolicy::FixedEpsilon;
        s.epsilon = r.number(*sol, "solver", "epsilon");
      } else {
        r.fail("solver.margin", "expected \"interval_gap\" or \"fixed_epsilon\"");
      }
    }
  }

  if (const auto* data = r.table(root, "data", false)) {
    r.allow_keys(*data, "data", {"per_cell", "seed", "train_envs"});
    if (data->contains("per_cell")) file.per_cell = static_cast<int>(r.integer(*data, "data", "per_cell"));
    if (data->contains("seed")) file.seed = static_cast<std::uint64_t>(r.integer(*data, "data", "seed"));
    if (const auto* envs = (*data)["train_envs"].as_array()) {
      for (const auto& e : *envs) {
        const auto v = e.value_exact<std::int64_t>();
        if (!v) r.fail("data.train_envs", "expected integers");
        file.train_envs.push_back(static_cast<int>(*v));
      }
    }
  }

  const auto& per = *r.table(root, "perception");
  r.allow_keys(per, "perception", {"noise", "rho", "env"});
  if (per.contains("noise")) file.perception.noise_kind = parse_noise_kind(r.string(per, "perception", "noise"));
  file.perception.noise_bound = r.number(per, "perception", "rho");
  const auto* envs = per["env"].as_array();
  if (envs == nullptr || envs->empty()) r.fail("perception.env", "at least one [[perception.env]] is required");
  for (std::size_t i = 0; i < envs->size(); ++i) {
    const auto* et = envs->get(i)->as_table();
    const std::string where = "perception.env[" + std::to_string(i) + "]";
    if (et == nullptr) r.fail(where, "expected a table");
    r.allow_keys(*et, where, {"id", "label", "A", "b"});
    Environment env;
    env.env.id = static_cast<int>(r.integer(*et, where, "id"));
    env.env.label = et->contains("label") ? r.string(*et, where, "label") : std::to_string(env.env.id);
    env.distortion = read_affine(r, *et, where);
    file.perception.envs.push_back(env);
  }

  file.validate();
  return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_scenario(os.str(), path.string());
}

ScenarioFile gem_preset() { return parse_scenario(presets::kGem, "gem.toml"); }
ScenarioFile agbot_preset() { return parse_scenario(presets::kAgbot, "agbot.toml"); }

}  // namespace pabs
