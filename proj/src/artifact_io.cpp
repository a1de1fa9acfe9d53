#include "pabs/artifact_io.hpp"

#include <cmath>
#include <fstream>

#include "pabs/error.hpp"

namespace pabs {

using nlohmann::json;

json radius_to_json(double r) {
  if (std::isinf(r) && r > 0) return "inf";
  return r;
}

double radius_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInf;
    throw ParseError("radius must be a number or \"inf\"");
  }
  if (!j.is_number()) throw ParseError("radius must be a number or \"inf\"");
  const double r = j.get<double>();
  if (!(r >= 0.0)) throw ParseError("radius must be non-negative");
  return r;
}

namespace {

json iv_json(const Interval& iv) { return json::array({iv.lo, iv.hi}); }

Interval iv_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(std::string(what) + ": expected [lo, hi]");
  const Interval iv{j[0].get<double>(), j[1].get<double>()};
  if (!iv.valid()) throw ParseError(std::string(what) + ": invalid interval");
  return iv;
}

const json& at(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing key '") + key + "'");
  return j.at(key);
}

double num(const json& j, const char* key) {
  const json& v = at(j, key);
  if (!v.is_number()) throw ParseError(std::string("key '") + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

json scenario_to_json(const ScenarioConfig& c) {
  json params = {{"kind", to_string(c.params.kind)},
                 {"v_f", c.params.v_f},
                 {"L", c.params.wheel_base},
                 {"dt", c.params.dt},
                 {"sat", c.params.sat_limit},
                 {"K", c.params.gain}};
  json unsafe = {{"y_limit", c.unsafe.y_limit}, {"combiner", to_string(c.unsafe.combiner)}};
  if (c.unsafe.theta_limit) unsafe["theta_limit"] = *c.unsafe.theta_limit;
  json solver = {{"min_box_width", c.solver.min_box_width},
                 {"max_nodes", c.solver.max_nodes},
                 {"falsifier_grid", c.solver.falsifier_grid},
                 {"nm_iters", c.solver.nm_iters},
                 {"margin", c.solver.margin == MarginPolicy::IntervalGap ? "interval_gap" : "fixed_epsilon"},
                 {"epsilon", c.solver.epsilon}};
  return {{"scenario", c.name},
          {"error_fn", to_string(c.error_fn)},
          {"norm", to_string(c.norm)},
          {"params", params},
          {"unsafe", unsafe},
          {"domain", {{"y", iv_json(c.partition.y_range)}, {"theta", iv_json(c.partition.theta_range)}}},
          {"partition", {{"n_y", c.partition.n_y}, {"n_theta", c.partition.n_theta}}},
          {"initial", {{"y", iv_json(c.initial_y)}, {"theta", iv_json(c.initial_theta)}}},
          {"percept_search", {{"d", iv_json(c.search_d)}, {"psi", iv_json(c.search_psi)}}},
          {"solver", solver}};
}

ScenarioConfig scenario_from_json(const json& j) {
  try {
    ScenarioConfig c;
    c.name = at(j, "scenario").get<std::string>();
    c.error_fn = parse_error_fn(at(j, "error_fn").get<std::string>());
    c.norm = j.contains("norm") ? parse_norm(j.at("norm").get<std::string>()) : Norm::L2;
    const json& p = at(j, "params");
    c.params.kind = p.contains("kind") ? parse_vehicle_kind(p.at("kind").get<std::string>())
                                       : (c.name == "agbot" ? VehicleKind::SkidSteer : VehicleKind::Bicycle);
    c.params.v_f = num(p, "v_f");
    c.params.wheel_base = num(p, "L");
    c.params.dt = num(p, "dt");
    c.params.sat_limit = num(p, "sat");
    c.params.gain = num(p, "K");
    const json& u = at(j, "unsafe");
    c.unsafe.y_limit = num(u, "y_limit");
    if (u.contains("theta_limit")) c.unsafe.theta_limit = num(u, "theta_limit");
    if (u.contains("combiner")) c.unsafe.combiner = parse_combiner(u.at("combiner").get<std::string>());
    const json& dom = at(j, "domain");
    c.partition.y_range = iv_from(at(dom, "y"), "domain.y");
    c.partition.theta_range = iv_from(at(dom, "theta"), "domain.theta");
    const json& part = at(j, "partition");
    c.partition.n_y = at(part, "n_y").get<int>();
    c.partition.n_theta = at(part, "n_theta").get<int>();
    const json& init = at(j, "initial");
    c.initial_y = iv_from(at(init, "y"), "initial.y");
    c.initial_theta = iv_from(at(init, "theta"), "initial.theta");
    const json& ps = at(j, "percept_search");
    c.search_d = iv_from(at(ps, "d"), "percept_search.d");
    c.search_psi = iv_from(at(ps, "psi"), "percept_search.psi");
    const json& s = at(j, "solver");
    c.solver.min_box_width = num(s, "min_box_width");
    c.solver.max_nodes = at(s, "max_nodes").get<std::int64_t>();
    c.solver.falsifier_grid = at(s, "falsifier_grid").get<int>();
    c.solver.nm_iters = at(s, "nm_iters").get<int>();
    c.solver.margin =
        at(s, "margin").get<std::string>() == "fixed_epsilon" ? MarginPolicy::FixedEpsilon : MarginPolicy::IntervalGap;
    c.solver.epsilon = s.value("epsilon", 0.0);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("artifact scenario: ") + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(std::string("artifact scenario: ") + e.what());
  }
}

json abstraction_to_json(const Abstraction& abst) {
  json j = scenario_to_json(abst.scenario);
  j["format_version"] = kFormatVersion;
  json cells = json::array();
  for (const auto& c : abst.cells) {
    json cell = {{"iy", c.cell.iy},
                 {"itheta", c.cell.itheta},
                 {"A", {{c.map.A(0, 0), c.map.A(0, 1)}, {c.map.A(1, 0), c.map.A(1, 1)}}},
                 {"b", {c.map.b(0), c.map.b(1)}},
                 {"r", radius_to_json(c.radius)},
                 {"status", to_string(c.status)},
                 {"fit", c.fit_fallback ? "fallback" : "regression"},
                 {"samples", c.samples},
                 {"lower", radius_to_json(c.lower)},
                 {"upper", radius_to_json(c.upper)},
                 {"nodes", c.nodes}};
    cells.push_back(std::move(cell));
  }
  j["cells"] = std::move(cells);
  return j;
}

Abstraction abstraction_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format_version")) throw ParseError("artifact has no format_version");
  if (!j.at("format_version").is_number_integer() || j.at("format_version").get<int>() != kFormatVersion)
    throw ParseError("unsupported artifact format_version " + j.at("format_version").dump());
  Abstraction abst;
  abst.scenario = scenario_from_json(j);
  const Partition part(abst.scenario.partition);
  const json& cells = at(j, "cells");
  if (!cells.is_array() || cells.size() != part.cells().size())
    throw ParseError("artifact must list exactly " + std::to_string(part.cells().size()) + " cells");
  abst.cells.resize(cells.size());
  std::vector<bool> seen(cells.size(), false);
  try {
    for (const auto& cj : cells) {
      const int iy = at(cj, "iy").get<int>();
      const int it = at(cj, "itheta").get<int>();
      if (iy < 0 || iy >= part.spec().n_y || it < 0 || it >= part.spec().n_theta)
        throw ParseError("cell index out of range");
      const std::size_t idx = part.index(iy, it);
      if (seen[idx]) throw ParseError("duplicate cell (" + std::to_string(iy) + ", " + std::to_string(it) + ")");
      seen[idx] = true;
      CellAbstraction& c = abst.cells[idx];
      c.cell = part.cells()[idx];
      const json& a = at(cj, "A");
      const json& b = at(cj, "b");
      if (!a.is_array() || a.size() != 2 || !b.is_array() || b.size() != 2) throw ParseError("bad A or b");
      for (int r = 0; r < 2; ++r) {
        if (!a[r].is_array() || a[r].size() != 2) throw ParseError("bad A");
        for (int k = 0; k < 2; ++k) c.map.A(r, k) = a[r][k].get<double>();
        c.map.b(r) = b[r].get<double>();
      }
      if (!c.map.finite()) throw ParseError("non-finite map");
      c.radius = radius_from_json(at(cj, "r"));
      c.status = parse_cell_status(at(cj, "status").get<std::string>());
      if ((c.status == CellStatus::Infeasible) != std::isinf(c.radius))
        throw ParseError("status 'infeasible' must go with r = \"inf\" and only then");
      c.fit_fallback = cj.value("fit", std::string("regression")) == "fallback";
      c.samples = cj.value("samples", std::size_t{0});
      c.lower = cj.contains("lower") ? radius_from_json(cj.at("lower")) : c.radius;
      c.upper = cj.contains("upper") ? radius_from_json(cj.at("upper")) : kInf;
      c.nodes = cj.value("nodes", std::int64_t{0});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("artifact cells: ") + e.what());
  }
  return abst;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void save_abstraction(const Abstraction& abst, const std::filesystem::path& path, const json& manifest) {
  json j = abstraction_to_json(abst);
  if (!manifest.is_null()) j["manifest"] = manifest;
  write_json(j, path);
}

Abstraction load_abstraction(const std::filesystem::path& path) { return abstraction_from_json(read_json(path)); }

}  // namespace pabs
