// Command-line front end: gen-data, synthesize, verify, evaluate, contracts.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "pabs/artifact_io.hpp"
#include "pabs/contracts.hpp"
#include "pabs/error.hpp"
#include "pabs/manifest.hpp"
#include "pabs/perception_data.hpp"
#include "pabs/precision.hpp"
#include "pabs/scenario.hpp"
#include "pabs/synthesis.hpp"
#include "pabs/verifier.hpp"

namespace fs = std::filesystem;
using namespace pabs;

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kPartial = 3, kCounterexample = 4, kInconclusive = 5 };

std::vector<int> parse_ids(const std::string& text) {
  std::vector<int> ids;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t used = 0;
      ids.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad environment id '" + tok + "'");
    }
  }
  return ids;
}

// "8x10" -> (8, 10)
std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(text);
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw ConfigError("partition must look like 8x10, got '" + text + "'");
  }
}

std::vector<int> env_ids_or_all(const std::string& text, const SyntheticPerceptionModel& model) {
  if (!text.empty()) return parse_ids(text);
  std::vector<int> ids;
  for (const auto& e : model.envs) ids.push_back(e.env.id);
  return ids;
}

std::string fmt_radius(double r) {
  if (std::isinf(r)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", r);
  return buf;
}

struct Common {
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

int run_gen_data(const std::string& scenario_path, const fs::path& out, std::optional<int> per_cell,
                 std::optional<std::uint64_t> seed, const std::string& envs, const Common& common) {
  RunManifest manifest;
  manifest.command = "gen-data";
  PhaseTimer timer(manifest);
  ScenarioFile sf = load_scenario(scenario_path);
  if (per_cell) sf.per_cell = *per_cell;
  if (seed) sf.seed = *seed;
  if (sf.per_cell < 1) throw ConfigError("--per-cell must be >= 1");
  const auto ids = env_ids_or_all(envs, sf.perception);
  timer.lap("load");
  const Partition part(sf.config.partition);
  const Dataset data = sample_dataset(part.cells(), ids, sf.perception, sf.per_cell, sf.seed, common.threads);
  timer.lap("sample");
  export_csv(data, out);
  timer.lap("write");
  manifest.inputs = {{"scenario", scenario_path}};
  manifest.seeds["data"] = sf.seed;
  manifest.write_sidecar(out);
  std::cout << "wrote " << data.samples.size() << " samples to " << out.string() << " (" << part.cells().size()
            << " cells x " << ids.size() << " environments x " << sf.per_cell << " per cell)\n";
  return kOk;
}

int run_synthesize(const std::string& scenario_path, const fs::path& data_path, const fs::path& out,
                   const std::string& error_fn, const std::string& partition, const std::string& envs,
                   const Common& common) {
  RunManifest manifest;
  manifest.command = "synthesize";
  PhaseTimer timer(manifest);
  ScenarioFile sf = load_scenario(scenario_path);
  if (!error_fn.empty()) sf.config.error_fn = parse_error_fn(error_fn);
  if (!partition.empty()) std::tie(sf.config.partition.n_y, sf.config.partition.n_theta) = parse_grid(partition);
  sf.config.validate();
  if (!fs::exists(data_path)) throw ConfigError("data file " + data_path.string() + " does not exist");
  Dataset data = import_csv(data_path);
  std::vector<int> train = envs.empty() ? sf.train_envs : parse_ids(envs);
  if (!train.empty()) data = data.filter_envs(train);
  timer.lap("load");

  const SynthesisResult res = compute_abstraction(sf.config, data, common.threads);
  timer.lap("synthesize");

  manifest.inputs = {{"scenario", scenario_path}, {"data", data_path}};
  manifest.seeds["data"] = sf.seed;
  const auto& cells = res.abstraction.cells;
  save_abstraction(res.abstraction, out, manifest.to_json());
  timer.lap("write");
  manifest.write_sidecar(out);

  std::size_t certified = 0, fallback = 0, infeasible = 0;
  std::vector<double> finite;
  for (const auto& c : cells) {
    if (c.status == CellStatus::Certified) ++certified;
    if (c.status == CellStatus::Fallback) ++fallback;
    if (c.status == CellStatus::Infeasible) ++infeasible;
    if (std::isfinite(c.radius)) finite.push_back(c.radius);
  }
  std::sort(finite.begin(), finite.end());
  std::cout << "cells " << cells.size() << "  certified " << certified << "  fallback " << fallback << "  infeasible "
            << infeasible << '\n';
  if (!finite.empty()) {
    const double median = finite.size() % 2 ? finite[finite.size() / 2]
                                            : 0.5 * (finite[finite.size() / 2 - 1] + finite[finite.size() / 2]);
    std::cout << "radius min " << fmt_radius(finite.front()) << "  median " << fmt_radius(median) << '\n';
  }
  if (res.outside_domain > 0) std::cout << res.outside_domain << " samples outside the partition domain ignored\n";
  for (const auto& e : res.errors) std::cerr << "error: " << e.message << '\n';
  std::cout << "wrote " << out.string() << '\n';
  return res.errors.empty() ? kOk : kPartial;
}

int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::Pass: return kOk;
    case Verdict::Counterexample: return kCounterexample;
    case Verdict::Inconclusive: return kInconclusive;
  }
  return kInternal;
}

int run_verify(const fs::path& abst_path, bool induction, bool reach, int horizon, const std::string& adversary,
               int grid, fs::path report_path, const Common& common) {
  if (!induction && !reach) induction = true;
  const Adversary adv = parse_adversary(adversary);
  const Abstraction abst = load_abstraction(abst_path);
  nlohmann::json report = nlohmann::json::object();
  Verdict overall = Verdict::Pass;
  auto merge = [&](Verdict v) {
    if (v == Verdict::Counterexample || (v == Verdict::Inconclusive && overall == Verdict::Pass)) overall = v;
  };
  auto print = [](const char* what, const VerificationReport& r) {
    std::cout << what << ": " << to_string(r.verdict) << "  (cells " << r.cells_checked << ", nodes " << r.nodes
              << ", executions " << r.executions << ", blocked " << r.blocked << ", unsafe " << r.unsafe
              << ", left domain " << r.left_domain << ")\n";
    if (r.witness) {
      const auto& w = *r.witness;
      std::cout << "  witness cell (" << w.iy << ", " << w.itheta << ") state y=" << w.state.y
                << " theta=" << w.state.theta << " percept d=" << w.percept.d << " psi=" << w.percept.psi
                << " next y=" << w.next.y << " theta=" << w.next.theta << " [" << w.reason << "]\n";
    }
  };
  if (induction) {
    const auto r = check_induction(abst, common.threads);
    print("induction", r);
    report["induction"] = report_to_json(r);
    merge(r.verdict);
  }
  if (reach) {
    const auto r = bounded_reach(abst, horizon, adv, grid, common.threads);
    print("reach", r);
    report["reach"] = report_to_json(r);
    report["reach"]["horizon"] = horizon;
    report["reach"]["adversary"] = adversary;
    merge(r.verdict);
  }
  report["verdict"] = to_string(overall);
  if (report_path.empty()) report_path = fs::path(abst_path).replace_extension(".report.json");
  write_json(report, report_path);
  return verdict_code(overall);
}

int run_evaluate(const fs::path& abst_path, const fs::path& test_path, const std::string& envs, const fs::path& svg,
                 const fs::path& csv) {
  const Abstraction abst = load_abstraction(abst_path);
  if (!fs::exists(test_path)) throw ConfigError("test file " + test_path.string() + " does not exist");
  Dataset test = import_csv(test_path);
  if (!envs.empty()) test = test.filter_envs(parse_ids(envs));
  const PrecisionMap map = evaluate(abst, test);
  if (!svg.empty()) render_heatmap(map, svg, csv);
  else if (!csv.empty()) {
    std::ofstream out(csv, std::ios::binary);
    out << heatmap_csv(map);
  }
  std::size_t positives = 0;
  for (const auto& c : map.cells) positives += c.positives;
  const auto mean = map.mean_score();
  std::cout << "samples " << test.samples.size() << "  positives " << positives << "  outside domain "
            << map.outside_domain << "  mean cell score " << (mean ? std::to_string(*mean) : "undefined") << '\n';
  return kOk;
}

nlohmann::json check_json(const CheckResult& r) {
  nlohmann::json j = {{"ok", r.ok}};
  if (r.witness) j["witness"] = *r.witness;
  if (r.stage >= 0) j["stage"] = r.stage + 1;
  if (r.pair >= 0) j["pair"] = r.pair + 1;
  if (r.vacuous) j["vacuous"] = true;
  if (r.candidate) j["candidate"] = true;
  return j;
}

int run_contracts(const fs::path& pipeline_path, const std::string& checks_text, int falsify_n, std::uint64_t seed,
                  const fs::path& report_path) {
  const ContractPipeline p = load_pipeline(pipeline_path);
  std::vector<std::string> checks;
  {
    std::stringstream ss(checks_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) checks.push_back(tok);
  }
  nlohmann::json report = {{"apply", "assumed"}};
  bool ok = true;
  auto show = [&](const std::string& name, const CheckResult& r) {
    std::cout << name << ": " << (r.ok ? "pass" : "FAIL");
    if (r.candidate && !r.ok) std::cout << " (candidate)";
    if (r.witness) {
      std::cout << " witness (";
      for (std::size_t i = 0; i < r.witness->size(); ++i) std::cout << (i ? ", " : "") << (*r.witness)[i];
      std::cout << ")";
    }
    std::cout << '\n';
    ok = ok && r.ok;
  };
  for (const auto& c : checks) {
    if (c == "init") {
      const auto r = check_init(p);
      show("init", r);
      report["init"] = check_json(r);
    } else if (c == "seq") {
      report["seq"] = nlohmann::json::array();
      for (const auto& r : check_seq(p)) {
        show("seq " + std::to_string(r.stage + 1) + "->" + std::to_string(r.stage + 2), r);
        report["seq"].push_back(check_json(r));
      }
    } else if (c == "seq-strict") {
      report["seq_strict"] = nlohmann::json::array();
      for (const auto& r : check_seq_strengthened(p)) {
        show("seq-strict " + std::to_string(r.stage + 1) + "->" + std::to_string(r.stage + 2), r);
        report["seq_strict"].push_back(check_json(r));
      }
    } else if (c == "sat") {
      const auto r = check_sat(p);
      show("sat", r);
      report["sat"] = check_json(r);
    } else if (c == "presume") {
      report["presume_cert"] = nlohmann::json::array();
      for (const auto& pa : p.presume) {
        const auto r = falsify_presume_cert(pa, 200, 200, seed);
        show("presume-cert " + pa.name, r);
        report["presume_cert"].push_back(check_json(r));
      }
      report["presume_seq"] = nlohmann::json::array();
      for (const auto& r : check_presume_seq(p.presume)) {
        show("presume-seq " + std::to_string(r.stage + 1) + "->" + std::to_string(r.stage + 2), r);
        report["presume_seq"].push_back(check_json(r));
      }
    } else if (!c.empty()) {
      throw ConfigError("unknown check '" + c + "'");
    }
  }
  if (falsify_n > 0) {
    report["cert"] = nlohmann::json::array();
    for (std::size_t i = 0; i < p.stages.size(); ++i) {
      const auto r = falsify_cert(p.stages[i], falsify_n, seed);
      nlohmann::json j = {{"stage", i + 1}, {"ok", !r.witness}, {"vacuous", r.vacuous}};
      std::cout << "cert " << p.stages[i].name << ": " << (r.witness ? "FAIL" : "pass");
      if (r.witness) {
        j["pair"] = r.witness->pair + 1;
        j["input"] = r.witness->input;
        j["output"] = r.witness->output;
        std::cout << " (pair " << r.witness->pair + 1 << ")";
        ok = false;
      }
      std::cout << '\n';
      report["cert"].push_back(j);
    }
  }
  std::cout << "apply: assumed\n";
  report["ok"] = ok;
  if (!report_path.empty()) write_json(report, report_path);
  return ok ? kOk : kCounterexample;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Safe piecewise-affine perception abstractions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(tool_version()));
  Common common;
  app.add_option("--threads", common.threads, "worker threads")->check(CLI::PositiveNumber);
  app.fallthrough();  // accept --threads after the subcommand name

  std::string scenario, envs, error_fn, partition, adversary = "worst(8)", checks = "init,seq,sat";
  fs::path out, data, abst_path, test, heatmap, csv, report, pipeline;
  std::optional<int> per_cell;
  std::optional<std::uint64_t> seed;
  bool induction = false, reach = false;
  int horizon = 100, grid = 9, falsify_n = 0;
  std::uint64_t contract_seed = 1;

  auto* gen = app.add_subcommand("gen-data", "sample a synthetic perception dataset");
  gen->add_option("--scenario", scenario, "scenario TOML")->required();
  gen->add_option("--out", out, "output CSV")->required();
  gen->add_option("--per-cell", per_cell, "samples per cell and environment");
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--envs", envs, "comma-separated environment ids (default: all)");

  auto* syn = app.add_subcommand("synthesize", "fit center maps and certify safe radii");
  syn->add_option("--scenario", scenario, "scenario TOML")->required();
  syn->add_option("--data", data, "training CSV")->required();
  syn->add_option("--out", out, "abstraction JSON")->required();
  syn->add_option("--error-fn", error_fn, "override the tracking error function (V1, V2, V3)");
  syn->add_option("--partition", partition, "override the partition, e.g. 8x10");
  syn->add_option("--envs", envs, "train on these environment ids only");

  auto* ver = app.add_subcommand("verify", "check an abstraction");
  ver->add_option("--abstraction", abst_path, "abstraction JSON")->required();
  ver->add_flag("--induction", induction, "check one-step invariant preservation (default)");
  ver->add_flag("--reach", reach, "run bounded closed-loop reachability");
  ver->add_option("--horizon", horizon, "steps for --reach")->check(CLI::NonNegativeNumber);
  ver->add_option("--adversary", adversary, "worst(k) or random(seed,n)");
  ver->add_option("--grid", grid, "initial-set grid points per axis")->check(CLI::PositiveNumber);
  ver->add_option("--report", report, "report JSON (default: next to the abstraction)");

  auto* ev = app.add_subcommand("evaluate", "precision of an abstraction on a test set");
  ev->add_option("--abstraction", abst_path, "abstraction JSON")->required();
  ev->add_option("--test", test, "test CSV")->required();
  ev->add_option("--envs", envs, "evaluate on these environment ids only");
  ev->add_option("--heatmap", heatmap, "SVG output");
  ev->add_option("--csv", csv, "CSV output");

  auto* con = app.add_subcommand("contracts", "check an assume-guarantee pipeline");
  con->add_option("--pipeline", pipeline, "pipeline TOML")->required();
  con->add_option("--check", checks, "comma list of init,seq,seq-strict,sat,presume");
  con->add_option("--falsify-cert", falsify_n, "samples per pair for certification falsification");
  con->add_option("--seed", contract_seed, "RNG seed");
  con->add_option("--report", report, "report JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return run_gen_data(scenario, out, per_cell, seed, envs, common);
    if (*syn) return run_synthesize(scenario, data, out, error_fn, partition, envs, common);
    if (*ver) return run_verify(abst_path, induction, reach, horizon, adversary, grid, report, common);
    if (*ev) return run_evaluate(abst_path, test, envs, heatmap, csv);
    if (*con) return run_contracts(pipeline, checks, falsify_n, contract_seed, report);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
