#include "pabs/perception_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "pabs/error.hpp"

namespace pabs {

std::string_view to_string(NoiseKind k) {
  return k == NoiseKind::UniformBall ? "uniform_ball" : "truncated_gaussian";
}

NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "uniform_ball") return NoiseKind::UniformBall;
  if (s == "truncated_gaussian") return NoiseKind::TruncatedGaussian;
  throw ConfigError("unknown noise kind '" + std::string(s) + "'");
}

void SyntheticPerceptionModel::validate() const {
  if (!(noise_bound >= 0.0) || !std::isfinite(noise_bound)) throw ConfigError("noise bound must be finite and >= 0");
  if (envs.empty()) throw ConfigError("perception model needs at least one environment");
  for (std::size_t i = 0; i < envs.size(); ++i) {
    if (!envs[i].distortion.finite()) throw ConfigError("environment '" + envs[i].env.label + "' has non-finite distortion");
    for (std::size_t j = 0; j < i; ++j)
      if (envs[j].env.id == envs[i].env.id) throw ConfigError("duplicate environment id " + std::to_string(envs[i].env.id));
  }
}

const Environment& SyntheticPerceptionModel::env(int id) const {
  for (const auto& e : envs)
    if (e.env.id == id) return e;
  throw ConfigError("unknown environment id " + std::to_string(id));
}

double SyntheticPerceptionModel::max_error(double d_max, double psi_max) const {
  double worst = 0.0;
  const double t = std::hypot(d_max, psi_max);
  for (const auto& e : envs) {
    const Eigen::Matrix2d dev = e.distortion.A - Eigen::Matrix2d::Identity();
    const double op = Eigen::JacobiSVD<Eigen::Matrix2d>(dev).singularValues()(0);
    worst = std::max(worst, op * t + e.distortion.b.norm());
  }
  return worst + noise_bound;
}

Dataset Dataset::filter_envs(const std::vector<int>& ids) const {
  Dataset out;
  out.seed = seed;
  out.provenance = provenance;
  for (const auto& s : samples)
    if (std::find(ids.begin(), ids.end(), s.env) != ids.end()) out.samples.push_back(s);
  return out;
}

namespace {

Eigen::Vector2d draw_noise(std::mt19937_64& rng, const SyntheticPerceptionModel& model) {
  if (model.noise_bound == 0.0) return Eigen::Vector2d::Zero();
  if (model.noise_kind == NoiseKind::UniformBall) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double rad = model.noise_bound * std::sqrt(u(rng));
    const double ang = 2.0 * M_PI * u(rng);
    return {rad * std::cos(ang), rad * std::sin(ang)};
  }
  std::normal_distribution<double> g(0.0, 0.5 * model.noise_bound);
  for (;;) {
    Eigen::Vector2d v(g(rng), g(rng));
    if (v.norm() <= model.noise_bound) return v;
  }
}

void sample_cell(const Cell& cell, std::size_t index, const std::vector<int>& env_ids,
                 const SyntheticPerceptionModel& model, int per_cell, std::uint64_t seed,
                 std::vector<PerceptSample>& out) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> uy(cell.y_bounds.lo, cell.y_bounds.hi);
  std::uniform_real_distribution<double> ut(cell.theta_bounds.lo, cell.theta_bounds.hi);
  for (int id : env_ids) {
    const auto& env = model.env(id);
    for (int k = 0; k < per_cell; ++k) {
      PerceptSample s;
      s.state = {0.0, uy(rng), ut(rng)};
      s.env = id;
      s.truth = ground_truth_percept(s.state);
      const Percept centered = env.distortion.apply(s.truth);
      const Eigen::Vector2d n = draw_noise(rng, model);
      s.perceived = {centered.d + n(0), centered.psi + n(1)};
      out.push_back(s);
    }
  }
}

}  // namespace

Dataset sample_dataset(const std::vector<Cell>& cells, const std::vector<int>& env_ids,
                       const SyntheticPerceptionModel& model, int per_cell, std::uint64_t seed, int threads) {
  if (per_cell < 1) throw ConfigError("per_cell must be >= 1");
  model.validate();
  for (int id : env_ids) model.env(id);

  std::vector<std::vector<PerceptSample>> per(cells.size());
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, cells.size()));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < cells.size(); i += workers) sample_cell(cells[i], i, env_ids, model, per_cell, seed, per[i]);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
  }

  Dataset data;
  data.seed = seed;
  data.provenance = Provenance::Synthetic;
  for (auto& v : per) data.samples.insert(data.samples.end(), v.begin(), v.end());
  return data;
}

namespace {

constexpr const char* kHeader = "x,y,theta,env_id,d_star,psi_star,d_hat,psi_hat";

void put(std::string& line, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  line.append(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void export_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << kHeader << '\n';
  std::string line;
  for (const auto& s : data.samples) {
    line.clear();
    put(line, s.state.x), line += ',';
    put(line, s.state.y), line += ',';
    put(line, s.state.theta), line += ',';
    line += std::to_string(s.env), line += ',';
    put(line, s.truth.d), line += ',';
    put(line, s.truth.psi), line += ',';
    put(line, s.perceived.d), line += ',';
    put(line, s.perceived.psi);
    out << line << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

Dataset import_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");

  const std::vector<std::string> wanted = {"x", "y", "theta", "env_id", "d_star", "psi_star", "d_hat", "psi_hat"};
  std::vector<int> column(wanted.size(), -1);
  const auto header = split(line);
  for (std::size_t i = 0; i < header.size(); ++i)
    for (std::size_t k = 0; k < wanted.size(); ++k)
      if (trim(header[i]) == wanted[k]) column[k] = static_cast<int>(i);
  for (std::size_t k = 0; k < wanted.size(); ++k)
    if (column[k] < 0) throw ParseError(path.string() + ": missing column '" + wanted[k] + "'");

  Dataset data;
  data.provenance = Provenance::ImportedCsv;
  std::size_t row = 0;  // data rows, header excluded
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    auto fail = [&](const std::string& why) {
      return ParseError(path.string() + ": row " + std::to_string(row) + ": " + why);
    };
    double v[8];
    for (std::size_t k = 0; k < wanted.size(); ++k) {
      if (static_cast<std::size_t>(column[k]) >= fields.size()) throw fail("too few fields");
      const auto f = trim(fields[column[k]]);
      if (k == 3) {
        int id = 0;
        const auto res = std::from_chars(f.data(), f.data() + f.size(), id);
        if (res.ec != std::errc() || res.ptr != f.data() + f.size()) throw fail("bad env_id '" + std::string(f) + "'");
        v[k] = id;
        continue;
      }
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v[k]);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size())
        throw fail("cannot parse " + wanted[k] + " '" + std::string(f) + "'");
      if (!std::isfinite(v[k])) throw fail("non-finite " + wanted[k]);
    }
    PerceptSample s;
    s.state = {v[0], v[1], v[2]};
    s.env = static_cast<int>(v[3]);
    s.truth = {v[4], v[5]};
    s.perceived = {v[6], v[7]};
    const Percept expect = ground_truth_percept(s.state);
    if (std::abs(expect.d - s.truth.d) > 1e-9 || std::abs(expect.psi - s.truth.psi) > 1e-9)
      throw fail("truth percept does not match the state");
    data.samples.push_back(s);
  }
  if (data.samples.empty()) throw ParseError(path.string() + ": empty dataset");
  return data;
}

}  // namespace pabs
