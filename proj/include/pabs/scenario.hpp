#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "pabs/interval.hpp"
#include "pabs/models.hpp"
#include "pabs/partition.hpp"
#include "pabs/perception_data.hpp"

namespace pabs {

enum class Norm { L2, LInf };
enum class MarginPolicy { IntervalGap, FixedEpsilon };

std::string_view to_string(Norm n);
Norm parse_norm(std::string_view s);

struct SolverConfig {
  double min_box_width = 1e-3;
  std::int64_t max_nodes = 2'000'000;
  int falsifier_grid = 25;
  int nm_iters = 200;
  MarginPolicy margin = MarginPolicy::IntervalGap;
  double epsilon = 0.0;  // FixedEpsilon only

  void validate() const;
};

struct ScenarioConfig {
  std::string name;
  VehicleParams params;
  ErrorFn error_fn = ErrorFn::V1;
  UnsafeSet unsafe;
  Interval initial_y;
  Interval initial_theta;
  PartitionSpec partition;
  Interval search_d;
  Interval search_psi;
  SolverConfig solver;
  Norm norm = Norm::L2;

  /// Range checks, plus: initial set inside the partition domain, angles
  /// within [-pi, pi], and the percept search box containing the truth image
  /// of the domain.
  void validate() const;
};

/// Everything a scenario TOML file describes.
struct ScenarioFile {
  ScenarioConfig config;
  SyntheticPerceptionModel perception;
  int per_cell = 300;
  std::uint64_t seed = 1;
  std::vector<int> train_envs;  // empty: all environments

  /// Additionally checks that the percept search box covers the truth image
  /// inflated by the perception model's largest error.
  void validate() const;
};

/// Parses "pi", "-pi/12", "0.5*pi", "2*pi/3".
double parse_angle_expr(std::string_view text);

ScenarioFile load_scenario(const std::filesystem::path& path);
ScenarioFile parse_scenario(std::string_view toml_text, const std::string& source = "<string>");

/// Built-in presets with the published constants and the default synthetic
/// perception model.
ScenarioFile gem_preset();
ScenarioFile agbot_preset();

}  // namespace pabs
