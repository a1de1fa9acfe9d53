#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pabs/perception_data.hpp"
#include "pabs/synthesis.hpp"

namespace pabs {

struct CellScore {
  int iy = 0;
  int itheta = 0;
  std::size_t positives = 0;
  std::size_t total = 0;

  /// positives / total, undefined for an empty cell.
  std::optional<double> score() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(positives) / static_cast<double>(total);
  }
};

struct PrecisionMap {
  int n_y = 0;
  int n_theta = 0;
  std::vector<CellScore> cells;  // row-major like the partition
  std::size_t outside_domain = 0;

  /// Mean of the defined cell scores.
  std::optional<double> mean_score() const;
};

/// A sample is positive when its perceived percept lies in the cell's ball
/// around A * truth + b (open ball, r = +inf covers everything).
PrecisionMap evaluate(const Abstraction& abst, const Dataset& test);

std::string heatmap_svg(const PrecisionMap& map);
std::string heatmap_csv(const PrecisionMap& map);

/// Writes the SVG and, if `csv_path` is non-empty, the CSV.
void render_heatmap(const PrecisionMap& map, const std::filesystem::path& svg_path,
                    const std::filesystem::path& csv_path = {});

}  // namespace pabs
