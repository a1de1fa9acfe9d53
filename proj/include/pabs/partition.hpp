#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "pabs/interval.hpp"
#include "pabs/models.hpp"

namespace pabs {

/// Uniform rectangular grid over (y, theta). x is not partitioned.
struct PartitionSpec {
  Interval y_range;
  Interval theta_range;
  int n_y = 1;
  int n_theta = 1;

  void validate() const;
  std::size_t cell_count() const { return static_cast<std::size_t>(n_y) * static_cast<std::size_t>(n_theta); }
};

struct Cell {
  int iy = 0;
  int itheta = 0;
  Interval y_bounds;
  Interval theta_bounds;

  bool contains(double y, double theta) const {
    return y_bounds.contains(y) && theta_bounds.contains(theta);
  }
  State center() const { return {0.0, y_bounds.mid(), theta_bounds.mid()}; }
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Grid boundaries along one axis, n + 1 values.
///
/// For n = m * 2^k with m odd the m + 1 coarse boundaries are placed at
/// lo + w * i / m and then bisected k times with Interval::mid. Boundaries of
/// a partition refined by a power of two therefore coincide bit-for-bit with
/// the bisection points used by the branch-and-bound solver.
std::vector<double> axis_boundaries(const Interval& range, int n);

/// Row-major cell list (row = y index, column = theta index).
std::vector<Cell> build_partition(const PartitionSpec& spec);

class Partition {
 public:
  explicit Partition(PartitionSpec spec);

  const PartitionSpec& spec() const { return spec_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const Cell& cell(int iy, int itheta) const { return cells_[index(iy, itheta)]; }
  std::size_t index(int iy, int itheta) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(spec_.n_theta) + static_cast<std::size_t>(itheta);
  }

  /// Cell containing (y, theta): lower-closed, upper-open, except the last
  /// cell on each axis which is closed.
  std::optional<Cell> locate(const State& s) const;
  std::optional<std::size_t> locate_index(const State& s) const;

 private:
  PartitionSpec spec_;
  std::vector<double> y_bounds_;
  std::vector<double> theta_bounds_;
  std::vector<Cell> cells_;
};

std::optional<Cell> locate(const State& s, const std::vector<Cell>& cells);

/// Pairs every fine cell with the coarse cell containing it. Counts of the
/// fine spec must be integer multiples of the coarse counts over the same ranges.
std::vector<std::pair<Cell, Cell>> refine_map(const PartitionSpec& coarse, const PartitionSpec& fine);

}  // namespace pabs
