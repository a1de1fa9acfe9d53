#include "pabs/partition.hpp"

#include <algorithm>
#include <string>

#include "pabs/error.hpp"

namespace pabs {

void PartitionSpec::validate() const {
  if (!y_range.valid() || !(y_range.width() > 0.0)) throw ConfigError("partition y range must be non-degenerate");
  if (!theta_range.valid() || !(theta_range.width() > 0.0))
    throw ConfigError("partition theta range must be non-degenerate");
  if (n_y < 1 || n_theta < 1) throw ConfigError("partition counts must be positive");
}

std::vector<double> axis_boundaries(const Interval& range, int n) {
  int odd = n;
  int doublings = 0;
  while (odd % 2 == 0) {
    odd /= 2;
    ++doublings;
  }
  std::vector<double> bounds(static_cast<std::size_t>(odd) + 1);
  const double w = range.hi - range.lo;
  for (int i = 0; i <= odd; ++i) bounds[i] = range.lo + w * (static_cast<double>(i) / odd);
  bounds.front() = range.lo;
  bounds.back() = range.hi;
  for (int k = 0; k < doublings; ++k) {
    std::vector<double> finer;
    finer.reserve(bounds.size() * 2 - 1);
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
      finer.push_back(bounds[i]);
      finer.push_back(Interval(bounds[i], bounds[i + 1]).mid());
    }
    finer.push_back(bounds.back());
    bounds = std::move(finer);
  }
  return bounds;
}

std::vector<Cell> build_partition(const PartitionSpec& spec) {
  spec.validate();
  const auto yb = axis_boundaries(spec.y_range, spec.n_y);
  const auto tb = axis_boundaries(spec.theta_range, spec.n_theta);
  std::vector<Cell> cells;
  cells.reserve(spec.cell_count());
  for (int iy = 0; iy < spec.n_y; ++iy)
    for (int it = 0; it < spec.n_theta; ++it)
      cells.push_back({iy, it, {yb[iy], yb[iy + 1]}, {tb[it], tb[it + 1]}});
  return cells;
}

namespace {

// index of the half-open slot [b_i, b_{i+1}) holding v; the last slot is closed
std::optional<int> slot(const std::vector<double>& b, double v) {
  if (!(v >= b.front() && v <= b.back())) return std::nullopt;
  const auto it = std::upper_bound(b.begin(), b.end(), v);
  int i = static_cast<int>(it - b.begin()) - 1;
  const int last = static_cast<int>(b.size()) - 2;
  return std::min(i, last);
}

}  // namespace

Partition::Partition(PartitionSpec spec)
    : spec_(spec),
      y_bounds_(axis_boundaries(spec.y_range, spec.n_y)),
      theta_bounds_(axis_boundaries(spec.theta_range, spec.n_theta)),
      cells_(build_partition(spec)) {}

std::optional<std::size_t> Partition::locate_index(const State& s) const {
  const auto iy = slot(y_bounds_, s.y);
  const auto it = slot(theta_bounds_, s.theta);
  if (!iy || !it) return std::nullopt;
  return index(*iy, *it);
}

std::optional<Cell> Partition::locate(const State& s) const {
  const auto i = locate_index(s);
  if (!i) return std::nullopt;
  return cells_[*i];
}

std::optional<Cell> locate(const State& s, const std::vector<Cell>& cells) {
  const Cell* best = nullptr;
  for (const auto& c : cells) {
    if (!c.contains(s.y, s.theta)) continue;
    // prefer the cell whose lower faces are hit, matching the half-open rule
    if (best == nullptr || c.iy > best->iy || (c.iy == best->iy && c.itheta > best->itheta)) best = &c;
  }
  if (best == nullptr) return std::nullopt;
  return *best;
}

std::vector<std::pair<Cell, Cell>> refine_map(const PartitionSpec& coarse, const PartitionSpec& fine) {
  coarse.validate();
  fine.validate();
  if (coarse.y_range != fine.y_range || coarse.theta_range != fine.theta_range)
    throw ConfigError("refine_map: partitions cover different ranges");
  if (fine.n_y % coarse.n_y != 0 || fine.n_theta % coarse.n_theta != 0)
    throw ConfigError("refine_map: fine counts " + std::to_string(fine.n_y) + "x" + std::to_string(fine.n_theta) +
                      " are not multiples of " + std::to_string(coarse.n_y) + "x" + std::to_string(coarse.n_theta));
  const int ry = fine.n_y / coarse.n_y;
  const int rt = fine.n_theta / coarse.n_theta;
  const auto coarse_cells = build_partition(coarse);
  const auto fine_cells = build_partition(fine);
  std::vector<std::pair<Cell, Cell>> out;
  out.reserve(fine_cells.size());
  for (const auto& c : fine_cells) {
    const int py = c.iy / ry;
    const int pt = c.itheta / rt;
    out.emplace_back(c, coarse_cells[static_cast<std::size_t>(py) * coarse.n_theta + pt]);
  }
  return out;
}

}  // namespace pabs
