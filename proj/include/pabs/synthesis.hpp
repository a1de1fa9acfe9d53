#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pabs/interval.hpp"
#include "pabs/models.hpp"
#include "pabs/partition.hpp"
#include "pabs/perception_data.hpp"
#include "pabs/regression.hpp"
#include "pabs/scenario.hpp"

namespace pabs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Joint box over the cell state and the percept.
struct SearchBox {
  Interval y;
  Interval theta;
  Interval d;
  Interval psi;

  Interval& operator[](int i) { return i == 0 ? y : i == 1 ? theta : i == 2 ? d : psi; }
  const Interval& operator[](int i) const { return i == 0 ? y : i == 1 ? theta : i == 2 ? d : psi; }
};

SearchBox root_box(const Cell& cell, const ScenarioConfig& cfg);

enum class Violation { Never, Maybe, Always };

/// Enclosure of a quantity with the sign of V(next) - V(current) over the box:
/// dy (2y + dy) for V2, plus dtheta (2 theta + dtheta) for V3, and
/// dE (2E + dE) with E = theta + atan(K y / v_f) for V1.
Interval enclose_error_change(const SearchBox& box, const VehicleParams& p, ErrorFn fn);

/// Never if no point of the box violates, Always if every point lies in the
/// closure of the violation set, Maybe otherwise.
Violation classify(const SearchBox& box, const VehicleParams& p, ErrorFn fn);

/// Enclosure of ||z - (A m*(s) + b)|| over the box.
Interval enclose_dist(const SearchBox& box, const AffineMap& map, Norm norm);

double percept_distance(const Percept& z, const Percept& center, Norm norm);

/// Center of the percept ball at state s.
inline Percept ball_center(const State& s, const AffineMap& map) { return map.apply(ground_truth_percept(s)); }

/// True iff feeding z to the controller at s strictly increases the tracking error.
bool unsafe_percept(const State& s, const Percept& z, const VehicleParams& p, ErrorFn fn);
bool unsafe_percept(const State& s, const Percept& z, const ScenarioConfig& cfg);

struct Witness {
  State state;
  Percept percept;
  double distance = kInf;
};

/// Best violating point found by sampling plus local descent; distance = +inf if none.
Witness falsify(const Cell& cell, const AffineMap& map, const ScenarioConfig& cfg);

/// Generic best-first branch and bound over a SearchBox.
///
/// Boxes are split at the midpoint of their widest side among the sides still
/// wider than `floor`; a box is terminal once no side can be split. A box is
/// discarded when `prune` returns true. The search stops at the first terminal
/// box popped (smallest distance lower bound first).
struct BnbOutcome {
  enum class Kind { Terminal, Exhausted, Budget } kind = Kind::Exhausted;
  double lower = kInf;  // key of the terminal box, or the queue minimum on Budget
  std::int64_t nodes = 0;
  std::optional<SearchBox> terminal;
};

struct BnbProblem {
  SearchBox root;
  double floor = 1e-3;
  std::int64_t max_nodes = 2'000'000;
  std::function<Interval(const SearchBox&)> dist;
  /// Called with the box and its distance enclosure; true discards the box.
  std::function<bool(const SearchBox&, const Interval&)> prune;
};

BnbOutcome branch_and_bound(const BnbProblem& problem);

struct DistBounds {
  double lower = kInf;
  double upper = kInf;
  std::int64_t nodes = 0;
  Witness witness;  // falsifier point attaining `upper`
};

/// Certified lower bound and falsifier upper bound on the distance from the
/// ball center to the nearest unsafe percept, over the cell and percept box.
/// Throws SolverBudget if the node budget runs out without raising the bound
/// above the root's.
DistBounds min_dist_certified(const Cell& cell, const AffineMap& map, const ScenarioConfig& cfg);

double safe_radius(double lower, double upper, const SolverConfig& solver);

enum class CellStatus { Certified, Fallback, Infeasible };
std::string_view to_string(CellStatus s);
CellStatus parse_cell_status(std::string_view s);

struct CellAbstraction {
  Cell cell;
  AffineMap map;
  double radius = 0.0;
  CellStatus status = CellStatus::Certified;
  bool fit_fallback = false;
  std::size_t samples = 0;
  double lower = 0.0;
  double upper = kInf;
  std::int64_t nodes = 0;
};

struct Abstraction {
  ScenarioConfig scenario;
  std::vector<CellAbstraction> cells;

  /// Index of the cell containing s, if any.
  std::optional<std::size_t> locate(const State& s) const;
};

struct CellError {
  std::size_t index = 0;
  int iy = 0;
  int itheta = 0;
  std::string message;
};

struct SynthesisResult {
  Abstraction abstraction;
  std::vector<CellError> errors;
  std::size_t outside_domain = 0;  // samples not in any cell
};

/// Fits every cell and certifies its radius. Cell failures are collected, not thrown.
SynthesisResult compute_abstraction(const ScenarioConfig& cfg, const Dataset& data, int threads = 1,
                                    const std::function<void(std::size_t done, std::size_t total)>& progress = {});

/// Certifies a single cell with a given map (no regression).
CellAbstraction certify_cell(const Cell& cell, const AffineMap& map, const ScenarioConfig& cfg);

/// Runs `fn(i)` for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace pabs
