#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pabs/interval.hpp"
#include "pabs/synthesis.hpp"

namespace pabs {

using Point = std::vector<double>;

/// Union of closed axis-aligned boxes; no boxes means the empty set.
class BoxSet {
 public:
  BoxSet() = default;
  explicit BoxSet(int dim, std::vector<Box> boxes = {});

  int dim() const { return dim_; }
  const std::vector<Box>& boxes() const { return boxes_; }
  bool empty() const { return boxes_.empty(); }
  bool contains(const Point& p) const;
  void add(Box b);

 private:
  int dim_ = 0;
  std::vector<Box> boxes_;
};

/// Pieces covering r \ b. Pieces are closed, so they may share a face with b,
/// but each has points outside b whenever r has.
std::vector<Box> subtract(const Box& r, const Box& b);

/// Exact containment test a ⊆ b. On failure returns a point of a outside b.
std::optional<Point> uncovered_point(const BoxSet& a, const BoxSet& b);

/// Black-box component f: R^in -> R^out.
struct Component {
  std::string name;
  int in_dim = 0;
  int out_dim = 0;
  std::function<Point(const Point&)> f;
};

Component identity_component(int dim);
Component affine_component(const std::vector<std::vector<double>>& matrix, const std::vector<double>& offset);
Component square_component(int dim);
/// Lane-keeping pieces on (y, theta): perceive (y,th) -> (y,th,d,psi),
/// control (y,th,d,psi) -> (y,th,u), dynamics (y,th,u) -> (y',th'),
/// closed_loop (y,th) -> (y',th') with ground-truth perception.
Component scenario_component(const std::string& kind, const ScenarioConfig& cfg);

struct ContractPair {
  BoxSet assume;
  BoxSet guarantee;
};

struct ContractStage {
  std::string name;
  Component component;
  std::vector<ContractPair> pairs;
};

struct PresumeAchievePair {
  std::string name;
  BoxSet presume;
  BoxSet achieve;
  Component component;
};

struct ContractPipeline {
  BoxSet initial;
  std::vector<ContractStage> stages;
  std::vector<PresumeAchievePair> presume;

  /// Dimensions chain from the initial domain through every stage and back.
  void validate() const;
};

struct CheckResult {
  bool ok = true;
  std::optional<Point> witness;
  int stage = -1;  // 0-based stage or interface index
  int pair = -1;
  bool vacuous = false;
  bool candidate = false;  // sampling-based, not a proof
};

struct CertWitness {
  int pair = 0;
  Point input;
  Point output;
};

struct CertResult {
  std::optional<CertWitness> witness;
  bool vacuous = false;
};

CertResult falsify_cert(const ContractStage& stage, int samples, std::uint64_t seed);
CheckResult check_init(const ContractPipeline& p);
/// One result per interface between consecutive stages.
std::vector<CheckResult> check_seq(const ContractPipeline& p);
/// Index-wise Q_{i,j} ⊆ P_{i+1,j}; throws ConfigError when pair counts differ.
std::vector<CheckResult> check_seq_strengthened(const ContractPipeline& p);
CheckResult check_sat(const ContractPipeline& p);
CheckResult falsify_presume_cert(const PresumeAchievePair& pair, int y_samples, int x_samples, std::uint64_t seed,
                                 double tolerance = 1e-6);
std::vector<CheckResult> check_presume_seq(const std::vector<PresumeAchievePair>& pairs);

/// One stage mapping each cell box (over y, theta) to the bounding box of its
/// percept balls. Fallback cells are skipped and named in `warnings`.
ContractStage export_abstraction_as_contract(const Abstraction& abst, std::vector<std::string>* warnings = nullptr);

ContractPipeline load_pipeline(const std::filesystem::path& path);
ContractPipeline parse_pipeline(std::string_view toml_text, const std::filesystem::path& base_dir = {},
                                const std::string& source = "<string>");

}  // namespace pabs
