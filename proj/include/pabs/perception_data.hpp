#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pabs/models.hpp"
#include "pabs/partition.hpp"
#include "pabs/regression.hpp"

namespace pabs {

struct EnvironmentId {
  int id = 0;
  std::string label;
};

enum class NoiseKind { UniformBall, TruncatedGaussian };

std::string_view to_string(NoiseKind k);
NoiseKind parse_noise_kind(std::string_view s);

struct Environment {
  EnvironmentId env;
  AffineMap distortion;
};

/// perceived = A_e * truth + b_e + noise, with ||noise||_2 <= noise_bound.
struct SyntheticPerceptionModel {
  std::vector<Environment> envs;
  double noise_bound = 0.0;
  NoiseKind noise_kind = NoiseKind::UniformBall;

  void validate() const;
  const Environment& env(int id) const;
  /// Largest ||perceived - truth||_2 the model can produce for |d| <= d_max, |psi| <= psi_max.
  double max_error(double d_max, double psi_max) const;
};

struct PerceptSample {
  State state;
  int env = 0;
  Percept truth;
  Percept perceived;
};

enum class Provenance { Synthetic, ImportedCsv };

struct Dataset {
  std::vector<PerceptSample> samples;
  std::uint64_t seed = 0;
  Provenance provenance = Provenance::Synthetic;

  /// Samples whose env id is in `ids`.
  Dataset filter_envs(const std::vector<int>& ids) const;
};

/// Uniform states per cell and environment (x = 0); one RNG stream per cell
/// derived from (seed, cell index), so the result does not depend on `threads`.
Dataset sample_dataset(const std::vector<Cell>& cells, const std::vector<int>& env_ids,
                       const SyntheticPerceptionModel& model, int per_cell, std::uint64_t seed, int threads = 1);

/// CSV with header `x,y,theta,env_id,d_star,psi_star,d_hat,psi_hat`.
Dataset import_csv(const std::filesystem::path& path);
void export_csv(const Dataset& data, const std::filesystem::path& path);

}  // namespace pabs
