#pragma once

// Shared, lazily built abstractions for the tests.

#include "pabs/synthesis.hpp"

namespace pabs::fixtures {

inline Dataset preset_data(const ScenarioFile& sf, int per_cell, std::uint64_t seed) {
  const Partition part(sf.config.partition);
  std::vector<int> ids;
  for (const auto& e : sf.perception.envs) ids.push_back(e.env.id);
  return sample_dataset(part.cells(), ids, sf.perception, per_cell, seed, 2);
}

inline Abstraction synthesize(const ScenarioFile& sf, int per_cell = 300, std::uint64_t seed = 1) {
  return compute_abstraction(sf.config, preset_data(sf, per_cell, seed), 2).abstraction;
}

/// AgBot V1 artifact from the default preset data.
inline const Abstraction& agbot() {
  static const Abstraction a = synthesize(agbot_preset());
  return a;
}

/// GEM V2 artifact from the default preset data.
inline const Abstraction& gem_v2() {
  static const Abstraction a = [] {
    ScenarioFile sf = gem_preset();
    sf.config.error_fn = ErrorFn::V2;
    return synthesize(sf);
  }();
  return a;
}

}  // namespace pabs::fixtures
