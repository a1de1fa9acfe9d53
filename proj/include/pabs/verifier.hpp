#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "pabs/synthesis.hpp"

namespace pabs {

enum class Verdict { Pass, Counterexample, Inconclusive };
std::string_view to_string(Verdict v);

struct VerificationWitness {
  int iy = 0;
  int itheta = 0;
  State state;
  Percept percept;
  State next;
  std::string reason;  // "invariant", "unsafe" or "left_domain"
  int step = 0;        // bounded reach only
  State initial;       // bounded reach only
};

struct VerificationReport {
  Verdict verdict = Verdict::Pass;
  std::optional<VerificationWitness> witness;
  std::size_t cells_checked = 0;
  std::int64_t nodes = 0;
  std::int64_t samples = 0;
  std::int64_t executions = 0;
  std::int64_t blocked = 0;  // executions stopped because the percept set was empty
  std::int64_t unsafe = 0;       // executions that entered the unsafe set
  std::int64_t left_domain = 0;  // executions that left the partition domain
  std::string note;
};

/// Checks that no percept inside any certified ball makes the tracking error
/// grow. Balls are open: |z - c| < r, and r = 0 is the empty set.
VerificationReport check_induction(const Abstraction& abst, int threads = 1);

/// True when the witness, re-evaluated with the scalar models, still shows the violation.
bool replay_induction_witness(const Abstraction& abst, const VerificationWitness& w);
bool replay_reach_witness(const Abstraction& abst, const VerificationWitness& w);

struct Adversary {
  enum class Kind { WorstGrid, Random } kind = Kind::WorstGrid;
  int k = 8;               // WorstGrid: boundary candidates per step
  std::uint64_t seed = 1;  // Random
  int n = 10;              // Random: executions per initial point
};

Adversary parse_adversary(std::string_view text);

/// Rolls the abstract closed loop forward from a grid over the initial set,
/// with the adversary picking percepts from each step's ball.
VerificationReport bounded_reach(const Abstraction& abst, int horizon, const Adversary& adv, int grid_per_axis = 9,
                                 int threads = 1);

nlohmann::json report_to_json(const VerificationReport& r);

}  // namespace pabs
