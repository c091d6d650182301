#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biotcrb/pmf.hpp"

namespace biotcrb {

inline constexpr uint64_t kDefaultOutcomeCap = uint64_t{1} << 24;
inline constexpr uint64_t kDefaultPsiLimit = uint64_t{1} << 20;

// Network snapshot at the estimation trigger: N devices each holding a chain
// of L quantized observations, of which the first L0 existed when the attack
// was mounted. Device ids are 1-based.
struct Scenario {
  int n_devices = 0;
  std::vector<int> honest;
  std::vector<int> malicious;
  int chain_length = 0;      // L
  int authentic_length = 0;  // L0, 1 <= L0 <= L
  int alphabet_size = 2;
  double theta = 0.0;
};

// One concrete attack: fork the hijacked devices' chains at block fork_point,
// succeed in the chain-rewrite race with probability dsa_prob, and falsify
// data through attack_pmf (the realized p-tilde at this (theta, xi)).
struct AttackSpec {
  int fork_point = 1;  // La in {1..L0}
  Eigen::VectorXd xi;
  double dsa_prob = 0.0;  // P(La)
  AlphabetPmf attack_pmf;
};

// Structural invariants of the scenario alone. Throws:
//   InvalidPartition  honest/malicious not a partition of {1..N}
//   DegenerateScenario  empty honest set (theta unobservable, bound infinite)
//   InvalidParameter  bad sizes/lengths
void validate_scenario(const Scenario& s);

// Scenario + attack pair; adds
//   InvalidFork  fork_point outside {1..L0}
//   InvalidParameter  dsa_prob outside [0,1], pmf dimension mismatch
void validate_scenario(const Scenario& s, const AttackSpec& a);

// The honest pmf must index the same alphabet the scenario enumerates; a
// shorter table would be read out of bounds and a longer one would make the
// per-symbol sums silently sub-stochastic.
void require_matching_alphabet(const Scenario& s, const AlphabetPmf& p);

// Convenience 0-based coordinate views.
std::vector<int> honest_rows(const Scenario& s);
std::vector<int> malicious_rows(const Scenario& s);

}  // namespace biotcrb
