#pragma once

#include <cstdint>
#include <vector>

#include "biotcrb/scenario.hpp"

namespace biotcrb {

// Block race between the adversary's fork and the honest chain. Each new
// block is the adversary's with probability adversary_share, independently.
// The fork needs counterfeit_needed blocks to reach the trigger length before
// the honest branch appends honest_needed blocks.
struct RaceSpec {
  double adversary_share = 0.0;  // alpha in [0,1]
  int counterfeit_needed = 1;    // c = L - La + 1, >= 1
  int honest_needed = 0;         // h = L - L0, >= 0
};

RaceSpec race_spec_for(const Scenario& s, int fork_point,
                       double adversary_share);

// Exact success probability by dynamic programming over (blocks still needed
// by adversary, blocks still needed by honest). honest_needed == 0 returns 0:
// the authentic branch is already at the trigger length.
double race_probability_exact(const RaceSpec& spec);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  uint64_t trials = 0;
};

// Direct simulation of the race; deterministic under a fixed seed.
McEstimate race_probability_mc(const RaceSpec& spec, uint64_t trials,
                               uint64_t seed);

// P(La) for La = 1..L0 (index La-1). Nondecreasing in La.
std::vector<double> success_profile(const Scenario& s, double adversary_share);

}  // namespace biotcrb
