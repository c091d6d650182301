#include "biotcrb/dsa.hpp"

#include <random>
#include <vector>

#include "biotcrb/error.hpp"
#include "biotcrb/math_util.hpp"

namespace biotcrb {

RaceSpec race_spec_for(const Scenario& s, int fork_point, double alpha) {
  validate_scenario(s);
  if (fork_point < 1 || fork_point > s.authentic_length) {
    raise(ErrorCode::InvalidFork,
          "fork point must lie in 1..authentic_length");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    raise(ErrorCode::InvalidParameter,
          "adversary share must lie in [0, 1]");
  }
  RaceSpec spec;
  spec.adversary_share = alpha;
  spec.counterfeit_needed = s.chain_length - fork_point + 1;
  spec.honest_needed = s.chain_length - s.authentic_length;
  return spec;
}

double race_probability_exact(const RaceSpec& spec) {
  if (spec.counterfeit_needed < 1) {
    raise(ErrorCode::InvalidParameter, "counterfeit block count must be >= 1");
  }
  if (spec.honest_needed < 0) {
    raise(ErrorCode::InvalidParameter, "honest block count must be >= 0");
  }
  if (!(spec.adversary_share >= 0.0 && spec.adversary_share <= 1.0)) {
    raise(ErrorCode::InvalidParameter, "adversary share must lie in [0, 1]");
  }
  // The race ends when either side finishes; the adversary must finish first.
  // P(a,b) = P(win | a counterfeit and b honest blocks still needed).
  if (spec.honest_needed == 0) return 0.0;
  const int c = spec.counterfeit_needed;
  const int h = spec.honest_needed;
  const double alpha = spec.adversary_share;
  std::vector<double> row(h + 1, 1.0);  // P(0, b) = 1 for b >= 1
  row[0] = 0.0;
  for (int a = 1; a <= c; ++a) {
    std::vector<double> next(h + 1, 0.0);
    for (int b = 1; b <= h; ++b) {
      next[b] = alpha * row[b] + (1.0 - alpha) * next[b - 1];
    }
    row.swap(next);
  }
  return row[h];
}

McEstimate race_probability_mc(const RaceSpec& spec, uint64_t trials,
                               uint64_t seed) {
  if (trials == 0) {
    raise(ErrorCode::InvalidParameter, "trial count must be positive");
  }
  std::mt19937_64 rng(splitmix64(seed));
  const double alpha = spec.adversary_share;
  uint64_t wins = 0;
  for (uint64_t t = 0; t < trials; ++t) {
    int a = spec.counterfeit_needed;
    int b = spec.honest_needed;
    while (a > 0 && b > 0) {
      // 53-bit uniform keeps the stream identical across platforms.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      if (u < alpha) {
        --a;
      } else {
        --b;
      }
    }
    if (a == 0 && b > 0) ++wins;
  }
  McEstimate est;
  est.trials = trials;
  est.estimate = static_cast<double>(wins) / static_cast<double>(trials);
  est.standard_error =
      std::sqrt(est.estimate * (1.0 - est.estimate) /
                static_cast<double>(trials));
  return est;
}

std::vector<double> success_profile(const Scenario& s, double alpha) {
  std::vector<double> profile;
  profile.reserve(s.authentic_length);
  for (int la = 1; la <= s.authentic_length; ++la) {
    profile.push_back(race_probability_exact(race_spec_for(s, la, alpha)));
  }
  return profile;
}

}  // namespace biotcrb
