#pragma once

#include <cstdint>
#include <vector>

#include "biotcrb/scenario.hpp"

namespace biotcrb {

// Per-outcome honest-side sensitivities for the relaxed worst-case problem:
//   x     (dphi0/dtheta)^2 / phi0   (0^2/0 := 0)
//   w     phi0
//   omega x / w
// multiplicity counts how many outcomes of the full space share the entry
// (1 on full tables; |O|^(|Ca|*L) when collapsed onto honest patterns, since
// x and w do not depend on malicious coordinates). Zero-weight outcomes are
// dropped and counted.
struct SensitivityTable {
  enum class Basis { FullOutcome, HonestPattern, SymbolCount, Explicit };

  std::vector<double> x;
  std::vector<double> w;
  std::vector<double> omega;
  std::vector<double> multiplicity;
  uint64_t dropped_zero_weight = 0;
  Basis basis = Basis::Explicit;

  size_t size() const { return x.size(); }
  double total_weight() const;  // sum of multiplicity * w
  double sum_x() const;         // sum of x over distinct entries

  // Explicit table (fixtures/tests); multiplicity 1.
  static SensitivityTable explicit_table(std::vector<double> x,
                                         std::vector<double> w);
};

// Reference builder over the full outcome space.
SensitivityTable sensitivity_weights(const Scenario& s, const AlphabetPmf& p,
                                     uint64_t cap = kDefaultOutcomeCap);

// Collapsed builder over honest-coordinate patterns; exact-equivalent to the
// full form (x, w depend only on honest coordinates).
SensitivityTable sensitivity_weights_honest(const Scenario& s,
                                            const AlphabetPmf& p,
                                            uint64_t cap = kDefaultOutcomeCap);

// Collapsed builder over per-symbol count vectors: within a count class both
// x and w coincide, so one entry with a multinomial multiplicity stands in
// for the whole class. Exact-equivalent to the other two builders and
// polynomial-sized, so large honest sides stay tractable.
SensitivityTable sensitivity_weights_counts(const Scenario& s,
                                            const AlphabetPmf& p,
                                            uint64_t cap = kDefaultOutcomeCap);

enum class Region : uint8_t {
  S1Zero,        // omega above the water level, y* = 0
  S2One,         // omega below the water level, y* = 1
  S3Fractional,  // boundary group at the water level
};

// Closed-form solution of  min sum x*y  s.t.  sum w*y = 1, 0 <= y <= 1.
struct WaterfillSolution {
  double lambda_star = 0.0;
  double objective = 0.0;
  double guarantee = 0.0;  // 1 / objective
  std::vector<double> y;
  std::vector<Region> region;
  std::vector<double> kkt_mu;  // multiplier of y >= 0
  std::vector<double> kkt_nu;  // multiplier of y <= 1
  size_t n_s1 = 0, n_s2 = 0, n_s3 = 0;
};

// Ties in omega are grouped within 1e-12 relative tolerance; when the budget
// is met exactly at a group boundary the reported lambda_star is the lower
// endpoint of the optimal interval. Throws InfeasibleRelaxation when the
// total weight cannot reach the budget and DegenerateInformation on an empty
// table.
WaterfillSolution waterfill(const SensitivityTable& table);

// Independent greedy-plus-certificate solver of the same program: constructs
// a candidate at every breakpoint lambda in {omega_r} and keeps the best one
// whose KKT sign pattern checks out. Shares no code with waterfill().
struct LpSolution {
  double objective = 0.0;
  double lambda = 0.0;
  std::vector<double> y;
};
LpSolution lp_oracle(const SensitivityTable& table);

// Residuals of the stationarity / feasibility / sign / complementary
// slackness conditions, recomputed from raw table data.
struct KktReport {
  double max_stationarity = 0.0;  // |x - lambda*w - mu + nu|, scaled
  double budget_residual = 0.0;   // |sum mult*w*y - 1|
  double max_box_violation = 0.0;
  double max_sign_violation = 0.0;       // negative mu or nu
  double max_complementarity = 0.0;      // |mu*y|, |nu*(1-y)|, scaled
};
KktReport check_kkt(const SensitivityTable& table,
                    const WaterfillSolution& sol);

// Reciprocal of the relaxed optimum: certified ceiling on any attack's CRB.
// The solution does not depend on the fork point or the race success
// probability; the profile argument is accepted as run metadata only.
double guarantee_bound(const Scenario& s, const AlphabetPmf& p,
                       const std::vector<double>& dsa_profile = {},
                       uint64_t cap = kDefaultOutcomeCap);

}  // namespace biotcrb
