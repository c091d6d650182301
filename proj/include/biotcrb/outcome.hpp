#pragma once

#include <cstdint>
#include <vector>

#include "biotcrb/scenario.hpp"

namespace biotcrb {

// One realization of all stored data: n_devices x chain_length symbols,
// device-major (symbols[j*L + l], 0-based).
struct Outcome {
  int n_devices = 0;
  int chain_length = 0;
  std::vector<uint8_t> symbols;

  uint8_t at(int device, int block) const {
    return symbols[static_cast<size_t>(device) * chain_length + block];
  }
  uint8_t& at(int device, int block) {
    return symbols[static_cast<size_t>(device) * chain_length + block];
  }
};

// Lexicographic enumeration of the full outcome space O^(N*L); index 0 is the
// all-zeros outcome and coordinate (1,1) is the most significant digit.
class OutcomeSpace {
 public:
  // Throws OutcomeSpaceTooLarge when |O|^(N*L) exceeds cap.
  OutcomeSpace(const Scenario& s, uint64_t cap = kDefaultOutcomeCap);

  uint64_t size() const { return size_; }
  Outcome decode(uint64_t index) const;
  void decode_into(uint64_t index, Outcome& out) const;

 private:
  int n_devices_;
  int chain_length_;
  int alphabet_;
  uint64_t size_;
};

// Honest-side likelihood factor: product of p over every honest device's full
// chain. Depends only on honest coordinates.
double honest_factor(const Outcome& r, const Scenario& s, const AlphabetPmf& p);

// The two event-conditional products inside the malicious factor: the
// chain-rewrite race succeeded (blocks >= fork_point falsified) or failed
// (only blocks > authentic_length falsified).
struct MaliciousComponents {
  double success = 1.0;
  double failure = 1.0;
};
MaliciousComponents malicious_components(const Outcome& r, const Scenario& s,
                                         const AttackSpec& a,
                                         const AlphabetPmf& p);

// dsa_prob * success + (1 - dsa_prob) * failure. Depends only on malicious
// coordinates. Equals 1 when the malicious set is empty.
double malicious_factor(const Outcome& r, const Scenario& s,
                        const AttackSpec& a, const AlphabetPmf& p);

// Joint pmf: honest_factor * malicious_factor.
double joint_pmf(const Outcome& r, const Scenario& s, const AttackSpec& a,
                 const AlphabetPmf& p);

// Product-rule partials. Tabulated pmfs missing the needed partials raise
// PartialsUnavailable.
double dphi0_dtheta(const Outcome& r, const Scenario& s, const AlphabetPmf& p);
double dphia_dtheta(const Outcome& r, const Scenario& s, const AttackSpec& a,
                    const AlphabetPmf& p);
Eigen::VectorXd dphia_dxi(const Outcome& r, const Scenario& s,
                          const AttackSpec& a, const AlphabetPmf& p);

// Per-device branch product over one symbol row: blocks < switch_at follow
// p, blocks >= switch_at follow pt; leave-one-out partials, no divisions so
// zero probabilities stay harmless. Building block shared by the per-outcome
// evaluators and the factorized information sums.
struct RowEval {
  double value = 1.0;
  double dtheta = 0.0;
  Eigen::VectorXd dxi;
};
RowEval eval_row_branch(const uint8_t* row, int length, int switch_at,
                        const AlphabetPmf& p, const AlphabetPmf& pt,
                        int xi_dim, bool want_dtheta, bool want_dxi);

// Materialized per-outcome values over the full space, indexed by the
// OutcomeSpace index. Reference path for tests and small instances.
struct OutcomeTables {
  uint64_t size = 0;
  int xi_dim = 0;
  std::vector<double> phi0;
  std::vector<double> phia;
  std::vector<double> dphi0_dtheta;
  std::vector<double> dphia_dtheta;
  std::vector<double> dphia_dxi;  // row-major size x d
};
OutcomeTables build_outcome_tables(const Scenario& s, const AttackSpec& a,
                                   const AlphabetPmf& p,
                                   uint64_t cap = kDefaultOutcomeCap);

}  // namespace biotcrb
