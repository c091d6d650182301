#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "biotcrb/fisher.hpp"
#include "biotcrb/scenario.hpp"

namespace biotcrb {

struct OptOptions {
  int n_starts = 16;
  int max_iters = 500;
  double value_tol = 1e-8;
  double fd_step = 1e-5;
  double box_lo = -10.0;
  double box_hi = 10.0;
  int xi_dim = 1;
  uint64_t seed = 0;
  std::vector<Eigen::VectorXd> user_starts;
  int threads = 1;
  uint64_t cap = kDefaultOutcomeCap;
};

struct StartTrace {
  int fork_point = 0;
  Eigen::VectorXd start;
  Eigen::VectorXd final_xi;
  double final_value = 0.0;
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string note;
};

struct ForkResult {
  int fork_point = 0;
  double crb = 0.0;
  Eigen::VectorXd xi;
  bool failed = false;
};

struct AttackOptResult {
  double best_crb = 0.0;
  Eigen::VectorXd best_xi;
  int best_fork = 1;
  double baseline_bound = 0.0;  // 1 / j_c0
  bool no_op_attack = false;    // empty malicious set: objective constant
  std::vector<ForkResult> per_fork;
  std::vector<StartTrace> trace;
};

// Worst-case attack search: outer exhaustive loop over the fork point,
// inner multi-start projected gradient ascent over xi in the box, gradients
// by central finite differences, backtracking line search (accepted iterates
// never decrease the objective). Deterministic under a fixed seed: starts
// come from a seeded Halton sequence plus user_starts. dsa_profile supplies
// P(La) for La = 1..L0. Fork ties within 1e-12 resolve to the smallest fork.
AttackOptResult maximize_crb(const Scenario& s, const AlphabetPmf& p,
                             const PmfFamily& attack_family,
                             const std::vector<double>& dsa_profile,
                             const OptOptions& opt = {});

// Exhaustive reference over a fixed 1-D xi grid crossed with every fork
// point; ties keep the earliest grid point. Families that need more than one
// xi component reject the probe points.
struct GridSearchResult {
  double best_value = 0.0;
  double best_xi = 0.0;
  int best_fork = 1;
};
GridSearchResult grid_search_oracle(const Scenario& s, const AlphabetPmf& p,
                                    const PmfFamily& attack_family,
                                    const std::vector<double>& dsa_profile,
                                    const std::vector<double>& xi_grid,
                                    uint64_t cap = kDefaultOutcomeCap);

}  // namespace biotcrb
