#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "biotcrb/scenario.hpp"

namespace biotcrb {

// One synthetic network snapshot. symbols is device-major like Outcome.
struct ChainData {
  int n_devices = 0;
  int chain_length = 0;
  std::vector<uint8_t> symbols;
  bool dsa_succeeded = false;
  uint64_t seed = 0;
};

// Draw the race outcome once, then fill blocks in device-ascending,
// block-ascending order. Identical seeds give identical bytes.
ChainData generate_chain(const Scenario& s, const AttackSpec& a,
                         const AlphabetPmf& p, uint64_t seed);

// Parametric model handed to the estimator: honest pmf as a function of
// theta, attack pmf as a function of (theta, xi).
struct ModelFamily {
  std::function<AlphabetPmf(double)> honest;
  PmfFamily attack;
  int xi_dim = 1;
};

struct MleOptions {
  double box_lo = -10.0;
  double box_hi = 10.0;
  int coarse_points = 101;  // grid points per dimension
  int refine_passes = 2;    // each pass shrinks resolution by 10x
};

struct MleResult {
  double theta_hat = 0.0;
  Eigen::VectorXd xi_hat;
  double loglik = 0.0;
  bool boundary = false;  // argmax landed on the search box edge
};

// Joint grid MLE of (theta, xi) from a batch of i.i.d. chains; coarse grid
// then two 10x refinement passes around the incumbent. The attack structure
// (fork point, success probability) is treated as known.
MleResult mle_estimate(std::span<const ChainData> chains, const Scenario& s,
                       int fork_point, double dsa_prob,
                       const ModelFamily& family, const MleOptions& opt = {});

struct MseReport {
  int trials = 0;
  int chains_per_estimate = 0;
  double theta_mse = 0.0;
  double xi_mse = 0.0;
  double crb_theta = 0.0;  // analytic, scaled by chains_per_estimate
  double ratio = 0.0;      // theta_mse / crb_theta
};

// Repeated generate -> estimate experiment with derived per-trial seeds.
MseReport mse_experiment(const Scenario& s, const AttackSpec& a,
                         const AlphabetPmf& p, const ModelFamily& family,
                         int trials, int chains_per_estimate, uint64_t seed);

}  // namespace biotcrb
