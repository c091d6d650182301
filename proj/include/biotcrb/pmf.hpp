#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace biotcrb {

// Pmf over the quantizer output alphabet, with optional partial derivatives in
// the parameter of interest (dtheta, length |O|) and in the attack parameter
// vector (dxi, |O| x d). Derivative columns sum to zero: probability mass is
// conserved under parameter perturbations.
struct AlphabetPmf {
  Eigen::VectorXd probs;
  std::optional<Eigen::VectorXd> dtheta;
  std::optional<Eigen::MatrixXd> dxi;

  int alphabet_size() const { return static_cast<int>(probs.size()); }
  int xi_dim() const { return dxi ? static_cast<int>(dxi->cols()) : 0; }

  // Validating factory for user-supplied tables.
  static AlphabetPmf tabulated(Eigen::VectorXd probs,
                               std::optional<Eigen::VectorXd> dtheta = {},
                               std::optional<Eigen::MatrixXd> dxi = {});

  // Throws InvalidParameter if entries leave [0,1], the mass is off 1 by more
  // than 1e-12, or a derivative column is off 0 by more than 1e-10.
  void validate() const;

  // Non-fatal notes, e.g. probabilities below 1e-12.
  std::vector<std::string> warnings() const;
};

// Parametric pmf family evaluated at (theta, xi).
using PmfFamily =
    std::function<AlphabetPmf(double theta, const Eigen::VectorXd& xi)>;

// One-bit quantizer of theta + N(0, std^2) against a threshold.
// probs = [Phi((tau - theta)/sigma), 1 - Phi(...)], analytic dtheta attached.
AlphabetPmf gaussian_quantizer_pmf(double theta, double threshold,
                                   double noise_std);

// Same quantizer applied to theta + xi + noise (falsified-data model);
// analytic dtheta and dxi attached, d = 1. xi must have exactly one entry.
// At xi = 0 this is bitwise identical to gaussian_quantizer_pmf: both run the
// same arithmetic path.
AlphabetPmf injection_attack_pmf(double theta, const Eigen::VectorXd& xi,
                                 double threshold, double noise_std);

PmfFamily gaussian_quantizer_family(double threshold, double noise_std);
PmfFamily injection_attack_family(double threshold, double noise_std);

struct FdPartials {
  Eigen::VectorXd dtheta;
  Eigen::MatrixXd dxi;
};

// Central finite differences of a pmf family; fallback when a family lacks
// analytic partials. Columns sum to zero up to O(step^2).
FdPartials finite_difference_partials(const PmfFamily& family, double theta,
                                      const Eigen::VectorXd& xi, double step);

}  // namespace biotcrb
