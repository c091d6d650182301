#pragma once

#include <optional>

#include "biotcrb/outcome.hpp"
#include "biotcrb/scenario.hpp"

namespace biotcrb {

enum class FimMode {
  Auto,             // full when psi vectors fit, else factorized, else full
  FullEnumeration,  // literal sums over the full outcome space
  Factorized,       // honest side in closed form, malicious side enumerated
};

struct FimOptions {
  FimMode mode = FimMode::Auto;
  uint64_t cap = kDefaultOutcomeCap;
  // Materialize gamma/Xi score vectors only up to this many outcomes;
  // 0 disables materialization.
  uint64_t psi_limit = kDefaultPsiLimit;
  // The honest block does not depend on the attack parameter; callers that
  // evaluate many attacks against one scenario can pass it in. Negative
  // means compute. Only the factorized path consults it.
  double j_c0_hint = -1.0;
};

// Fisher information blocks of the joint model for eta = [theta, xi]:
//   j_c0   honest-data information about theta
//   j_ca   malicious-data information about theta
//   f_a    theta/xi cross block (d)
//   j_xi   xi block (d x d)
// gamma_theta / xi_matrix are the square-root-weighted per-outcome score
// vectors; when present, j_ca = gamma*gamma^T, f_a = Xi*gamma^T,
// j_xi = Xi*Xi^T. d = 0 when the malicious set is empty (the attack
// parameter drops out of the model).
struct FimBlocks {
  double j_c0 = 0.0;
  double j_ca = 0.0;
  Eigen::VectorXd f_a;
  Eigen::MatrixXd j_xi;
  std::optional<Eigen::RowVectorXd> gamma_theta;
  std::optional<Eigen::MatrixXd> xi_matrix;
  uint64_t outcome_count = 0;

  double j_theta() const { return j_c0 + j_ca; }
  int xi_dim() const { return static_cast<int>(f_a.size()); }
};

FimBlocks fim_blocks(const Scenario& s, const AttackSpec& a,
                     const AlphabetPmf& p, const FimOptions& opt = {});

// Honest-side information alone (the no-attack baseline J_C0).
double honest_information(const Scenario& s, const AlphabetPmf& p,
                          uint64_t cap = kDefaultOutcomeCap);

struct CrbOptions {
  double condition_limit = 1e12;
  bool allow_pseudoinverse = false;
};

// crb_theta = 1 / (j_c0 + schur_gap), bound = 1 / j_c0 (no-attack floor).
// alignment_residual is the squared distance from the theta score vector to
// the row span of the xi score matrix; equals schur_gap, computed on an
// independent route; only available when the score vectors were materialized.
struct CrbReport {
  double crb_theta = 0.0;
  double bound = 0.0;
  double schur_gap = 0.0;
  std::optional<double> alignment_residual;
};

// Schur complement j_ca - f_a^T j_xi^{-1} f_a; >= 0 up to rounding.
double schur_gap(const FimBlocks& b, const CrbOptions& opt = {});

CrbReport crb_theta(const FimBlocks& b, const CrbOptions& opt = {});

// Projection-route residual ||gamma^T - Xi^T (Xi Xi^T)^{-1} Xi gamma^T||^2.
// Throws PsiUnavailable when score vectors were not materialized and
// SingularFim when the xi block is singular past the condition guard.
double alignment_residual(const FimBlocks& b, const CrbOptions& opt = {});

}  // namespace biotcrb
