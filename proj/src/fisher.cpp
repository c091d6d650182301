#include "biotcrb/fisher.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "biotcrb/error.hpp"
#include "biotcrb/math_util.hpp"

namespace biotcrb {

namespace {

int attack_xi_dim(const Scenario& s, const AttackSpec& a) {
  if (s.malicious.empty()) return 0;  // xi drops out of the model entirely
  if (!a.attack_pmf.dxi) {
    raise(ErrorCode::PartialsUnavailable,
          "attack pmf has no dxi partial; information blocks for xi are "
          "undefined without it");
  }
  return static_cast<int>(a.attack_pmf.dxi->cols());
}

[[noreturn]] void singular_weight_at(uint64_t index) {
  std::ostringstream msg;
  msg << "malicious factor vanishes at outcome " << index
      << " while its derivative does not: the 1/phi_a weight diverges";
  raise(ErrorCode::SingularWeight, msg.str());
}

// Compensated accumulators for every block entry.
struct BlockAccum {
  explicit BlockAccum(int d) : f_a(d), j_xi(d * d), dim(d) {}
  KahanSum j_ca;
  std::vector<KahanSum> f_a;
  std::vector<KahanSum> j_xi;  // row-major d x d
  int dim;

  void add(double inv_phia, double dth, const Eigen::VectorXd& dxi) {
    j_ca.add(dth * dth * inv_phia);
    for (int k = 0; k < dim; ++k) {
      f_a[k].add(dth * dxi[k] * inv_phia);
      for (int m = 0; m < dim; ++m) {
        j_xi[k * dim + m].add(dxi[k] * dxi[m] * inv_phia);
      }
    }
  }

  void fill(FimBlocks& b) const {
    b.j_ca = j_ca.value();
    b.f_a.resize(dim);
    b.j_xi.resize(dim, dim);
    for (int k = 0; k < dim; ++k) {
      b.f_a[k] = f_a[k].value();
      for (int m = 0; m < dim; ++m) b.j_xi(k, m) = j_xi[k * dim + m].value();
    }
  }
};

FimBlocks fim_full(const Scenario& s, const AttackSpec& a,
                   const AlphabetPmf& p, const FimOptions& opt,
                   bool materialize_psi) {
  const OutcomeSpace space(s, opt.cap);
  const int d = attack_xi_dim(s, a);
  FimBlocks blocks;
  blocks.outcome_count = space.size();
  KahanSum j_c0;
  BlockAccum mal(d);
  if (materialize_psi) {
    blocks.gamma_theta = Eigen::RowVectorXd::Zero(space.size());
    blocks.xi_matrix = Eigen::MatrixXd::Zero(d, space.size());
  }

  Outcome r;
  const bool want_dxi = d > 0;
  for (uint64_t i = 0; i < space.size(); ++i) {
    space.decode_into(i, r);
    const double phi0 = honest_factor(r, s, p);
    const double dphi0 = dphi0_dtheta(r, s, p);
    const double phia = malicious_factor(r, s, a, p);
    const double dphia = dphia_dtheta(r, s, a, p);
    const Eigen::VectorXd dxi =
        want_dxi ? dphia_dxi(r, s, a, p) : Eigen::VectorXd();

    if (phi0 > 0.0) {
      // 0^2/0 := 0 on the honest side: vanished outcomes carry no weight.
      j_c0.add(phia * dphi0 * dphi0 / phi0);
    }
    if (phia > 0.0) {
      mal.add(phi0 / phia, dphia, dxi);
      if (materialize_psi) {
        const double root = std::sqrt(phi0 / phia);
        (*blocks.gamma_theta)[i] = root * dphia;
        if (want_dxi) blocks.xi_matrix->col(i) = root * dxi;
      }
    } else if (phi0 > 0.0 &&
               (dphia != 0.0 || (want_dxi && dxi.squaredNorm() != 0.0))) {
      singular_weight_at(i);
    }
  }
  blocks.j_c0 = j_c0.value();
  mal.fill(blocks);
  return blocks;
}

// Enumeration of malicious-device pattern combinations with running
// mixture-branch products; the honest side integrates out of every malicious
// block. All malicious devices share one per-pattern table (same pmfs, same
// segment boundaries), so the devices are exchangeable and ordered pattern
// tuples collapse onto non-decreasing ones carrying a multinomial count.
class MaliciousSideSum {
 public:
  MaliciousSideSum(const Scenario& s, const AttackSpec& a,
                   const AlphabetPmf& p, int d)
      : s_(s), a_(a), d_(d), accum_(d) {
    const int L = s.chain_length;
    per_device_ = saturating_pow(s.alphabet_size, static_cast<unsigned>(L));
    succ_.reserve(per_device_);
    fail_.reserve(per_device_);
    std::vector<uint8_t> row(static_cast<size_t>(L), 0);
    for (uint64_t t = 0; t < per_device_; ++t) {
      uint64_t v = t;
      for (int l = L; l-- > 0;) {
        row[static_cast<size_t>(l)] =
            static_cast<uint8_t>(v % static_cast<uint64_t>(s.alphabet_size));
        v /= static_cast<uint64_t>(s.alphabet_size);
      }
      succ_.push_back(eval_row_branch(row.data(), L, a.fork_point - 1, p,
                                      a.attack_pmf, d, true, d > 0));
      fail_.push_back(eval_row_branch(row.data(), L, s.authentic_length, p,
                                      a.attack_pmf, d, true, d > 0));
    }
  }

  void run(FimBlocks& blocks) {
    const int n_mal = static_cast<int>(s_.malicious.size());
    fact_.assign(static_cast<size_t>(n_mal) + 1, 1.0);
    for (int i = 1; i <= n_mal; ++i) fact_[static_cast<size_t>(i)] = fact_[static_cast<size_t>(i - 1)] * i;
    levels_.assign(static_cast<size_t>(n_mal) + 1, Level(d_));
    levels_[0].vs = 1.0;
    levels_[0].vf = 1.0;
    chosen_.assign(static_cast<size_t>(n_mal), 0);
    recurse(0, n_mal, 0);
    accum_.fill(blocks);
  }

 private:
  struct Level {
    explicit Level(int d)
        : dxis(Eigen::VectorXd::Zero(d)), dxif(Eigen::VectorXd::Zero(d)) {}
    double vs = 0.0, dths = 0.0;
    double vf = 0.0, dthf = 0.0;
    Eigen::VectorXd dxis, dxif;
  };

  void recurse(int depth, int n_mal, uint64_t min_t) {
    if (depth == n_mal) {
      leaf(levels_[static_cast<size_t>(depth)], n_mal);
      return;
    }
    const Level& cur = levels_[static_cast<size_t>(depth)];
    Level& next = levels_[static_cast<size_t>(depth) + 1];
    for (uint64_t t = min_t; t < per_device_; ++t) {
      const RowEval& sv = succ_[t];
      const RowEval& fv = fail_[t];
      chosen_[static_cast<size_t>(depth)] = t;
      next.vs = cur.vs * sv.value;
      next.dths = cur.dths * sv.value + cur.vs * sv.dtheta;
      next.vf = cur.vf * fv.value;
      next.dthf = cur.dthf * fv.value + cur.vf * fv.dtheta;
      if (d_ > 0) {
        next.dxis = cur.dxis * sv.value + cur.vs * sv.dxi;
        next.dxif = cur.dxif * fv.value + cur.vf * fv.dxi;
      }
      recurse(depth + 1, n_mal, t);
    }
  }

  // Count of ordered tuples collapsing onto this non-decreasing one.
  double tuple_multiplicity(int n_mal) const {
    double denom = 1.0;
    int run = 1;
    for (int i = 1; i < n_mal; ++i) {
      if (chosen_[static_cast<size_t>(i)] == chosen_[static_cast<size_t>(i - 1)]) {
        ++run;
      } else {
        denom *= fact_[static_cast<size_t>(run)];
        run = 1;
      }
    }
    denom *= fact_[static_cast<size_t>(run)];
    return fact_[static_cast<size_t>(n_mal)] / denom;
  }

  void leaf(const Level& v, int n_mal) {
    const double ps = a_.dsa_prob;
    const double phia = ps * v.vs + (1.0 - ps) * v.vf;
    const double dth = ps * v.dths + (1.0 - ps) * v.dthf;
    dxi_ = ps * v.dxis + (1.0 - ps) * v.dxif;
    if (phia > 0.0) {
      accum_.add(tuple_multiplicity(n_mal) / phia, dth, dxi_);
    } else if (dth != 0.0 || dxi_.squaredNorm() != 0.0) {
      raise(ErrorCode::SingularWeight,
            "malicious factor vanishes on a pattern combination while its "
            "derivative does not: the 1/phi_a weight diverges");
    }
  }

  const Scenario& s_;
  const AttackSpec& a_;
  int d_;
  BlockAccum accum_;
  uint64_t per_device_ = 0;
  std::vector<RowEval> succ_, fail_;
  std::vector<Level> levels_;
  std::vector<uint64_t> chosen_;
  std::vector<double> fact_;
  Eigen::VectorXd dxi_;
};

// Non-decreasing tuples of n_mal patterns out of per_device, saturated.
uint64_t multiset_count(uint64_t per_device, size_t n_mal) {
  double count = 1.0;
  for (size_t i = 1; i <= n_mal; ++i) {
    count *= static_cast<double>(per_device - 1 + i) / static_cast<double>(i);
    if (count > 9e18) return UINT64_MAX;
  }
  return static_cast<uint64_t>(count);
}

FimBlocks fim_factorized(const Scenario& s, const AttackSpec& a,
                         const AlphabetPmf& p, const FimOptions& opt) {
  const int d = attack_xi_dim(s, a);
  FimBlocks blocks;
  blocks.outcome_count = saturating_pow(
      s.alphabet_size, static_cast<unsigned>(s.n_devices * s.chain_length));
  blocks.j_c0 = opt.j_c0_hint >= 0.0 ? opt.j_c0_hint
                                     : honest_information(s, p, opt.cap);
  if (d == 0) {
    blocks.f_a.resize(0);
    blocks.j_xi.resize(0, 0);
    return blocks;
  }
  const uint64_t per_device = saturating_pow(
      s.alphabet_size, static_cast<unsigned>(s.chain_length));
  const uint64_t work = multiset_count(per_device, s.malicious.size());
  if (work > opt.cap) {
    std::ostringstream msg;
    msg << "malicious-side pattern combinations " << work
        << " exceed the cap " << opt.cap;
    raise(ErrorCode::OutcomeSpaceTooLarge, msg.str());
  }
  MaliciousSideSum sum(s, a, p, d);
  sum.run(blocks);
  return blocks;
}

}  // namespace

double honest_information(const Scenario& s, const AlphabetPmf& p,
                          uint64_t cap) {
  require_matching_alphabet(s, p);
  if (!p.dtheta) {
    raise(ErrorCode::PartialsUnavailable,
          "honest pmf has no dtheta partial");
  }
  const unsigned n_coords = static_cast<unsigned>(s.honest.size()) *
                            static_cast<unsigned>(s.chain_length);
  const uint64_t size = saturating_pow(s.alphabet_size, n_coords);
  if (size <= cap) {
    // Exact sum of (dphi0)^2/phi0 over honest patterns, 0^2/0 := 0.
    KahanSum acc;
    struct Frame {
      double v, dv;
    };
    std::vector<Frame> stack(n_coords + 1);
    stack[0] = {1.0, 0.0};
    // Iterative digit counter over |O|^n_coords.
    std::vector<int> digit(n_coords, 0);
    unsigned depth = 0;
    const int A = s.alphabet_size;
    while (true) {
      if (depth == n_coords) {
        if (stack[depth].v > 0.0) {
          acc.add(stack[depth].dv * stack[depth].dv / stack[depth].v);
        } else if (stack[depth].dv != 0.0) {
          raise(ErrorCode::DegenerateInformation,
                "honest pattern has zero probability with nonzero "
                "derivative; the information sum diverges");
        }
        // backtrack
        while (depth > 0 && digit[depth - 1] == A - 1) {
          digit[--depth] = 0;
        }
        if (depth == 0) break;
        ++digit[depth - 1];
        --depth;  // frame above the advanced digit is stale, rebuild it
      } else {
        const int o = digit[depth];
        stack[depth + 1].v = stack[depth].v * p.probs[o];
        stack[depth + 1].dv =
            stack[depth].dv * p.probs[o] + stack[depth].v * (*p.dtheta)[o];
        ++depth;
      }
    }
    return acc.value();
  }
  // Past the cap: per-coordinate additivity. Needs a regular pmf (no moving
  // mass on zero-probability symbols).
  double per_symbol = 0.0;
  for (int o = 0; o < s.alphabet_size; ++o) {
    const double pr = p.probs[o];
    const double dp = (*p.dtheta)[o];
    if (pr == 0.0) {
      if (dp != 0.0) {
        raise(ErrorCode::DegenerateInformation,
              "honest pmf has a zero-probability symbol with nonzero "
              "derivative; per-symbol information diverges");
      }
      continue;
    }
    per_symbol += dp * dp / pr;
  }
  return static_cast<double>(s.honest.size()) * s.chain_length * per_symbol;
}

FimBlocks fim_blocks(const Scenario& s, const AttackSpec& a,
                     const AlphabetPmf& p, const FimOptions& opt) {
  validate_scenario(s, a);
  p.validate();
  require_matching_alphabet(s, p);
  const uint64_t full_size = saturating_pow(
      s.alphabet_size, static_cast<unsigned>(s.n_devices * s.chain_length));
  const uint64_t mal_size = multiset_count(
      saturating_pow(s.alphabet_size,
                     static_cast<unsigned>(s.chain_length)),
      s.malicious.size());

  switch (opt.mode) {
    case FimMode::FullEnumeration:
      return fim_full(s, a, p, opt,
                      opt.psi_limit > 0 && full_size <= opt.psi_limit);
    case FimMode::Factorized:
      return fim_factorized(s, a, p, opt);
    case FimMode::Auto:
      break;
  }
  if (opt.psi_limit > 0 && full_size <= opt.psi_limit &&
      full_size <= opt.cap) {
    return fim_full(s, a, p, opt, true);
  }
  if (mal_size <= opt.cap) {
    return fim_factorized(s, a, p, opt);
  }
  if (full_size <= opt.cap) {
    return fim_full(s, a, p, opt, false);
  }
  std::ostringstream msg;
  msg << "outcome space " << full_size << " and malicious-side space "
      << mal_size << " both exceed the cap " << opt.cap;
  raise(ErrorCode::OutcomeSpaceTooLarge, msg.str());
}

namespace {

// f_a^T j_xi^{-1} f_a through an eigendecomposition with a condition guard.
double nuisance_term(const FimBlocks& b, const CrbOptions& opt) {
  const int d = b.xi_dim();
  if (d == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.j_xi);
  const Eigen::VectorXd& eig = es.eigenvalues();
  const double emax = eig[d - 1];
  const double emin = eig[0];
  if (!(emax > 0.0)) {
    raise(ErrorCode::SingularFim,
          "xi information block is zero or not positive semidefinite; the "
          "attack data carries no xi information");
  }
  const bool ill = emin <= emax / opt.condition_limit;
  if (ill && !opt.allow_pseudoinverse) {
    std::ostringstream msg;
    msg << "xi information block condition " << emax / std::max(emin, 0.0)
        << " exceeds the guard " << opt.condition_limit
        << "; enable the pseudo-inverse fallback to proceed";
    raise(ErrorCode::SingularFim, msg.str());
  }
  const Eigen::VectorXd proj = es.eigenvectors().transpose() * b.f_a;
  double term = 0.0;
  for (int k = 0; k < d; ++k) {
    if (eig[k] > emax / opt.condition_limit) {
      term += proj[k] * proj[k] / eig[k];
    }
  }
  return term;
}

}  // namespace

double schur_gap(const FimBlocks& b, const CrbOptions& opt) {
  return b.j_ca - nuisance_term(b, opt);
}

double alignment_residual(const FimBlocks& b, const CrbOptions& opt) {
  if (!b.gamma_theta || !b.xi_matrix) {
    raise(ErrorCode::PsiUnavailable,
          "score vectors were not materialized (outcome space above the psi "
          "limit); alignment residual unavailable");
  }
  const int d = b.xi_dim();
  if (d == 0 || b.xi_matrix->squaredNorm() == 0.0) {
    raise(ErrorCode::SingularFim,
          "xi score matrix is zero; the row-span projection is undefined");
  }
  const Eigen::MatrixXd gram = (*b.xi_matrix) * b.xi_matrix->transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double emax = es.eigenvalues()[d - 1];
  const double emin = es.eigenvalues()[0];
  if (!(emax > 0.0) ||
      (emin <= emax / opt.condition_limit && !opt.allow_pseudoinverse)) {
    raise(ErrorCode::SingularFim,
          "xi score Gram matrix is singular past the condition guard");
  }
  const Eigen::VectorXd v = (*b.xi_matrix) * b.gamma_theta->transpose();
  // Pseudo-inverse route: directions below the condition cutoff are outside
  // the numerical row span and take no part in the projection.
  Eigen::VectorXd coeff = es.eigenvectors().transpose() * v;
  for (int k = 0; k < d; ++k) {
    coeff[k] = es.eigenvalues()[k] > emax / opt.condition_limit
                   ? coeff[k] / es.eigenvalues()[k]
                   : 0.0;
  }
  const Eigen::VectorXd h = es.eigenvectors() * coeff;
  const Eigen::VectorXd resid =
      b.gamma_theta->transpose() - b.xi_matrix->transpose() * h;
  return resid.squaredNorm();
}

CrbReport crb_theta(const FimBlocks& b, const CrbOptions& opt) {
  if (!(b.j_c0 > 0.0)) {
    raise(ErrorCode::DegenerateInformation,
          "honest-side information is zero; theta is unidentifiable and the "
          "no-attack floor is unbounded");
  }
  CrbReport report;
  report.schur_gap = schur_gap(b, opt);
  report.bound = 1.0 / b.j_c0;
  const double denom = b.j_c0 + report.schur_gap;
  if (!(denom > 0.0)) {
    raise(ErrorCode::SingularFim,
          "effective theta information is not positive");
  }
  report.crb_theta = 1.0 / denom;
  if (b.gamma_theta && b.xi_matrix && b.xi_dim() > 0 &&
      b.xi_matrix->squaredNorm() > 0.0) {
    report.alignment_residual = alignment_residual(b, opt);
  }
  return report;
}

}  // namespace biotcrb
