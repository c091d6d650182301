#include "biotcrb/outcome.hpp"

#include <sstream>

#include "biotcrb/error.hpp"
#include "biotcrb/math_util.hpp"

namespace biotcrb {

OutcomeSpace::OutcomeSpace(const Scenario& s, uint64_t cap)
    : n_devices_(s.n_devices),
      chain_length_(s.chain_length),
      alphabet_(s.alphabet_size) {
  const unsigned coords =
      static_cast<unsigned>(n_devices_) * static_cast<unsigned>(chain_length_);
  size_ = saturating_pow(static_cast<uint64_t>(alphabet_), coords);
  if (size_ > cap) {
    std::ostringstream msg;
    msg << "outcome space " << alphabet_ << "^" << coords
        << " exceeds the cap " << cap << "; raise --cap to enumerate";
    raise(ErrorCode::OutcomeSpaceTooLarge, msg.str());
  }
}

Outcome OutcomeSpace::decode(uint64_t index) const {
  Outcome out;
  decode_into(index, out);
  return out;
}

void OutcomeSpace::decode_into(uint64_t index, Outcome& out) const {
  out.n_devices = n_devices_;
  out.chain_length = chain_length_;
  const size_t coords =
      static_cast<size_t>(n_devices_) * static_cast<size_t>(chain_length_);
  out.symbols.resize(coords);
  // Coordinate (1,1) is the most significant base-|O| digit.
  for (size_t k = coords; k-- > 0;) {
    out.symbols[k] = static_cast<uint8_t>(index % alphabet_);
    index /= alphabet_;
  }
}

double honest_factor(const Outcome& r, const Scenario& s,
                     const AlphabetPmf& p) {
  double value = 1.0;
  for (int id : s.honest) {
    const int j = id - 1;
    for (int l = 0; l < s.chain_length; ++l) {
      value *= p.probs[r.at(j, l)];
    }
  }
  return value;
}

namespace {

void require_partial(const std::optional<Eigen::VectorXd>& partial,
                     const char* which) {
  if (!partial) {
    raise(ErrorCode::PartialsUnavailable,
          std::string("tabulated pmf has no ") + which +
              " partial; supply it or use finite_difference_partials");
  }
}

}  // namespace

RowEval eval_row_branch(const uint8_t* row, int length, int switch_at,
                        const AlphabetPmf& p, const AlphabetPmf& pt,
                        int xi_dim, bool want_dtheta, bool want_dxi) {
  RowEval out;
  if (want_dxi) out.dxi = Eigen::VectorXd::Zero(xi_dim);

  thread_local std::vector<double> prefix;
  prefix.assign(static_cast<size_t>(length) + 1, 1.0);
  for (int l = 0; l < length; ++l) {
    const double term =
        (l < switch_at) ? p.probs[row[l]] : pt.probs[row[l]];
    prefix[l + 1] = prefix[l] * term;
  }
  out.value = prefix[length];

  if (!want_dtheta && !want_dxi) return out;
  if (want_dtheta) {
    if (switch_at > 0) require_partial(p.dtheta, "dtheta");
    if (switch_at < length) require_partial(pt.dtheta, "dtheta");
  }
  if (want_dxi && switch_at < length && !pt.dxi) {
    raise(ErrorCode::PartialsUnavailable,
          "attack pmf has no dxi partial; supply it or use "
          "finite_difference_partials");
  }

  double suffix = 1.0;
  for (int l = length - 1; l >= 0; --l) {
    const uint8_t o = row[l];
    const double loo = prefix[l] * suffix;  // product of the other blocks
    if (l < switch_at) {
      if (want_dtheta) out.dtheta += (*p.dtheta)[o] * loo;
      suffix *= p.probs[o];
    } else {
      if (want_dtheta) out.dtheta += (*pt.dtheta)[o] * loo;
      if (want_dxi) out.dxi += pt.dxi->row(o).transpose() * loo;
      suffix *= pt.probs[o];
    }
  }
  return out;
}

namespace {

struct PhiAEval {
  double value = 1.0;
  double dtheta = 0.0;
  Eigen::VectorXd dxi;
};

// Mixture over the race outcome of per-branch products across all malicious
// devices; cross-device product rule by running prefix/suffix.
PhiAEval eval_phia(const Outcome& r, const Scenario& s, const AttackSpec& a,
                   const AlphabetPmf& p, bool want_dtheta, bool want_dxi) {
  const AlphabetPmf& pt = a.attack_pmf;
  const int d = pt.dxi ? static_cast<int>(pt.dxi->cols())
                       : static_cast<int>(a.xi.size());
  PhiAEval out;
  if (want_dxi) out.dxi = Eigen::VectorXd::Zero(d);
  if (s.malicious.empty()) return out;  // empty product: phia == 1

  const int n_mal = static_cast<int>(s.malicious.size());
  const int L = s.chain_length;
  thread_local std::vector<RowEval> succ, fail;
  succ.clear();
  fail.clear();
  for (int id : s.malicious) {
    const uint8_t* row = r.symbols.data() + static_cast<size_t>(id - 1) * L;
    succ.push_back(eval_row_branch(row, L, a.fork_point - 1, p, pt, d,
                                   want_dtheta, want_dxi));
    fail.push_back(eval_row_branch(row, L, s.authentic_length, p, pt, d,
                                   want_dtheta, want_dxi));
  }

  auto combine = [&](const std::vector<RowEval>& devs) {
    RowEval total;
    if (want_dxi) total.dxi = Eigen::VectorXd::Zero(d);
    thread_local std::vector<double> prefix;
    prefix.assign(static_cast<size_t>(n_mal) + 1, 1.0);
    for (int j = 0; j < n_mal; ++j) prefix[j + 1] = prefix[j] * devs[j].value;
    total.value = prefix[n_mal];
    double suffix = 1.0;
    for (int j = n_mal - 1; j >= 0; --j) {
      const double loo = prefix[j] * suffix;
      if (want_dtheta) total.dtheta += devs[j].dtheta * loo;
      if (want_dxi) total.dxi += devs[j].dxi * loo;
      suffix *= devs[j].value;
    }
    return total;
  };

  const RowEval sv = combine(succ);
  const RowEval fv = combine(fail);
  const double ps = a.dsa_prob;
  out.value = ps * sv.value + (1.0 - ps) * fv.value;
  if (want_dtheta) out.dtheta = ps * sv.dtheta + (1.0 - ps) * fv.dtheta;
  if (want_dxi) out.dxi = ps * sv.dxi + (1.0 - ps) * fv.dxi;
  return out;
}

}  // namespace

MaliciousComponents malicious_components(const Outcome& r, const Scenario& s,
                                         const AttackSpec& a,
                                         const AlphabetPmf& p) {
  MaliciousComponents out;
  const AlphabetPmf& pt = a.attack_pmf;
  for (int id : s.malicious) {
    const int j = id - 1;
    for (int l = 0; l < s.chain_length; ++l) {
      const uint8_t o = r.at(j, l);
      out.success *= (l < a.fork_point - 1) ? p.probs[o] : pt.probs[o];
      out.failure *= (l < s.authentic_length) ? p.probs[o] : pt.probs[o];
    }
  }
  return out;
}

double malicious_factor(const Outcome& r, const Scenario& s,
                        const AttackSpec& a, const AlphabetPmf& p) {
  const MaliciousComponents c = malicious_components(r, s, a, p);
  return a.dsa_prob * c.success + (1.0 - a.dsa_prob) * c.failure;
}

double joint_pmf(const Outcome& r, const Scenario& s, const AttackSpec& a,
                 const AlphabetPmf& p) {
  return honest_factor(r, s, p) * malicious_factor(r, s, a, p);
}

double dphi0_dtheta(const Outcome& r, const Scenario& s,
                    const AlphabetPmf& p) {
  if (!p.dtheta) {
    raise(ErrorCode::PartialsUnavailable,
          "honest pmf has no dtheta partial; supply it or use "
          "finite_difference_partials");
  }
  // Product rule over every honest coordinate: leave-one-out via per-device
  // prefix/suffix plus the product over the other devices.
  const int L = s.chain_length;
  const int n_h = static_cast<int>(s.honest.size());
  thread_local std::vector<double> dev_value, dev_dtheta, prefix;
  dev_value.assign(n_h, 1.0);
  dev_dtheta.assign(n_h, 0.0);
  for (int k = 0; k < n_h; ++k) {
    const int j = s.honest[k] - 1;
    prefix.assign(static_cast<size_t>(L) + 1, 1.0);
    for (int l = 0; l < L; ++l) prefix[l + 1] = prefix[l] * p.probs[r.at(j, l)];
    dev_value[k] = prefix[L];
    double suffix = 1.0;
    for (int l = L - 1; l >= 0; --l) {
      const uint8_t o = r.at(j, l);
      dev_dtheta[k] += (*p.dtheta)[o] * prefix[l] * suffix;
      suffix *= p.probs[o];
    }
  }
  prefix.assign(static_cast<size_t>(n_h) + 1, 1.0);
  for (int k = 0; k < n_h; ++k) prefix[k + 1] = prefix[k] * dev_value[k];
  double total = 0.0;
  double suffix = 1.0;
  for (int k = n_h - 1; k >= 0; --k) {
    total += dev_dtheta[k] * prefix[k] * suffix;
    suffix *= dev_value[k];
  }
  return total;
}

double dphia_dtheta(const Outcome& r, const Scenario& s, const AttackSpec& a,
                    const AlphabetPmf& p) {
  return eval_phia(r, s, a, p, /*want_dtheta=*/true, /*want_dxi=*/false)
      .dtheta;
}

Eigen::VectorXd dphia_dxi(const Outcome& r, const Scenario& s,
                          const AttackSpec& a, const AlphabetPmf& p) {
  return eval_phia(r, s, a, p, /*want_dtheta=*/false, /*want_dxi=*/true).dxi;
}

OutcomeTables build_outcome_tables(const Scenario& s, const AttackSpec& a,
                                   const AlphabetPmf& p, uint64_t cap) {
  validate_scenario(s, a);
  const OutcomeSpace space(s, cap);
  OutcomeTables t;
  t.size = space.size();
  const AlphabetPmf& pt = a.attack_pmf;
  t.xi_dim = s.malicious.empty()
                 ? 0
                 : (pt.dxi ? static_cast<int>(pt.dxi->cols())
                           : static_cast<int>(a.xi.size()));
  t.phi0.resize(t.size);
  t.phia.resize(t.size);
  t.dphi0_dtheta.resize(t.size);
  t.dphia_dtheta.resize(t.size);
  t.dphia_dxi.resize(t.size * static_cast<size_t>(t.xi_dim));
  Outcome r;
  for (uint64_t i = 0; i < t.size; ++i) {
    space.decode_into(i, r);
    t.phi0[i] = honest_factor(r, s, p);
    t.dphi0_dtheta[i] = dphi0_dtheta(r, s, p);
    const PhiAEval m = eval_phia(r, s, a, p, true, t.xi_dim > 0);
    t.phia[i] = m.value;
    t.dphia_dtheta[i] = m.dtheta;
    for (int k = 0; k < t.xi_dim; ++k) {
      t.dphia_dxi[i * t.xi_dim + k] = m.dxi[k];
    }
  }
  return t;
}

}  // namespace biotcrb
