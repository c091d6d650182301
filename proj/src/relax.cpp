#include "biotcrb/relax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "biotcrb/error.hpp"
#include "biotcrb/math_util.hpp"
#include "biotcrb/outcome.hpp"
#include "biotcrb/pmf.hpp"

namespace biotcrb {

namespace {

constexpr double kTieTol = 1e-12;

bool same_level(double a, double b) {
  return std::abs(a - b) <= kTieTol * std::max({1.0, std::abs(a), std::abs(b)});
}

void push_entry(SensitivityTable& t, double phi0, double dphi0, double mult) {
  if (phi0 <= 0.0) {
    if (dphi0 != 0.0) {
      raise(ErrorCode::DegenerateInformation,
            "zero-probability outcome with nonzero sensitivity; the "
            "relaxation weight diverges");
    }
    ++t.dropped_zero_weight;
    return;
  }
  const double x = dphi0 * dphi0 / phi0;
  t.x.push_back(x);
  t.w.push_back(phi0);
  t.omega.push_back(x / phi0);
  t.multiplicity.push_back(mult);
}

}  // namespace

double SensitivityTable::total_weight() const {
  KahanSum acc;
  for (size_t i = 0; i < w.size(); ++i) acc.add(multiplicity[i] * w[i]);
  return acc.value();
}

double SensitivityTable::sum_x() const {
  KahanSum acc;
  for (size_t i = 0; i < x.size(); ++i) acc.add(multiplicity[i] * x[i]);
  return acc.value();
}

SensitivityTable SensitivityTable::explicit_table(std::vector<double> x,
                                                  std::vector<double> w) {
  if (x.size() != w.size()) {
    raise(ErrorCode::InvalidParameter,
          "sensitivity and weight vectors differ in length");
  }
  SensitivityTable t;
  t.basis = Basis::Explicit;
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0.0 || w[i] < 0.0 || !std::isfinite(x[i]) ||
        !std::isfinite(w[i])) {
      raise(ErrorCode::InvalidParameter,
            "sensitivity table entries must be finite and nonnegative");
    }
    if (w[i] == 0.0) {
      // Weightless entries never enter the budget; y* = 0 regardless of x.
      ++t.dropped_zero_weight;
      continue;
    }
    t.x.push_back(x[i]);
    t.w.push_back(w[i]);
    t.omega.push_back(x[i] / w[i]);
    t.multiplicity.push_back(1.0);
  }
  return t;
}

void require_theta_sensitivity(const SensitivityTable& t) {
  for (double v : t.x) {
    if (v > 0.0) return;
  }
  raise(ErrorCode::DegenerateInformation,
        "every honest-side sensitivity is zero; theta is unidentifiable "
        "from honest data");
}

SensitivityTable sensitivity_weights(const Scenario& s, const AlphabetPmf& p,
                                     uint64_t cap) {
  p.validate();
  require_matching_alphabet(s, p);
  if (!p.dtheta) {
    raise(ErrorCode::PartialsUnavailable, "honest pmf has no dtheta partial");
  }
  const OutcomeSpace space(s, cap);
  SensitivityTable t;
  t.basis = SensitivityTable::Basis::FullOutcome;
  t.x.reserve(space.size());
  Outcome r;
  for (uint64_t i = 0; i < space.size(); ++i) {
    space.decode_into(i, r);
    push_entry(t, honest_factor(r, s, p), dphi0_dtheta(r, s, p), 1.0);
  }
  require_theta_sensitivity(t);
  return t;
}

SensitivityTable sensitivity_weights_honest(const Scenario& s,
                                            const AlphabetPmf& p,
                                            uint64_t cap) {
  validate_scenario(s);
  p.validate();
  require_matching_alphabet(s, p);
  if (!p.dtheta) {
    raise(ErrorCode::PartialsUnavailable, "honest pmf has no dtheta partial");
  }
  const unsigned honest_coords = static_cast<unsigned>(s.honest.size()) *
                                 static_cast<unsigned>(s.chain_length);
  const uint64_t n_patterns = saturating_pow(s.alphabet_size, honest_coords);
  if (n_patterns > cap) {
    std::ostringstream msg;
    msg << "honest-side pattern space " << s.alphabet_size << "^"
        << honest_coords << " exceeds the cap " << cap;
    raise(ErrorCode::OutcomeSpaceTooLarge, msg.str());
  }
  const double mult =
      std::pow(static_cast<double>(s.alphabet_size),
               static_cast<double>(s.malicious.size()) * s.chain_length);
  SensitivityTable t;
  t.basis = SensitivityTable::Basis::HonestPattern;
  t.x.reserve(n_patterns);
  std::vector<int> digit(honest_coords, 0);
  for (uint64_t i = 0; i < n_patterns; ++i) {
    double v = 1.0, dv = 0.0;
    for (unsigned c = 0; c < honest_coords; ++c) {
      const int o = digit[c];
      dv = dv * p.probs[o] + v * (*p.dtheta)[o];
      v *= p.probs[o];
    }
    push_entry(t, v, dv, mult);
    for (unsigned c = honest_coords; c-- > 0;) {
      if (++digit[c] < s.alphabet_size) break;
      digit[c] = 0;
    }
  }
  require_theta_sensitivity(t);
  return t;
}

SensitivityTable sensitivity_weights_counts(const Scenario& s,
                                            const AlphabetPmf& p,
                                            uint64_t cap) {
  validate_scenario(s);
  p.validate();
  require_matching_alphabet(s, p);
  if (!p.dtheta) {
    raise(ErrorCode::PartialsUnavailable, "honest pmf has no dtheta partial");
  }
  const int m = static_cast<int>(s.honest.size()) * s.chain_length;
  const int A = s.alphabet_size;
  // Pascal triangle keeps the multinomial products exact while they fit an
  // integer-valued double.
  std::vector<std::vector<double>> choose(static_cast<size_t>(m) + 1);
  for (int n = 0; n <= m; ++n) {
    choose[static_cast<size_t>(n)].assign(static_cast<size_t>(n) + 1, 1.0);
    for (int k = 1; k < n; ++k) {
      choose[static_cast<size_t>(n)][static_cast<size_t>(k)] =
          choose[static_cast<size_t>(n - 1)][static_cast<size_t>(k - 1)] +
          choose[static_cast<size_t>(n - 1)][static_cast<size_t>(k)];
    }
  }
  const double mal_mult =
      std::pow(static_cast<double>(A),
               static_cast<double>(s.malicious.size()) * s.chain_length);

  SensitivityTable t;
  t.basis = SensitivityTable::Basis::SymbolCount;
  std::vector<int> counts(static_cast<size_t>(A), 0);
  uint64_t emitted = 0;

  // All count vectors (n_0..n_{A-1}) with sum m, depth-first.
  auto walk = [&](auto&& self, int sym, int left, double mult) -> void {
    if (sym == A - 1) {
      counts[static_cast<size_t>(sym)] = left;
      if (++emitted > cap) {
        raise(ErrorCode::OutcomeSpaceTooLarge,
              "count-class table exceeds the cap");
      }
      if (!std::isfinite(mult)) {
        raise(ErrorCode::OutcomeSpaceTooLarge,
              "count-class multiplicity overflows double precision");
      }
      double w = 1.0;
      double ratio = 0.0;  // sum n_o * dp_o / p_o over counted symbols
      int zero_prob_hits = 0;
      double dphi_at_zero = 0.0;
      for (int o = 0; o < A; ++o) {
        const int n = counts[static_cast<size_t>(o)];
        if (n == 0) continue;
        const double pr = p.probs[o];
        if (pr <= 0.0) {
          zero_prob_hits += n;
          dphi_at_zero = (*p.dtheta)[o];
          continue;
        }
        w *= std::pow(pr, n);
        ratio += n * (*p.dtheta)[o] / pr;
      }
      if (zero_prob_hits > 0) {
        // One vanished coordinate leaves a nonzero leave-one-out derivative
        // term; two or more kill the derivative too.
        if (zero_prob_hits == 1 && dphi_at_zero != 0.0 && w > 0.0) {
          raise(ErrorCode::DegenerateInformation,
                "zero-probability outcome with nonzero sensitivity; the "
                "relaxation weight diverges");
        }
        t.dropped_zero_weight +=
            static_cast<uint64_t>(std::min(mult * mal_mult, 1.0e18));
        return;
      }
      push_entry(t, w, w * ratio, mult * mal_mult);
      return;
    }
    for (int n = 0; n <= left; ++n) {
      counts[static_cast<size_t>(sym)] = n;
      self(self, sym + 1, left - n,
           mult * choose[static_cast<size_t>(left)][static_cast<size_t>(n)]);
    }
  };
  walk(walk, 0, m, 1.0);
  require_theta_sensitivity(t);
  return t;
}

WaterfillSolution waterfill(const SensitivityTable& table) {
  const size_t n = table.size();
  if (n == 0) {
    raise(ErrorCode::DegenerateInformation,
          "sensitivity table is empty; every outcome was dropped");
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return table.omega[a] < table.omega[b];
  });

  // Tie groups share one water decision; [lo, hi) index ranges into order.
  struct Group {
    size_t lo, hi;
    double omega;   // smallest omega in the group
    double weight;  // sum of multiplicity * w
  };
  std::vector<Group> groups;
  for (size_t k = 0; k < n;) {
    Group g{k, k + 1, table.omega[order[k]], 0.0};
    while (g.hi < n &&
           same_level(table.omega[order[g.hi]], table.omega[order[g.hi - 1]])) {
      ++g.hi;
    }
    KahanSum wsum;
    for (size_t j = g.lo; j < g.hi; ++j) {
      wsum.add(table.multiplicity[order[j]] * table.w[order[j]]);
    }
    g.weight = wsum.value();
    groups.push_back(g);
    k = g.hi;
  }

  WaterfillSolution sol;
  sol.y.assign(n, 0.0);
  sol.region.assign(n, Region::S1Zero);

  double cum = 0.0;
  size_t boundary = groups.size();
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    if (cum + groups[gi].weight < 1.0) {
      for (size_t j = groups[gi].lo; j < groups[gi].hi; ++j) {
        sol.y[order[j]] = 1.0;
        sol.region[order[j]] = Region::S2One;
      }
      cum += groups[gi].weight;
    } else {
      boundary = gi;
      break;
    }
  }
  if (boundary == groups.size()) {
    raise(ErrorCode::InfeasibleRelaxation,
          "total weight is below the budget; no feasible allocation exists");
  }
  const Group& bg = groups[boundary];
  const double frac = (1.0 - cum) / bg.weight;
  for (size_t j = bg.lo; j < bg.hi; ++j) {
    sol.y[order[j]] = frac;
    sol.region[order[j]] = Region::S3Fractional;
  }
  sol.lambda_star = bg.omega;

  sol.kkt_mu.assign(n, 0.0);
  sol.kkt_nu.assign(n, 0.0);
  KahanSum obj;
  for (size_t i = 0; i < n; ++i) {
    obj.add(table.multiplicity[i] * table.x[i] * sol.y[i]);
    switch (sol.region[i]) {
      case Region::S1Zero:
        sol.kkt_mu[i] = table.x[i] - sol.lambda_star * table.w[i];
        ++sol.n_s1;
        break;
      case Region::S2One:
        sol.kkt_nu[i] = sol.lambda_star * table.w[i] - table.x[i];
        ++sol.n_s2;
        break;
      case Region::S3Fractional:
        ++sol.n_s3;
        break;
    }
  }
  sol.objective = obj.value();
  sol.guarantee = sol.objective > 0.0
                      ? 1.0 / sol.objective
                      : std::numeric_limits<double>::infinity();
  return sol;
}

LpSolution lp_oracle(const SensitivityTable& table) {
  const size_t n = table.size();
  if (n == 0) {
    raise(ErrorCode::DegenerateInformation, "sensitivity table is empty");
  }
  std::vector<double> levels(table.omega);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  LpSolution best;
  bool found = false;
  std::vector<double> y(n);
  for (const double lam : levels) {
    // Entries strictly below the level are saturated, strictly above are
    // off; entries at the level absorb whatever budget remains.
    double fixed = 0.0;
    double at_level = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double gw = table.multiplicity[i] * table.w[i];
      if (table.omega[i] < lam) {
        fixed += gw;
      } else if (table.omega[i] == lam) {
        at_level += gw;
      }
    }
    const double remaining = 1.0 - fixed;
    if (remaining < -1e-15 || remaining > at_level * (1.0 + 1e-15)) continue;
    double left = std::min(std::max(remaining, 0.0), at_level);
    double objective = 0.0;
    for (size_t i = 0; i < n; ++i) {
      if (table.omega[i] < lam) {
        y[i] = 1.0;
      } else if (table.omega[i] == lam && left > 0.0) {
        const double gw = table.multiplicity[i] * table.w[i];
        const double take = std::min(gw, left);
        y[i] = take / gw;
        left -= take;
      } else {
        y[i] = 0.0;
      }
      objective += table.multiplicity[i] * table.x[i] * y[i];
    }
    if (!found || objective < best.objective) {
      best.objective = objective;
      best.lambda = lam;
      best.y = y;
      found = true;
    }
  }
  if (!found) {
    raise(ErrorCode::InfeasibleRelaxation,
          "no breakpoint admits a feasible allocation");
  }
  return best;
}

KktReport check_kkt(const SensitivityTable& table,
                    const WaterfillSolution& sol) {
  KktReport rep;
  KahanSum budget;
  for (size_t i = 0; i < table.size(); ++i) {
    const double scale = std::max(
        {1.0, std::abs(table.x[i]), std::abs(sol.lambda_star * table.w[i])});
    const double stat =
        table.x[i] - sol.lambda_star * table.w[i] - sol.kkt_mu[i] +
        sol.kkt_nu[i];
    rep.max_stationarity =
        std::max(rep.max_stationarity, std::abs(stat) / scale);
    rep.max_box_violation = std::max(
        {rep.max_box_violation, -sol.y[i], sol.y[i] - 1.0});
    rep.max_sign_violation = std::max(
        {rep.max_sign_violation, -sol.kkt_mu[i], -sol.kkt_nu[i]});
    rep.max_complementarity = std::max(
        {rep.max_complementarity, std::abs(sol.kkt_mu[i] * sol.y[i]) / scale,
         std::abs(sol.kkt_nu[i] * (1.0 - sol.y[i])) / scale});
    budget.add(table.multiplicity[i] * table.w[i] * sol.y[i]);
  }
  rep.budget_residual = std::abs(budget.value() - 1.0);
  return rep;
}

double guarantee_bound(const Scenario& s, const AlphabetPmf& p,
                       const std::vector<double>& dsa_profile, uint64_t cap) {
  (void)dsa_profile;  // metadata only: the optimum is race-independent
  const SensitivityTable table = sensitivity_weights_counts(s, p, cap);
  return waterfill(table).guarantee;
}

}  // namespace biotcrb
