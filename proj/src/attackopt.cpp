#include "biotcrb/attackopt.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <sstream>

#include "biotcrb/error.hpp"
#include "biotcrb/math_util.hpp"

namespace biotcrb {

namespace {

struct Objective {
  const Scenario& s;
  const AlphabetPmf& p;
  const PmfFamily& attack_family;
  int fork_point;
  double dsa_prob;
  uint64_t cap;
  double j_c0_hint = -1.0;  // honest block is xi-independent

  // CRB as a function of xi at this fork; the value the adversary pushes up.
  double operator()(const Eigen::VectorXd& xi) const {
    AttackSpec a;
    a.fork_point = fork_point;
    a.xi = xi;
    a.dsa_prob = dsa_prob;
    a.attack_pmf = attack_family(s.theta, xi);
    FimOptions fopt;
    fopt.cap = cap;
    fopt.psi_limit = 0;  // the search needs values only
    fopt.j_c0_hint = j_c0_hint;
    const FimBlocks b = fim_blocks(s, a, p, fopt);
    return crb_theta(b).crb_theta;
  }
};

Eigen::VectorXd clamp_box(Eigen::VectorXd v, double lo, double hi) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    v[k] = std::min(hi, std::max(lo, v[k]));
  }
  return v;
}

// Projected gradient ascent with backtracking; monotone in the objective.
StartTrace ascend(const Objective& f, const Eigen::VectorXd& start,
                  const OptOptions& opt) {
  StartTrace tr;
  tr.fork_point = f.fork_point;
  tr.start = start;
  Eigen::VectorXd x = clamp_box(start, opt.box_lo, opt.box_hi);
  double fx = 0.0;
  try {
    fx = f(x);
    for (int it = 0; it < opt.max_iters; ++it) {
      tr.iterations = it + 1;
      Eigen::VectorXd g(x.size());
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd xp = x, xm = x;
        xp[k] = std::min(opt.box_hi, x[k] + opt.fd_step);
        xm[k] = std::max(opt.box_lo, x[k] - opt.fd_step);
        const double span = xp[k] - xm[k];
        g[k] = span > 0.0 ? (f(xp) - f(xm)) / span : 0.0;
      }
      const double gnorm = g.norm();
      if (gnorm == 0.0) {
        tr.converged = true;
        break;
      }
      double step = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 40; ++bt) {
        const Eigen::VectorXd cand =
            clamp_box(x + step * g, opt.box_lo, opt.box_hi);
        if ((cand - x).norm() == 0.0) break;
        const double fc = f(cand);
        if (fc > fx) {
          const double gain = fc - fx;
          x = cand;
          fx = fc;
          moved = true;
          if (gain < opt.value_tol * std::max(1.0, std::abs(fx))) {
            tr.converged = true;
          }
          break;
        }
        step *= 0.5;
      }
      if (!moved) {
        tr.converged = true;  // no uphill step inside the box
        break;
      }
      if (tr.converged) break;
    }
  } catch (const Error& e) {
    // A cap refusal is deterministic across starts; surface it so callers
    // can skip the whole point instead of reporting a search failure.
    if (e.code() == ErrorCode::OutcomeSpaceTooLarge) throw;
    tr.failed = true;
    tr.note = e.what();
  }
  tr.final_xi = x;
  tr.final_value = fx;
  return tr;
}

std::vector<Eigen::VectorXd> make_starts(const OptOptions& opt) {
  std::vector<Eigen::VectorXd> starts = opt.user_starts;
  const double mid = 0.5 * (opt.box_lo + opt.box_hi);
  const double width = opt.box_hi - opt.box_lo;
  static const unsigned primes[] = {2, 3, 5, 7, 11, 13};
  const uint64_t offset = splitmix64(opt.seed) % 1024;
  Eigen::VectorXd v(opt.xi_dim);
  v.setConstant(mid);
  starts.push_back(v);  // center of the box always participates
  for (int i = 0; i < opt.n_starts; ++i) {
    for (int k = 0; k < opt.xi_dim; ++k) {
      const double u =
          halton(offset + 1 + static_cast<uint64_t>(i),
                 primes[static_cast<size_t>(k) % std::size(primes)]);
      v[k] = opt.box_lo + u * width;
    }
    starts.push_back(v);
  }
  return starts;
}

}  // namespace

AttackOptResult maximize_crb(const Scenario& s, const AlphabetPmf& p,
                             const PmfFamily& attack_family,
                             const std::vector<double>& dsa_profile,
                             const OptOptions& opt) {
  validate_scenario(s);
  if (opt.xi_dim < 1) {
    raise(ErrorCode::UnsupportedDimension, "xi dimension must be >= 1");
  }
  if (!(opt.box_lo < opt.box_hi)) {
    raise(ErrorCode::InvalidParameter, "search box is empty");
  }
  AttackOptResult res;
  const double j_c0 = honest_information(s, p, opt.cap);
  if (!(j_c0 > 0.0)) {
    raise(ErrorCode::DegenerateInformation,
          "honest-side information is zero; theta is unidentifiable");
  }
  res.baseline_bound = 1.0 / j_c0;

  if (s.malicious.empty()) {
    // Nothing to falsify: the objective is the no-attack floor for every
    // fork and xi.
    res.no_op_attack = true;
    res.best_crb = res.baseline_bound;
    res.best_xi = Eigen::VectorXd::Zero(opt.xi_dim);
    res.best_fork = 1;
    return res;
  }
  if (static_cast<int>(dsa_profile.size()) < s.authentic_length) {
    raise(ErrorCode::InvalidParameter,
          "race profile must cover fork points 1..authentic_length");
  }

  const std::vector<Eigen::VectorXd> starts = make_starts(opt);

  auto run_fork = [&](int la) {
    Objective f{s, p, attack_family, la, dsa_profile[la - 1], opt.cap, j_c0};
    std::vector<StartTrace> traces;
    traces.reserve(starts.size());
    for (const auto& st : starts) traces.push_back(ascend(f, st, opt));
    return traces;
  };

  std::vector<std::vector<StartTrace>> per_fork_traces(s.authentic_length);
  if (opt.threads > 1) {
    std::vector<std::future<std::vector<StartTrace>>> futs;
    futs.reserve(s.authentic_length);
    for (int la = 1; la <= s.authentic_length; ++la) {
      futs.push_back(
          std::async(std::launch::async, [&, la] { return run_fork(la); }));
    }
    for (int la = 1; la <= s.authentic_length; ++la) {
      per_fork_traces[la - 1] = futs[la - 1].get();
    }
  } else {
    for (int la = 1; la <= s.authentic_length; ++la) {
      per_fork_traces[la - 1] = run_fork(la);
    }
  }

  bool any_ok = false;
  std::string first_failure;
  for (int la = 1; la <= s.authentic_length; ++la) {
    ForkResult fr;
    fr.fork_point = la;
    fr.failed = true;
    for (const StartTrace& tr : per_fork_traces[la - 1]) {
      res.trace.push_back(tr);
      if (tr.failed) {
        if (first_failure.empty()) first_failure = tr.note;
        continue;
      }
      if (fr.failed || tr.final_value > fr.crb) {
        fr.failed = false;
        fr.crb = tr.final_value;
        fr.xi = tr.final_xi;
      }
    }
    res.per_fork.push_back(fr);
    if (fr.failed) continue;
    const double edge = 1e-12 * std::max(1.0, std::abs(res.best_crb));
    if (!any_ok || fr.crb > res.best_crb + edge) {
      any_ok = true;
      res.best_crb = fr.crb;
      res.best_xi = fr.xi;
      res.best_fork = la;
    }
  }
  if (!any_ok) {
    std::ostringstream msg;
    msg << "every start at every fork point failed";
    if (!first_failure.empty()) msg << ": " << first_failure;
    raise(ErrorCode::OptimizationFailed, msg.str());
  }
  return res;
}

GridSearchResult grid_search_oracle(const Scenario& s, const AlphabetPmf& p,
                                    const PmfFamily& attack_family,
                                    const std::vector<double>& dsa_profile,
                                    const std::vector<double>& xi_grid,
                                    uint64_t cap) {
  validate_scenario(s);
  if (s.malicious.empty()) {
    raise(ErrorCode::DegenerateScenario,
          "grid search needs a non-empty malicious set");
  }
  if (xi_grid.empty()) {
    raise(ErrorCode::InvalidParameter, "xi grid is empty");
  }
  if (static_cast<int>(dsa_profile.size()) < s.authentic_length) {
    raise(ErrorCode::InvalidParameter,
          "race profile must cover fork points 1..authentic_length");
  }
  GridSearchResult best;
  bool found = false;
  for (int la = 1; la <= s.authentic_length; ++la) {
    Objective f{s, p, attack_family, la, dsa_profile[la - 1], cap};
    for (const double xv : xi_grid) {
      Eigen::VectorXd xi(1);
      xi[0] = xv;
      const double val = f(xi);
      if (!found || val > best.best_value) {
        found = true;
        best.best_value = val;
        best.best_xi = xv;
        best.best_fork = la;
      }
    }
  }
  return best;
}

}  // namespace biotcrb
