#include "biotcrb/simharness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "biotcrb/error.hpp"
#include "biotcrb/fisher.hpp"
#include "biotcrb/math_util.hpp"

namespace biotcrb {

namespace {

double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int draw_symbol(const Eigen::VectorXd& probs, std::mt19937_64& rng) {
  const double u = uniform53(rng);
  double cum = 0.0;
  const int n = static_cast<int>(probs.size());
  for (int o = 0; o < n - 1; ++o) {
    cum += probs[o];
    if (u < cum) return o;
  }
  return n - 1;
}

}  // namespace

ChainData generate_chain(const Scenario& s, const AttackSpec& a,
                         const AlphabetPmf& p, uint64_t seed) {
  validate_scenario(s, a);
  p.validate();
  require_matching_alphabet(s, p);
  ChainData data;
  data.n_devices = s.n_devices;
  data.chain_length = s.chain_length;
  data.seed = seed;
  data.symbols.assign(
      static_cast<size_t>(s.n_devices) * static_cast<size_t>(s.chain_length),
      0);
  std::mt19937_64 rng(splitmix64(seed));
  data.dsa_succeeded =
      !s.malicious.empty() && uniform53(rng) < a.dsa_prob;
  // Malicious rows switch to the attack pmf at the fork when the race is
  // won, and only past the authentic prefix when it is lost.
  const int switch_at =
      data.dsa_succeeded ? a.fork_point - 1 : s.authentic_length;
  const std::vector<int> mal = malicious_rows(s);
  std::vector<bool> is_mal(static_cast<size_t>(s.n_devices), false);
  for (int row : mal) is_mal[static_cast<size_t>(row)] = true;
  for (int dev = 0; dev < s.n_devices; ++dev) {
    for (int blk = 0; blk < s.chain_length; ++blk) {
      const bool attacked = is_mal[static_cast<size_t>(dev)] &&
                            blk >= switch_at;
      const Eigen::VectorXd& probs =
          attacked ? a.attack_pmf.probs : p.probs;
      data.symbols[static_cast<size_t>(dev) * s.chain_length + blk] =
          static_cast<uint8_t>(draw_symbol(probs, rng));
    }
  }
  return data;
}

namespace {

// Symbol counts that make the batch likelihood cheap on a grid: the honest
// coordinates pool across chains; the malicious coordinates keep per-chain
// segment counts because the race mixture couples devices within a chain.
struct BatchCounts {
  std::vector<int64_t> honest;  // per symbol, all chains pooled
  // Per chain, per symbol: pre-fork / between fork and authentic tip /
  // appended segment counts over the malicious rows.
  std::vector<std::array<std::vector<int64_t>, 3>> mal;
};

BatchCounts count_batch(std::span<const ChainData> chains, const Scenario& s,
                        int fork_point) {
  BatchCounts counts;
  counts.honest.assign(static_cast<size_t>(s.alphabet_size), 0);
  const std::vector<int> hon = honest_rows(s);
  const std::vector<int> mal = malicious_rows(s);
  for (const ChainData& c : chains) {
    if (c.n_devices != s.n_devices || c.chain_length != s.chain_length) {
      raise(ErrorCode::InvalidParameter,
            "chain shape does not match the scenario");
    }
    std::array<std::vector<int64_t>, 3> seg;
    for (auto& v : seg) v.assign(static_cast<size_t>(s.alphabet_size), 0);
    for (int row : hon) {
      for (int blk = 0; blk < s.chain_length; ++blk) {
        ++counts.honest[c.symbols[static_cast<size_t>(row) * s.chain_length +
                                  blk]];
      }
    }
    for (int row : mal) {
      for (int blk = 0; blk < s.chain_length; ++blk) {
        const uint8_t o =
            c.symbols[static_cast<size_t>(row) * s.chain_length + blk];
        const int band = blk < fork_point - 1      ? 0
                         : blk < s.authentic_length ? 1
                                                     : 2;
        ++seg[static_cast<size_t>(band)][o];
      }
    }
    counts.mal.push_back(std::move(seg));
  }
  return counts;
}

double log_or_ninf(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

// log of sum_o count_o * log(prob_o); -inf when a counted symbol has zero
// probability.
double count_loglik(const std::vector<int64_t>& counts,
                    const Eigen::VectorXd& probs) {
  double ll = 0.0;
  for (size_t o = 0; o < counts.size(); ++o) {
    if (counts[o] == 0) continue;
    const double lp = log_or_ninf(probs[static_cast<Eigen::Index>(o)]);
    if (!std::isfinite(lp)) return lp;
    ll += static_cast<double>(counts[o]) * lp;
  }
  return ll;
}

double batch_loglik(const BatchCounts& counts, const AlphabetPmf& honest,
                    const AlphabetPmf& attack, double dsa_prob,
                    bool has_malicious) {
  double ll = count_loglik(counts.honest, honest.probs);
  if (!std::isfinite(ll)) return ll;
  if (!has_malicious) return ll;
  for (const auto& seg : counts.mal) {
    // success branch: honest pmf before the fork only
    double ls = count_loglik(seg[0], honest.probs);
    if (std::isfinite(ls)) {
      const double t = count_loglik(seg[1], attack.probs);
      ls += t;
      if (std::isfinite(ls)) ls += count_loglik(seg[2], attack.probs);
    }
    // failure branch: honest pmf through the authentic tip
    double lf = count_loglik(seg[0], honest.probs);
    if (std::isfinite(lf)) {
      const double t = count_loglik(seg[1], honest.probs);
      lf += t;
      if (std::isfinite(lf)) lf += count_loglik(seg[2], attack.probs);
    }
    const double hi = std::max(ls, lf);
    double mix;
    if (!std::isfinite(hi)) {
      mix = hi;
    } else {
      mix = hi + std::log(dsa_prob * std::exp(ls - hi) +
                          (1.0 - dsa_prob) * std::exp(lf - hi));
    }
    if (!std::isfinite(mix)) return mix;
    ll += mix;
  }
  return ll;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<size_t>(n));
  if (n == 1) {
    v[0] = 0.5 * (lo + hi);
    return v;
  }
  for (int i = 0; i < n; ++i) {
    v[static_cast<size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  }
  return v;
}

}  // namespace

MleResult mle_estimate(std::span<const ChainData> chains, const Scenario& s,
                       int fork_point, double dsa_prob,
                       const ModelFamily& family, const MleOptions& opt) {
  validate_scenario(s);
  if (chains.empty()) {
    raise(ErrorCode::InvalidParameter, "estimator needs at least one chain");
  }
  if (fork_point < 1 || fork_point > s.authentic_length) {
    raise(ErrorCode::InvalidFork,
          "fork point must lie in 1..authentic_length");
  }
  const bool has_mal = !s.malicious.empty();
  const int d = has_mal ? family.xi_dim : 0;
  const BatchCounts counts = count_batch(chains, s, fork_point);

  MleResult best;
  best.loglik = -std::numeric_limits<double>::infinity();
  best.xi_hat = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd xi(d);
  auto evaluate = [&](double theta) {
    const AlphabetPmf honest = family.honest(theta);
    AlphabetPmf attack;
    if (has_mal) attack = family.attack(theta, xi);
    const double ll =
        batch_loglik(counts, honest, attack, dsa_prob, has_mal);
    if (ll > best.loglik) {
      best.loglik = ll;
      best.theta_hat = theta;
      best.xi_hat = xi;
    }
  };

  auto sweep = [&](const std::vector<double>& theta_grid,
                   const std::vector<std::vector<double>>& xi_grids) {
    std::vector<size_t> idx(static_cast<size_t>(d), 0);
    for (double theta : theta_grid) {
      if (d == 0) {
        evaluate(theta);
        continue;
      }
      std::fill(idx.begin(), idx.end(), 0);
      while (true) {
        for (int k = 0; k < d; ++k) {
          xi[k] = xi_grids[static_cast<size_t>(k)][idx[static_cast<size_t>(k)]];
        }
        evaluate(theta);
        int k = d - 1;
        while (k >= 0 && ++idx[static_cast<size_t>(k)] ==
                             xi_grids[static_cast<size_t>(k)].size()) {
          idx[static_cast<size_t>(k)] = 0;
          --k;
        }
        if (k < 0) break;
      }
    }
  };

  // Coarse pass over the whole box.
  {
    const std::vector<double> tg =
        linspace(opt.box_lo, opt.box_hi, opt.coarse_points);
    std::vector<std::vector<double>> xg(static_cast<size_t>(d), tg);
    sweep(tg, xg);
  }

  // Refinement passes shrink the window to the previous spacing.
  double width = (opt.box_hi - opt.box_lo) /
                 std::max(1, opt.coarse_points - 1);
  for (int pass = 0; pass < opt.refine_passes; ++pass) {
    const double t0 = std::max(opt.box_lo, best.theta_hat - width);
    const double t1 = std::min(opt.box_hi, best.theta_hat + width);
    const std::vector<double> tg = linspace(t0, t1, 21);
    std::vector<std::vector<double>> xg;
    for (int k = 0; k < d; ++k) {
      const double lo = std::max(opt.box_lo, best.xi_hat[k] - width);
      const double hi = std::min(opt.box_hi, best.xi_hat[k] + width);
      xg.push_back(linspace(lo, hi, 21));
    }
    sweep(tg, xg);
    width /= 10.0;
  }

  const double edge = 1e-9 * (opt.box_hi - opt.box_lo);
  best.boundary = std::abs(best.theta_hat - opt.box_lo) < edge ||
                  std::abs(best.theta_hat - opt.box_hi) < edge;
  for (int k = 0; k < d && !best.boundary; ++k) {
    best.boundary = std::abs(best.xi_hat[k] - opt.box_lo) < edge ||
                    std::abs(best.xi_hat[k] - opt.box_hi) < edge;
  }
  return best;
}

MseReport mse_experiment(const Scenario& s, const AttackSpec& a,
                         const AlphabetPmf& p, const ModelFamily& family,
                         int trials, int chains_per_estimate, uint64_t seed) {
  validate_scenario(s, a);
  if (trials < 1 || chains_per_estimate < 1) {
    raise(ErrorCode::InvalidParameter,
          "trials and chains_per_estimate must be positive");
  }
  MseReport rep;
  rep.trials = trials;
  rep.chains_per_estimate = chains_per_estimate;

  const bool has_mal = !s.malicious.empty();
  KahanSum theta_sq, xi_sq;
  std::vector<ChainData> batch;
  batch.reserve(static_cast<size_t>(chains_per_estimate));
  for (int t = 0; t < trials; ++t) {
    batch.clear();
    for (int c = 0; c < chains_per_estimate; ++c) {
      const uint64_t chain_seed =
          seed ^ splitmix64(static_cast<uint64_t>(t) *
                                static_cast<uint64_t>(chains_per_estimate) +
                            static_cast<uint64_t>(c) + 1);
      batch.push_back(generate_chain(s, a, p, chain_seed));
    }
    const MleResult est =
        mle_estimate(batch, s, a.fork_point, a.dsa_prob, family);
    const double dt = est.theta_hat - s.theta;
    theta_sq.add(dt * dt);
    if (has_mal && est.xi_hat.size() == a.xi.size()) {
      xi_sq.add((est.xi_hat - a.xi).squaredNorm());
    }
  }
  rep.theta_mse = theta_sq.value() / trials;
  rep.xi_mse = xi_sq.value() / trials;

  FimOptions fopt;
  fopt.psi_limit = 0;
  const FimBlocks blocks = fim_blocks(s, a, p, fopt);
  rep.crb_theta = crb_theta(blocks).crb_theta / chains_per_estimate;
  rep.ratio = rep.crb_theta > 0.0 ? rep.theta_mse / rep.crb_theta : 0.0;
  return rep;
}

}  // namespace biotcrb
