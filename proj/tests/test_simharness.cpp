#include <doctest.h>

#include <cmath>
#include <vector>

#include "biotcrb/error.hpp"
#include "biotcrb/fisher.hpp"
#include "biotcrb/outcome.hpp"
#include "biotcrb/pmf.hpp"
#include "biotcrb/simharness.hpp"
#include "support.hpp"

using namespace biotcrb;
using testutil::vec;

namespace {

ModelFamily quantizer_model(double threshold, double noise_std,
                            double attack_threshold, double attack_std) {
  ModelFamily family;
  family.honest = [=](double theta) {
    return gaussian_quantizer_pmf(theta, threshold, noise_std);
  };
  family.attack = injection_attack_family(attack_threshold, attack_std);
  family.xi_dim = 1;
  return family;
}

}  // namespace

TEST_SUITE("simharness") {

TEST_CASE("identical seeds give identical bytes") {
  const Scenario s = testutil::make_scenario(1, 1, 8, 6, 0.1);
  const AttackSpec a =
      testutil::make_attack(3, 0.4, injection_attack_pmf(s.theta, vec({0.6}),
                                                         0.0, 1.0),
                            vec({0.6}));
  const AlphabetPmf p = gaussian_quantizer_pmf(s.theta, 0.0, 1.0);

  const ChainData one = generate_chain(s, a, p, 42);
  const ChainData two = generate_chain(s, a, p, 42);
  CHECK(one.symbols == two.symbols);
  CHECK(one.dsa_succeeded == two.dsa_succeeded);
  CHECK(one.seed == 42);
  CHECK(one.n_devices == 2);
  CHECK(one.chain_length == 8);
  CHECK(one.symbols.size() == 16);

  const ChainData other = generate_chain(s, a, p, 43);
  CHECK((other.symbols != one.symbols ||
         other.dsa_succeeded != one.dsa_succeeded));
}

TEST_CASE("race flag and switch position with deterministic tables") {
  // Honest devices always emit 1; falsified blocks always emit 0, so the
  // exact switch block is visible in the bytes.
  const Scenario s = testutil::make_scenario(1, 1, 3, 2);
  const AlphabetPmf honest = AlphabetPmf::tabulated(vec({0.0, 1.0}));
  const AlphabetPmf falsified = AlphabetPmf::tabulated(vec({1.0, 0.0}));

  AttackSpec win;
  win.fork_point = 2;
  win.dsa_prob = 1.0;
  win.attack_pmf = falsified;
  win.xi = vec({0.0});
  const ChainData won = generate_chain(s, win, honest, 5);
  CHECK(won.dsa_succeeded);
  CHECK(won.symbols == std::vector<uint8_t>({1, 1, 1, 1, 0, 0}));

  AttackSpec lose = win;
  lose.dsa_prob = 0.0;
  const ChainData lost = generate_chain(s, lose, honest, 5);
  CHECK(!lost.dsa_succeeded);
  CHECK(lost.symbols == std::vector<uint8_t>({1, 1, 1, 1, 1, 0}));

  // Without a malicious set the race never fires.
  const Scenario clean = testutil::make_scenario(2, 0, 3, 2);
  AttackSpec noop;
  noop.dsa_prob = 1.0;
  const ChainData calm = generate_chain(clean, noop, honest, 5);
  CHECK(!calm.dsa_succeeded);
  CHECK(calm.symbols == std::vector<uint8_t>(6, 1));
}

TEST_CASE("sampled outcomes follow the joint pmf") {
  const Scenario s = testutil::make_scenario(1, 1, 3, 2);
  const AlphabetPmf p =
      AlphabetPmf::tabulated(vec({0.4, 0.6}), vec({-0.1, 0.1}));
  const AlphabetPmf q =
      AlphabetPmf::tabulated(vec({0.7, 0.3}), vec({-0.2, 0.2}));
  AttackSpec a;
  a.fork_point = 2;
  a.dsa_prob = 0.35;
  a.attack_pmf = q;
  a.xi = vec({0.0});

  const int n = 100000;
  const OutcomeSpace space(s);
  REQUIRE(space.size() == 64);
  std::vector<int64_t> observed(64, 0);
  for (int t = 0; t < n; ++t) {
    const ChainData c = generate_chain(s, a, p, 2025 + static_cast<uint64_t>(t));
    uint64_t idx = 0;
    for (uint8_t sym : c.symbols) idx = idx * 2 + sym;
    ++observed[idx];
  }

  Outcome r;
  double stat = 0.0;
  for (uint64_t i = 0; i < 64; ++i) {
    space.decode_into(i, r);
    const double expected = n * joint_pmf(r, s, a, p);
    REQUIRE(expected > 5.0);
    const double diff = observed[i] - expected;
    stat += diff * diff / expected;
  }
  // 99.9% quantile of chi-square with 63 degrees of freedom is 103.4; the
  // seed is fixed, so this is a frozen draw, not a flaky gate.
  CHECK(stat < 103.4);
}

TEST_CASE("grid mle recovers the generating parameters") {
  const Scenario s = testutil::make_scenario(1, 1, 6, 4, 0.3);
  const AlphabetPmf p = gaussian_quantizer_pmf(s.theta, 0.0, 1.0);
  const Eigen::VectorXd xi_true = vec({0.8});
  AttackSpec a;
  a.fork_point = 2;
  a.dsa_prob = 0.3;
  a.xi = xi_true;
  a.attack_pmf = injection_attack_pmf(s.theta, xi_true, 0.5, 1.0);

  std::vector<ChainData> chains;
  for (int c = 0; c < 300; ++c) {
    chains.push_back(generate_chain(s, a, p, 7000 + static_cast<uint64_t>(c)));
  }
  const ModelFamily family = quantizer_model(0.0, 1.0, 0.5, 1.0);
  const MleResult est =
      mle_estimate(chains, s, a.fork_point, a.dsa_prob, family);
  CHECK(!est.boundary);
  CHECK(std::fabs(est.theta_hat - 0.3) < 0.05);
  CHECK(std::fabs(est.xi_hat[0] - 0.8) < 0.4);
  CHECK(std::isfinite(est.loglik));
}

TEST_CASE("boundary landing is flagged") {
  const Scenario s = testutil::make_scenario(1, 1, 4, 3, 0.3);
  const AlphabetPmf p = gaussian_quantizer_pmf(s.theta, 0.0, 1.0);
  AttackSpec a;
  a.fork_point = 2;
  a.dsa_prob = 0.3;
  a.xi = vec({0.5});
  a.attack_pmf = injection_attack_pmf(s.theta, a.xi, 0.0, 1.0);
  std::vector<ChainData> chains;
  for (int c = 0; c < 20; ++c) {
    chains.push_back(generate_chain(s, a, p, 31 + static_cast<uint64_t>(c)));
  }
  const ModelFamily family = quantizer_model(0.0, 1.0, 0.0, 1.0);
  MleOptions opt;
  opt.box_lo = 2.0;
  opt.box_hi = 3.0;
  const MleResult est =
      mle_estimate(chains, s, a.fork_point, a.dsa_prob, family, opt);
  CHECK(est.boundary);
  CHECK((std::fabs(est.theta_hat - 2.0) < 1e-6 ||
         std::fabs(est.theta_hat - 3.0) < 1e-6));
}

TEST_CASE("estimator input validation") {
  const Scenario s = testutil::make_scenario(1, 1, 3, 2, 0.1);
  const ModelFamily family = quantizer_model(0.0, 1.0, 0.0, 1.0);
  std::vector<ChainData> empty;
  REQUIRE_ERROR(ErrorCode::InvalidParameter,
                mle_estimate(empty, s, 1, 0.3, family));

  const AlphabetPmf p = gaussian_quantizer_pmf(s.theta, 0.0, 1.0);
  AttackSpec a;
  a.fork_point = 1;
  a.dsa_prob = 0.3;
  a.xi = vec({0.2});
  a.attack_pmf = injection_attack_pmf(s.theta, a.xi, 0.0, 1.0);
  std::vector<ChainData> chains = {generate_chain(s, a, p, 1)};
  REQUIRE_ERROR(ErrorCode::InvalidFork,
                mle_estimate(chains, s, 3, 0.3, family));

  const Scenario wide = testutil::make_scenario(2, 1, 3, 2, 0.1);
  REQUIRE_ERROR(ErrorCode::InvalidParameter,
                mle_estimate(chains, wide, 1, 0.3, family));
}

TEST_CASE("mse experiment wiring") {
  const Scenario s = testutil::make_scenario(1, 1, 3, 2, 0.2);
  const AlphabetPmf p = gaussian_quantizer_pmf(s.theta, 0.0, 1.0);
  AttackSpec a;
  a.fork_point = 2;
  a.dsa_prob = 0.4;
  a.xi = vec({0.5});
  a.attack_pmf = injection_attack_pmf(s.theta, a.xi, 0.0, 1.0);
  const ModelFamily family = quantizer_model(0.0, 1.0, 0.0, 1.0);

  const MseReport rep = mse_experiment(s, a, p, family, 2, 3, 9);
  CHECK(rep.trials == 2);
  CHECK(rep.chains_per_estimate == 3);
  CHECK(rep.theta_mse >= 0.0);
  CHECK(rep.xi_mse >= 0.0);

  FimOptions fopt;
  fopt.psi_limit = 0;
  const double per_chain = crb_theta(fim_blocks(s, a, p, fopt)).crb_theta;
  CHECK(rep.crb_theta == doctest::Approx(per_chain / 3.0).epsilon(1e-15));
  CHECK(rep.ratio == doctest::Approx(rep.theta_mse / rep.crb_theta)
                         .epsilon(1e-15));

  REQUIRE_ERROR(ErrorCode::InvalidParameter,
                mse_experiment(s, a, p, family, 0, 3, 9));
  REQUIRE_ERROR(ErrorCode::InvalidParameter,
                mse_experiment(s, a, p, family, 2, 0, 9));
}

TEST_CASE("squared error shrinks with more chains per estimate") {
  const Scenario s = testutil::make_scenario(1, 1, 4, 3, 0.2);
  const AlphabetPmf p = gaussian_quantizer_pmf(s.theta, 0.0, 1.0);
  AttackSpec a;
  a.fork_point = 2;
  a.dsa_prob = 0.3;
  a.xi = vec({0.6});
  a.attack_pmf = injection_attack_pmf(s.theta, a.xi, 0.0, 1.0);
  const ModelFamily family = quantizer_model(0.0, 1.0, 0.0, 1.0);

  const MseReport small = mse_experiment(s, a, p, family, 30, 40, 77);
  const MseReport big = mse_experiment(s, a, p, family, 30, 160, 77);
  CHECK(big.theta_mse < small.theta_mse);
  // With enough chains the grid estimator tracks the analytic floor.
  CHECK(big.ratio > 0.2);
  CHECK(big.ratio < 5.0);
}

}  // TEST_SUITE
