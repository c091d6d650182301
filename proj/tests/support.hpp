#pragma once

#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "biotcrb/error.hpp"
#include "biotcrb/pmf.hpp"
#include "biotcrb/scenario.hpp"

#ifndef BIOTCRB_FIXTURE_DIR
#define BIOTCRB_FIXTURE_DIR "fixtures"
#endif

// Expects stmt_ to raise a biotcrb::Error carrying exactly code_.
#define REQUIRE_ERROR(code_, stmt_)                                   \
  do {                                                                \
    bool hit_ = false;                                                \
    try {                                                             \
      stmt_;                                                          \
    } catch (const biotcrb::Error& e_) {                              \
      hit_ = true;                                                    \
      CHECK(e_.code() == (code_));                                    \
    }                                                                 \
    CHECK_MESSAGE(hit_, "expected an error with code " #code_);       \
  } while (0)

namespace testutil {

inline std::string fixture(const std::string& name) {
  return std::string(BIOTCRB_FIXTURE_DIR) + "/" + name;
}

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Device ids 1..n_honest are honest, the rest malicious.
inline biotcrb::Scenario make_scenario(int n_honest, int n_malicious,
                                       int chain_length, int authentic_length,
                                       double theta = 0.0, int alphabet = 2) {
  biotcrb::Scenario s;
  s.n_devices = n_honest + n_malicious;
  for (int i = 1; i <= n_honest; ++i) s.honest.push_back(i);
  for (int i = n_honest + 1; i <= s.n_devices; ++i) s.malicious.push_back(i);
  s.chain_length = chain_length;
  s.authentic_length = authentic_length;
  s.alphabet_size = alphabet;
  s.theta = theta;
  return s;
}

// Strictly positive pmf with mean-zero derivative columns.
inline biotcrb::AlphabetPmf random_pmf(std::mt19937_64& rng, int alphabet,
                                       int xi_dim) {
  std::uniform_real_distribution<double> up(0.05, 1.0);
  std::uniform_real_distribution<double> ud(-0.5, 0.5);
  Eigen::VectorXd p(alphabet);
  for (int o = 0; o < alphabet; ++o) p[o] = up(rng);
  p /= p.sum();
  // Rounding can leave the mass a few ulp off 1; close the gap on the
  // largest entry so tabulated() accepts the table.
  Eigen::Index top = 0;
  p.maxCoeff(&top);
  p[top] += 1.0 - p.sum();

  Eigen::VectorXd dt(alphabet);
  for (int o = 0; o < alphabet; ++o) dt[o] = ud(rng);
  dt.array() -= dt.mean();

  std::optional<Eigen::MatrixXd> dxi;
  if (xi_dim > 0) {
    Eigen::MatrixXd m(alphabet, xi_dim);
    for (int k = 0; k < xi_dim; ++k) {
      for (int o = 0; o < alphabet; ++o) m(o, k) = ud(rng);
      m.col(k).array() -= m.col(k).mean();
    }
    dxi = std::move(m);
  }
  return biotcrb::AlphabetPmf::tabulated(p, dt, dxi);
}

inline biotcrb::AttackSpec make_attack(
    int fork_point, double dsa_prob, biotcrb::AlphabetPmf pmf,
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(1)) {
  biotcrb::AttackSpec a;
  a.fork_point = fork_point;
  a.xi = std::move(xi);
  a.dsa_prob = dsa_prob;
  a.attack_pmf = std::move(pmf);
  return a;
}

}  // namespace testutil
