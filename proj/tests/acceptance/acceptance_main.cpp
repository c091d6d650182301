// Acceptance gate: nine end-to-end checks, one summary line each, process
// exit code = number of failed checks. Tolerances are pinned here and only
// here. The two guarantee-trend clauses in checks 6 and 7 encode a property
// the exact relaxed optimum does not have (its value is a piecewise minimum
// over integer allocations of honest mass and oscillates as the honest
// sample count grows); they are evaluated as stated and report FAIL with
// the offending values rather than being weakened.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "biotcrb/cli.hpp"
#include "biotcrb/config.hpp"
#include "biotcrb/csv.hpp"
#include "biotcrb/dsa.hpp"
#include "biotcrb/error.hpp"
#include "biotcrb/fisher.hpp"
#include "biotcrb/pmf.hpp"
#include "biotcrb/relax.hpp"
#include "biotcrb/simharness.hpp"

#include "../fd_hessian.hpp"
#include "../support.hpp"

using namespace biotcrb;
using testutil::vec;

namespace {

constexpr double kFloorSlack = 1e-9;       // crb <= 1/j_c0 + this
constexpr double kFactorRel = 1e-9;        // j_c0 vs closed form
constexpr double kHessianRel = 1e-4;       // FIM vs FD Hessian
constexpr double kHessianStep = 1e-5;
constexpr double kOracleDiff = 1e-9;       // waterfill vs breakpoint oracle
constexpr double kKktTol = 1e-10;
constexpr double kRaceTol = 1e-12;         // exact race column
constexpr double kDominanceSlack = 1e-9;   // guarantee >= worst case
constexpr double kTrendSlack = 1e-12;      // relative slack in trend checks
constexpr double kRandomBudget = 120.0;    // seconds, check 1
constexpr double kSweepBudget = 1800.0;    // seconds, check 6
constexpr double kMseBudget = 300.0;       // seconds, check 9

struct Gate {
  bool ok = true;
  std::string note;

  void require(bool cond, const std::string& msg) {
    if (cond) return;
    ok = false;
    if (!note.empty()) note += "; ";
    note += msg;
  }
};

bool close_rel(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------
// 1. Randomized attacks never push the CRB above the no-attack ceiling.

void check_floor(Gate& g) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> uxi(-1.0, 1.0);
  int violations = 0;
  for (int it = 0; it < 200; ++it) {
    const int n_honest = 1 + static_cast<int>(rng() % 2);
    const int n_mal = 1 + static_cast<int>(rng() % (3 - n_honest));
    const int chain_length = 1 + static_cast<int>(rng() % 4);
    const int authentic = 1 + static_cast<int>(rng() % chain_length);
    const Scenario s =
        testutil::make_scenario(n_honest, n_mal, chain_length, authentic);
    const AlphabetPmf p = testutil::random_pmf(rng, 2, 0);
    const int fork = 1 + static_cast<int>(rng() % authentic);
    const AttackSpec a = testutil::make_attack(
        fork, u01(rng), testutil::random_pmf(rng, 2, 1), vec({uxi(rng)}));
    const CrbReport rep = crb_theta(fim_blocks(s, a, p));
    if (!(rep.crb_theta <= rep.bound + kFloorSlack)) {
      ++violations;
      if (violations == 1) {
        g.require(false, "instance " + std::to_string(it) + ": crb " +
                             fmt(rep.crb_theta) + " exceeds the no-attack "
                             "value " + fmt(rep.bound));
      }
    }
  }
  g.require(violations == 0,
            std::to_string(violations) + " of 200 instances broke the floor");
}

// ---------------------------------------------------------------------
// 2. Honest-side information is (honest devices) x (blocks) x (per-symbol
//    information), whatever the attack does.

void check_factorization(Gate& g) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int it = 0; it < 50; ++it) {
    const int alphabet = 2 + static_cast<int>(rng() % 3);
    const int n_honest = 1 + static_cast<int>(rng() % 2);
    const int n_mal = 1 + static_cast<int>(rng() % (3 - n_honest));
    const int chain_length = 1 + static_cast<int>(rng() % 3);
    const int authentic = 1 + static_cast<int>(rng() % chain_length);
    const Scenario s = testutil::make_scenario(n_honest, n_mal, chain_length,
                                               authentic, 0.0, alphabet);
    const AlphabetPmf p = testutil::random_pmf(rng, alphabet, 0);
    const int fork = 1 + static_cast<int>(rng() % authentic);
    const AttackSpec a = testutil::make_attack(
        fork, u01(rng), testutil::random_pmf(rng, alphabet, 1));

    double per_symbol = 0.0;
    for (int o = 0; o < alphabet; ++o) {
      per_symbol += (*p.dtheta)[o] * (*p.dtheta)[o] / p.probs[o];
    }
    const double expected =
        static_cast<double>(n_honest) * chain_length * per_symbol;
    const double got = fim_blocks(s, a, p).j_c0;
    if (!close_rel(got, expected, kFactorRel)) {
      g.require(false, "instance " + std::to_string(it) + ": j_c0 " +
                           fmt(got) + " vs " + fmt(expected));
      return;
    }
  }
}

// ---------------------------------------------------------------------
// 3. Analytic information blocks match the negative FD Hessian of the
//    exact expected log-likelihood.

void check_hessian(Gate& g) {
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> utheta(-0.5, 0.5);
  std::uniform_real_distribution<double> utau(-0.8, 0.8);
  std::uniform_real_distribution<double> usigma(0.8, 1.5);
  std::uniform_real_distribution<double> uxi(0.5, 1.5);
  std::uniform_real_distribution<double> udsa(0.2, 0.8);
  const int shapes[5][3] = {
      {1, 1, 2}, {1, 1, 3}, {2, 1, 2}, {1, 2, 2}, {2, 1, 3}};
  for (int it = 0; it < 20; ++it) {
    const auto& sh = shapes[it % 5];
    const int chain_length = sh[2];
    const int authentic = 1 + static_cast<int>(rng() % chain_length);
    const Scenario s =
        testutil::make_scenario(sh[0], sh[1], chain_length, authentic);
    const double theta = utheta(rng);
    const double tau = utau(rng), sigma = usigma(rng);
    const double atau = utau(rng), asigma = usigma(rng);
    const double xi = uxi(rng), dsa = udsa(rng);
    const int fork = 1 + static_cast<int>(rng() % authentic);

    const AlphabetPmf p = gaussian_quantizer_pmf(theta, tau, sigma);
    AttackSpec a;
    a.fork_point = fork;
    a.dsa_prob = dsa;
    a.xi = vec({xi});
    a.attack_pmf = injection_attack_pmf(theta, a.xi, atau, asigma);
    const FimBlocks blocks = fim_blocks(s, a, p);

    testutil::LoglikModel model{s, gaussian_quantizer_family(tau, sigma),
                                injection_attack_family(atau, asigma), fork,
                                dsa};
    const Eigen::Matrix2d fd =
        testutil::fd_information_matrix(model, theta, xi, kHessianStep);
    const double pairs[3][2] = {{blocks.j_theta(), fd(0, 0)},
                                {blocks.f_a[0], fd(0, 1)},
                                {blocks.j_xi(0, 0), fd(1, 1)}};
    for (const auto& pr : pairs) {
      if (!close_rel(pr[0], pr[1], kHessianRel)) {
        g.require(false, "instance " + std::to_string(it) + ": analytic " +
                             fmt(pr[0]) + " vs fd " + fmt(pr[1]));
        return;
      }
    }
  }
}

// ---------------------------------------------------------------------
// 4. The closed-form allocation agrees with the independent breakpoint
//    oracle and satisfies its optimality certificate.

void check_waterfill(Gate& g) {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> ux(0.0, 2.0);
  std::uniform_real_distribution<double> uw(0.02, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int solved = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const size_t n = 1 + static_cast<size_t>(rng() % 64);
    std::vector<double> x(n), w(n);
    const bool dyadic = inst % 5 == 2;
    for (size_t i = 0; i < n; ++i) {
      x[i] = u01(rng) < 0.15 ? 0.0 : ux(rng);
      w[i] = dyadic ? 0.25 : uw(rng);
    }
    if (inst % 5 == 1 && n >= 4) {
      x[1] = x[0];
      w[1] = w[0];
      x[n - 1] = x[n - 2];
      w[n - 1] = w[n - 2];
    }
    if (!dyadic) {
      double total = 0.0;
      for (double v : w) total += v;
      const double target = 1.2 + 1.5 * u01(rng);
      for (size_t i = 0; i < n; ++i) w[i] *= target / total;
    }
    const SensitivityTable t = SensitivityTable::explicit_table(x, w);
    if (t.total_weight() < 1.0) continue;  // quarter-weight tables may be light
    ++solved;
    const WaterfillSolution sol = waterfill(t);
    const LpSolution lp = lp_oracle(t);
    if (std::fabs(sol.objective - lp.objective) >
        kOracleDiff * std::max(1.0, std::fabs(lp.objective))) {
      g.require(false, "instance " + std::to_string(inst) + ": objective " +
                           fmt(sol.objective) + " vs oracle " +
                           fmt(lp.objective));
      return;
    }
    const KktReport kkt = check_kkt(t, sol);
    const double worst =
        std::max({kkt.max_stationarity, kkt.budget_residual,
                  kkt.max_box_violation, kkt.max_sign_violation,
                  kkt.max_complementarity});
    if (worst > kKktTol) {
      g.require(false, "instance " + std::to_string(inst) +
                           ": kkt residual " + fmt(worst));
      return;
    }
  }
  g.require(solved >= 400, "only " + std::to_string(solved) +
                               " feasible instances were exercised");
}

// ---------------------------------------------------------------------
// 5. The bundled race preset reproduces the pinned digits, and the preset
//    tables are byte-identical to the pinned strings.

void check_race_digits(Gate& g) {
  std::ostringstream out, err;
  const int code =
      run_cli({"dsa", "--config", testutil::fixture("race.cfg")}, out, err);
  g.require(code == 0, "dsa subcommand exited with " + std::to_string(code));
  if (code != 0) return;
  const auto rows = parse_csv(out.str());
  g.require(rows.size() == 5, "expected 4 fork rows");
  const char* pinned[] = {"0.00243", "0.0081", "0.027", "0.09"};
  const double values[] = {0.00243, 0.0081, 0.027, 0.09};
  for (int i = 0; i < 4 && rows.size() == 5; ++i) {
    const std::string& cell = rows[static_cast<size_t>(i + 1)][3];
    g.require(cell == pinned[i],
              "p_exact row " + std::to_string(i + 1) + " printed " + cell);
    g.require(std::fabs(std::strtod(cell.c_str(), nullptr) - values[i]) <=
                  kRaceTol,
              "p_exact row " + std::to_string(i + 1) + " off by more than " +
                  fmt(kRaceTol));
    RaceSpec spec;
    spec.adversary_share = 0.3;
    spec.counterfeit_needed = 5 - i;
    spec.honest_needed = 1;
    g.require(fmt(race_probability_exact(spec)) == pinned[i],
              "race recomputation drifted at row " + std::to_string(i + 1));
  }

  const auto pin = [&](const char* file, const char* key,
                       const std::string& want) {
    const Config cfg = Config::parse_file(testutil::fixture(file));
    const std::string got = cfg.get_string(key);
    g.require(got == want, std::string(file) + ":" + key + " = '" + got +
                               "' not the pinned string");
  };
  const std::string pmf = "0.02871656 0.97128344";
  const std::string slope = "-0.0656158147746766 0.0656158147746766";
  for (const char* f :
       {"fig2.cfg", "fig3.cfg", "fig4.cfg", "operating_point.cfg"}) {
    pin(f, "pmf_table", pmf);
    pin(f, "pmf_dtheta", slope);
  }
  pin("operating_point.cfg", "attack_pmf_table", "0.06680720 0.93319280");
  pin("operating_point.cfg", "attack_dtheta",
      "-0.12951759566589174 0.12951759566589174");
  pin("operating_point.cfg", "attack_dxi",
      "-0.12951759566589174 0.12951759566589174");
  pin("fig2.cfg", "dsa_profile_l5", "0.00243 0.0081 0.027 0.09");
  pin("fig2.cfg", "dsa_profile_l6", "0.00499 0.0149 0.044 0.1278");
  pin("fig2.cfg", "dsa_profile_l7", "0.0071 0.0199 0.0548 0.148");
  pin("fig2.cfg", "dsa_profile_l8", "0.0088 0.0235 0.0617 0.156");
  pin("fig2.cfg", "dsa_profile_l9", "0.010 0.0261 0.06645 0.166");
  pin("fig2.cfg", "dsa_profile_l10", "0.0111 0.027997 0.06972 0.1715");
  pin("fig3.cfg", "dsa_profile", "0.00243 0.0081 0.027 0.09");
  pin("fig4.cfg", "dsa_profile", "0.00243 0.0081 0.027 0.09");
}

// ---------------------------------------------------------------------
// Sweep helpers for checks 6 and 7.

struct SweepRow {
  int value = 0;
  bool ok = false;
  double crb = 0.0;
  double guarantee = 0.0;
};

std::vector<SweepRow> run_sweep(Gate& g, const std::string& figure) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::ostringstream out, err;
  const int code = run_cli({"reproduce", figure, "--cap", "1073741824",
                            "--threads", std::to_string(hw)},
                           out, err);
  std::vector<SweepRow> rows;
  g.require(code == 0, figure + " exited with " + std::to_string(code) +
                           ": " + err.str());
  if (code != 0) return rows;
  const auto cells = parse_csv(out.str());
  for (size_t i = 1; i < cells.size(); ++i) {
    SweepRow row;
    row.value = static_cast<int>(std::strtol(cells[i][1].c_str(), nullptr, 10));
    row.ok = cells[i][4] == "ok";
    if (!row.ok) {
      // Capped points are allowed but must say so, and must not be silent.
      g.require(cells[i][4] == "skipped" || cells[i][4] == "partial",
                figure + " row " + cells[i][1] + " has status " + cells[i][4]);
      g.require(!cells[i][5].empty(),
                figure + " row " + cells[i][1] + " skipped without a note");
      continue;
    }
    row.crb = std::strtod(cells[i][2].c_str(), nullptr);
    row.guarantee = std::strtod(cells[i][3].c_str(), nullptr);
    g.require(row.guarantee + kDominanceSlack >= row.crb,
              figure + " value " + cells[i][1] + ": ceiling " +
                  fmt(row.guarantee) + " below worst case " + fmt(row.crb));
    rows.push_back(row);
  }
  return rows;
}

void require_strictly_decreasing(Gate& g, const std::vector<SweepRow>& rows,
                                 bool use_guarantee, const std::string& what) {
  for (size_t i = 1; i < rows.size(); ++i) {
    const double prev = use_guarantee ? rows[i - 1].guarantee : rows[i - 1].crb;
    const double cur = use_guarantee ? rows[i].guarantee : rows[i].crb;
    if (!(cur < prev)) {
      g.require(false, what + " does not fall from value " +
                           std::to_string(rows[i - 1].value) + " to " +
                           std::to_string(rows[i].value) + " (" + fmt(prev) +
                           " -> " + fmt(cur) +
                           "): the relaxed optimum oscillates with the "
                           "integer honest sample count, so this trend "
                           "cannot hold for the exact solution");
      return;
    }
  }
}

void require_nonincreasing(Gate& g, const std::vector<SweepRow>& rows,
                           bool use_guarantee, const std::string& what) {
  for (size_t i = 1; i < rows.size(); ++i) {
    const double prev = use_guarantee ? rows[i - 1].guarantee : rows[i - 1].crb;
    const double cur = use_guarantee ? rows[i].guarantee : rows[i].crb;
    if (!(cur <= prev * (1.0 + kTrendSlack))) {
      g.require(false, what + " rises from value " +
                           std::to_string(rows[i - 1].value) + " to " +
                           std::to_string(rows[i].value) + " (" + fmt(prev) +
                           " -> " + fmt(cur) +
                           "): the relaxed optimum oscillates with the "
                           "integer honest sample count, so this trend "
                           "cannot hold for the exact solution");
      return;
    }
  }
}

// 6. Chain-length sweep: worst case and certified ceiling both strictly
//    decreasing, ceiling dominates, finishes inside the budget.

void check_chain_sweep(Gate& g) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<SweepRow> rows = run_sweep(g, "fig2");
  g.require(rows.size() >= 2, "fewer than two sweep points completed");
  require_strictly_decreasing(g, rows, false, "worst_case_crb");
  require_strictly_decreasing(g, rows, true, "relaxation_guarantee");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  g.require(secs < kSweepBudget,
            "sweep took " + std::to_string(secs) + "s");
}

// 7. Honest-count sweeps: both quantities nonincreasing as honest devices
//    are added, ceiling dominates everywhere it is computed.

void check_honest_sweeps(Gate& g) {
  for (const char* figure : {"fig3", "fig4"}) {
    const std::vector<SweepRow> rows = run_sweep(g, figure);
    g.require(rows.size() >= 2,
              std::string(figure) + ": fewer than two points completed");
    require_nonincreasing(g, rows, false,
                          std::string(figure) + " worst_case_crb");
    require_nonincreasing(g, rows, true,
                          std::string(figure) + " relaxation_guarantee");
  }
}

// ---------------------------------------------------------------------
// 8. Race recursion identity (exact) and Monte Carlo agreement.

double race_recursive(double alpha, int a, int b) {
  if (a == 0) return b > 0 ? 1.0 : 0.0;
  if (b == 0) return 0.0;
  return alpha * race_recursive(alpha, a - 1, b) +
         (1.0 - alpha) * race_recursive(alpha, a, b - 1);
}

void check_race(Gate& g) {
  for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    for (int c = 1; c <= 12; ++c) {
      for (int h = 0; c + h <= 12; ++h) {
        RaceSpec spec;
        spec.adversary_share = alpha;
        spec.counterfeit_needed = c;
        spec.honest_needed = h;
        const double dp = race_probability_exact(spec);
        const double ref = race_recursive(alpha, c, h);
        if (dp != ref) {
          g.require(false, "dp(" + fmt(alpha) + "," + std::to_string(c) +
                               "," + std::to_string(h) + ") = " + fmt(dp) +
                               " != enumeration " + fmt(ref));
          return;
        }
      }
    }
  }
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> ua(0.1, 0.9);
  for (int it = 0; it < 20; ++it) {
    RaceSpec spec;
    spec.adversary_share = ua(rng);
    spec.counterfeit_needed = 1 + static_cast<int>(rng() % 5);
    spec.honest_needed = 1 + static_cast<int>(rng() % 4);
    const double exact = race_probability_exact(spec);
    const McEstimate mc =
        race_probability_mc(spec, 100000, 900 + static_cast<uint64_t>(it));
    if (std::fabs(mc.estimate - exact) >
        3.0 * mc.standard_error + 1e-9) {
      g.require(false, "mc spec " + std::to_string(it) + ": " +
                           fmt(mc.estimate) + " vs " + fmt(exact) +
                           " (se " + fmt(mc.standard_error) + ")");
      return;
    }
  }
}

// ---------------------------------------------------------------------
// 9. Estimator efficiency: the MSE/CRB ratio stays above the sampling
//    floor and walks toward one as chains accumulate.

void check_efficiency(Gate& g) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario s = testutil::make_scenario(1, 1, 6, 4, 0.3);
  const AlphabetPmf p = gaussian_quantizer_pmf(s.theta, 0.0, 1.0);
  AttackSpec a;
  a.fork_point = 2;
  a.dsa_prob = 0.3;
  a.xi = vec({0.8});
  a.attack_pmf = injection_attack_pmf(s.theta, a.xi, 0.5, 1.0);
  ModelFamily family;
  family.honest = [](double theta) {
    return gaussian_quantizer_pmf(theta, 0.0, 1.0);
  };
  family.attack = injection_attack_family(0.5, 1.0);
  family.xi_dim = 1;

  const int trials = 48;
  const int chain_counts[] = {10, 50, 200};
  double gaps[3] = {0, 0, 0};
  for (int k = 0; k < 3; ++k) {
    const MseReport rep =
        mse_experiment(s, a, p, family, trials, chain_counts[k], 4242);
    const double ratio = rep.ratio;
    // Delta method with a Gaussian fourth moment: sd(mse)/mse ~ sqrt(2/T).
    const double se = ratio * std::sqrt(2.0 / trials);
    g.require(ratio >= 1.0 - 3.0 * se,
              std::to_string(chain_counts[k]) + " chains: ratio " +
                  fmt(ratio) + " below 1 - 3se (se " + fmt(se) + ")");
    gaps[k] = std::fabs(ratio - 1.0);
  }
  g.require(gaps[1] < gaps[0] && gaps[2] < gaps[1],
            "|ratio - 1| was " + fmt(gaps[0]) + ", " + fmt(gaps[1]) + ", " +
                fmt(gaps[2]) + ": not walking toward one");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  g.require(secs < kMseBudget, "took " + std::to_string(secs) + "s");
}

}  // namespace

int main() {
  struct Entry {
    int id;
    const char* name;
    std::function<void(Gate&)> fn;
  };
  const Entry entries[] = {
      {1, "randomized attacks stay at or below the no-attack ceiling",
       check_floor},
      {2, "honest information factorizes over devices and blocks",
       check_factorization},
      {3, "information blocks match the finite-difference Hessian oracle",
       check_hessian},
      {4, "allocation solver matches the breakpoint oracle with clean "
          "certificates",
       check_waterfill},
      {5, "race preset reproduces the pinned digit strings",
       check_race_digits},
      {6, "chain-length sweep trends, dominance, and budget",
       check_chain_sweep},
      {7, "honest-count sweep trends and dominance", check_honest_sweeps},
      {8, "race dynamic program equals enumeration; Monte Carlo agrees",
       check_race},
      {9, "estimator efficiency approaches the analytic floor",
       check_efficiency},
  };

  int failures = 0;
  for (const Entry& e : entries) {
    Gate g;
    const auto start = std::chrono::steady_clock::now();
    try {
      e.fn(g);
    } catch (const Error& ex) {
      g.require(false, std::string("unexpected error: ") + ex.what());
    } catch (const std::exception& ex) {
      g.require(false, std::string("unexpected exception: ") + ex.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::ostringstream line;
    line << "[" << e.id << "] " << e.name << " ... "
         << (g.ok ? "PASS" : "FAIL");
    line.setf(std::ios::fixed);
    line.precision(1);
    line << " (" << secs << "s)";
    if (!g.ok) line << " -- " << g.note;
    std::cout << line.str() << std::endl;
    if (!g.ok) ++failures;
  }
  std::cout << (9 - failures) << "/9 acceptance checks passed" << std::endl;
  return failures;
}
