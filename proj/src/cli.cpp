#include "biotcrb/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <future>
#include <sstream>

#include "biotcrb/attackopt.hpp"
#include "biotcrb/config.hpp"
#include "biotcrb/csv.hpp"
#include "biotcrb/dsa.hpp"
#include "biotcrb/error.hpp"
#include "biotcrb/fisher.hpp"
#include "biotcrb/manifest.hpp"
#include "biotcrb/relax.hpp"
#include "biotcrb/simharness.hpp"

#ifndef BIOTCRB_FIXTURE_DIR
#define BIOTCRB_FIXTURE_DIR "fixtures"
#endif

namespace biotcrb {

namespace {

struct GlobalFlags {
  std::string config_path;
  std::string out_path;
  bool seed_set = false;
  int64_t seed = 0;
  bool cap_set = false;
  int64_t cap = 0;
  bool threads_set = false;
  int64_t threads = 0;
};

void add_common(CLI::App* sub, GlobalFlags& g, bool config_required) {
  auto* c = sub->add_option("--config", g.config_path,
                            "key = value configuration file");
  if (config_required) c->required();
  sub->add_option("--out", g.out_path,
                  "write CSV here (plus a .manifest sidecar) instead of "
                  "stdout");
  sub->add_option("--seed", g.seed, "override the config seed")
      ->each([&g](const std::string&) { g.seed_set = true; });
  sub->add_option("--cap", g.cap, "override the outcome-space cap")
      ->each([&g](const std::string&) { g.cap_set = true; });
  sub->add_option("--threads", g.threads, "override the worker count")
      ->each([&g](const std::string&) { g.threads_set = true; });
}

Config effective_config(const GlobalFlags& g) {
  Config cfg = Config::parse_file(g.config_path);
  if (g.seed_set) cfg.set("seed", std::to_string(g.seed));
  if (g.cap_set) cfg.set("cap", std::to_string(g.cap));
  if (g.threads_set) cfg.set("threads", std::to_string(g.threads));
  return cfg;
}

void apply_overrides(Config& cfg, const GlobalFlags& g) {
  if (g.seed_set) cfg.set("seed", std::to_string(g.seed));
  if (g.cap_set) cfg.set("cap", std::to_string(g.cap));
  if (g.threads_set) cfg.set("threads", std::to_string(g.threads));
}

void emit(const std::string& command, const Config& cfg,
          const std::string& csv, const GlobalFlags& g, std::ostream& out) {
  if (g.out_path.empty()) {
    out << csv;
    return;
  }
  {
    std::ofstream f(g.out_path, std::ios::binary);
    if (!f) {
      raise(ErrorCode::ConfigError, "cannot write " + g.out_path);
    }
    f << csv;
  }
  const RunManifest manifest = make_manifest(command, cfg);
  std::ofstream f(manifest_path_for(g.out_path), std::ios::binary);
  if (!f) {
    raise(ErrorCode::ConfigError,
          "cannot write " + manifest_path_for(g.out_path));
  }
  f << manifest.render();
}

std::string join_vector(const Eigen::VectorXd& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ' ';
    s += format_double(v[i]);
  }
  return s;
}

void require_attack_model(const ResolvedRun& run) {
  if (!run.scenario.malicious.empty() && !run.attack_present) {
    raise(ErrorCode::ConfigError,
          "scenario has malicious devices but attack_family = none");
  }
}

// ---- crb ----------------------------------------------------------------

std::string cmd_crb(const Config& cfg) {
  const ResolvedRun run = resolve_run(cfg);
  require_attack_model(run);
  if (!run.scenario.malicious.empty() && !cfg.has("fork_point")) {
    raise(ErrorCode::ConfigError,
          "crb evaluates one attack: set fork_point explicitly");
  }
  FimOptions fopt;
  fopt.cap = run.cap;
  const FimBlocks blocks =
      fim_blocks(run.scenario, run.attack, run.honest_pmf, fopt);
  const CrbReport report = crb_theta(blocks);
  CsvWriter csv({"crb_theta", "bound", "schur_gap", "alignment_residual"});
  csv.add_row({CsvWriter::cell(report.crb_theta),
               CsvWriter::cell(report.bound),
               CsvWriter::cell(report.schur_gap),
               report.alignment_residual
                   ? CsvWriter::cell(*report.alignment_residual)
                   : std::string()});
  return csv.str();
}

// ---- bound --------------------------------------------------------------

std::string cmd_bound(const Config& cfg) {
  const ResolvedRun run = resolve_run(cfg);
  const SensitivityTable table =
      sensitivity_weights_counts(run.scenario, run.honest_pmf, run.cap);
  const WaterfillSolution sol = waterfill(table);
  CsvWriter csv({"guarantee", "objective", "lambda_star", "entries",
                 "total_weight", "dropped_zero_weight"});
  csv.add_row({CsvWriter::cell(sol.guarantee),
               CsvWriter::cell(sol.objective),
               CsvWriter::cell(sol.lambda_star),
               CsvWriter::cell(static_cast<uint64_t>(table.size())),
               CsvWriter::cell(table.total_weight()),
               CsvWriter::cell(table.dropped_zero_weight)});
  return csv.str();
}

// ---- waterfill ----------------------------------------------------------

const char* region_name(Region r) {
  switch (r) {
    case Region::S1Zero:
      return "zero";
    case Region::S2One:
      return "one";
    case Region::S3Fractional:
      return "fractional";
  }
  return "?";
}

std::string cmd_waterfill(const Config& cfg) {
  SensitivityTable table;
  if (cfg.has("waterfill_x") || cfg.has("waterfill_w")) {
    cfg.reject_unknown_keys();
    table = SensitivityTable::explicit_table(cfg.get_doubles("waterfill_x"),
                                             cfg.get_doubles("waterfill_w"));
  } else {
    const ResolvedRun run = resolve_run(cfg);
    table = sensitivity_weights_counts(run.scenario, run.honest_pmf, run.cap);
  }
  const WaterfillSolution sol = waterfill(table);
  CsvWriter csv({"index", "x", "w", "multiplicity", "omega", "y", "region",
                 "kkt_mu", "kkt_nu", "lambda_star", "objective",
                 "guarantee"});
  for (size_t i = 0; i < table.size(); ++i) {
    csv.add_row({CsvWriter::cell(static_cast<uint64_t>(i)),
                 CsvWriter::cell(table.x[i]), CsvWriter::cell(table.w[i]),
                 CsvWriter::cell(table.multiplicity[i]),
                 CsvWriter::cell(table.omega[i]), CsvWriter::cell(sol.y[i]),
                 region_name(sol.region[i]), CsvWriter::cell(sol.kkt_mu[i]),
                 CsvWriter::cell(sol.kkt_nu[i]),
                 CsvWriter::cell(sol.lambda_star),
                 CsvWriter::cell(sol.objective),
                 CsvWriter::cell(sol.guarantee)});
  }
  return csv.str();
}

// ---- dsa ----------------------------------------------------------------

std::string cmd_dsa(const Config& cfg) {
  cfg.reject_unknown_keys();
  const int chain_length = static_cast<int>(cfg.get_int("chain_length"));
  const int authentic_length =
      static_cast<int>(cfg.get_int("authentic_length"));
  const double alpha = cfg.get_double("adversary_share");
  if (authentic_length < 1 || chain_length < authentic_length) {
    raise(ErrorCode::InvalidParameter,
          "need 1 <= authentic_length <= chain_length");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    raise(ErrorCode::InvalidParameter,
          "adversary share must lie in [0, 1]");
  }
  const int64_t trials = cfg.get_int("trials", 0);
  const uint64_t seed = static_cast<uint64_t>(cfg.get_int("seed", 0));

  CsvWriter csv({"fork_point", "counterfeit_needed", "honest_needed",
                 "p_exact", "p_mc", "mc_stderr"});
  for (int la = 1; la <= authentic_length; ++la) {
    RaceSpec spec;
    spec.adversary_share = alpha;
    spec.counterfeit_needed = chain_length - la + 1;
    spec.honest_needed = chain_length - authentic_length;
    const double exact = race_probability_exact(spec);
    std::string mc_cell, se_cell;
    if (trials > 0) {
      const McEstimate mc = race_probability_mc(
          spec, static_cast<uint64_t>(trials),
          seed + static_cast<uint64_t>(la));
      mc_cell = format_double(mc.estimate);
      se_cell = format_double(mc.standard_error);
    }
    csv.add_row({CsvWriter::cell(la), CsvWriter::cell(spec.counterfeit_needed),
                 CsvWriter::cell(spec.honest_needed), CsvWriter::cell(exact),
                 mc_cell, se_cell});
  }
  return csv.str();
}

// ---- maximize -----------------------------------------------------------

std::string cmd_maximize(const Config& cfg) {
  const ResolvedRun run = resolve_run(cfg);
  require_attack_model(run);
  CsvWriter csv({"fork_point", "crb_theta", "xi", "is_best",
                 "baseline_bound"});
  if (run.scenario.malicious.empty()) {
    const double baseline =
        1.0 / honest_information(run.scenario, run.honest_pmf, run.cap);
    csv.add_row({CsvWriter::cell(0), CsvWriter::cell(baseline),
                 std::string(), CsvWriter::cell(1),
                 CsvWriter::cell(baseline)});
    return csv.str();
  }
  if (!run.attack_family) {
    raise(ErrorCode::ConfigError,
          "maximize needs a parametric attack_family (injection)");
  }
  if (run.dsa_profile.empty()) {
    raise(ErrorCode::ConfigError,
          "maximize needs dsa_profile or adversary_share");
  }
  OptOptions opt;
  opt.seed = run.seed;
  opt.threads = run.threads;
  opt.cap = run.cap;
  if (run.attack.xi.size() > 0) opt.user_starts.push_back(run.attack.xi);
  const AttackOptResult res =
      maximize_crb(run.scenario, run.honest_pmf, *run.attack_family,
                   run.dsa_profile, opt);
  for (const ForkResult& fr : res.per_fork) {
    if (fr.failed) continue;
    csv.add_row({CsvWriter::cell(fr.fork_point), CsvWriter::cell(fr.crb),
                 join_vector(fr.xi),
                 CsvWriter::cell(fr.fork_point == res.best_fork ? 1 : 0),
                 CsvWriter::cell(res.baseline_bound)});
  }
  return csv.str();
}

// ---- simulate -----------------------------------------------------------

std::string cmd_simulate(const Config& cfg) {
  const ResolvedRun run = resolve_run(cfg);
  require_attack_model(run);
  if (!run.honest_theta_family) {
    raise(ErrorCode::ConfigError,
          "simulate estimates theta: pmf_model must be gaussian");
  }
  ModelFamily family;
  family.honest = run.honest_theta_family;
  family.xi_dim = static_cast<int>(run.attack.xi.size());
  if (!run.scenario.malicious.empty()) {
    if (!run.attack_family) {
      raise(ErrorCode::ConfigError,
            "simulate estimates xi: attack_family must be injection");
    }
    family.attack = *run.attack_family;
  }
  const int trials = static_cast<int>(cfg.get_int("trials", 20));
  const int chains =
      static_cast<int>(cfg.get_int("chains_per_estimate", 10));
  const MseReport rep =
      mse_experiment(run.scenario, run.attack, run.honest_pmf, family,
                     trials, chains, run.seed);
  CsvWriter csv({"trials", "chains_per_estimate", "theta_mse", "xi_mse",
                 "crb_theta", "ratio"});
  csv.add_row({CsvWriter::cell(rep.trials),
               CsvWriter::cell(rep.chains_per_estimate),
               CsvWriter::cell(rep.theta_mse), CsvWriter::cell(rep.xi_mse),
               CsvWriter::cell(rep.crb_theta), CsvWriter::cell(rep.ratio)});
  return csv.str();
}

// ---- reproduce ----------------------------------------------------------

struct SweepPoint {
  std::string var;
  int value = 0;
  Config cfg;
};

std::string int_list(int lo, int hi) {
  std::string s;
  for (int i = lo; i <= hi; ++i) {
    if (!s.empty()) s += ' ';
    s += std::to_string(i);
  }
  return s;
}

std::vector<SweepPoint> plan_sweep(const std::string& figure,
                                   const Config& base) {
  std::vector<SweepPoint> points;
  if (figure == "fig2") {
    for (int len : base.get_ints("sweep_chain_lengths")) {
      SweepPoint pt{"chain_length", len, base};
      pt.cfg.set("chain_length", std::to_string(len));
      pt.cfg.set("dsa_profile",
                 base.get_string("dsa_profile_l" + std::to_string(len)));
      points.push_back(std::move(pt));
    }
  } else if (figure == "fig3") {
    for (int k : base.get_ints("sweep_honest_counts")) {
      SweepPoint pt{"honest_count", k, base};
      pt.cfg.set("n_devices", std::to_string(k + 1));
      pt.cfg.set("honest", int_list(1, k));
      pt.cfg.set("malicious", std::to_string(k + 1));
      points.push_back(std::move(pt));
    }
  } else if (figure == "fig4") {
    const int n = static_cast<int>(base.get_int("n_devices"));
    for (int k : base.get_ints("sweep_honest_counts")) {
      if (k >= n) {
        raise(ErrorCode::ConfigError,
              "sweep_honest_counts must leave at least one malicious "
              "device");
      }
      SweepPoint pt{"honest_count", k, base};
      pt.cfg.set("honest", int_list(1, k));
      pt.cfg.set("malicious", int_list(k + 1, n));
      points.push_back(std::move(pt));
    }
  } else {
    raise(ErrorCode::ConfigError,
          "unknown figure '" + figure + "' (expected fig2, fig3, or fig4)");
  }
  return points;
}

struct PointOutcome {
  std::string crb_cell;
  std::string guarantee_cell;
  std::string note;
};

PointOutcome run_point(const SweepPoint& pt) {
  PointOutcome out;
  const ResolvedRun run = resolve_run(pt.cfg);
  if (!run.attack_family || run.dsa_profile.empty()) {
    raise(ErrorCode::ConfigError,
          "sweep fixtures need an injection attack and a race profile");
  }
  try {
    OptOptions opt;
    opt.seed = run.seed;
    opt.cap = run.cap;
    if (run.attack.xi.size() > 0) opt.user_starts.push_back(run.attack.xi);
    const AttackOptResult res =
        maximize_crb(run.scenario, run.honest_pmf, *run.attack_family,
                     run.dsa_profile, opt);
    out.crb_cell = format_double(res.best_crb);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutcomeSpaceTooLarge) throw;
    out.note = std::string("worst-case search skipped: ") + e.what();
  }
  try {
    const double g = guarantee_bound(run.scenario, run.honest_pmf,
                                     run.dsa_profile, run.cap);
    out.guarantee_cell = format_double(g);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::OutcomeSpaceTooLarge) throw;
    if (!out.note.empty()) out.note += "; ";
    out.note += std::string("guarantee skipped: ") + e.what();
  }
  return out;
}

std::string cmd_reproduce(const std::string& figure, const Config& base,
                          int threads) {
  const std::vector<SweepPoint> points = plan_sweep(figure, base);
  std::vector<PointOutcome> results(points.size());
  if (threads > 1 && points.size() > 1) {
    std::vector<std::future<PointOutcome>> futs;
    futs.reserve(points.size());
    for (const SweepPoint& pt : points) {
      futs.push_back(std::async(std::launch::async,
                                [&pt] { return run_point(pt); }));
    }
    for (size_t i = 0; i < futs.size(); ++i) results[i] = futs[i].get();
  } else {
    for (size_t i = 0; i < points.size(); ++i) {
      results[i] = run_point(points[i]);
    }
  }
  CsvWriter csv({"sweep_var", "sweep_value", "worst_case_crb",
                 "relaxation_guarantee", "status", "note"});
  for (size_t i = 0; i < points.size(); ++i) {
    const PointOutcome& r = results[i];
    std::string status = "ok";
    if (r.crb_cell.empty() && r.guarantee_cell.empty()) {
      status = "skipped";
    } else if (r.crb_cell.empty() || r.guarantee_cell.empty()) {
      status = "partial";
    }
    csv.add_row({points[i].var, CsvWriter::cell(points[i].value), r.crb_cell,
                 r.guarantee_cell, status, r.note});
  }
  return csv.str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"estimation bounds for blockchain-backed sensor networks "
               "under device hijack and fork attacks"};
  app.require_subcommand(1);

  GlobalFlags flags;
  auto* crb = app.add_subcommand(
      "crb", "exact CRB, no-attack floor, and information gap");
  add_common(crb, flags, true);
  auto* maximize = app.add_subcommand(
      "maximize", "worst-case attack search over fork point and xi");
  add_common(maximize, flags, true);
  auto* bound = app.add_subcommand(
      "bound", "relaxation guarantee (certified ceiling on any attack)");
  add_common(bound, flags, true);
  auto* waterfill_cmd = app.add_subcommand(
      "waterfill", "solve the relaxed allocation and print the table");
  add_common(waterfill_cmd, flags, true);
  auto* dsa = app.add_subcommand(
      "dsa", "fork race success probabilities per fork point");
  add_common(dsa, flags, true);
  auto* simulate = app.add_subcommand(
      "simulate", "Monte Carlo MSE of the joint MLE against the CRB");
  add_common(simulate, flags, true);

  auto* reproduce = app.add_subcommand(
      "reproduce", "run a bundled experiment sweep (fig2, fig3, fig4)");
  std::string figure;
  std::string fixtures_dir = BIOTCRB_FIXTURE_DIR;
  reproduce->add_option("figure", figure, "fig2 | fig3 | fig4")->required();
  reproduce->add_option("--fixtures", fixtures_dir,
                        "directory holding the bundled sweep configs");
  add_common(reproduce, flags, false);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("biotcrb");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (reproduce->parsed()) {
      Config base = flags.config_path.empty()
                        ? Config::parse_file(fixtures_dir + "/" + figure +
                                             ".cfg")
                        : Config::parse_file(flags.config_path);
      apply_overrides(base, flags);
      const int threads =
          static_cast<int>(base.get_int("threads", 1));
      emit("reproduce " + figure, base, cmd_reproduce(figure, base, threads),
           flags, out);
      return 0;
    }
    const Config cfg = effective_config(flags);
    std::string csv;
    std::string command;
    if (crb->parsed()) {
      command = "crb";
      csv = cmd_crb(cfg);
    } else if (maximize->parsed()) {
      command = "maximize";
      csv = cmd_maximize(cfg);
    } else if (bound->parsed()) {
      command = "bound";
      csv = cmd_bound(cfg);
    } else if (waterfill_cmd->parsed()) {
      command = "waterfill";
      csv = cmd_waterfill(cfg);
    } else if (dsa->parsed()) {
      command = "dsa";
      csv = cmd_dsa(cfg);
    } else if (simulate->parsed()) {
      command = "simulate";
      csv = cmd_simulate(cfg);
    }
    emit(command, cfg, csv, flags, out);
    return 0;
  } catch (const Error& e) {
    err << "error (" << error_code_name(e.code()) << "): " << e.what()
        << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace biotcrb
