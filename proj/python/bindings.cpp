#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "biotcrb/attackopt.hpp"
#include "biotcrb/cli.hpp"
#include "biotcrb/dsa.hpp"
#include "biotcrb/error.hpp"
#include "biotcrb/fisher.hpp"
#include "biotcrb/relax.hpp"
#include "biotcrb/simharness.hpp"

namespace py = pybind11;
using namespace biotcrb;

PYBIND11_MODULE(_core, m) {
  m.doc() =
      "estimation bounds for blockchain-backed sensor networks under "
      "device hijack and fork attacks";

  py::register_exception<Error>(m, "BiotcrbError");

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("n_devices", &Scenario::n_devices)
      .def_readwrite("honest", &Scenario::honest)
      .def_readwrite("malicious", &Scenario::malicious)
      .def_readwrite("chain_length", &Scenario::chain_length)
      .def_readwrite("authentic_length", &Scenario::authentic_length)
      .def_readwrite("alphabet_size", &Scenario::alphabet_size)
      .def_readwrite("theta", &Scenario::theta);

  py::class_<AlphabetPmf>(m, "AlphabetPmf")
      .def(py::init<>())
      .def_readwrite("probs", &AlphabetPmf::probs)
      .def_readwrite("dtheta", &AlphabetPmf::dtheta)
      .def_readwrite("dxi", &AlphabetPmf::dxi)
      .def("validate", &AlphabetPmf::validate)
      .def_static("tabulated", &AlphabetPmf::tabulated, py::arg("probs"),
                  py::arg("dtheta") = py::none(),
                  py::arg("dxi") = py::none());

  py::class_<AttackSpec>(m, "AttackSpec")
      .def(py::init<>())
      .def_readwrite("fork_point", &AttackSpec::fork_point)
      .def_readwrite("xi", &AttackSpec::xi)
      .def_readwrite("dsa_prob", &AttackSpec::dsa_prob)
      .def_readwrite("attack_pmf", &AttackSpec::attack_pmf);

  m.def("gaussian_quantizer_pmf", &gaussian_quantizer_pmf, py::arg("theta"),
        py::arg("threshold"), py::arg("noise_std"));
  m.def("injection_attack_pmf", &injection_attack_pmf, py::arg("theta"),
        py::arg("xi"), py::arg("threshold"), py::arg("noise_std"));

  py::class_<FimBlocks>(m, "FimBlocks")
      .def_readonly("j_c0", &FimBlocks::j_c0)
      .def_readonly("j_ca", &FimBlocks::j_ca)
      .def_readonly("f_a", &FimBlocks::f_a)
      .def_readonly("j_xi", &FimBlocks::j_xi)
      .def_readonly("outcome_count", &FimBlocks::outcome_count)
      .def_property_readonly("j_theta", &FimBlocks::j_theta)
      .def_property_readonly("xi_dim", &FimBlocks::xi_dim);

  m.def(
      "fim_blocks",
      [](const Scenario& s, const AttackSpec& a, const AlphabetPmf& p,
         uint64_t cap, uint64_t psi_limit) {
        FimOptions opt;
        opt.cap = cap;
        opt.psi_limit = psi_limit;
        return fim_blocks(s, a, p, opt);
      },
      py::arg("scenario"), py::arg("attack"), py::arg("pmf"),
      py::arg("cap") = kDefaultOutcomeCap,
      py::arg("psi_limit") = kDefaultPsiLimit);

  m.def("honest_information", &honest_information, py::arg("scenario"),
        py::arg("pmf"), py::arg("cap") = kDefaultOutcomeCap);

  py::class_<CrbReport>(m, "CrbReport")
      .def_readonly("crb_theta", &CrbReport::crb_theta)
      .def_readonly("bound", &CrbReport::bound)
      .def_readonly("schur_gap", &CrbReport::schur_gap)
      .def_readonly("alignment_residual", &CrbReport::alignment_residual);

  m.def(
      "crb_report",
      [](const FimBlocks& b) { return crb_theta(b); }, py::arg("blocks"));
  m.def(
      "schur_gap", [](const FimBlocks& b) { return schur_gap(b); },
      py::arg("blocks"));

  m.def(
      "race_probability_exact",
      [](double adversary_share, int counterfeit_needed, int honest_needed) {
        RaceSpec spec;
        spec.adversary_share = adversary_share;
        spec.counterfeit_needed = counterfeit_needed;
        spec.honest_needed = honest_needed;
        return race_probability_exact(spec);
      },
      py::arg("adversary_share"), py::arg("counterfeit_needed"),
      py::arg("honest_needed"));
  m.def("success_profile", &success_profile, py::arg("scenario"),
        py::arg("adversary_share"));

  py::class_<SensitivityTable>(m, "SensitivityTable")
      .def_readonly("x", &SensitivityTable::x)
      .def_readonly("w", &SensitivityTable::w)
      .def_readonly("omega", &SensitivityTable::omega)
      .def_readonly("multiplicity", &SensitivityTable::multiplicity)
      .def_readonly("dropped_zero_weight",
                    &SensitivityTable::dropped_zero_weight)
      .def_property_readonly("size", &SensitivityTable::size)
      .def("total_weight", &SensitivityTable::total_weight)
      .def("sum_x", &SensitivityTable::sum_x)
      .def_static("explicit_table", &SensitivityTable::explicit_table,
                  py::arg("x"), py::arg("w"));

  m.def("sensitivity_weights", &sensitivity_weights, py::arg("scenario"),
        py::arg("pmf"), py::arg("cap") = kDefaultOutcomeCap);
  m.def("sensitivity_weights_counts", &sensitivity_weights_counts,
        py::arg("scenario"), py::arg("pmf"),
        py::arg("cap") = kDefaultOutcomeCap);

  py::class_<WaterfillSolution>(m, "WaterfillSolution")
      .def_readonly("lambda_star", &WaterfillSolution::lambda_star)
      .def_readonly("objective", &WaterfillSolution::objective)
      .def_readonly("guarantee", &WaterfillSolution::guarantee)
      .def_readonly("y", &WaterfillSolution::y)
      .def_readonly("kkt_mu", &WaterfillSolution::kkt_mu)
      .def_readonly("kkt_nu", &WaterfillSolution::kkt_nu);

  m.def("waterfill", &waterfill, py::arg("table"));
  m.def("guarantee_bound", &guarantee_bound, py::arg("scenario"),
        py::arg("pmf"), py::arg("dsa_profile") = std::vector<double>{},
        py::arg("cap") = kDefaultOutcomeCap);

  py::class_<AttackOptResult>(m, "AttackOptResult")
      .def_readonly("best_crb", &AttackOptResult::best_crb)
      .def_readonly("best_xi", &AttackOptResult::best_xi)
      .def_readonly("best_fork", &AttackOptResult::best_fork)
      .def_readonly("baseline_bound", &AttackOptResult::baseline_bound)
      .def_readonly("no_op_attack", &AttackOptResult::no_op_attack);

  m.def(
      "maximize_crb_injection",
      [](const Scenario& s, const AlphabetPmf& p, double attack_threshold,
         double attack_noise_std, const std::vector<double>& dsa_profile,
         uint64_t seed, int n_starts, int threads, uint64_t cap) {
        OptOptions opt;
        opt.seed = seed;
        opt.n_starts = n_starts;
        opt.threads = threads;
        opt.cap = cap;
        return maximize_crb(
            s, p, injection_attack_family(attack_threshold, attack_noise_std),
            dsa_profile, opt);
      },
      py::arg("scenario"), py::arg("pmf"), py::arg("attack_threshold"),
      py::arg("attack_noise_std"), py::arg("dsa_profile"),
      py::arg("seed") = 0, py::arg("n_starts") = 16, py::arg("threads") = 1,
      py::arg("cap") = kDefaultOutcomeCap);

  py::class_<ChainData>(m, "ChainData")
      .def_readonly("n_devices", &ChainData::n_devices)
      .def_readonly("chain_length", &ChainData::chain_length)
      .def_readonly("symbols", &ChainData::symbols)
      .def_readonly("dsa_succeeded", &ChainData::dsa_succeeded)
      .def_readonly("seed", &ChainData::seed);

  m.def("generate_chain", &generate_chain, py::arg("scenario"),
        py::arg("attack"), py::arg("pmf"), py::arg("seed"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "run a CLI invocation in-process; returns (exit_code, stdout, stderr)");
}
