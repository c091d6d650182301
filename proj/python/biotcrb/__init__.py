"""Estimation bounds for blockchain-backed sensor networks under device
hijack and fork attacks.

Thin re-export of the compiled core; see the package README for the model
and the CLI equivalents of these calls.
"""

from ._core import (
    AlphabetPmf,
    AttackOptResult,
    AttackSpec,
    BiotcrbError,
    ChainData,
    CrbReport,
    FimBlocks,
    Scenario,
    SensitivityTable,
    WaterfillSolution,
    crb_report,
    fim_blocks,
    gaussian_quantizer_pmf,
    generate_chain,
    guarantee_bound,
    honest_information,
    injection_attack_pmf,
    maximize_crb_injection,
    race_probability_exact,
    run_cli,
    schur_gap,
    sensitivity_weights,
    sensitivity_weights_counts,
    success_profile,
    waterfill,
)

__version__ = "0.1.0"

__all__ = [
    "AlphabetPmf",
    "AttackOptResult",
    "AttackSpec",
    "BiotcrbError",
    "ChainData",
    "CrbReport",
    "FimBlocks",
    "Scenario",
    "SensitivityTable",
    "WaterfillSolution",
    "crb_report",
    "fim_blocks",
    "gaussian_quantizer_pmf",
    "generate_chain",
    "guarantee_bound",
    "honest_information",
    "injection_attack_pmf",
    "maximize_crb_injection",
    "race_probability_exact",
    "run_cli",
    "schur_gap",
    "sensitivity_weights",
    "sensitivity_weights_counts",
    "success_profile",
    "waterfill",
]
