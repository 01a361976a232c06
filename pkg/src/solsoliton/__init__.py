"""Solvsolitons on solvable Lie algebras: brackets, curvature, soliton tests and strata."""
from .algebra import (
    Bracket,
    Splitting,
    act,
    derivations,
    inner_V,
    inner_g,
    jacobi_residual,
    nilradical,
    pi,
)
from .curvature import ricci_blockwise, ricci_operator
from .soliton import (
    ConstructionInput,
    Verdict,
    construct_solsoliton,
    nilsoliton_data,
    soliton_decompose,
    theorem_main_check,
)
from .strata import StratumLabel, beta_mu, descend_to_critical, moment_map, strata_checks

__version__ = "0.1.0"

__all__ = [
    "Bracket", "Splitting", "act", "derivations", "inner_V", "inner_g", "jacobi_residual",
    "nilradical", "pi", "ricci_blockwise", "ricci_operator", "ConstructionInput", "Verdict",
    "construct_solsoliton", "nilsoliton_data", "soliton_decompose", "theorem_main_check",
    "StratumLabel", "beta_mu", "descend_to_critical", "moment_map", "strata_checks",
]
