"""Tracy-Widom limit laws, their finite-n expansions for GUE and GOE, and the
exact finite-n determinants and Monte Carlo samplers used to check them."""

from .edgeworth import (
    ExpansionValue,
    goe_expansion_sqrt,
    goe_sq_expansion,
    goe_sq_expansion_alt,
    gue_expansion,
)
from .finite_n import f_n1_sq_exact, f_n2_exact, goe_n2_oracle, solve_systems, tau, tau_inverse
from .fredholm import f2_det, resolvent_bundle_airy
from .limits import LimitTables, build_tables, e_c1, e_c2, eta, limit_point, painleve_hm_check
from .mc import EnsembleParams, rate_fit, sample_max, sup_distance

__all__ = [
    "EnsembleParams",
    "ExpansionValue",
    "LimitTables",
    "build_tables",
    "e_c1",
    "e_c2",
    "eta",
    "f2_det",
    "f_n1_sq_exact",
    "f_n2_exact",
    "goe_expansion_sqrt",
    "goe_n2_oracle",
    "goe_sq_expansion",
    "goe_sq_expansion_alt",
    "gue_expansion",
    "limit_point",
    "painleve_hm_check",
    "rate_fit",
    "resolvent_bundle_airy",
    "sample_max",
    "solve_systems",
    "sup_distance",
    "tau",
    "tau_inverse",
]
