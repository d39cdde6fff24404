"""Invariant and cross-oracle checks with measured values.

``quick_checks`` holds the fast algebraic and boundary checks; ``full_checks``
adds the oracle comparisons, convergence-rate fits and Monte Carlo runs.
Each check returns :class:`Check` records rather than raising, so a report
shows every measurement even when some fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import edgeworth, finite_n, limits, mc
from .fredholm import resolvent_bundle_airy
from .specfun import airy, c_phi, c_phi_integral

RATE_NS = (20, 40, 80, 160)
RATE_S = -1.0


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    bound: str
    passed: bool
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


def _at_most(name: str, value: float, tol: float) -> Check:
    return Check(name, float(value), f"<= {tol:g}", bool(value <= tol))


def _within(name: str, value: float, lo: float, hi: float) -> Check:
    return Check(name, float(value), f"in [{lo:g}, {hi:g}]", bool(lo <= value <= hi))


# ---------------------------------------------------------------------------
# quick


def check_nu_identity() -> list[Check]:
    worst = max(abs(pt.nu - (pt.alpha - pt.q)) for pt in (limits.limit_point(s) for s in (-4.0, -2.0, 0.0, 2.0)))
    return [_at_most("nu = alpha - q", worst, 1e-8)]


def _p_prime(s: float, h: float = 1e-3) -> float:
    p = [resolvent_bundle_airy(s + k * h).p[0] for k in (-2, -1, 1, 2)]
    return (p[0] - 8 * p[1] + 8 * p[2] - p[3]) / (12 * h)


def check_substitutions() -> list[Check]:
    r1 = r2 = r3 = 0.0
    for s in (-4.0, -2.0, 0.0, 2.0):
        b = resolvent_bundle_airy(s)
        q, p, u, v, q1 = b.q[0], b.p[0], b.u[0], b.v[0], b.q[1]
        r1 = max(r1, abs(q1 - (s * q - q * v + p * u)))
        r2 = max(r2, abs(q1 - (_p_prime(s) + q * v)))
        r3 = max(r3, abs(q * q - (u * u - 2 * v)))
    return [
        _at_most("q1 = s q - q v + p u", r1, 1e-6),
        _at_most("q1 = p' + q v", r2, 1e-6),
        _at_most("q^2 = u^2 - 2 v", r3, 1e-6),
    ]


def check_e_c2_shift() -> list[Check]:
    worst = 0.0
    for s in (-3.0, -1.0, 1.0):
        b = resolvent_bundle_airy(s)
        base = limits.e_c2_bundle(b, 0.0)
        for c in (-1.0, 0.5, 1.0, 2.0):
            worst = max(worst, abs(limits.e_c2_bundle(b, c) - base + 20 * c * c * b.v[0]))
    return [_at_most("E_c2(c) - E_c2(0) = -20 c^2 v0", worst, 1e-12)]


def check_matrix_exponential(count: int = 100, seed: int = 2024) -> list[Check]:
    rng = np.random.default_rng(seed)
    series = generic = 0.0
    for a, b in rng.uniform(0.0, 3.0, size=(count, 2)):
        for var in finite_n.Variant:
            closed = finite_n.expm_closed(a, b, var)
            series = max(series, float(np.max(np.abs(closed - finite_n.expm_series(a, b, var)))))
            ref = finite_n.expm_generic(finite_n.generator(a, b, var))
            generic = max(generic, float(np.max(np.abs(closed - ref))))
    return [
        _at_most("exp(M) closed vs 30-term series", series, 1e-12),
        _at_most("exp(M) closed vs scaling and squaring", generic, 1e-12),
    ]


def check_boundaries() -> list[Check]:
    b = resolvent_bundle_airy(6.0)
    return [
        _at_most("|F2(6) - 1|", abs(b.F2 - 1.0), 1e-8),
        _at_most("|q(6) - Ai(6)|", abs(b.q[0] - airy(6.0).ai), 1e-12),
        _at_most("|tau(2, 0, 0) - 2|", abs(finite_n.tau(2, 0.0, 0.0) - 2.0), 1e-15),
        _at_most("c_phi closed form vs quadrature (n = 20)", abs(c_phi(20) - c_phi_integral(20)), 1e-12),
        _at_most(
            "n = 2 GOE pipeline vs double integral at t = 1",
            abs(finite_n.f_n1_sq_exact(2, 0.0, float(finite_n.tau_inverse(2, 0.0, 1.0))) - finite_n.goe_n2_oracle(1.0)),
            1e-6,
        ),
    ]


# ---------------------------------------------------------------------------
# full


def check_painleve() -> list[Check]:
    pc = limits.painleve_hm_check(-8.0, 6.0)
    pts = (-4.0, -2.0, 0.0, 2.0)
    sol = limits.painleve_solve(np.array(pts))
    worst = max(abs(resolvent_bundle_airy(s).F2 - f) for s, f in zip(pts, sol.f2))
    return [
        _at_most("Fredholm q vs Painleve II integration on [-8, 6]", pc.max_match_error, 1e-7),
        _at_most("F2 determinant vs exp(-int (x - s) q^2)", worst, 1e-8),
    ]


def check_systems() -> list[Check]:
    ode = closed = 0.0
    for n in (20, 40):
        for s in (-4.0, -2.0, 0.0):
            bundle = finite_n.solve_systems(n, 0.0, float(finite_n.tau(n, 0.0, s)))
            ode = max(ode, bundle.ode_vs_exact)
            closed = max(closed, bundle.closed_vs_ode)
    return [
        _at_most("X, Y: closed form vs ODE integration", closed, 1e-6),
        _at_most("X, Y: ODE integration vs direct inner products", ode, 1e-6),
    ]


def _n2_model() -> mc.TabulatedCdf:
    xs = np.linspace(-3.5, 5.5, 121)
    return mc.TabulatedCdf(xs, np.sqrt([finite_n.goe_n2_oracle(float(x)) for x in xs]))


def check_n2_monte_carlo(count: int = 10**6, seed: int = 11) -> list[Check]:
    x = np.sort(mc.sample_max(mc.EnsembleParams(1, 2, count, seed)))
    return [_at_most("n = 2 GOE Monte Carlo vs double integral (sup distance)", mc.sup_distance(x, _n2_model()), 2e-3)]


def _residuals(exact: Callable[[int], float], parts: Callable[[int], edgeworth.ExpansionValue]):
    full, first, lead = [], [], []
    for n in RATE_NS:
        ex = exact(n)
        v = parts(n)
        full.append(abs(ex - v.total))
        first.append(abs(ex - v.first_order))
        lead.append(abs(ex - v.leading))
    return full, first, lead


def check_gue_rate() -> list[Check]:
    full, first, _ = _residuals(
        lambda n: finite_n.f_n2_exact(n, float(finite_n.tau(n, 0.0, RATE_S))),
        lambda n: edgeworth.gue_expansion(n, 0.0, RATE_S),
    )
    return [
        _within("GUE three-term residual slope", mc.rate_fit(RATE_NS, full)[0], -1.2, -0.8),
        _within("GUE residual slope without the n^-2/3 term", mc.rate_fit(RATE_NS, first)[0], -0.85, math.inf),
    ]


def check_goe_rate() -> list[Check]:
    full, _, lead = _residuals(
        lambda n: finite_n.f_n1_sq_exact(n, 0.0, RATE_S),
        lambda n: edgeworth.goe_sq_expansion(n, 0.0, RATE_S),
    )
    return [
        _within("GOE three-term residual slope", mc.rate_fit(RATE_NS, full)[0], -1.2, -0.8),
        _within("GOE leading-term residual slope", mc.rate_fit(RATE_NS, lead)[0], -1.0 / 3 - 0.1, -1.0 / 3 + 0.1),
    ]


def check_alternate_form(tables: limits.LimitTables | None = None) -> list[Check]:
    tables = tables or limits.build_tables(-6.0, 4.0, 0.5)
    worst = 0.0
    for s in limits.s_nodes(-6.0, 4.0, 0.5):
        pt = tables.point(float(s))
        for c in (-1.0, 0.0, 1.0):
            worst = max(worst, abs(edgeworth.goe_sq_alt_at(pt, 100, c) - edgeworth.goe_sq_at(pt, 100, c).total))
    return [_at_most("alpha-form vs simplified GOE expansion (n = 100)", worst, 1e-10)]


def check_mc_improvement(seeds=range(5), count: int = 10**5, n: int = 100) -> list[Check]:
    tables = limits.build_tables()
    corrected = mc.expansion_cdf(1, n, 0.0, "two_term", tables)
    limit = mc.expansion_cdf(1, n, 0.0, "limit", tables)
    wins = 0
    for seed in seeds:
        x = np.sort(mc.sample_max(mc.EnsembleParams(1, n, count, seed), method="tridiagonal"))
        wins += mc.sup_distance(x, corrected) < mc.sup_distance(x, limit)
    need = len(seeds) - 1
    return [Check("GOE n = 100: corrected expansion beats the limit (seeds)", float(wins), f">= {need}", wins >= need)]


QUICK = (check_nu_identity, check_substitutions, check_e_c2_shift, check_matrix_exponential, check_boundaries)
FULL = QUICK + (
    check_painleve, check_systems, check_n2_monte_carlo, check_gue_rate, check_goe_rate,
    check_alternate_form, check_mc_improvement,
)


def run_checks(quick: bool = False) -> list[Check]:
    out = []
    for fn in QUICK if quick else FULL:
        t0 = time.perf_counter()
        res = fn()
        dt = (time.perf_counter() - t0) / len(res)
        out.extend(Check(c.name, c.measured, c.bound, c.passed, dt) for c in res)
    return out
