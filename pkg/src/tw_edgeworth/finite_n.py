"""Exact finite-n GUE and GOE largest-eigenvalue distributions.

F_{n,2}(t) is the Hermite-kernel Fredholm determinant on (t, inf).  The GOE
square F_{n,1}(t)^2 is F_{n,2}(t) times a scalar factor built from six
resolvent functionals; those are obtained here three ways:

* ``direct``: straight Nystrom inner products at t (the reference route),
* ``ode``: integrating the two linear 3x3 systems they satisfy downward from
  the right tail, driven by interpolated q_n, p_n,
* ``closed``: the matrix exponential of the integrated generator, exp(M(a, b)).

The closed form treats the generator as if its values at different t commuted.
They do not, so that route carries an error that shrinks only like n^{-1/3}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .fredholm import (
    DEFAULT_M,
    HermiteSolve,
    KernelKind,
    KernelSpec,
    fredholm_det,
    hermite_cutoff,
    hermite_grid,
    resolvent_bundle_hermite,
)
from .specfun import c_phi, hermite_phis, hermite_tail_integrals

ODE_STEP_S = 0.01
ODE_START_S = 8.0
ODE_ATOL = 1e-12
ODE_RTOL = 1e-12
PANEL_NODES = 10
SERIES_TERMS = 30


class InconsistencyError(ArithmeticError):
    """Two routes to the same quantity disagree beyond their tolerance."""


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise ValueError(f"GOE quantities need even n >= 2, got n={n}")


def tau(n: int, c: float, s):
    """Soft-edge scaling t = sqrt(2 (n + c)) + s / (sqrt(2) n^{1/6})."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n + c <= 0:
        raise ValueError(f"need n + c > 0, got n={n}, c={c}")
    return math.sqrt(2.0 * (n + c)) + np.asarray(s, dtype=float) / (math.sqrt(2.0) * n ** (1.0 / 6.0)) + 0.0


def tau_inverse(n: int, c: float, t):
    return (np.asarray(t, dtype=float) - math.sqrt(2.0 * (n + c))) * math.sqrt(2.0) * n ** (1.0 / 6.0) + 0.0


# ---------------------------------------------------------------------------
# 3x3 exponentials


class Variant(str, Enum):
    system1 = "system1"
    system2 = "system2"


def generator(a: float, b: float, variant: Variant | str) -> np.ndarray:
    """Integrated generator M(a, b) whose exponential maps boundary values to t."""
    if Variant(variant) is Variant.system1:
        return np.array([[0.0, 0.0, a], [0.0, 0.0, -b], [b, -a, 0.0]])
    return np.array([[0.0, 0.0, -a], [0.0, 0.0, -b], [-b, -a, 0.0]])


def expm_closed(a: float, b: float, variant: Variant | str = Variant.system1) -> np.ndarray:
    """exp(M) = I + sinh(th)/th M + (cosh(th) - 1)/th^2 M^2 with th = sqrt(2ab).

    M^3 = 2ab M for both generators, which gives the closed form.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("a and b must be finite")
    mat = generator(a, b, variant)
    th2 = 2.0 * a * b
    if abs(th2) < 1e-8:
        # series in th^2, exact to double precision here
        f1 = 1.0 + th2 / 6.0 + th2 * th2 / 120.0
        f2 = 0.5 + th2 / 24.0 + th2 * th2 / 720.0
    elif th2 > 0:
        th = math.sqrt(th2)
        f1 = math.sinh(th) / th
        f2 = 2.0 * math.sinh(0.5 * th) ** 2 / th2
    else:
        th = math.sqrt(-th2)
        f1 = math.sin(th) / th
        f2 = 2.0 * math.sin(0.5 * th) ** 2 / (-th2)
    return np.eye(3) + f1 * mat + f2 * (mat @ mat)


def expm_series(a: float, b: float, variant: Variant | str = Variant.system1, terms: int = SERIES_TERMS) -> np.ndarray:
    """exp(M) entry by entry from the termwise power series in a and b.

    Kept as an independent check of :func:`expm_closed`; each entry is summed
    over ``terms`` terms.
    """
    k1 = range(1, terms + 1)
    k0 = range(terms)
    diag = 1.0 + sum(2.0 ** (k - 1) * a**k * b**k / math.factorial(2 * k) for k in k1)
    aa = sum(2.0 ** (k - 1) * a ** (k + 1) * b ** (k - 1) / math.factorial(2 * k) for k in k1)
    bb = sum(2.0 ** (k - 1) * a ** (k - 1) * b ** (k + 1) / math.factorial(2 * k) for k in k1)
    oa = sum(2.0**k * a ** (k + 1) * b**k / math.factorial(2 * k + 1) for k in k0)
    ob = sum(2.0**k * a**k * b ** (k + 1) / math.factorial(2 * k + 1) for k in k0)
    corner = 1.0 + sum(2.0**k * a**k * b**k / math.factorial(2 * k) for k in k1)
    if Variant(variant) is Variant.system1:
        return np.array([[diag, -aa, oa], [-bb, diag, -ob], [ob, -oa, corner]])
    return np.array([[diag, aa, -oa], [bb, diag, -ob], [-ob, -oa, corner]])


def expm_generic(mat: np.ndarray, terms: int = 18) -> np.ndarray:
    """Scaling and squaring with a Taylor core, for any square matrix."""
    mat = np.asarray(mat, dtype=float)
    norm = np.max(np.sum(np.abs(mat), axis=1))
    squarings = max(0, math.ceil(math.log2(norm / 0.25))) if norm > 0 else 0
    small = mat / 2.0**squarings
    out = np.eye(len(mat))
    term = np.eye(len(mat))
    for k in range(1, terms + 1):
        term = term @ small / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


# ---------------------------------------------------------------------------
# direct resolvent route


@dataclass(frozen=True)
class DirectValues:
    """Resolvent functionals at t, from one Nystrom solve."""

    q_n: float
    p_n: float
    q_eps: float
    u_eps: float
    vtilde_eps: float
    r1: float  # int_{-inf}^t R(x, t) dx
    p1: float  # int_{-inf}^t P(x; t) dx
    q1: float  # int_{-inf}^t Q(x; t) dx
    det: float

    @property
    def X(self) -> np.ndarray:
        return np.array([self.u_eps, 1.0 - self.vtilde_eps, self.q_eps])

    @property
    def Y(self) -> np.ndarray:
        return np.array([self.q1, self.p1, 1.0 - self.r1])


@lru_cache(maxsize=None)
def _full_line_integrals(n: int) -> np.ndarray:
    return hermite_tail_integrals(n, np.array(-np.inf))


@lru_cache(maxsize=4096)
def _direct(n: int, t: float, m: int) -> DirectValues:
    hs = HermiteSolve.build(n, t, m)
    f = hs.funcs
    x, w = hs.grid.nodes, hs.grid.weights
    scale = (n / 2.0) ** 0.25

    # int_{-inf}^t phi_k for k < n, and the scaled phi, psi antiderivatives
    tail_t = hermite_tail_integrals(n, np.array([t]))[:, 0]
    below = _full_line_integrals(n) - tail_t
    g_nodes = below[:n] @ hermite_phis(n - 1, x, n)  # G(y) = int_{-inf}^t K(x, y) dx
    g_t = float(below[:n] @ hermite_phis(n - 1, np.array([t]), n)[:, 0])
    big_phi = scale * below[n]
    big_psi = scale * below[n - 1]

    eps_nodes = c_phi(n) - scale * hermite_tail_integrals(n, x)[n]
    eps_t = c_phi(n) - scale * tail_t[n]
    k_t = hs.kernel_row(t)  # K(t, x_j) = K(x_j, t)

    sol = hs.solve(np.stack([f.phi, f.psi, eps_nodes, k_t], axis=1))
    Q, P, Qe, Rt = sol.T
    row = k_t * w
    here = HermiteSolveAt(n, t)
    q_n = here.phi + row @ Q
    p_n = here.psi + row @ P
    q_eps = eps_t + row @ Qe
    u_eps = hs.inner(Qe, f.phi)
    vt_eps = hs.inner(Qe, f.psi)
    gw = g_nodes * w
    r1 = g_t + gw @ Rt
    p1 = big_psi + gw @ P
    q1 = big_phi + gw @ Q
    return DirectValues(
        float(q_n), float(p_n), float(q_eps), float(u_eps), float(vt_eps),
        float(r1), float(p1), float(q1), hs.det,
    )


@dataclass(frozen=True)
class HermiteSolveAt:
    n: int
    t: float
    phi: float = field(init=False)
    psi: float = field(init=False)

    def __post_init__(self):
        vals = hermite_phis(self.n, np.array([self.t]), 2)[:, 0]
        c = (self.n / 2.0) ** 0.25
        object.__setattr__(self, "phi", float(c * vals[1]))
        object.__setattr__(self, "psi", float(c * vals[0]))


def direct_values(n: int, t: float, m: int = DEFAULT_M) -> DirectValues:
    """All GOE resolvent functionals at t by direct Nystrom inner products."""
    _check_even(n)
    if n > 400:
        raise ValueError("n above 400 not supported by the dense Nystrom solve")
    return _direct(int(n), float(t), int(m))


# ---------------------------------------------------------------------------
# integrals a, b and the ODE route


def _upper(n: int, t: float) -> float:
    return max(hermite_cutoff(n), t + 1.0)


def _qp(n: int, t: float, m: int) -> np.ndarray:
    return np.array(resolvent_bundle_hermite(n, t, m))


def ab_integrals(n: int, c: float, t: float, m: int = DEFAULT_M) -> tuple[float, float]:
    """a = int_t^inf q_n and b = int_t^inf p_n by panel Gauss-Legendre.

    Panels are one unit of s wide; beyond the Hermite cutoff both integrands
    are below 1e-18 of their maximum and are dropped.
    """
    _check_even(n)
    upper = hermite_cutoff(n)
    if t >= upper:
        return 0.0, 0.0
    width = 1.0 / (math.sqrt(2.0) * n ** (1.0 / 6.0))
    edges = np.append(np.arange(t, upper, width), upper)
    xi, wi = np.polynomial.legendre.leggauss(PANEL_NODES)
    total = np.zeros(2)
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        half = 0.5 * (hi - lo)
        vals = np.array([_qp(n, float(lo + half * (z + 1.0)), m) for z in xi])
        total += half * (wi @ vals)
    return float(total[0]), float(total[1])


@dataclass(frozen=True)
class QPTable:
    """q_n, p_n on a uniform s-grid with cubic interpolation in t."""

    n: int
    c: float
    s: np.ndarray
    t: np.ndarray
    q: np.ndarray
    p: np.ndarray

    def splines(self):
        return CubicSpline(self.t, self.q), CubicSpline(self.t, self.p)


_QP_TABLES: dict[tuple[int, float, int], QPTable] = {}


def qp_table(n: int, c: float, s_min: float, m: int = DEFAULT_M) -> QPTable:
    """Tabulate q_n, p_n at s = s_lo, s_lo + 0.01, ..., 8 (reused when already covering s_min)."""
    key = (int(n), float(c), int(m))
    have = _QP_TABLES.get(key)
    if have is not None and have.s[0] <= s_min:
        return have
    s_lo = math.floor(s_min) - 0.5
    count = int(round((ODE_START_S - s_lo) / ODE_STEP_S)) + 1
    s = s_lo + ODE_STEP_S * np.arange(count)
    t = tau(n, c, s)
    vals = np.array([_qp(n, float(x), m) for x in t])
    table = QPTable(n, float(c), s, t, vals[:, 0], vals[:, 1])
    _QP_TABLES[key] = table
    return table


def _boundary_state(n: int) -> np.ndarray:
    cp = c_phi(n)
    # X = (u_eps, V, q_eps), Y = (Q1, P1, Rtilde), then a, b
    return np.array([0.0, 1.0, cp, 2.0 * cp, 0.0, 1.0, 0.0, 0.0])


def ode_route(n: int, c: float, t: float, m: int = DEFAULT_M, t0: float | None = None):
    """Integrate both 3x3 systems and a' = -q_n, b' = -p_n from t0 down to t.

    Returns (X, Y, a, b).  Starts from the boundary values at t0 = tau(8),
    where every functional differs from its t = inf value by less than 1e-12
    for the n supported here.
    """
    _check_even(n)
    s_t = float(tau_inverse(n, c, t))
    table = qp_table(n, c, min(s_t, ODE_START_S - 1.0), m)
    fq, fp = table.splines()
    t0 = float(tau(n, c, ODE_START_S)) if t0 is None else t0
    if t >= t0:
        y = _boundary_state(n)
        return y[:3], y[3:6], 0.0, 0.0

    def rhs(x, y):
        q, p = fq(x), fp(x)
        u, v, qe, big_q, big_p, rt = y[:6]
        return [
            -q * qe, p * qe, -p * u + q * v,
            q * rt, p * rt, p * big_q + q * big_p,
            -q, -p,
        ]

    sol = integrate.solve_ivp(
        rhs, (t0, t), _boundary_state(n), method="DOP853",
        rtol=ODE_RTOL, atol=ODE_ATOL,
    )
    if not sol.success:
        raise ArithmeticError(f"system integration failed: {sol.message}")
    y = sol.y[:, -1]
    return y[:3], y[3:6], float(y[6]), float(y[7])


# ---------------------------------------------------------------------------
# bundle, factor, distributions


@dataclass(frozen=True)
class FiniteNBundle:
    """Finite-n GOE quantities at t; X = (u_eps, 1 - vtilde_eps, q_eps), Y = (Q1, P1, 1 - R1)."""

    n: int
    c: float
    t: float
    q_n: float
    p_n: float
    a: float
    b: float
    c_phi: float
    X: np.ndarray
    Y: np.ndarray
    X_closed: np.ndarray
    Y_closed: np.ndarray
    X_ode: np.ndarray | None = None
    Y_ode: np.ndarray | None = None

    @property
    def closed_vs_exact(self) -> float:
        return float(max(np.max(np.abs(self.X - self.X_closed)), np.max(np.abs(self.Y - self.Y_closed))))

    @property
    def ode_vs_exact(self) -> float:
        if self.X_ode is None:
            return math.nan
        return float(max(np.max(np.abs(self.X - self.X_ode)), np.max(np.abs(self.Y - self.Y_ode))))

    @property
    def closed_vs_ode(self) -> float:
        if self.X_ode is None:
            return math.nan
        return float(max(np.max(np.abs(self.X_ode - self.X_closed)), np.max(np.abs(self.Y_ode - self.Y_closed))))


def closed_route(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    cp = c_phi(n)
    X = expm_closed(a, b, Variant.system1) @ np.array([0.0, 1.0, cp])
    Y = expm_closed(a, b, Variant.system2) @ np.array([2.0 * cp, 0.0, 1.0])
    return X, Y


SYSTEM_TOL = 1e-6


def solve_systems(
    n: int, c: float, t: float, m: int = DEFAULT_M, with_ode: bool = True, tol: float | None = SYSTEM_TOL
) -> FiniteNBundle:
    """Direct, ODE and closed-form values of X and Y at t.

    X and Y themselves are the direct resolvent inner products.  The ODE
    route integrates both systems downward with the true generators; the
    closed form exponentiates the integrated generator, which is exact only
    when the generators at different t commute, so its discrepancy is
    recorded (``closed_vs_ode``) but never raised on.

    Raises
    ------
    InconsistencyError
        If the ODE and direct routes differ by more than ``tol``.
    """
    _check_even(n)
    d = direct_values(n, t, m)
    a, b = ab_integrals(n, c, t, m)
    Xc, Yc = closed_route(n, a, b)
    Xo = Yo = None
    if with_ode:
        Xo, Yo, _, _ = ode_route(n, c, t, m)
    out = FiniteNBundle(n, float(c), float(t), d.q_n, d.p_n, a, b, c_phi(n), d.X, d.Y, Xc, Yc, Xo, Yo)
    if tol is not None and with_ode and out.ode_vs_exact > tol:
        raise InconsistencyError(f"ODE and direct routes differ by {out.ode_vs_exact:.3g} at t={t}")
    return out


def factor_from(X, Y, cp: float) -> tuple[float, float]:
    """Both assemblies of the GOE determinant factor."""
    u_eps, V, q_eps = X
    _, P1, Rt = Y
    vt = 1.0 - V
    r1 = 1.0 - Rt
    first = (1.0 - vt) * (1.0 - 0.5 * r1) - 0.5 * (q_eps - cp) * P1
    second = 0.5 * (V * (1.0 + Rt) - P1 * (q_eps - cp))
    return float(first), float(second)


def goe_factor(n: int, c: float, t: float, m: int = DEFAULT_M, route: str = "direct") -> float:
    """(1 - vtilde_eps)(1 - R1/2) - (q_eps - c_phi) P1 / 2 at t.

    ``route`` selects where X, Y come from: "direct" (default), "ode" or "closed".
    """
    _check_even(n)
    cp = c_phi(n)
    if route == "direct":
        d = direct_values(n, t, m)
        X, Y = d.X, d.Y
    elif route == "ode":
        X, Y, _, _ = ode_route(n, c, t, m)
    elif route == "closed":
        X, Y = closed_route(n, *ab_integrals(n, c, t, m))
    else:
        raise ValueError(f"unknown route {route!r}")
    first, second = factor_from(X, Y, cp)
    if abs(first - second) > 1e-12:
        raise InconsistencyError(f"factor assemblies differ: {first!r} vs {second!r}")
    return first


def f_n2_exact(n: int, t: float, m: int = DEFAULT_M) -> float:
    """GUE finite-n distribution det(I - K_n) on (t, inf)."""
    if n < 1 or n > 400:
        raise ValueError("n must lie in [1, 400]")
    return fredholm_det(KernelSpec(KernelKind.hermite, n), hermite_grid(n, t, m))


def f_n1_sq_exact(n: int, c: float, s: float, m: int = DEFAULT_M, route: str = "direct") -> float:
    """F_{n,1}(t)^2 at t = tau(n, c, s)."""
    _check_even(n)
    t = float(tau(n, c, s))
    return f_n2_exact(n, t, m) * goe_factor(n, c, t, m, route)


FINITE_N_COLUMNS = ("n", "c", "s", "t", "F_n2_exact", "goe_factor", "F_n1_sq_exact")


def finite_n_row(n: int, c: float, s: float, m: int = DEFAULT_M) -> dict:
    """One row of the exact pipeline at t = tau(n, c, s)."""
    _check_even(n)
    t = float(tau(n, c, s))
    f2 = f_n2_exact(n, t, m)
    factor = goe_factor(n, c, t, m)
    return {"n": int(n), "c": float(c), "s": float(s), "t": t,
            "F_n2_exact": f2, "goe_factor": factor, "F_n1_sq_exact": f2 * factor}


# ---------------------------------------------------------------------------
# n = 2 brute force

_N2_EPSABS = 1e-11
_N2_EPSREL = 1e-11


def _n2_half(t: float) -> float:
    # x2 < x1 <= t; the |x1 - x2| kink lies on the boundary x2 = x1
    val, _ = integrate.dblquad(
        lambda y, x: math.exp(-0.5 * (x * x + y * y)) * (x - y),
        -np.inf, t, -np.inf, lambda x: x, epsabs=_N2_EPSABS, epsrel=_N2_EPSREL,
    )
    return val


@lru_cache(maxsize=1)
def n2_normalization() -> float:
    """Integral of exp(-(x1^2 + x2^2)/2) |x1 - x2| over the plane, by quadrature."""
    return 2.0 * _n2_half(np.inf)


def goe_n2_oracle(t: float) -> float:
    """F_{2,1}(t)^2 by two-dimensional quadrature of the n = 2 GOE density.

    The region x1, x2 <= t is split on the diagonal so the |x1 - x2| kink sits
    on an integration boundary.
    """
    if not math.isfinite(t):
        if t > 0:
            return 1.0
        raise ValueError("t must be finite or +inf")
    f = 2.0 * _n2_half(float(t)) / n2_normalization()
    return f * f
