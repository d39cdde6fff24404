"""Limit-law functions of s and their tail integrals.

Everything here is built from Airy resolvent bundles: mu = int_s^inf q,
nu = int_s^inf p, alpha = int_s^inf q u, the eta integral, the GUE and GOE
second-order coefficients E_{c,2}, E_{c,1}, and an independent Painleve II
integrator used to cross-check q and F2.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .fredholm import DEFAULT_M, ResolventBundle, resolvent_bundle_airy
from .specfun import airy_array

TABLE_MIN = -8.0
TABLE_MAX = 6.0
TABLE_STEP = 0.05
TAIL_END = 15.0  # q(15) ~ 2e-18
PANEL = 0.5
PANEL_NODES = 10
CHECK_NODES = 7
PANEL_TOL = 1e-10
MAX_SPLIT = 4
SQRT2 = math.sqrt(2.0)

CSV_COLUMNS = (
    "s", "F2", "q", "p", "u0", "v0", "w0", "q1", "p1", "u1", "v1", "w1",
    "q2", "p2", "u2", "mu", "nu", "alpha", "eta",
)


class ConvergenceError(ArithmeticError):
    """Panel quadrature or ODE stepping failed to reach its tolerance."""


class TailLimitWarning(UserWarning):
    """mu underflowed; the analytic s -> inf limit was returned."""


def _check_range(s: float) -> None:
    if not (TABLE_MIN - 1e-12 <= s <= TABLE_MAX + 1e-12):
        raise ValueError(f"s={s} outside [{TABLE_MIN}, {TABLE_MAX}]")


# ---------------------------------------------------------------------------
# integrands

# column order of _integrand: q, p, q u, eta integrand (c-free part),
# c^0 and c^2 parts of the a2 + b2 integrand
_NCOL = 6


def _integrand(b: ResolventBundle) -> np.ndarray:
    q, p, u, v = b.q, b.p, b.u, b.v
    eta_int = (
        6 * q[0] * v[0] + 3 * p[0] * u[0] + 2 * p[2] + 2 * p[1] * v[0] + 2 * p[0] * v[1]
        - 2 * q[2] * u[0] - 2 * q[1] * u[1] - 2 * q[0] * u[2]
    )
    ab0 = (
        3 * q[1] + 2 * p[2] + 3 * q[0] * v[0] + 2 * p[1] * v[0] + 2 * p[0] * v[1]
        - 2 * q[2] * u[0] - 2 * q[1] * u[1] - 2 * q[0] * u[2] + 3 * p[0] * u[0]
    )
    ab2 = 20 * (q[1] - 3 * q[0] * v[0] - p[0] * u[0] + 2 * q[0] * u[0] ** 2)
    return np.array([q[0], p[0], q[0] * u[0], eta_int, ab0, ab2])


@lru_cache(maxsize=None)
def _integrand_at(x: float, m: int) -> np.ndarray:
    return _integrand(resolvent_bundle_airy(x, m))


def _gl_panel(a: float, b: float, k: int, m: int) -> np.ndarray:
    xi, wi = np.polynomial.legendre.leggauss(k)
    half = 0.5 * (b - a)
    xs = a + half * (xi + 1.0)
    vals = np.array([_integrand_at(float(x), m) for x in xs])
    return half * (wi @ vals)


def _adaptive_panel(a: float, b: float, m: int, depth: int = 0) -> np.ndarray:
    fine = _gl_panel(a, b, PANEL_NODES, m)
    coarse = _gl_panel(a, b, CHECK_NODES, m)
    if np.all(np.abs(fine - coarse) <= PANEL_TOL * np.maximum(1.0, np.abs(fine))):
        return fine
    if depth >= MAX_SPLIT:
        raise ConvergenceError(f"panel [{a}, {b}] did not converge")
    mid = 0.5 * (a + b)
    return _adaptive_panel(a, mid, m, depth + 1) + _adaptive_panel(mid, b, m, depth + 1)


@lru_cache(maxsize=None)
def _tail_from_break(k: int, m: int) -> np.ndarray:
    """Integrals over [k * PANEL, TAIL_END] accumulated panel by panel."""
    a = k * PANEL
    if a >= TAIL_END:
        return np.zeros(_NCOL)
    return _adaptive_panel(a, a + PANEL, m) + _tail_from_break(k + 1, m)


def _tail_vector(s: float, m: int) -> np.ndarray:
    k = math.ceil(s / PANEL - 1e-12)
    b = k * PANEL
    head = _gl_panel(s, b, PANEL_NODES, m) if b > s else np.zeros(_NCOL)
    return head + _tail_from_break(k, m)


# ---------------------------------------------------------------------------
# point values


@dataclass(frozen=True)
class LimitPoint:
    """Resolvent bundle at s together with the tail integrals starting at s.

    ``eta_int`` is the integral of the c-free eta integrand; ``ab0_int`` and
    ``ab2_int`` are the c^0 and c^2 parts of the unsimplified a2 + b2 integrand.
    """

    bundle: ResolventBundle
    mu: float
    nu: float
    alpha: float
    eta_int: float
    ab0_int: float
    ab2_int: float

    @property
    def s(self) -> float:
        return self.bundle.s

    @property
    def F2(self) -> float:
        return self.bundle.F2

    @property
    def q(self) -> float:
        return float(self.bundle.q[0])

    @property
    def p(self) -> float:
        return float(self.bundle.p[0])

    @property
    def u(self) -> float:
        return float(self.bundle.u[0])

    @property
    def qprime(self) -> float:
        # p = q' + u q
        return self.p - self.u * self.q

    def eta(self, c: float = 0.0) -> float:
        return (self.eta_int - 20.0 * c * c * self.qprime - 3.0 * self.p) / (20.0 * SQRT2)

    def row(self, c: float = 0.0) -> dict[str, float]:
        r = self.bundle.as_row()
        r.update(mu=self.mu, nu=self.nu, alpha=self.alpha, eta=self.eta(c))
        return {k: float(v) for k, v in r.items()}


def _point_from(bundle: ResolventBundle, vec: np.ndarray) -> LimitPoint:
    return LimitPoint(bundle, *(float(x) for x in vec[:_NCOL]))


@lru_cache(maxsize=4096)
def _limit_point(s: float, m: int) -> LimitPoint:
    return _point_from(resolvent_bundle_airy(s, m), _tail_vector(s, m))


def limit_point(s: float, m: int = DEFAULT_M) -> LimitPoint:
    """Bundle and tail integrals at one s in [-8, 6]."""
    s = float(s)
    _check_range(s)
    return _limit_point(s, int(m))


def tail_integrals(s: float, m: int = DEFAULT_M) -> tuple[float, float, float]:
    """(mu, nu, alpha) = (int q, int p, int q u) over (s, inf)."""
    pt = limit_point(s, m)
    return pt.mu, pt.nu, pt.alpha


def eta(s: float, c: float = 0.0, m: int = DEFAULT_M) -> float:
    """eta from its reduced form: int of the c-free integrand minus (20 c^2 q' + 3 p)(s), over 20 sqrt 2."""
    return limit_point(s, m).eta(c)


def eta_ab(s: float, c: float = 0.0, m: int = DEFAULT_M) -> float:
    """a2 + b2 by direct quadrature of the unreduced integrand (no identities used)."""
    pt = limit_point(s, m)
    return (pt.ab0_int + c * c * pt.ab2_int) / (20.0 * SQRT2)


# ---------------------------------------------------------------------------
# second-order coefficients


def e_c2_bundle(b: ResolventBundle, c: float) -> float:
    u, v, w = b.u, b.v, b.w
    return float(
        2 * w[1] - 3 * u[2] + (-20 * c * c + 3) * v[0]
        + u[1] * v[0] - u[0] * v[1] + u[0] * v[0] ** 2 - u[0] ** 2 * w[0]
    )


def e_c2(s: float, c: float = 0.0, m: int = DEFAULT_M) -> float:
    """GUE second-order coefficient E_{c,2}(s)."""
    s = float(s)
    _check_range(s)
    return e_c2_bundle(resolvent_bundle_airy(s, m), c)


def _over_mu2(mu: float, x_one: float, x_em: float, x_em2: float, x_ch: float) -> float:
    """(x_one + x_em e^-mu + x_em2 (2 - mu) e^-mu + x_ch cosh mu) / mu^2.

    The mu = 0 values of the four functions are summed first so the remainder
    is formed from expm1 and sinh without cancellation at small mu.
    """
    em1 = math.expm1(-mu)
    e = 1.0 + em1
    ch1 = 2.0 * math.sinh(0.5 * mu) ** 2
    base = x_one + x_em + 2.0 * x_em2 + x_ch
    rest = x_em * em1 + x_em2 * (2.0 * em1 - mu * e) + x_ch * ch1
    return (base + rest) / (mu * mu)


def first_order_goe(pt: LimitPoint, c: float) -> float:
    """Bracket of the GOE n^{-1/3} term, c (q + u) e^-mu - nu (1 - e^-mu) / (2 mu)."""
    mu = pt.mu
    e = math.exp(-mu)
    ratio = -math.expm1(-mu) / mu if mu > 0 else 1.0
    return c * (pt.q + pt.u) * e - 0.5 * pt.nu * ratio


def e_c1_point(pt: LimitPoint, c: float, eta_value: float | None = None) -> float:
    """GOE second-order coefficient E_{c,1} at a prepared point, term for term."""
    mu, nu, al = pt.mu, pt.nu, pt.alpha
    q, p, u = pt.q, pt.p, pt.u
    if mu <= 0.0:
        warnings.warn("mu underflowed; returning the s -> inf limit 0", TailLimitWarning, stacklevel=2)
        return 0.0
    et = pt.eta(c) if eta_value is None else eta_value
    e1 = math.exp(-mu)
    e2 = e1 * e1
    ec2 = e_c2_bundle(pt.bundle, c)
    c2 = c * c
    out = -ec2 * e1 / 20.0
    out += c * p / (2 * mu)
    out += c * u * (c * q * e1 - 0.5 * nu * (-math.expm1(-mu) / mu))
    out += e2 * (nu * (nu + 8 * c * q) / (32 * mu) - et / (4 * SQRT2))
    out += e1 * ((2 * SQRT2 * c2 * q * q - 3 * et) / (4 * SQRT2)
                 + (nu * nu - 8 * (2 * c * p + c2 * q * q) - 4 * c2 * al * al) / (32 * mu))
    # every 1/mu^2 term, grouped by its mu-dependence
    out += _over_mu2(
        mu,
        x_one=-c * al / 2 + (2 * c - 1) * nu * nu / 4,
        x_em=-c2 * q * q / 8,
        x_em2=(c * q * al + nu * nu / 4 + (c2 - c) * q * q) / 2,
        x_ch=-(4 * c2 * al * al + 3 * c2 * q * q - nu * nu) / 8,
    )
    return float(out)


def e_c1(s: float, c: float = 0.0, m: int = DEFAULT_M) -> float:
    """GOE second-order coefficient E_{c,1}(s)."""
    return e_c1_point(limit_point(s, m), c)


# ---------------------------------------------------------------------------
# tables


@dataclass(frozen=True)
class LimitTables:
    """Limit quantities on an increasing s-grid, with cubic interpolation."""

    s_grid: np.ndarray
    points: tuple[LimitPoint, ...]

    def column(self, name: str, c: float = 0.0) -> np.ndarray:
        return np.array([pt.row(c)[name] for pt in self.points])

    @property
    def mu(self) -> np.ndarray:
        return np.array([pt.mu for pt in self.points])

    @property
    def nu(self) -> np.ndarray:
        return np.array([pt.nu for pt in self.points])

    @property
    def alpha(self) -> np.ndarray:
        return np.array([pt.alpha for pt in self.points])

    @property
    def eta(self) -> np.ndarray:
        return np.array([pt.eta(0.0) for pt in self.points])

    def index(self, s: float) -> int:
        i = int(np.argmin(np.abs(self.s_grid - s)))
        if abs(self.s_grid[i] - s) > 1e-9:
            raise KeyError(f"s={s} is not a table node")
        return i

    def point(self, s: float) -> LimitPoint:
        return self.points[self.index(s)]

    def interpolate(self, name: str, s, c: float = 0.0):
        if np.any(np.asarray(s) < self.s_grid[0]) or np.any(np.asarray(s) > self.s_grid[-1]):
            raise ValueError("interpolation outside the table")
        return CubicSpline(self.s_grid, self.column(name, c))(s)

    def rows(self, c: float = 0.0) -> list[dict[str, float]]:
        return [pt.row(c) for pt in self.points]

    def to_csv(self, path, c: float = 0.0) -> None:
        with open(path, "w", newline="") as fh:
            write_rows_csv(fh, CSV_COLUMNS, self.rows(c))


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def write_rows_csv(fh, columns, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt17(r[k]) if isinstance(r[k], float) else r[k] for k in columns])


def s_nodes(s_min: float, s_max: float, step: float) -> np.ndarray:
    """Grid s_min, s_min + step, ... up to s_max, snapped to integer multiples of step."""
    if step <= 0 or s_max < s_min:
        raise ValueError("need step > 0 and s_max >= s_min")
    count = int(math.floor((s_max - s_min) / step + 1e-9)) + 1
    return np.round(s_min + step * np.arange(count), 12)


def build_tables(
    s_min: float = TABLE_MIN,
    s_max: float = TABLE_MAX,
    step: float = TABLE_STEP,
    m: int = DEFAULT_M,
    interval_nodes: int = 5,
    workers: int = 1,
) -> LimitTables:
    """Tabulate on a grid; tail integrals accumulate node to node from the cached far tail.

    ``workers`` > 1 computes the per-node resolvent bundles on a thread pool;
    the result is identical for any worker count.
    """
    _check_range(s_min)
    _check_range(s_max)
    grid = s_nodes(s_min, s_max, step)
    acc = _tail_vector(float(grid[-1]), m)
    vecs = [acc]
    for a, b in zip(grid[-2::-1], grid[:0:-1]):
        acc = acc + _gl_panel(float(a), float(b), interval_nodes, m)
        vecs.append(acc)
    vecs.reverse()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            bundles = list(pool.map(lambda s: resolvent_bundle_airy(float(s), m), grid))
    else:
        bundles = [resolvent_bundle_airy(float(s), m) for s in grid]
    pts = tuple(_point_from(b, v) for b, v in zip(bundles, vecs))
    return LimitTables(grid, pts)


# ---------------------------------------------------------------------------
# Painleve II oracle

PII_ORDER = 30
PII_TOL = np.longdouble("1e-21")
PII_START = 12.0  # q - Ai is O(Ai^3); at 12 that is below extended-precision resolution
PII_MAX = 8.0


@dataclass(frozen=True)
class PainleveSolution:
    """Hastings-McLeod q and I(s) = int_s^inf (x - s) q^2 at the requested s (increasing)."""

    s: np.ndarray
    q: np.ndarray
    qprime: np.ndarray
    log_f2: np.ndarray  # -I(s)

    @property
    def f2(self) -> np.ndarray:
        return np.exp(self.log_f2)


def _pii_coefficients(s0, y, order: int):
    """Taylor coefficients at s0 of q (q'' = s q + 2 q^3) and I (I'' = q^2)."""
    a = np.zeros(order + 1, dtype=np.longdouble)
    b = np.zeros(order + 1, dtype=np.longdouble)
    sq = np.zeros(order + 1, dtype=np.longdouble)
    a[0], a[1], b[0], b[1] = y
    for k in range(order - 1):
        sq[k] = a[: k + 1] @ a[k::-1]
        cube = a[: k + 1] @ sq[k::-1]
        prev = a[k - 1] if k >= 1 else 0
        a[k + 2] = (s0 * a[k] + prev + 2 * cube) / ((k + 2) * (k + 1))
        b[k + 2] = sq[k] / ((k + 2) * (k + 1))
    return a, b


def _horner(coef, h):
    val = np.longdouble(0)
    der = np.longdouble(0)
    for k in range(len(coef) - 1, -1, -1):
        der = der * h + val
        val = val * h + coef[k]
    return val, der


def painleve_solve(s_out, s_start: float = PII_START, order: int = PII_ORDER) -> PainleveSolution:
    """Integrate q'' = s q + 2 q^3 downward from s_start with adaptive Taylor steps.

    Initial data q = Ai, q' = Ai' at s_start (the difference is O(Ai^3)),
    carried in extended precision together with I'' = q^2. The step tolerance
    is relative to |q| + |q'|: the Hastings-McLeod branch is a separatrix and
    relative errors made in the right tail are amplified by ~1e7 at s = -8.
    """
    s_out = np.sort(np.atleast_1d(np.asarray(s_out, dtype=float)))
    if s_out[0] < -10.0 or s_out[-1] > PII_MAX:
        raise ValueError(f"output points must lie in [-10, {PII_MAX}]")
    x0 = np.array([s_start], dtype=np.longdouble)
    ai, aip = airy_array(x0)
    ai, aip, x = ai[0], aip[0], x0[0]
    # int_x^inf Ai^2 = Ai'^2 - x Ai^2 and int_x^inf (y - x) Ai^2 = (2x^2 Ai^2 - 2x Ai'^2 - Ai Ai') / 3
    y = [ai, aip, (2 * x * x * ai * ai - 2 * x * aip * aip - ai * aip) / 3, -(aip * aip - x * ai * ai)]
    s_cur = x
    out = {}
    targets = [np.longdouble(t) for t in s_out[::-1]]
    h_try = np.longdouble(-0.1)
    for tgt in targets:
        while s_cur > tgt:
            a, b = _pii_coefficients(s_cur, y, order)
            scale = abs(a[0]) + abs(a[1])
            h = max(h_try, tgt - s_cur)
            for _ in range(60):
                est = abs(a[order]) * abs(h) ** order + abs(a[order - 1]) * abs(h) ** (order - 1)
                if est <= PII_TOL * scale:
                    break
                h = h * np.longdouble(0.7)
            else:
                raise ConvergenceError(f"Painleve step collapsed at s={float(s_cur)}")
            qv, qd = _horner(a, h)
            iv, idv = _horner(b, h)
            if not (np.isfinite(qv) and abs(qv) < 1e6):
                raise ConvergenceError(f"Painleve integration blew up near s={float(s_cur)}")
            y = [qv, qd, iv, idv]
            s_cur = s_cur + h if h != tgt - s_cur else tgt
            h_try = max(h * np.longdouble(1.5), np.longdouble(-0.25))
        out[float(tgt)] = (float(y[0]), float(y[1]), float(-y[2]))
    qs = np.array([out[float(t)][0] for t in s_out])
    qps = np.array([out[float(t)][1] for t in s_out])
    lf = np.array([out[float(t)][2] for t in s_out])
    return PainleveSolution(s_out, qs, qps, lf)


@dataclass(frozen=True)
class PainleveCheck:
    max_ode_residual: float
    max_match_error: float
    s_worst_match: float
    s_worst_residual: float


def painleve_hm_check(
    s_min: float, s_max: float, step: float = TABLE_STEP, m: int = DEFAULT_M
) -> PainleveCheck:
    """Compare Fredholm q with the Painleve integration on a grid over [s_min, s_max].

    The ODE residual of the Fredholm q uses the five-point second difference
    on the same grid (interior nodes only).
    """
    if not (-10.0 <= s_min < s_max <= PII_MAX):
        raise ValueError("need -10 <= s_min < s_max <= 8")
    lo = max(-10.0, s_min - 2 * step)
    grid = s_nodes(lo, s_max + 2 * step, step)
    qf = np.array([resolvent_bundle_airy(float(s), m).q[0] for s in grid])
    inside = (grid >= s_min - 1e-12) & (grid <= s_max + 1e-12)
    sol = painleve_solve(grid[inside])
    diff = np.abs(qf[inside] - sol.q)
    i = int(np.argmax(diff))

    d2 = (-qf[4:] + 16 * qf[3:-1] - 30 * qf[2:-2] + 16 * qf[1:-3] - qf[:-4]) / (12 * step * step)
    sc = grid[2:-2]
    qc = qf[2:-2]
    res = np.abs(d2 - sc * qc - 2 * qc**3)
    keep = (sc >= s_min - 1e-12) & (sc <= s_max + 1e-12)
    res = res[keep]
    j = int(np.argmax(res))
    return PainleveCheck(float(res[j]), float(diff[i]), float(grid[inside][i]), float(sc[keep][j]))
