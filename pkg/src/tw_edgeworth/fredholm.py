"""Nystrom discretization of the Airy and Hermite kernels on (s, inf).

All functionals of (I - K)^{-1} used downstream live here: Fredholm
determinants, boundary values q_i, p_i of the resolved functions and the inner
products u_i, v_i, vtilde_i, w_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import linalg

from .specfun import airy_array, c_phi, hermite_phis, hermite_tail_integrals

DEFAULT_M = 120
AIRY_MAP_SCALE = 10.0
HERMITE_TAIL_TOL = 1e-18
EXTENDED_BELOW = -4.0


class NumericError(ArithmeticError):
    """A kernel or solve produced non-finite values."""


class MapKind(str, Enum):
    algebraic = "algebraic"
    tangent = "tangent"


@dataclass(frozen=True)
class QuadratureGrid:
    s: float
    m: int
    nodes: np.ndarray
    weights: np.ndarray
    map_kind: MapKind = MapKind.tangent

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


@lru_cache(maxsize=None)
def _gauss_legendre(m: int) -> tuple[np.ndarray, np.ndarray]:
    xi, wi = np.polynomial.legendre.leggauss(m)
    xi.setflags(write=False)
    wi.setflags(write=False)
    return xi, wi


@lru_cache(maxsize=None)
def _gauss_legendre_ld(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule refined by Newton steps in extended precision."""
    x0, _ = np.polynomial.legendre.leggauss(m)
    x = x0.astype(np.longdouble)
    for _ in range(3):
        p0 = np.ones_like(x)
        p1 = x.copy()
        for k in range(2, m + 1):
            p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
        dp = m * (x * p1 - p0) / (x * x - 1)
        x = x - p1 / dp
    p0 = np.ones_like(x)
    p1 = x.copy()
    for k in range(2, m + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = m * (x * p1 - p0) / (x * x - 1)
    w = 2 / ((1 - x * x) * dp * dp)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _check_m(m: int) -> None:
    if not (20 <= m <= 400):
        raise ValueError(f"node count m={m} outside [20, 400]")


def build_grid(s: float, m: int = DEFAULT_M, scale: float = AIRY_MAP_SCALE) -> QuadratureGrid:
    """Gauss-Legendre nodes on (s, inf) through x = s + L tan(pi (xi + 1) / 4)."""
    _check_m(m)
    xi, wi = _gauss_legendre(m)
    theta = math.pi * (xi + 1.0) / 4.0
    nodes = s + scale * np.tan(theta)
    weights = wi * scale * (math.pi / 4.0) / np.cos(theta) ** 2
    return QuadratureGrid(float(s), m, nodes, weights, MapKind.tangent)


def _tangent_nodes_ld(s: float, m: int, scale: float = AIRY_MAP_SCALE):
    xi, wi = _gauss_legendre_ld(m)
    pi = np.longdouble("3.14159265358979323846264338327950288")
    theta = pi * (xi + 1) / 4
    scale = np.longdouble(scale)
    c = np.cos(theta)
    return np.longdouble(s) + scale * np.tan(theta), wi * scale * (pi / 4) / (c * c)


def panel_grid(a: float, b: float, m: int) -> QuadratureGrid:
    """Plain Gauss-Legendre on the finite panel [a, b]."""
    _check_m(m)
    xi, wi = _gauss_legendre(m)
    half = 0.5 * (b - a)
    return QuadratureGrid(float(a), m, a + half * (xi + 1.0), half * wi, MapKind.algebraic)


# ---------------------------------------------------------------------------
# kernels


class KernelKind(str, Enum):
    airy = "airy"
    hermite = "hermite"
    zero = "zero"


@dataclass(frozen=True)
class KernelSpec:
    """Which kernel to discretize.

    ``scale`` only matters for the hermite kind: when set, the driving
    functions phi, psi carry the factor (n/2)^{1/4}.
    """

    kind: KernelKind
    n: int = 0
    scale: bool = True

    def __post_init__(self):
        if self.kind == KernelKind.hermite and self.n < 1:
            raise ValueError("hermite kernel needs n >= 1")


def _cd_kernel(x, y, fx, gx, fy, gy, diag):
    """(f(x) g(y) - g(x) f(y)) / (x - y) with a supplied diagonal."""
    dx = x[:, None] - y[None, :]
    same = dx == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        k = (fx[:, None] * gy[None, :] - gx[:, None] * fy[None, :]) / dx
    if np.any(same):
        rows, cols = np.nonzero(same)
        k[rows, cols] = diag[rows]
    return k


def _airy_clipped(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Ai(40) ~ 1e-74; the far nodes of the tangent map carry exact zeros
    far = x > 40.0
    ai, aip = airy_array(np.where(far, 40.0, x))
    return np.where(far, 0.0, ai), np.where(far, 0.0, aip)


def airy_kernel(x, y=None) -> np.ndarray:
    """Airy kernel matrix K(x_i, y_j); diagonal Ai'(x)^2 - x Ai(x)^2."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ax, dax = _airy_clipped(x)
    if y is None:
        y, ay, day = x, ax, dax
    else:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        ay, day = _airy_clipped(y)
    diag = dax**2 - x * ax**2
    return _cd_kernel(x, y, ax, dax, ay, day, diag)


@dataclass(frozen=True)
class HermiteFunctions:
    """phi = (n/2)^{1/4} phi_n and psi = (n/2)^{1/4} phi_{n-1} at points x."""

    x: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    diag: np.ndarray  # K_n(x, x)

    @classmethod
    def at(cls, n: int, x, scale: bool = True) -> HermiteFunctions:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        count = min(3, n + 1)
        phis = hermite_phis(n, x, count)
        fn = phis[-1]
        fn1 = phis[-2]
        fn2 = phis[-3] if count == 3 else np.zeros_like(x)
        diag = n * fn1**2 - math.sqrt(n * (n - 1.0)) * fn * fn2
        c = (n / 2.0) ** 0.25 if scale else 1.0
        return cls(x, c * fn, c * fn1, diag)


def hermite_kernel(n: int, x, y=None) -> np.ndarray:
    """Hermite kernel sum_{k<n} phi_k(x) phi_k(y) in Christoffel-Darboux form."""
    hx = HermiteFunctions.at(n, x)
    hy = hx if y is None else HermiteFunctions.at(n, y)
    return _cd_kernel(hx.x, hy.x, hx.phi, hx.psi, hy.phi, hy.psi, hx.diag)


def kernel_matrix(kernel: KernelSpec, x, y=None) -> np.ndarray:
    if kernel.kind == KernelKind.airy:
        return airy_kernel(x, y)
    if kernel.kind == KernelKind.hermite:
        return hermite_kernel(kernel.n, x, y)
    x = np.atleast_1d(x)
    return np.zeros((len(x), len(x) if y is None else len(np.atleast_1d(y))))


def _check_finite(mat: np.ndarray, nodes: np.ndarray) -> None:
    bad = ~np.isfinite(mat)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise NumericError(f"non-finite kernel value at nodes x={float(nodes[i])!r}, y={float(nodes[j])!r}")


def nystrom_matrix(kernel: KernelSpec, grid: QuadratureGrid) -> np.ndarray:
    """Symmetrized matrix I - W^{1/2} K W^{1/2}."""
    k = kernel_matrix(kernel, grid.nodes)
    _check_finite(k, grid.nodes)
    sw = np.sqrt(grid.weights)
    return np.eye(grid.m) - sw[:, None] * k * sw[None, :]


def fredholm_det(kernel: KernelSpec, grid: QuadratureGrid) -> float:
    """det(I - K) on the grid's interval, via LU of the symmetrized Nystrom matrix."""
    a = nystrom_matrix(kernel, grid)
    lu, piv = linalg.lu_factor(a, check_finite=False)
    diag = np.diag(lu)
    sign = (-1.0) ** np.count_nonzero(piv != np.arange(len(piv)))
    return float(sign * np.prod(diag))


def _lu_factor_ld(a: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Partial-pivot LU in the dtype of ``a``; returns (lu, row order, swap count)."""
    lu = np.array(a, copy=True)
    m = lu.shape[0]
    order = np.arange(m)
    swaps = 0
    for k in range(m - 1):
        piv = k + int(np.argmax(np.abs(lu[k:, k])))
        if piv != k:
            lu[[k, piv]] = lu[[piv, k]]
            order[[k, piv]] = order[[piv, k]]
            swaps += 1
        col = lu[k + 1 :, k]
        col /= lu[k, k]
        lu[k + 1 :, k + 1 :] -= col[:, None] * lu[k, None, k + 1 :]
    return lu, order, swaps


def _lu_solve_ld(fact, b: np.ndarray) -> np.ndarray:
    lu, order, _ = fact
    y = np.array(b[order], copy=True)
    m = lu.shape[0]
    for k in range(1, m):
        y[k] -= lu[k, :k] @ y[:k]
    for k in range(m - 1, -1, -1):
        y[k] = (y[k] - lu[k, k + 1 :] @ y[k + 1 :]) / lu[k, k]
    return y


def _lu_det_ld(fact) -> np.longdouble:
    lu, _, swaps = fact
    return np.prod(np.diag(lu)) * (-1) ** swaps


# ---------------------------------------------------------------------------
# resolvent functionals for the Airy kernel


@dataclass(frozen=True)
class ResolventBundle:
    """Airy-limit quantities at one point s (index i = 0, 1, 2 is the x^i weight).

    q_i = Q_i(s; s), p_i = P_i(s; s) with Q_i = (I - K)^{-1} x^i Ai and
    P_i = (I - K)^{-1} x^i Ai'; u_i = (Q_i, Ai), v_i = (P_i, Ai),
    vtilde_i = (Q_i, Ai'), w_i = (P_i, Ai').
    """

    s: float
    F2: float
    q: np.ndarray
    p: np.ndarray
    u: np.ndarray
    v: np.ndarray
    vtilde: np.ndarray
    w: np.ndarray
    m: int = field(default=DEFAULT_M, compare=False)
    r_ss: float = field(default=math.nan, compare=False)

    def as_row(self) -> dict[str, float]:
        return {
            "s": self.s,
            "F2": self.F2,
            "q": self.q[0],
            "p": self.p[0],
            "u0": self.u[0],
            "v0": self.v[0],
            "w0": self.w[0],
            "q1": self.q[1],
            "p1": self.p[1],
            "u1": self.u[1],
            "v1": self.v[1],
            "w1": self.w[1],
            "q2": self.q[2],
            "p2": self.p[2],
            "u2": self.u[2],
        }


def _solve_symmetrized(a: np.ndarray, sw: np.ndarray, rhs: np.ndarray):
    """Solve (I - K W) f = g through the symmetrized system; returns f at nodes."""
    lu = linalg.lu_factor(a, check_finite=False)
    y = linalg.lu_solve(lu, sw[:, None] * rhs, check_finite=False)
    f = y / sw[:, None]
    if not np.all(np.isfinite(f)):
        raise NumericError("resolvent solve produced non-finite values")
    return lu, f


def resolvent_bundle_airy(s: float, m: int = DEFAULT_M, extended: bool | None = None) -> ResolventBundle:
    """All Airy-limit functionals at s from one Nystrom solve with six right-hand sides.

    With ``extended`` the discretization, Airy values and LU run in
    ``np.longdouble`` and results are rounded to float64. Below s ~ -5 the
    operator I - K is nearly singular (det ~ 1e-19 at s = -8) and double
    precision loses up to six digits of q there. The default (None) switches
    to extended precision for s < EXTENDED_BELOW only, since it is about ten
    times slower.
    """
    s = float(s)
    if not (-10.0 <= s <= 40.0):
        raise ValueError(f"s={s} outside [-10, 40]")
    _check_m(m)
    if extended is None:
        extended = s < EXTENDED_BELOW
    return _bundle_airy(s, int(m), bool(extended))


@lru_cache(maxsize=16384)
def _bundle_airy(s: float, m: int, extended: bool) -> ResolventBundle:
    if extended:
        x, w = _tangent_nodes_ld(s, m)
        s_arr = np.array([s], dtype=np.longdouble)
    else:
        grid = build_grid(s, m)
        x, w = grid.nodes, grid.weights
        s_arr = np.array([s])
    ai, aip = _airy_clipped(x)
    kmat = _cd_kernel(x, x, ai, aip, ai, aip, aip**2 - x * ai**2)
    _check_finite(kmat, x)
    sw = np.sqrt(w)
    a = np.eye(m, dtype=x.dtype) - sw[:, None] * kmat * sw[None, :]
    powers = np.stack([np.ones_like(x), x, x * x])
    ai_s, aip_s = airy_array(s_arr)
    ks = _cd_kernel(s_arr, x, ai_s, aip_s, ai, aip, aip_s**2 - s_arr * ai_s**2)[0]  # K(s, x_j)
    # columns: x^i Ai, x^i Ai', K(., s) for R(x_j, s)
    rhs = np.concatenate([powers * ai, powers * aip, ks[None, :]]).T * sw[:, None]
    if extended:
        fact = _lu_factor_ld(a)
        sol = _lu_solve_ld(fact, rhs) / sw[:, None]
        F2 = float(_lu_det_ld(fact))
    else:
        lu = linalg.lu_factor(a, check_finite=False)
        sol = linalg.lu_solve(lu, rhs, check_finite=False) / sw[:, None]
        F2 = float(np.prod(np.diag(lu[0])) * (-1.0) ** np.count_nonzero(lu[1] != np.arange(m)))
    if not np.all(np.isfinite(sol)):
        raise NumericError("resolvent solve produced non-finite values")

    s_pow = np.concatenate([s_arr**0, s_arr, s_arr * s_arr])
    g_s = np.concatenate([s_pow * ai_s[0], s_pow * aip_s[0]])
    at_s = g_s + (ks * w) @ sol[:, :6]
    Qs, Ps = sol[:, :3], sol[:, 3:6]
    u = (w * ai) @ Qs
    vt = (w * aip) @ Qs
    v = (w * ai) @ Ps
    ww = (w * aip) @ Ps
    # R(s, s) = K(s, s) + sum_j K(s, x_j) w_j R(x_j, s)
    r_ss = aip_s[0] ** 2 - s_arr[0] * ai_s[0] ** 2 + (ks * w) @ sol[:, 6]

    def f64(arr):
        return np.asarray(arr, dtype=np.float64)

    return ResolventBundle(s, F2, f64(at_s[:3]), f64(at_s[3:]), f64(u), f64(v), f64(vt), f64(ww), m, float(r_ss))


def f2_det(s: float, m: int = DEFAULT_M, extended: bool = False) -> float:
    """Tracy-Widom GUE distribution F2(s) = det(I - K_Airy) on (s, inf)."""
    if extended:
        return resolvent_bundle_airy(s, m, extended=True).F2
    return fredholm_det(KernelSpec(KernelKind.airy), build_grid(s, m))


# ---------------------------------------------------------------------------
# Hermite kernel


@lru_cache(maxsize=None)
def hermite_cutoff(n: int) -> float:
    """Point beyond which |phi_n|, |phi_{n-1}| stay below 1e-18 (relative to their max)."""
    edge = math.sqrt(2.0 * n + 1.0)
    xs = np.linspace(0.0, edge + 20.0, 4001)
    phis = hermite_phis(n, xs, 2)
    mag = np.max(np.abs(phis), axis=0)
    big = np.nonzero(mag > HERMITE_TAIL_TOL * mag.max())[0]
    return float(xs[min(big[-1] + 1, len(xs) - 1)])


def hermite_grid(n: int, t: float, m: int = DEFAULT_M) -> QuadratureGrid:
    upper = hermite_cutoff(n)
    if t >= upper:
        upper = t + 1.0
    return panel_grid(t, upper, m)


@dataclass(frozen=True)
class HermiteSolve:
    """Nystrom solve of the Hermite kernel on (t, inf) and helpers for extension."""

    n: int
    t: float
    grid: QuadratureGrid
    funcs: HermiteFunctions
    lu: tuple
    sw: np.ndarray
    det: float

    @classmethod
    def build(cls, n: int, t: float, m: int = DEFAULT_M) -> HermiteSolve:
        grid = hermite_grid(n, t, m)
        funcs = HermiteFunctions.at(n, grid.nodes)
        kmat = _cd_kernel(funcs.x, funcs.x, funcs.phi, funcs.psi, funcs.phi, funcs.psi, funcs.diag)
        _check_finite(kmat, grid.nodes)
        sw = np.sqrt(grid.weights)
        a = np.eye(grid.m) - sw[:, None] * kmat * sw[None, :]
        lu = linalg.lu_factor(a, check_finite=False)
        det = float(np.prod(np.diag(lu[0])) * (-1.0) ** np.count_nonzero(lu[1] != np.arange(grid.m)))
        return cls(n, float(t), grid, funcs, lu, sw, det)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Values at the nodes of (I - K)^{-1} g for columns g of rhs."""
        rhs = np.asarray(rhs, dtype=float)
        one = rhs.ndim == 1
        r = rhs[:, None] if one else rhs
        y = linalg.lu_solve(self.lu, self.sw[:, None] * r, check_finite=False)
        f = y / self.sw[:, None]
        if not np.all(np.isfinite(f)):
            raise NumericError("resolvent solve produced non-finite values")
        return f[:, 0] if one else f

    def kernel_row(self, x: float) -> np.ndarray:
        """K(x, x_j) for the grid nodes."""
        hx = HermiteFunctions.at(self.n, np.array([x]))
        f = self.funcs
        return _cd_kernel(hx.x, f.x, hx.phi, hx.psi, f.phi, f.psi, hx.diag)[0]

    def extend(self, x: float, g_at_x: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Nystrom extension g(x) + sum_j K(x, x_j) w_j f(x_j)."""
        return g_at_x + (self.kernel_row(x) * self.grid.weights) @ values

    def inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        return (self.grid.weights * g) @ f


@lru_cache(maxsize=65536)
def _hermite_qp(n: int, t: float, m: int) -> tuple[float, float]:
    hs = HermiteSolve.build(n, t, m)
    rhs = np.stack([hs.funcs.phi, hs.funcs.psi], axis=1)
    sol = hs.solve(rhs)
    here = HermiteFunctions.at(n, np.array([t]))
    q, p = hs.extend(t, np.array([here.phi[0], here.psi[0]]), sol)
    return float(q), float(p)


def resolvent_bundle_hermite(n: int, t: float, m: int = DEFAULT_M) -> tuple[float, float]:
    """q_n(t) = Q_n(t; t) and p_n(t) = P_n(t; t) with the scaled phi, psi."""
    if n < 1 or n % 2:
        raise ValueError("hermite resolvent needs even positive n")
    if n > 400:
        raise ValueError("n above 400 not supported by the dense Nystrom solve")
    return _hermite_qp(int(n), float(t), int(m))


def eps_phi(n: int, x) -> np.ndarray | float:
    """(eps phi)(x) = int_{-inf}^x phi - c_phi = c_phi - int_x^inf phi, phi scaled."""
    if n < 1 or n % 2:
        raise ValueError("eps_phi needs even positive n")
    xa = np.asarray(x, dtype=float)
    tail = hermite_tail_integrals(n, xa)[n]
    val = c_phi(n) - (n / 2.0) ** 0.25 * tail
    return float(val) if np.ndim(val) == 0 else val
