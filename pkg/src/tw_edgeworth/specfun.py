"""Airy functions, orthonormal Hermite functions and the constant c_phi.

Everything here is pure numpy; no special-function library is used.

Airy evaluation
---------------
For ``|x|`` large the classical asymptotic expansions are used directly
(x >= 10 decaying, x <= -12 oscillatory; the truncation error there is below
1e-17 relative).  In between, values are carried by exact Taylor stepping of
``y'' = x y`` from ``x = 10`` down to ``x = -12`` on a table of anchors with
spacing 1/8.  Downward stepping is the stable direction for Ai.  Any point in
``[-12, 10]`` is then reached by one short Taylor step from its nearest anchor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

AIRY_RANGE = (-40.0, 40.0)

AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))

_ASYM_POS = 10.0
_ASYM_NEG = -12.0
_ANCHOR_STEP = 0.125
_TAYLOR_TERMS = 40


class AiryRangeError(ValueError):
    """Raised when an Airy argument lies outside the supported range."""


@dataclass(frozen=True)
class AiryPair:
    ai: float
    aip: float


# ---------------------------------------------------------------------------
# asymptotic expansions


_PI_LD = np.longdouble("3.14159265358979323846264338327950288")


def _pi(dtype):
    return _PI_LD.astype(dtype)


@lru_cache(maxsize=None)
def _uv_coefficients(count: int, dtype=np.float64) -> tuple[np.ndarray, np.ndarray]:
    u = np.empty(count, dtype=dtype)
    u[0] = 1
    for k in range(1, count):
        u[k] = u[k - 1] * dtype((6 * k - 5) * (6 * k - 3) * (6 * k - 1)) / dtype((2 * k - 1) * 216 * k)
    k = np.arange(count)
    v = -(6 * k + 1).astype(dtype) / (6 * k - 1).astype(dtype) * u
    return u, v


def _airy_asymptotic_pos(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dt = x.dtype.type
    zeta = dt(2) / dt(3) * x * np.sqrt(x)
    u, v = _uv_coefficients(25, dt)
    su = np.zeros_like(x)
    sv = np.zeros_like(x)
    inv = -1 / zeta
    for k in range(24, -1, -1):
        su = su * inv + u[k]
        sv = sv * inv + v[k]
    x14 = np.sqrt(np.sqrt(x))
    pref = np.exp(-zeta) / (2 * np.sqrt(_pi(dt)))
    return pref / x14 * su, -pref * x14 * sv


def _airy_asymptotic_neg(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dt = x.dtype.type
    ax = -x
    zeta = dt(2) / dt(3) * ax * np.sqrt(ax)
    u, v = _uv_coefficients(30, dt)
    z2 = -1 / (zeta * zeta)
    ue = np.zeros_like(x)
    uo = np.zeros_like(x)
    ve = np.zeros_like(x)
    vo = np.zeros_like(x)
    for k in range(13, -1, -1):
        ue = ue * z2 + u[2 * k]
        uo = uo * z2 + u[2 * k + 1]
        ve = ve * z2 + v[2 * k]
        vo = vo * z2 + v[2 * k + 1]
    uo /= zeta
    vo /= zeta
    theta = zeta - _pi(dt) / 4
    c, s = np.cos(theta), np.sin(theta)
    x14 = np.sqrt(np.sqrt(ax))
    rpi = 1 / np.sqrt(_pi(dt))
    ai = rpi / x14 * (c * ue + s * uo)
    aip = rpi * x14 * (s * ve - c * vo)
    return ai, aip


# ---------------------------------------------------------------------------
# Taylor stepping for y'' = x y


def _taylor_step(x0, y, yp, h, nterms: int = _TAYLOR_TERMS):
    """Advance (y, y') of the Airy equation from x0 to x0 + h (vectorized).

    Uses D_k = a_k h^(k-1) where y(x0 + h) = sum a_k h^k, so that
    y = a_0 + h * sum_{k>=1} D_k and y' = sum_{k>=1} k D_k.
    """
    h2 = h * h
    h3 = h2 * h
    d1 = yp
    d2 = x0 * y * h / 2
    d3 = (x0 * yp + y) * h2 / 6
    ysum = d1 + d2 + d3
    dsum = d1 + 2 * d2 + 3 * d3
    # D_{k+2} = (x0 h^2 D_k + h^3 D_{k-1}) / ((k+2)(k+1)) for k >= 2
    dk_m1, dk, dk_p1 = d1, d2, d3
    for k in range(2, nterms):
        nxt = (x0 * h2 * dk + h3 * dk_m1) / ((k + 2) * (k + 1))
        ysum = ysum + nxt
        dsum = dsum + (k + 2) * nxt
        dk_m1, dk, dk_p1 = dk, dk_p1, nxt
    return y + h * ysum, dsum


@lru_cache(maxsize=None)
def _anchors(dtype=np.float64) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    count = int(round((_ASYM_POS - _ASYM_NEG) / _ANCHOR_STEP)) + 1
    xs = (dtype(_ASYM_POS) - dtype(_ANCHOR_STEP) * np.arange(count)).astype(dtype)
    ai = np.empty(count, dtype=dtype)
    aip = np.empty(count, dtype=dtype)
    a0, d0 = _airy_asymptotic_pos(xs[:1])
    ai[0], aip[0] = a0[0], d0[0]
    step = -dtype(_ANCHOR_STEP)
    for i in range(1, count):
        ai[i], aip[i] = _taylor_step(xs[i - 1], ai[i - 1], aip[i - 1], step)
    order = np.argsort(xs)
    return xs[order], ai[order], aip[order]


def airy_array(x) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized Ai(x), Ai'(x) for real x in [-40, 40].

    Computes in the precision of ``x``: float64 by default, ``np.longdouble``
    input gives extended-precision values.

    Raises
    ------
    AiryRangeError
        If any argument lies outside [-40, 40] or is not finite.
    """
    x = np.asarray(x)
    if x.dtype != np.longdouble:
        x = x.astype(np.float64)
    if not np.all(np.isfinite(x)) or np.any(x < AIRY_RANGE[0]) or np.any(x > AIRY_RANGE[1]):
        raise AiryRangeError(f"airy argument outside {AIRY_RANGE}")
    ai = np.empty_like(x)
    aip = np.empty_like(x)

    pos = x >= _ASYM_POS
    if np.any(pos):
        ai[pos], aip[pos] = _airy_asymptotic_pos(x[pos])
    neg = x <= _ASYM_NEG
    if np.any(neg):
        ai[neg], aip[neg] = _airy_asymptotic_neg(x[neg])
    mid = ~(pos | neg)
    if np.any(mid):
        xs, ya, yd = _anchors(x.dtype.type)
        xm = x[mid]
        idx = np.clip(np.rint((xm - xs[0]) / _ANCHOR_STEP).astype(int), 0, len(xs) - 1)
        ai[mid], aip[mid] = _taylor_step(xs[idx], ya[idx], yd[idx], xm - xs[idx])
    return ai, aip


def airy(x: float) -> AiryPair:
    """Ai(x) and Ai'(x) for a scalar x in [-40, 40]."""
    ai, aip = airy_array(np.array([float(x)]))
    return AiryPair(float(ai[0]), float(aip[0]))


# ---------------------------------------------------------------------------
# Hermite functions

_RESCALE = 1e150


def hermite_log_phi(k: int, x, count: int = 1):
    """Log-scaled Hermite functions phi_{k-count+1}, ..., phi_k at x.

    Returns ``(values, logscale)`` where ``values`` has shape ``(count,) + x.shape``
    and the true functions are ``values * exp(logscale)``.  Nothing overflows
    for k up to several thousand.
    """
    if k < 0:
        raise ValueError("degree must be nonnegative")
    if count < 1 or count > k + 1:
        raise ValueError("count must lie in [1, k+1]")
    x = np.asarray(x, dtype=float)
    logscale = -0.5 * x * x - 0.25 * math.log(math.pi)
    out = np.empty((count,) + x.shape)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    first = k - count + 1
    if first == 0:
        out[0] = cur
    for j in range(k):
        # phi_{j+1} = sqrt(2/(j+1)) x phi_j - sqrt(j/(j+1)) phi_{j-1}
        nxt = math.sqrt(2.0 / (j + 1)) * x * cur - math.sqrt(j / (j + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if np.any(big):
            scale = np.where(big, _RESCALE, 1.0)
            cur = cur / scale
            prev = prev / scale
            out[: max(0, j + 1 - first)] /= scale
            logscale = logscale + np.log(scale)
        if j + 1 >= first:
            out[j + 1 - first] = cur
    return out, logscale


def hermite_phis(k: int, x, count: int = 1) -> np.ndarray:
    """phi_{k-count+1}, ..., phi_k at x, shape ``(count,) + x.shape``.

    Magnitudes below ~1e-300 come back as exact zeros; use
    :func:`hermite_log_phi` when the deep tail matters.
    """
    vals, logscale = hermite_log_phi(k, x, count)
    with np.errstate(under="ignore"):
        return vals * np.exp(logscale)


def hermite_phi(k: int, x):
    """Orthonormal harmonic-oscillator function H_k(x) e^{-x^2/2} / (2^k k! sqrt(pi))^{1/2}."""
    if k > 2000:
        raise ValueError("degree above 2000 not supported")
    val = hermite_phis(k, x, 1)[0]
    return float(val) if np.ndim(val) == 0 else val


def hermite_tail_integrals(k: int, x) -> np.ndarray:
    """I_j(x) = int_x^inf phi_j(y) dy for j = 0..k, shape ``(k+1,) + x.shape``.

    Uses I_{j+1} = sqrt(j/(j+1)) I_{j-1} + sqrt(2/(j+1)) phi_j(x), which follows
    from phi_j' = sqrt(j/2) phi_{j-1} - sqrt((j+1)/2) phi_{j+1}.
    ``x = -inf`` is allowed and gives the full-line integrals.
    """
    x = np.asarray(x, dtype=float)
    phis = np.zeros((k + 1,) + x.shape)
    finite = np.isfinite(x)
    xf = np.where(finite, x, 0.0)
    if k >= 0:
        phis[:] = np.where(finite, hermite_phis(k, xf, k + 1), 0.0)
    out = np.empty((k + 1,) + x.shape)
    out[0] = math.pi**-0.25 * math.sqrt(math.pi / 2.0) * _erfc(x / math.sqrt(2.0))
    if k >= 1:
        out[1] = math.sqrt(2.0) * phis[0]
    for j in range(1, k):
        out[j + 1] = math.sqrt(j / (j + 1.0)) * out[j - 1] + math.sqrt(2.0 / (j + 1)) * phis[j]
    return out


def _erfc(x):
    return np.vectorize(math.erfc, otypes=[float])(x)


# ---------------------------------------------------------------------------
# c_phi


def log_c_phi(n: int) -> float:
    if n <= 0 or n % 2:
        raise ValueError("c_phi is defined here for even positive n only")
    return (
        0.25 * math.log(math.pi * n)
        - (0.75 + n / 2.0) * math.log(2.0)
        + 0.5 * math.lgamma(n + 1.0)
        - math.lgamma(n / 2.0 + 1.0)
    )


def c_phi(n: int) -> float:
    """(pi n)^{1/4} 2^{-3/4-n/2} sqrt(n!) / (n/2)!  for even n.

    Equals eps*phi(+inf) = (1/2) int phi with phi = (n/2)^{1/4} phi_n.
    """
    if n > 2000:
        raise ValueError("n above 2000 not supported")
    return math.exp(log_c_phi(n))


def c_phi_integral(n: int) -> float:
    """c_phi from its integral characterization (1/2) int (n/2)^{1/4} phi_n."""
    if n <= 0 or n % 2:
        raise ValueError("c_phi is defined here for even positive n only")
    full = hermite_tail_integrals(n, np.array(-np.inf))[n]
    return 0.5 * (n / 2.0) ** 0.25 * float(full)
