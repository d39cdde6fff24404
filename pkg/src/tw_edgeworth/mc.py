"""Monte Carlo largest eigenvalues of GOE and GUE, with ECDF distances.

Matrix conventions give the eigenvalue density proportional to
exp(-beta/2 sum x_j^2) prod |x_j - x_k|^beta:

* beta = 1: real symmetric, diagonal N(0, 1), off-diagonal N(0, 1/2).
* beta = 2: Hermitian, diagonal N(0, 1/2), off-diagonal real and imaginary
  parts N(0, 1/4).

Random streams
--------------
Samples are produced in chunks whose size depends only on (beta, n).  Chunk
``j`` draws from ``Philox(key=seed)`` advanced by ``j * 2**128`` outputs, so
every sample is a fixed function of (seed, index) whatever the worker count.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numba
import numpy as np
from scipy.interpolate import CubicSpline

WORKERS_ENV = "TW_EDGEWORTH_WORKERS"
DENSE_LIMIT = {1: 2000, 2: 1000}
MIN_DISTANCE_COUNT = 1000
_CHUNK_MAX = 4096
_CHUNK_DOUBLES = 1 << 21


class ParameterError(ValueError):
    """Ensemble parameters outside the supported budget."""


@dataclass(frozen=True)
class EnsembleParams:
    beta: int
    n: int
    count: int
    seed: int

    def __post_init__(self):
        if self.beta not in (1, 2):
            raise ParameterError(f"beta must be 1 or 2, got {self.beta!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"n must be a positive integer, got {self.n!r}")
        if int(self.count) != self.count or self.count < 1:
            raise ParameterError(f"count must be a positive integer, got {self.count!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ParameterError(f"{WORKERS_ENV}={raw!r} is not an integer") from None
    return os.cpu_count() or 1


def chunk_size(beta: int, n: int, method: str) -> int:
    per = (2 * n) ** 2 if method == "dense" and beta == 2 else n * n if method == "dense" else 2 * n
    return int(max(1, min(_CHUNK_MAX, _CHUNK_DOUBLES // per)))


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed)).jumped(int(index)))


# ---------------------------------------------------------------------------
# eigensolver: Householder reduction, implicit QL, Sturm bisection


@numba.njit(cache=True)
def householder_tridiagonal(a, want_vectors):
    """Reduce symmetric ``a`` (overwritten) to tridiagonal form.

    Returns (d, e) with the subdiagonal in e[1:], e[0] = 0.  With
    ``want_vectors`` the orthogonal transform Q (H = Q T Q^T) is left in ``a``.
    """
    n = a.shape[0]
    d = np.zeros(n)
    e = np.zeros(n)
    for i in range(n - 1, 0, -1):
        l = i - 1
        h = 0.0
        if l > 0:
            scale = 0.0
            for k in range(l + 1):
                scale += abs(a[i, k])
            if scale == 0.0:
                e[i] = a[i, l]
            else:
                for k in range(l + 1):
                    a[i, k] /= scale
                    h += a[i, k] * a[i, k]
                f = a[i, l]
                g = -math.sqrt(h) if f >= 0.0 else math.sqrt(h)
                e[i] = scale * g
                h -= f * g
                a[i, l] = f - g
                f = 0.0
                for j in range(l + 1):
                    if want_vectors:
                        a[j, i] = a[i, j] / h
                    g = 0.0
                    for k in range(j + 1):
                        g += a[j, k] * a[i, k]
                    for k in range(j + 1, l + 1):
                        g += a[k, j] * a[i, k]
                    e[j] = g / h
                    f += e[j] * a[i, j]
                hh = f / (h + h)
                for j in range(l + 1):
                    f = a[i, j]
                    g = e[j] - hh * f
                    e[j] = g
                    for k in range(j + 1):
                        a[j, k] -= f * e[k] + g * a[i, k]
        else:
            e[i] = a[i, l]
        d[i] = h
    e[0] = 0.0
    if want_vectors:
        d[0] = 0.0
        for i in range(n):
            if d[i] != 0.0:
                for j in range(i):
                    g = 0.0
                    for k in range(i):
                        g += a[i, k] * a[k, j]
                    for k in range(i):
                        a[k, j] -= g * a[k, i]
            d[i] = a[i, i]
            a[i, i] = 1.0
            for j in range(i):
                a[j, i] = 0.0
                a[i, j] = 0.0
    else:
        for i in range(n):
            d[i] = a[i, i]
    return d, e


@numba.njit(cache=True)
def implicit_ql(d, e, z, want_vectors):
    """Eigenvalues of the tridiagonal (d, e[1:]) by QL with implicit Wilkinson shifts.

    ``d`` is overwritten with the eigenvalues (unsorted); with ``want_vectors``
    the columns of ``z`` are rotated into eigenvectors.
    """
    n = d.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    if n > 0:
        e[n - 1] = 0.0
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 2.220446049250313e-16 * dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > 60:
                raise ArithmeticError("implicit QL did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + (r if g >= 0.0 else -r))
            s = 1.0
            c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if want_vectors:
                    for k in range(z.shape[0]):
                        f = z[k, i + 1]
                        z[k, i + 1] = s * z[k, i] + c * f
                        z[k, i] = c * z[k, i] - s * f
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return d


def symmetric_eigh(h: np.ndarray, want_vectors: bool = True):
    """Eigenvalues (ascending) and optionally eigenvectors of a real symmetric matrix."""
    a = np.array(h, dtype=np.float64, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("need a square matrix")
    if a.shape[0] == 0:
        return (np.zeros(0), np.zeros((0, 0))) if want_vectors else np.zeros(0)
    d, e = householder_tridiagonal(a, want_vectors)
    z = a if want_vectors else np.zeros((0, 0))
    w = implicit_ql(d, e, z, want_vectors)
    order = np.argsort(w)
    if want_vectors:
        return w[order], z[:, order]
    return w[order]


@numba.njit(cache=True)
def _sturm_below(d, e2, x):
    # eigenvalues of the tridiagonal (d, sqrt(e2)) below x
    count = 0
    q = d[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, d.shape[0]):
        if q == 0.0:
            q = 1e-300
        q = d[i] - x - e2[i - 1] / q
        if q < 0.0:
            count += 1
    return count


@numba.njit(cache=True)
def tridiagonal_max(d, off):
    """Largest eigenvalue of the symmetric tridiagonal (d, off) by Sturm bisection."""
    n = d.shape[0]
    e2 = off * off
    lo = d[0]
    hi = d[0]
    for i in range(n):
        r = 0.0
        if i > 0:
            r += abs(off[i - 1])
        if i < n - 1:
            r += abs(off[i])
        lo = min(lo, d[i] - r)
        hi = max(hi, d[i] + r)
    span = max(abs(lo), abs(hi))
    while hi - lo > 4.0 * 2.220446049250313e-16 * span:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_below(d, e2, mid) == n:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@numba.njit(cache=True, nogil=True)
def _dense_max_batch(mats):
    out = np.empty(mats.shape[0])
    for k in range(mats.shape[0]):
        a = mats[k].copy()
        d, e = householder_tridiagonal(a, False)
        w = implicit_ql(d, e, np.zeros((0, 0)), False)
        out[k] = w.max()
    return out


@numba.njit(cache=True, nogil=True)
def _tridiagonal_max_batch(diag, off):
    out = np.empty(diag.shape[0])
    for k in range(diag.shape[0]):
        out[k] = tridiagonal_max(diag[k], off[k])
    return out


# ---------------------------------------------------------------------------
# sampling


def _dense_chunk(beta: int, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    if beta == 1:
        a = rng.standard_normal((size, n, n))
        h = 0.5 * (a + a.transpose(0, 2, 1))
    else:
        x = rng.standard_normal((size, n, n))
        y = rng.standard_normal((size, n, n))
        re = (x + x.transpose(0, 2, 1)) / (2.0 * math.sqrt(2.0))
        im = (y - y.transpose(0, 2, 1)) / (2.0 * math.sqrt(2.0))
        # Hermitian re + i im as the real symmetric [[re, -im], [im, re]]:
        # same spectrum with every eigenvalue doubled
        h = np.empty((size, 2 * n, 2 * n))
        h[:, :n, :n] = re
        h[:, n:, n:] = re
        h[:, n:, :n] = im
        h[:, :n, n:] = -im
    return _dense_max_batch(np.ascontiguousarray(h))


def _tridiagonal_chunk(beta: int, n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    # Householder reduction of the dense model: the k-th subdiagonal entry is
    # the norm of a Gaussian vector with k beta real components
    scale = 1.0 if beta == 1 else 1.0 / math.sqrt(2.0)
    diag = scale * rng.standard_normal((size, n))
    dof = beta * np.arange(n - 1, 0, -1, dtype=np.float64)
    off = np.sqrt(rng.chisquare(np.broadcast_to(dof, (size, n - 1)))) * (scale / math.sqrt(2.0))
    return _tridiagonal_max_batch(diag, np.ascontiguousarray(off))


def sample_max(
    params: EnsembleParams, method: str = "dense", workers: int | None = None
) -> np.ndarray:
    """Largest eigenvalue of ``params.count`` independent matrices.

    Parameters
    ----------
    method
        ``"dense"`` builds full matrices and runs Householder reduction plus
        implicit QL.  ``"tridiagonal"`` samples the equivalent tridiagonal
        model directly and bisects for the top eigenvalue.
    workers
        Thread count; results do not depend on it.  Defaults to the
        ``TW_EDGEWORTH_WORKERS`` environment variable or the CPU count.

    Raises
    ------
    ParameterError
        If the dense model is requested beyond its size budget.
    """
    beta, n = params.beta, int(params.n)
    if method == "dense":
        if n > DENSE_LIMIT[beta]:
            raise ParameterError(f"dense sampling supports n <= {DENSE_LIMIT[beta]} at beta={beta}")
        run = _dense_chunk
    elif method == "tridiagonal":
        run = _tridiagonal_chunk
    else:
        raise ParameterError(f"unknown method {method!r}")
    size = chunk_size(beta, n, method)
    starts = list(range(0, int(params.count), size))

    def work(j: int) -> np.ndarray:
        lo = starts[j]
        return run(beta, n, min(size, params.count - lo), chunk_rng(params.seed, j))

    workers = default_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(starts) == 1:
        parts = [work(j) for j in range(len(starts))]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, range(len(starts))))
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# ECDF distances and rates


def sup_distance(samples: np.ndarray, model: Callable[[np.ndarray], np.ndarray]) -> float:
    """Kolmogorov distance between the ECDF of sorted ``samples`` and ``model``.

    Both one-sided limits of the ECDF are compared at every jump point.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise ValueError("no samples")
    if np.any(np.diff(x) < 0):
        raise ValueError("samples must be sorted")
    f = np.asarray(model(x), dtype=np.float64)
    n = x.size
    above = np.searchsorted(x, x, side="right") / n
    below = np.searchsorted(x, x, side="left") / n
    return float(max(np.max(np.abs(above - f)), np.max(np.abs(below - f))))


def log_linear_fit(ns, errors) -> tuple[float, float, float]:
    """(slope, intercept, r^2) of log(error) against log(n)."""
    ns = np.asarray(ns, dtype=np.float64)
    err = np.asarray(errors, dtype=np.float64)
    if ns.size < 3 or ns.size != err.size:
        raise ValueError("need at least three (n, error) pairs")
    if np.any(err <= 0) or np.any(ns <= 0):
        raise ValueError("errors and n must be positive")
    x, y = np.log(ns), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / tot if tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def rate_fit(ns, errors) -> tuple[float, float]:
    """Least-squares slope and r^2 of log(error) against log(n)."""
    slope, _, r2 = log_linear_fit(ns, errors)
    return slope, r2


@dataclass
class EcdfSummary:
    """Sorted samples with the ECDF evaluator and a model distance."""

    samples: np.ndarray
    sup_distance: float = math.nan
    fit: tuple[float, float, float] | None = None
    _sorted: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not self._sorted:
            self.samples = np.sort(np.asarray(self.samples, dtype=np.float64))
            self._sorted = True

    def __call__(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size

    def against(self, model: Callable[[np.ndarray], np.ndarray]) -> float:
        if self.samples.size < MIN_DISTANCE_COUNT:
            raise ParameterError(f"distance statistics need at least {MIN_DISTANCE_COUNT} samples")
        self.sup_distance = sup_distance(self.samples, model)
        return self.sup_distance


class TabulatedCdf:
    """Cubic interpolant of CDF values on a grid, held constant beyond its ends.

    Values are clipped into [0, 1] so the result is a valid comparison model.
    """

    def __init__(self, x, values):
        x = np.asarray(x, dtype=np.float64)
        v = np.asarray(values, dtype=np.float64)
        self.lo, self.hi = float(x[0]), float(x[-1])
        self.v_lo, self.v_hi = float(v[0]), float(v[-1])
        self._spline = CubicSpline(x, v)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        out = self._spline(np.clip(t, self.lo, self.hi))
        out = np.where(t < self.lo, self.v_lo, np.where(t > self.hi, self.v_hi, out))
        return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# sample dumps and summaries

_HEADER = struct.Struct("<Q")
SUMMARY_COLUMNS = ("n", "c", "beta", "count", "seed", "model", "sup_distance")


def write_samples(path, samples: np.ndarray) -> None:
    """Little-endian float64 samples preceded by a little-endian uint64 count."""
    arr = np.ascontiguousarray(samples, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(arr.size))
        fh.write(arr.tobytes())


def read_samples(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (count,) = _HEADER.unpack(fh.read(_HEADER.size))
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != count:
        raise ValueError(f"header says {count} samples, file holds {data.size}")
    return data.astype(np.float64)


# ---------------------------------------------------------------------------
# model CDFs in the unscaled variable t

MODEL_TERMS = {"limit": 0, "two_term": 1, "three_term": 2}


def expansion_cdf(beta: int, n: int, c: float, model: str, tables) -> TabulatedCdf:
    """CDF of the largest eigenvalue predicted by a truncated expansion.

    ``model`` is ``"limit"``, ``"two_term"`` or ``"three_term"``; values come
    from the nodes of ``tables`` and are mapped to t = tau(n, c, s).  For
    beta = 1 the squared expansion is clipped at 0 before its square root.
    """
    from .edgeworth import goe_sq_at, gue_at, tau

    if model not in MODEL_TERMS:
        raise ParameterError(f"unknown model {model!r}")
    terms = MODEL_TERMS[model]
    at = gue_at if beta == 2 else goe_sq_at
    vals = []
    for pt in tables.points:
        v = at(pt, n, c)
        h = n ** (-1.0 / 3.0)
        vals.append(v.leading + (v.coeff13 * h if terms >= 1 else 0.0) + (v.coeff23 * h * h if terms >= 2 else 0.0))
    vals = np.asarray(vals)
    if beta == 1:
        vals = np.sqrt(np.clip(vals, 0.0, None))
    return TabulatedCdf(tau(n, c, tables.s_grid), vals)
