"""Finite-n expansions of the largest-eigenvalue distributions.

Both expansions are evaluated at the soft-edge point t = tau(n, c, s) and
return each order separately.  The GOE result is the expansion of the
square F_{n,1}(t)^2; :func:`goe_expansion_sqrt` takes its square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .finite_n import tau, tau_inverse
from .fredholm import DEFAULT_M
from .limits import (
    SQRT2,
    LimitPoint,
    LimitTables,
    _over_mu2,
    e_c1_point,
    e_c2_bundle,
    first_order_goe,
    limit_point,
    write_rows_csv,
)

__all__ = [
    "EXPANSION_COLUMNS",
    "ExpansionValue",
    "goe_alt_coefficient",
    "goe_sq_alt_at",
    "goe_sq_at",
    "gue_at",
    "goe_expansion_sqrt",
    "goe_sq_expansion",
    "goe_sq_expansion_alt",
    "gue_expansion",
    "tau",
    "tau_inverse",
    "write_expansions_csv",
]

EXPANSION_COLUMNS = ("s", "n", "c", "leading", "coeff13", "coeff23", "total")


@dataclass(frozen=True)
class ExpansionValue:
    """Leading term plus the n^{-1/3} and n^{-2/3} coefficients at (n, c, s).

    ``total`` is the truncated series, unclamped: at moderate n it can leave
    [0, 1] slightly.
    """

    leading: float
    coeff13: float
    coeff23: float
    n: int
    c: float
    s: float

    @property
    def total(self) -> float:
        h = self.n ** (-1.0 / 3.0)
        return self.leading + self.coeff13 * h + self.coeff23 * h * h

    @property
    def first_order(self) -> float:
        """Leading term plus the n^{-1/3} correction only."""
        return self.leading + self.coeff13 * self.n ** (-1.0 / 3.0)

    def row(self) -> dict[str, float]:
        return {
            "s": self.s, "n": self.n, "c": self.c, "leading": self.leading,
            "coeff13": self.coeff13, "coeff23": self.coeff23, "total": self.total,
        }


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")


def _point(s: float, m: int, tables: LimitTables | None) -> LimitPoint:
    # tables only serve their own nodes; anything else is computed afresh
    if tables is not None:
        try:
            return tables.point(s)
        except KeyError:
            pass
    return limit_point(s, m)


def gue_at(pt: LimitPoint, n: int, c: float) -> ExpansionValue:
    """GUE expansion from a prepared limit point."""
    _check_n(n)
    f2 = pt.F2
    return ExpansionValue(f2, f2 * c * pt.u, -f2 * e_c2_bundle(pt.bundle, c) / 20.0, int(n), float(c), pt.s)


def goe_sq_at(pt: LimitPoint, n: int, c: float) -> ExpansionValue:
    """GOE squared expansion from a prepared limit point."""
    _check_n(n)
    f2 = pt.F2
    return ExpansionValue(
        f2 * math.exp(-pt.mu), f2 * first_order_goe(pt, c), f2 * e_c1_point(pt, c),
        int(n), float(c), pt.s,
    )


def gue_expansion(
    n: int, c: float, s: float, m: int = DEFAULT_M, tables: LimitTables | None = None
) -> ExpansionValue:
    """Three-term expansion of F_{n,2}(tau(n, c, s)).

    leading = F2(s), coeff13 = c u(s) F2(s), coeff23 = -F2(s) E_{c,2}(s) / 20.

    Raises
    ------
    ValueError
        If s lies outside the tabulated range or n is not a positive integer.
    """
    _check_n(n)
    return gue_at(_point(s, m, tables), n, c)


def goe_sq_expansion(
    n: int, c: float, s: float, m: int = DEFAULT_M, tables: LimitTables | None = None
) -> ExpansionValue:
    """Three-term expansion of F_{n,1}(tau(n, c, s))^2.

    leading = F2 e^-mu, coeff13 = F2 [c (q + u) e^-mu - nu (1 - e^-mu) / (2 mu)],
    coeff23 = F2 E_{c,1}.  Errors as for :func:`gue_expansion`.
    """
    _check_n(n)
    return goe_sq_at(_point(s, m, tables), n, c)


def goe_alt_coefficient(pt: LimitPoint, c: float) -> float:
    """n^{-2/3} bracket of the GOE expansion in its alpha form.

    Same leading pieces as E_{c,1}, but the e^-mu, e^-2mu and cosh/sinh groups
    are written in alpha, nu and q before eliminating alpha.
    """
    mu, nu, al = pt.mu, pt.nu, pt.alpha
    q, p, u = pt.q, pt.p, pt.u
    et = pt.eta(c)
    c2 = c * c
    e1 = math.exp(-mu)
    e2 = e1 * e1
    out = -e_c2_bundle(pt.bundle, c) * e1 / 20.0
    out += c * p / (2 * mu)
    out += c * u * (c * q * e1 - 0.5 * nu * (-math.expm1(-mu) / mu))
    out += e2 * (-et / (4 * SQRT2) + c2 * al * al / (8 * mu) - c2 * q * q / (8 * mu)
                 - (c2 - c) * nu * al / (4 * mu) + (0.25 - 2 * c + c2) * nu * nu / (8 * mu))
    out += e1 * (c2 * q * q / 2 - 3 * et / (4 * SQRT2) - c2 * al * al / (4 * mu) - c * p / (2 * mu)
                 - c2 * q * q / (8 * mu) + c2 * nu * al / (4 * mu) - (c2 - 0.25) * nu * nu / (8 * mu))
    out += _over_mu2(
        mu,
        x_one=-c * al / 2 + (2 * c - 1) * nu * nu / 4,
        x_em=0.0,
        x_em2=(c2 * al * al / 2 - (2 * c2 - c) * nu * al / 2 + (0.25 - c + c2) * nu * nu / 2) / 2,
        x_ch=-(c2 * al * al - c2 * nu * al + (c2 - 0.25) * nu * nu / 2),
    )
    out += c2 * q * q / 8 * (math.sinh(mu) / (mu * mu))
    return float(out)


def goe_sq_alt_at(pt: LimitPoint, n: int, c: float) -> float:
    _check_n(n)
    h = n ** (-1.0 / 3.0)
    return float(pt.F2 * (math.exp(-pt.mu) + first_order_goe(pt, c) * h + goe_alt_coefficient(pt, c) * h * h))


def goe_sq_expansion_alt(
    n: int, c: float, s: float, m: int = DEFAULT_M, tables: LimitTables | None = None
) -> float:
    """Total of the GOE squared expansion with the alpha-form n^{-2/3} bracket."""
    _check_n(n)
    return goe_sq_alt_at(_point(s, m, tables), n, c)


def goe_expansion_sqrt(
    n: int, c: float, s: float, m: int = DEFAULT_M, tables: LimitTables | None = None
) -> float:
    """Square root of the GOE squared expansion total.

    This is not the truncated expansion of F_{n,1} itself: the two differ at
    order n^{-1}.  Negative totals (possible far in the left tail at small n)
    raise ``ValueError``.
    """
    total = goe_sq_expansion(n, c, s, m, tables).total
    if total < 0.0:
        raise ValueError(f"expansion total {total!r} is negative; no real square root")
    return math.sqrt(total)


def write_expansions_csv(fh, values) -> None:
    """CSV with columns s,n,c,leading,coeff13,coeff23,total (17 significant digits)."""
    write_rows_csv(fh, EXPANSION_COLUMNS, (v.row() for v in values))
