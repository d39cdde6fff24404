import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg
from scipy.integrate import quad

from tw_edgeworth import finite_n, limits, mc
from tw_edgeworth.fredholm import (
    KernelKind,
    KernelSpec,
    NumericError,
    QuadratureGrid,
    airy_kernel,
    build_grid,
    eps_phi,
    f2_det,
    fredholm_det,
    hermite_kernel,
    nystrom_matrix,
    resolvent_bundle_airy,
    resolvent_bundle_hermite,
)
from tw_edgeworth.specfun import airy, c_phi, hermite_phi

AIRY = KernelSpec(KernelKind.airy)


def _gauss_tail(s):
    return 0.5 * math.sqrt(math.pi) * math.erfc(s)


@pytest.mark.parametrize("s, m", [(0.0, 40), (-8.0, 100)])
def test_grid_contract(s, m):
    g = build_grid(s, m)
    assert len(g.nodes) == m
    assert np.all(np.diff(g.nodes) > 0) and np.all(g.nodes > s) and np.all(g.weights > 0)
    assert abs(g.integrate(np.exp(-g.nodes**2)) - _gauss_tail(s)) <= 1e-12


def test_grid_gaussian_tail_over_range():
    for s in np.linspace(-10.0, 5.0, 31):
        g = build_grid(float(s))
        assert abs(g.integrate(np.exp(-g.nodes**2)) - _gauss_tail(s)) <= 1e-12


@pytest.mark.parametrize("m", [19, 401])
def test_grid_rejects_node_count(m):
    with pytest.raises(ValueError):
        build_grid(0.0, m)


def test_determinant_self_convergence_small_m():
    assert abs(fredholm_det(AIRY, build_grid(0.0, 20)) - fredholm_det(AIRY, build_grid(0.0, 40))) < 1e-10


@pytest.mark.parametrize("s", [-6.0, -2.0, 0.0, 2.0])
def test_spectral_convergence(s):
    extended = s < -4
    assert abs(f2_det(s, 100, extended) - f2_det(s, 200, extended)) <= 1e-10


@given(st.lists(st.floats(-8.0, 12.0), min_size=2, max_size=2), st.sampled_from(["airy", 10, 40]))
@settings(max_examples=100, deadline=None)
def test_kernel_symmetry(pair, kind):
    x = np.array(pair)
    k = airy_kernel(x) if kind == "airy" else hermite_kernel(kind, x)
    assert abs(k[0, 1] - k[1, 0]) <= 1e-13


@pytest.mark.parametrize("kind", ["airy", 20])
@pytest.mark.parametrize("x", [-3.0, 0.5, 2.0])
def test_kernel_diagonal_limit(kind, x):
    def off(h):
        pts = np.array([x, x + h])
        k = airy_kernel(pts) if kind == "airy" else hermite_kernel(kind, pts)
        return k[0, 1]

    diag = (airy_kernel(np.array([x])) if kind == "airy" else hermite_kernel(kind, np.array([x])))[0, 0]
    # K(x, x + h) = K(x, x) + O(h); one Richardson step removes the O(h) term
    extrapolated = 2 * off(1e-5) - off(2e-5)
    assert extrapolated == pytest.approx(diag, abs=1e-7)
    assert abs(off(1e-5) - diag) < abs(off(1e-4) - diag) + 1e-12


def test_zero_kernel_determinant():
    assert fredholm_det(KernelSpec(KernelKind.zero), build_grid(0.0, 40)) == 1.0


def test_f2_near_one_at_8():
    g = build_grid(8.0)
    sw = np.sqrt(g.weights)
    trace = float(np.sum(g.weights * np.diag(airy_kernel(g.nodes))))
    # delta = 1 - F2(8) is about the trace (7e-17), below double resolution of 1 - det
    assert 0.0 < trace < 1e-7
    ref, _ = quad(lambda x: airy(x).aip ** 2 - x * airy(x).ai ** 2, 8.0, 40.0, epsabs=1e-30, epsrel=1e-10)
    assert trace == pytest.approx(ref, rel=1e-8)
    eig = np.linalg.eigvalsh(sw[:, None] * airy_kernel(g.nodes) * sw[None, :])
    assert np.all(eig > -1e-17) and eig.sum() < 1e-7
    assert 1.0 - 1e-7 < f2_det(8.0) <= 1.0


def test_f2_matches_painleve_representation_at_minus_2():
    sol = limits.painleve_solve(np.array([-2.0]))
    assert abs(f2_det(-2.0) - sol.f2[0]) <= 1e-9


def test_nonfinite_kernel_reports_node():
    grid = QuadratureGrid(0.0, 3, np.array([1.0, np.nan, 2.0]), np.ones(3))
    with pytest.raises(NumericError, match="nan"):
        fredholm_det(KernelSpec(KernelKind.hermite, 4), grid)


def test_bundle_far_right_is_free():
    b = resolvent_bundle_airy(9.0)
    assert b.q[0] == pytest.approx(airy(9.0).ai, rel=1e-12)
    assert max(abs(b.u[0]), abs(b.v[0]), abs(b.w[0])) <= 1e-12


def test_bundle_q_matches_painleve_at_zero():
    assert abs(resolvent_bundle_airy(0.0).q[0] - limits.painleve_solve(np.array([0.0])).q[0]) <= 1e-8


def test_bundle_p_representation_at_minus_2():
    h = 1e-4
    b = resolvent_bundle_airy(-2.0)
    qprime = (resolvent_bundle_airy(-2.0 + h).q[0] - resolvent_bundle_airy(-2.0 - h).q[0]) / (2 * h)
    assert abs(b.p[0] - (qprime + b.u[0] * b.q[0])) <= 1e-6


@pytest.mark.parametrize("s", [-6.0, -3.0, 0.0, 3.0, 6.0, 8.0])
def test_bundle_f2_in_unit_interval(s):
    assert 0.0 < resolvent_bundle_airy(s).F2 <= 1.0


@pytest.mark.parametrize("s", [6.0, 7.0, 8.0])
def test_bundle_q_follows_airy(s):
    assert resolvent_bundle_airy(s).q[0] / airy(s).ai == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("s", [-3.0, 0.0, 2.0])
def test_boundary_resolvent_diagonal(s):
    b = resolvent_bundle_airy(s)
    q, p, u, v = b.q[0], b.p[0], b.u[0], b.v[0]
    # R(s, s) from the determinant's resolvent equals u = int q^2 and its Painleve form
    assert abs(b.r_ss - u) <= 1e-10
    assert abs(b.r_ss - (p * p - s * q * q + 2 * q * q * v - 2 * p * q * u)) <= 1e-10


def test_nystrom_resolvent_symmetric():
    a = nystrom_matrix(AIRY, build_grid(-2.0))
    r = linalg.inv(a) - np.eye(len(a))
    assert np.max(np.abs(r - r.T)) <= 1e-11


@pytest.mark.parametrize("s", [-10.5, 10.5])
def test_bundle_range(s):
    if s > 0:
        resolvent_bundle_airy(s)  # the right tail is allowed up to 40
    else:
        with pytest.raises(ValueError):
            resolvent_bundle_airy(s)


def test_hermite_bundle_far_tail():
    q, _ = resolvent_bundle_hermite(2, 5.0)
    assert abs(q - hermite_phi(2, 5.0)) <= 1e-8


@pytest.mark.parametrize("n", [3, 0, 402])
def test_hermite_bundle_rejects(n):
    with pytest.raises(ValueError):
        resolvent_bundle_hermite(n, 1.0)


def test_hermite_airy_bridge():
    ns = [20, 40, 80, 160]
    q0 = resolvent_bundle_airy(0.0).q[0]
    gq, gp = [], []
    for n in ns:
        q, p = resolvent_bundle_hermite(n, float(finite_n.tau(n, 0.0, 0.0)))
        gq.append(abs(n ** (-1 / 6) * q - q0))
        gp.append(abs(n ** (-1 / 6) * p - q0))
    assert mc.rate_fit(ns, gq)[0] == pytest.approx(-1 / 3, abs=0.05)
    assert mc.rate_fit(ns, gp)[0] == pytest.approx(-1 / 3, abs=0.05)
    assert gq[0] < 0.1


def test_eps_phi_limits():
    assert eps_phi(8, 1e3) == pytest.approx(c_phi(8), abs=1e-14)
    assert eps_phi(8, -1e3) == pytest.approx(-c_phi(8), abs=1e-14)
    assert eps_phi(8, np.inf) == pytest.approx(c_phi(8), abs=1e-14)


def test_eps_phi_n2_at_origin():
    below, _ = quad(lambda y: hermite_phi(2, y), -np.inf, 0.0, epsabs=1e-14)
    assert eps_phi(2, 0.0) == pytest.approx(below - c_phi(2), abs=1e-12)


def test_eps_phi_rejects_odd():
    with pytest.raises(ValueError):
        eps_phi(3, 0.0)
