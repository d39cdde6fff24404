import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from tw_edgeworth import finite_n, mc
from tw_edgeworth.mc import EcdfSummary, EnsembleParams, ParameterError


def _normal_cdf(x):
    return 0.5 * (1 + np.vectorize(math.erf)(np.asarray(x) / math.sqrt(2)))


@pytest.mark.parametrize("method", ["dense", "tridiagonal"])
def test_n1_is_standard_normal(method):
    x = mc.sample_max(EnsembleParams(1, 1, 10**5, 3), method=method)
    assert stats.kstest(x, "norm").pvalue > 0.01


@pytest.mark.parametrize("method", ["dense", "tridiagonal"])
def test_n2_goe_matches_oracle(method):
    x = np.sort(mc.sample_max(EnsembleParams(1, 2, 10**6, 5), method=method))
    xs = np.linspace(-3.5, 5.5, 121)
    model = mc.TabulatedCdf(xs, np.sqrt([finite_n.goe_n2_oracle(float(t)) for t in xs]))
    assert mc.sup_distance(x, model) < 0.002


@pytest.mark.parametrize("method", ["dense", "tridiagonal"])
def test_n2_gue_matches_exact_determinant(method):
    x = np.sort(mc.sample_max(EnsembleParams(2, 2, 2 * 10**5, 6), method=method))
    xs = np.linspace(-3.0, 4.5, 91)
    model = mc.TabulatedCdf(xs, [finite_n.f_n2_exact(2, float(t)) for t in xs])
    # DKW at 99%: sqrt(log(2 / 0.01) / (2 N))
    assert mc.sup_distance(x, model) < math.sqrt(math.log(200) / (4 * 10**5))


def test_trace_identity_n4():
    # E[sum lambda^2] = E[tr H^2] = n + n(n-1)/2 at beta = 1 with off-diagonal variance 1/2
    n, count = 4, 20000
    rng = np.random.default_rng(9)
    sq = []
    for _ in range(count):
        g = rng.standard_normal((n, n))
        h = np.triu(g, 1) / math.sqrt(2)
        h = h + h.T + np.diag(rng.standard_normal(n))
        lam = mc.symmetric_eigh(h, want_vectors=False)
        sq.append(np.sum(lam**2))
    sq = np.array(sq)
    assert sq.mean() == pytest.approx(n * (n + 1) / 2, abs=4 * sq.std() / math.sqrt(count))


def test_sampler_second_moment_matches_model():
    # the top eigenvalue of the dense and tridiagonal samplers share one law
    a = mc.sample_max(EnsembleParams(1, 8, 40000, 1), method="dense")
    b = mc.sample_max(EnsembleParams(1, 8, 40000, 2), method="tridiagonal")
    assert stats.ks_2samp(a, b).pvalue > 0.001


@given(st.integers(1, 60), st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_eigensolver_against_numpy(n, seed):
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((n, n))
    h = h + h.T
    w, z = mc.symmetric_eigh(h)
    assert np.allclose(w, np.linalg.eigvalsh(h), atol=1e-11 * max(1.0, np.abs(w).max()))
    assert np.max(np.abs(h @ z - z * w)) <= 1e-10 * np.linalg.norm(h, 2)


@pytest.mark.parametrize("n", [100, 200])
def test_eigensolver_residual(n):
    rng = np.random.default_rng(n)
    h = rng.standard_normal((n, n))
    h = (h + h.T) / 2
    w, z = mc.symmetric_eigh(h)
    assert np.max(np.abs(h @ z - z * w)) <= 1e-10 * np.linalg.norm(h, 2)
    assert np.max(np.abs(z.T @ z - np.eye(n))) <= 1e-12


def test_tridiagonal_max_matches_dense_eigensolver():
    rng = np.random.default_rng(4)
    d, off = rng.standard_normal(30), rng.standard_normal(29)
    t = np.diag(d) + np.diag(off, 1) + np.diag(off, -1)
    assert mc.tridiagonal_max(d, off) == pytest.approx(np.linalg.eigvalsh(t)[-1], abs=1e-12)


def test_determinism_and_worker_independence():
    p = EnsembleParams(2, 6, 9000, 123)
    a = mc.sample_max(p, workers=1)
    b = mc.sample_max(p, workers=3)
    c = mc.sample_max(p, workers=1)
    assert a.tobytes() == b.tobytes() == c.tobytes()
    assert a.tobytes() != mc.sample_max(EnsembleParams(2, 6, 9000, 124), workers=1).tobytes()


def test_workers_from_environment(monkeypatch):
    monkeypatch.setenv(mc.WORKERS_ENV, "3")
    assert mc.default_workers() == 3
    monkeypatch.setenv(mc.WORKERS_ENV, "x")
    with pytest.raises(ParameterError):
        mc.default_workers()


@pytest.mark.parametrize(
    "args", [(3, 4, 10, 0), (1, 0, 10, 0), (1, 4, 0, 0), (1, 4, 10, -1), (1, 4, 10, 2**64)]
)
def test_params_validation(args):
    with pytest.raises(ParameterError):
        EnsembleParams(*args)


def test_dense_budget():
    with pytest.raises(ParameterError):
        mc.sample_max(EnsembleParams(2, 1001, 10, 0))
    with pytest.raises(ParameterError):
        mc.sample_max(EnsembleParams(1, 2001, 10, 0))
    with pytest.raises(ParameterError):
        mc.sample_max(EnsembleParams(1, 4, 10, 0), method="qr")


def test_sup_distance_dkw():
    x = np.sort(np.random.default_rng(1).standard_normal(10**5))
    assert mc.sup_distance(x, _normal_cdf) < 0.006


def test_sup_distance_constant_model():
    x = np.sort(np.random.default_rng(2).standard_normal(5000))
    assert mc.sup_distance(x, lambda t: np.full_like(t, 0.5)) >= 0.5 - 1e-3


def test_sup_distance_uses_both_sides_of_jumps():
    # one sample at 0 against the step CDF 1{t >= 0}: the left limit differs by 1
    assert mc.sup_distance(np.array([0.0]), lambda t: np.full_like(t, 1.0)) == 1.0
    with pytest.raises(ValueError):
        mc.sup_distance(np.array([1.0, 0.0]), _normal_cdf)


@given(st.floats(0.01, 100.0), st.sampled_from([1.0, 1 / 3, 2 / 3, 2.0]))
def test_rate_fit_synthetic(scale, power):
    ns = np.array([20, 40, 80, 160])
    slope, r2 = mc.rate_fit(ns, scale * ns**-power)
    assert slope == pytest.approx(-power, abs=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("errs", [[1.0, 0.0, 1.0], [1.0, -1.0, 2.0], [1.0, 2.0]])
def test_rate_fit_domain(errs):
    with pytest.raises(ValueError):
        mc.rate_fit(list(range(1, len(errs) + 1)), errs)


def test_ecdf_summary():
    s = EcdfSummary(np.array([3.0, 1.0, 2.0, 2.0]))
    assert list(s.samples) == [1.0, 2.0, 2.0, 3.0]
    assert list(s(np.array([0.5, 1.0, 2.0, 2.5, 3.0]))) == [0.0, 0.25, 0.75, 0.75, 1.0]
    with pytest.raises(ParameterError):
        s.against(_normal_cdf)
    big = EcdfSummary(np.random.default_rng(0).standard_normal(2000))
    assert big.against(_normal_cdf) == big.sup_distance < 0.05


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=50))
def test_ecdf_is_right_continuous_step(values):
    s = EcdfSummary(np.array(values))
    for v in s.samples:
        assert s(v) >= s(np.nextafter(v, -np.inf))
        assert 0.0 <= s(v) <= 1.0


def test_sample_dump_round_trip(tmp_path):
    x = mc.sample_max(EnsembleParams(1, 3, 1000, 8))
    path = tmp_path / "dump.bin"
    mc.write_samples(path, x)
    raw = path.read_bytes()
    assert int.from_bytes(raw[:8], "little") == 1000 and len(raw) == 8 + 8000
    assert mc.read_samples(path).tobytes() == x.tobytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        mc.read_samples(path)


def test_tabulated_cdf_clips_and_extends():
    cdf = mc.TabulatedCdf([0.0, 1.0, 2.0], [-0.1, 0.5, 1.2])
    assert list(cdf(np.array([-5.0, 0.0, 2.0, 9.0]))) == [0.0, 0.0, 1.0, 1.0]


def test_expansion_cdf_models(tables):
    lim = mc.expansion_cdf(2, 100, 0.0, "limit", tables)
    t = float(finite_n.tau(100, 0.0, -1.0))
    assert lim(t) == pytest.approx(tables.point(-1.0).F2, rel=1e-12)
    with pytest.raises(ParameterError):
        mc.expansion_cdf(2, 100, 0.0, "four_term", tables)
