import math

import numpy as np
import pytest

from xxzquench import exactdiag, freefermion, model
from xxzquench.errors import NumericalFaultError
from xxzquench.model import NeelOrder

SQRT2 = math.sqrt(2.0)


def homogeneous(n, j=1.0):
    return model.realize_couplings(model.ChainSpec(n=n, j=j))


def disordered(n, sigma=0.2, seed=11):
    return model.realize_couplings(
        model.ChainSpec(n=n, disorder_sigma=sigma, seed=seed)
    )


def test_propagator_identity_at_t0():
    for real in (homogeneous(6), disordered(9)):
        for method in ("auto", "eigen"):
            p = freefermion.propagator(real, 0.0, method=method)
            np.testing.assert_allclose(p.matrix, np.eye(real.n), atol=0)


def test_three_site_closed_forms():
    real = homogeneous(3)
    for t in (0.31, 0.7731, 1.9, 3.3):
        f = freefermion.propagator(real, t).matrix
        np.testing.assert_allclose(
            f[0, 1], -1j * (SQRT2 / 2) * math.sin(SQRT2 * t), atol=1e-14
        )
        np.testing.assert_allclose(
            f[0, 0], math.cos(SQRT2 * t / 2) ** 2, atol=1e-14
        )
        np.testing.assert_allclose(
            f[2, 0], -math.sin(SQRT2 * t / 2) ** 2, atol=1e-14
        )


def test_mode_sum_matches_eigen_route():
    real = homogeneous(25)
    a = freefermion.propagator(real, 3.7, method="mode_sum").matrix
    b = freefermion.propagator(real, 3.7, method="eigen").matrix
    assert np.max(np.abs(a - b)) < 1e-10


def test_mode_sum_rejects_disorder():
    with pytest.raises(ValueError):
        freefermion.propagator(disordered(5), 1.0, method="mode_sum")


def test_propagator_unitary_and_symmetric():
    rng = np.random.default_rng(5)
    for _ in range(6):
        n = int(rng.integers(2, 242))
        t = float(rng.uniform(0.0, 100.0))
        real = homogeneous(n) if rng.random() < 0.5 else disordered(n, seed=int(rng.integers(1 << 30)))
        f = freefermion.propagator(real, t).matrix
        np.testing.assert_allclose(f @ f.conj().T, np.eye(n), atol=1e-10)
        assert np.max(np.abs(f - f.T)) < 1e-10


def test_propagator_group_property():
    for real in (homogeneous(17), disordered(13)):
        t1, t2 = 1.3, 2.9
        f12 = freefermion.propagator(real, t1 + t2).matrix
        f1 = freefermion.propagator(real, t1).matrix
        f2 = freefermion.propagator(real, t2).matrix
        assert np.max(np.abs(f12 - f1 @ f2)) < 1e-9


def test_second_moments_at_t0():
    for n in (3, 7, 11):
        real = homogeneous(n)
        state = model.neel_state(NeelOrder.N1, n)
        m = freefermion.second_moments(real, state, 0.0)
        assert m.occ_first == 0.0  # site 1 starts down in N1
        assert m.occ_last == 0.0   # odd n: site n starts down too
        assert m.cross_fl == 0.0 and m.cross_lf == 0.0


def test_second_moments_three_sites():
    real = homogeneous(3)
    for t in (0.4, 1.1, 2.6):
        s = 0.5 * math.sin(SQRT2 * t) ** 2
        m1 = freefermion.second_moments(real, model.neel_state(NeelOrder.N1, 3), t)
        np.testing.assert_allclose(m1.occ_first, s, atol=1e-13)
        np.testing.assert_allclose(m1.occ_last, s, atol=1e-13)
        np.testing.assert_allclose(m1.cross_fl, s, atol=1e-13)
        m2 = freefermion.second_moments(real, model.neel_state(NeelOrder.N2, 3), t)
        np.testing.assert_allclose(m2.cross_fl, -s, atol=1e-13)


def test_moment_invariants():
    rng = np.random.default_rng(17)
    for _ in range(5):
        n = int(rng.integers(2, 60))
        real = homogeneous(n)
        state = model.neel_state(NeelOrder.N2, n)
        m = freefermion.second_moments(real, state, float(rng.uniform(0, 20)))
        assert 0.0 <= m.occ_first <= 1.0
        assert 0.0 <= m.occ_last <= 1.0
        assert m.cross_fl == m.cross_lf.conjugate()


def test_end_spin_t0_mixture():
    for n in (3, 9, 15):
        s = freefermion.end_spin_state(homogeneous(n), 0.0)
        assert (s.a, s.b, s.c) == (0.5, 0.0, 0.0)


def test_end_spin_three_site_closed_form():
    real = homogeneous(3)
    for t in np.linspace(0.0, 3.0, 13):
        s = freefermion.end_spin_state(real, float(t))
        sin2 = math.sin(SQRT2 * t) ** 2
        np.testing.assert_allclose(s.a, 0.5 - sin2 / 2, atol=1e-12)
        np.testing.assert_allclose(s.b, sin2 / 2, atol=1e-12)
        np.testing.assert_allclose(s.c, sin2 / 2, atol=1e-12)
    peak = freefermion.end_spin_state(real, math.pi / (2 * SQRT2))
    np.testing.assert_allclose([peak.a, peak.b, peak.c], [0.0, 0.5, 0.5], atol=1e-12)


def test_components_agree_for_odd_chains():
    rng = np.random.default_rng(23)
    for n in (3, 5, 9, 15, 31):
        real = homogeneous(n)
        ts = rng.uniform(0.0, 2 * n / math.pi, 8)
        a1, b1, c1 = freefermion.end_spin_series(real, ts, NeelOrder.N1)
        a2, b2, c2 = freefermion.end_spin_series(real, ts, NeelOrder.N2)
        np.testing.assert_allclose(a1, a2, atol=1e-10)
        np.testing.assert_allclose(b1, b2, atol=1e-10)
        np.testing.assert_allclose(c1, c2, atol=1e-10)


def test_even_chains_are_separable():
    for n in (2, 4, 6, 8):
        real = homogeneous(n)
        ts = np.linspace(0.0, 2 * n / math.pi, 60)
        a, b, c = freefermion.end_spin_series(real, ts)
        negv = np.maximum(0.0, np.abs(c) - a)
        assert np.max(negv) <= 1e-10
        assert np.max(np.abs(c)) <= 1e-10


def test_matches_exact_diagonalization():
    # delta1 = inf, delta2 = 0: both engines must coincide entry-wise
    for n in (3, 5, 7, 9, 11, 13):
        spec = model.ChainSpec(n=n)
        real = model.realize_couplings(spec)
        ts = np.linspace(0.0, 2 * n / math.pi, 25)
        a, b, c = freefermion.end_spin_series(real, ts)
        evo = exactdiag.QuenchEvolution(real, spec.delta1, spec.delta2)
        ae, be, ce = evo.end_spin_series(ts)
        assert np.max(np.abs(a - ae)) < 1e-8
        assert np.max(np.abs(b - be)) < 1e-8
        assert np.max(np.abs(c - ce)) < 1e-8


def test_end_spin_state_validation():
    with pytest.raises(NumericalFaultError):
        freefermion.EndSpinState(a=0.3, b=0.3, c=0.0, t=0.0)  # broken trace
    with pytest.raises(NumericalFaultError):
        freefermion.EndSpinState(a=0.1, b=0.4, c=0.45, t=0.0)  # |c| > b
    with pytest.raises(NumericalFaultError):
        freefermion.EndSpinState(a=-0.1, b=0.6, c=0.0, t=0.0)


def test_end_spin_matrix():
    s = freefermion.EndSpinState(a=0.1, b=0.4, c=0.25, t=1.0)
    rho = s.matrix()
    assert np.trace(rho) == pytest.approx(1.0)
    assert np.min(np.linalg.eigvalsh(rho)) >= -1e-15


def test_time_must_be_nonnegative():
    real = homogeneous(5)
    with pytest.raises(ValueError):
        freefermion.propagator(real, -0.1)
    with pytest.raises(ValueError):
        freefermion.end_spin_state(real, -1.0)
