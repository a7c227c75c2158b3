import math

import numpy as np
import pytest

from qcl.orbit import (DualGroupElement, OrbitParams, archimedes_projection_sample, crystal_limit_functional,
                       group_exp, group_log, identity, inverse, log_group_law, mc_convolution_expectation,
                       multiply, orbit_point, radial_from_logs, radial_part, sample_orbit, spherical_function)
from qcl.stats import ks_distance, ks_threshold


def random_elements(r, n=50, seed=0):
    g = np.random.default_rng(seed)
    return DualGroupElement(r, g.normal(size=n), g.normal(size=n) + 1j * g.normal(size=n))


@pytest.mark.parametrize("r", [0.1, 1.0, 3.0])
def test_multiply_matches_matrix_product(r):
    a, b = random_elements(r, seed=1), random_elements(r, seed=2)
    np.testing.assert_allclose(multiply(a, b).to_matrix(), a.to_matrix() @ b.to_matrix(), rtol=1e-12, atol=1e-12)
    back = DualGroupElement.from_matrix(a.to_matrix(), r)
    np.testing.assert_allclose(back.H, a.H, atol=1e-12)
    np.testing.assert_allclose(back.F, a.F, atol=1e-12)


def test_group_axioms():
    r = 0.7
    a, b, c = (random_elements(r, seed=s) for s in (3, 4, 5))
    lhs, rhs = multiply(multiply(a, b), c), multiply(a, multiply(b, c))
    np.testing.assert_allclose(lhs.H, rhs.H, atol=1e-12)
    np.testing.assert_allclose(lhs.F, rhs.F, atol=1e-12)
    e = multiply(a, inverse(a))
    np.testing.assert_allclose(e.H, 0, atol=1e-12)
    np.testing.assert_allclose(e.F, 0, atol=1e-12)
    i = multiply(identity(r), a)
    np.testing.assert_allclose(i.F, a.F)


def test_rejects_mixed_curvature():
    with pytest.raises(ValueError):
        multiply(identity(1.0), identity(2.0))
    with pytest.raises(ValueError):
        DualGroupElement(0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        OrbitParams(-1.0, 1.0)


@pytest.mark.parametrize("r", [1e-3, 0.5, 2.0])
def test_exp_log_round_trip(r):
    g = np.random.default_rng(6)
    H, F = g.normal(size=20), g.normal(size=20) + 1j * g.normal(size=20)
    H2, F2 = group_log(group_exp(H, F, r))
    np.testing.assert_allclose(H2, H)
    np.testing.assert_allclose(F2, F, rtol=1e-12)


def test_log_group_law_is_additive_at_small_curvature():
    X1, X2 = (0.3, 0.2 + 0.1j), (-0.5, 0.4j)
    H, F = log_group_law(X1, X2, 1e-6)
    assert H == pytest.approx(-0.2)
    assert F == pytest.approx(0.2 + 0.5j, abs=1e-6)


@pytest.mark.parametrize("r,lam", [(0.5, 1.0), (2.0, 0.7), (30.0, 3.0)])
def test_orbit_points_have_constant_radial_part(r, lam):
    o = OrbitParams(lam, r)
    mu = np.linspace(-lam, lam, 41)
    theta = np.linspace(0, 6, 41)
    np.testing.assert_allclose(radial_part(orbit_point(o, mu, theta)), lam, rtol=1e-10, atol=1e-12)


def test_radial_part_is_conjugation_invariant_up_to_unitaries():
    # half trace of g g^dagger is invariant under g -> u g v with u, v unitary
    r = 0.8
    a = random_elements(r, n=1, seed=7)[0]
    m = a.to_matrix()
    c, s = math.cos(0.4), math.sin(0.4)
    u = np.array([[c, -s], [s, c]])
    mm = u @ m @ u.T
    lam = math.acosh(0.5 * np.trace(mm @ mm.conj().T).real) / r
    assert lam == pytest.approx(radial_part(a))


def test_radial_from_logs_large_and_small():
    r = 2.0
    assert radial_from_logs(r, 0.0, -np.inf) == 0.0
    assert radial_from_logs(r, 400.0, -np.inf) == pytest.approx(400.0)
    # huge |2rF| = e^lf: arccosh(1 + e^(2 lf) / 2) ~ 2 lf
    lf = 500.0
    assert radial_from_logs(r, 0.0, lf) == pytest.approx(2 * lf / r, rel=1e-12)


@pytest.mark.parametrize("r,lam", [(0.5, 1.0), (3.0, 2.0)])
def test_orbit_sampling_law_of_H(r, lam):
    o = OrbitParams(lam, r)
    g = sample_orbit(o, np.random.default_rng(8), 200_000)
    assert np.all(np.abs(g.H) <= lam + 1e-12)
    target = lam / math.tanh(r * lam) - 1 / r
    assert abs(g.H.mean() - target) < 4 * g.H.std() / math.sqrt(g.H.size)
    cdf = lambda x: np.expm1(r * (np.asarray(x) + lam)) / math.expm1(2 * r * lam)
    assert ks_distance(g.H, cdf) < ks_threshold(g.H.size, coef=1.63)
    np.testing.assert_allclose(radial_part(g), lam, rtol=1e-10)


def test_spherical_function_values():
    assert spherical_function(1.0, 2.0, 0.7) == pytest.approx(1.0)
    assert spherical_function(0.0, 2.0, 0.7) == pytest.approx(1.4 / math.sinh(1.4))
    assert spherical_function(2j, 1.0, 1.0) == pytest.approx(math.sin(2.0) / (2 * math.sinh(1.0)))
    # depends on r and lam only through r * lam
    z = np.array([0.0, 0.3, 1.0, 1.5j])
    np.testing.assert_allclose(spherical_function(z, 2.0, 0.5), spherical_function(z, 1.0, 1.0), rtol=1e-13)


def test_spherical_function_is_orbit_mean():
    r, lam, z = 1.0, 1.0, 0.5
    m, se = mc_convolution_expectation(OrbitParams(lam, r), None, lambda H, F, L: np.exp((z - 1) * r * H),
                                       100_000, rng=9)
    assert abs(m - spherical_function(z, lam, r).real) < 4 * se


def test_convolution_product_formula():
    r, z = 1.0, 0.5
    o1, o2 = OrbitParams(1.0, r), OrbitParams(0.6, r)
    m, se = mc_convolution_expectation(o1, o2, lambda H, F, L: spherical_function(z, L, r).real, 200_000, rng=10)
    expected = (spherical_function(z, 1.0, r) * spherical_function(z, 0.6, r)).real
    assert abs(m - expected) < 4 * se


def test_convolution_H_is_additive():
    r = 0.9
    o1, o2 = OrbitParams(1.0, r), OrbitParams(2.0, r)
    m, se = mc_convolution_expectation(o1, o2, lambda H, F, L: H, 200_000, rng=11)
    mean_h = lambda lam: lam / math.tanh(r * lam) - 1 / r
    assert abs(m - mean_h(1.0) - mean_h(2.0)) < 4 * se


def test_convolution_is_thread_independent():
    o = OrbitParams(1.0, 1.0)
    f = lambda H, F, L: L
    assert mc_convolution_expectation(o, o, f, 30_000, rng=3, threads=1) == \
        mc_convolution_expectation(o, o, f, 30_000, rng=3, threads=4)


def test_crystal_limit_functional_constants_and_proposals():
    o1, o2 = OrbitParams(1.0, 2.0), OrbitParams(1.5, 2.0)
    est = crystal_limit_functional(o1, o2, [1.0], [1.0], 10_000, rng=1)
    assert est.mean == pytest.approx(1.0) and est.ess == pytest.approx(10_000)
    a = crystal_limit_functional(o1, o2, [0.0, 1.0], [1.0], 100_000, rng=2)
    b = crystal_limit_functional(o1, o2, [0.0, 1.0], [1.0], 100_000, rng=3, proposal="orbit")
    assert abs(a.mean - b.mean) < 4 * math.hypot(a.stderr, b.stderr)
    with pytest.raises(ValueError):
        crystal_limit_functional(o1, o2, [1.0], [1.0], 10, proposal="bogus")


def test_orbit_proposal_warns_at_large_curvature():
    o1, o2 = OrbitParams(1.0, 40.0), OrbitParams(1.5, 40.0)
    with pytest.warns(RuntimeWarning, match="effective sample size"):
        est = crystal_limit_functional(o1, o2, [1.0], [1.0], 20_000, rng=4, proposal="orbit")
    assert est.low_ess


def test_archimedes_projection_is_uniform():
    x = archimedes_projection_sample(np.random.default_rng(12), 100_000)
    assert ks_distance(x, lambda t: np.clip((np.asarray(t) + 1) / 2, 0, 1)) < ks_threshold(x.size, coef=1.63)
    assert isinstance(archimedes_projection_sample(np.random.default_rng(1)), float)
