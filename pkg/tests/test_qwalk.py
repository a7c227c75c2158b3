import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from qcl.rep import HighestWeight, Params, casimir_constant
from qcl.qwalk import (MAX_STEPS, build_measurements, casimir_family, joint_trajectory_law, lambda_trajectory_law,
                       lr_trajectory_probability, matching_kernel, omega_marginal, pad, qwalk_oracle,
                       radial_dynamics_r_independence)


def admissible(n):
    """All sequences lam_1 = 1, lam_{k+1} = lam_k +- 1 >= 0 of length n."""
    out = [[1]]
    for _ in range(n - 1):
        out = [s + [s[-1] + d] for s in out for d in (1, -1) if s[-1] + d >= 0]
    return out


def test_first_level_is_the_two_dimensional_irrep():
    p = Params(0.7, 0.5)
    mf = build_measurements(3, p)
    np.testing.assert_allclose(np.diag(mf.matrix("H", 1, padded=False)), [-0.5, 0.5])
    assert mf.matrix("E", 1).shape == (8, 8)
    np.testing.assert_allclose(mf.matrix("F", 2, padded=False), mf.matrix("E", 2, padded=False).T)


def test_group_like_and_coproduct_of_F():
    p = Params(1.3, 1.0)
    mf = build_measurements(2, p)
    K1, F1 = mf.matrix("K_half", 1, padded=False), mf.matrix("F", 1, padded=False)
    np.testing.assert_allclose(mf.matrix("K_half", 2, padded=False), np.kron(K1, K1), atol=1e-14)
    A = np.linalg.inv(K1)
    np.testing.assert_allclose(mf.matrix("F", 2, padded=False),
                               np.kron(F1, A) + np.kron(np.linalg.inv(A), F1), atol=1e-13)


def test_pad_and_cap():
    m = np.arange(4.0).reshape(2, 2)
    assert pad(m, 0) is not None and pad(m, 2).shape == (8, 8)
    with pytest.raises(ValueError):
        build_measurements(MAX_STEPS + 1, Params(1.0, 1.0))
    with pytest.raises(ValueError):
        build_measurements(0, Params(1.0, 1.0))


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_two_step_casimir_spectrum(r):
    p = Params(r, 1.0)
    C = casimir_family(build_measurements(2, p))[1]
    ev = np.sort(np.linalg.eigvalsh(C))
    hi, lo = casimir_constant(HighestWeight(2, 1.0), p), casimir_constant(HighestWeight(0, 1.0), p)
    np.testing.assert_allclose(ev, sorted([lo, hi, hi, hi]), rtol=1e-12)


@pytest.mark.parametrize("r,hbar", [(0.0, 1.0), (0.3, 0.5), (1.0, 1.0)])
def test_measured_family_commutes(r, hbar):
    # casimir_family raises if any pair (or a pair with H) fails to commute
    mats = casimir_family(build_measurements(8, Params(r, hbar)), padded=True)
    assert len(mats) == 8 and mats[0].shape == (256, 256)


@pytest.mark.parametrize("r", [0.0, 0.4, 3.0])
def test_lambda_law_is_dimension_over_power_of_two(r):
    for n in (1, 2, 5, 10):
        law = lambda_trajectory_law(build_measurements(n, Params(r, 1.0)))
        assert set(law.probs) == {tuple(s) for s in admissible(n)}
        assert max(abs(pr - (t[-1] + 1) / 2 ** n) for t, pr in law.probs.items()) < 1e-10
    law = lambda_trajectory_law(build_measurements(2, Params(r, 1.0)))
    assert law[(1, 2)] == pytest.approx(0.75) and law[(1, 0)] == pytest.approx(0.25)


@pytest.mark.parametrize("r,hbar,floor", [(0.2, 1.0, 0.0), (1.0, 1.0, 1e-12), (2.0, 0.5, 1e-12)])
def test_walk_is_markov_with_matching_kernel(r, hbar, floor):
    p = Params(r, hbar)
    for n in (2, 5, 8):
        res = qwalk_oracle(n, p, min_prefix=floor)
        assert res["markov_joint"] < 1e-10
        assert res["markov_conditional"] < 1e-10
        assert res["radial_formula"] < 1e-10
        assert res["total"] == pytest.approx(1.0, abs=1e-12)


def test_walk_at_strong_curvature_needs_a_prefix_floor():
    # prefixes of mass ~1e-15 make conditional ratios meaningless in floating point
    res = qwalk_oracle(8, Params(3.0, 1.0), min_prefix=1e-8)
    assert res["markov_joint"] < 1e-12 and res["markov_conditional"] < 1e-10


def test_flat_walk_matches_flat_kernel():
    res = qwalk_oracle(7, Params(0.0, 1.0), min_prefix=0.0)
    assert res["markov_conditional"] < 1e-10
    assert "flat" in matching_kernel(Params(0.0, 1.0)).name


def test_joint_law_starts_at_first_weights():
    law = joint_trajectory_law(build_measurements(3, Params(1.0, 1.0)))
    assert law.time_marginal(1) == pytest.approx({(-1, 1): 0.5, (1, 1): 0.5})
    rows = list(law.rows())
    assert all(len(t.split()) == 3 for t, _ in rows)
    assert sum(pr for _, pr in rows) == pytest.approx(1.0)


@pytest.mark.parametrize("r1,r2", [(0.3, 1.0), (1.0, 3.0), (0.0, 1.0)])
def test_radial_dynamics_do_not_depend_on_curvature(r1, r2):
    assert radial_dynamics_r_independence(9, Params(r1, 1.0), Params(r2, 1.0)) < 1e-10
    with pytest.raises(ValueError):
        radial_dynamics_r_independence(2, Params(r1, 1.0), Params(r2, 0.5))


def test_lr_trajectory_probability():
    assert lr_trajectory_probability([1, 2, 3]) == Fraction(1, 2)
    assert lr_trajectory_probability([1, 0]) == Fraction(1, 4)
    for n in range(1, 16):
        assert sum(lr_trajectory_probability(s) for s in admissible(n)) == 1
    for bad in ([], [0, 1], [1, 3], [1, 0, -1]):
        with pytest.raises(ValueError):
            lr_trajectory_probability(bad)


def test_weight_marginal_is_binomial():
    law = joint_trajectory_law(build_measurements(9, Params(1.0, 1.0)))
    # walk coordinates are negated weights; the binomial law is symmetric
    final = {}
    for traj, pr in law.probs.items():
        final[traj[-1][0]] = final.get(traj[-1][0], 0.0) + pr
    expected = omega_marginal(9)
    assert max(abs(final.get(k, 0.0) - float(v)) for k, v in expected.items()) < 1e-10


def test_weight_marginal_scaling():
    assert sum(omega_marginal(12).values()) == 1
    for hbar in (0.1, 0.05):
        n = round(1 / hbar ** 2)
        law = omega_marginal(n)
        var = sum(float(p) * (hbar * w) ** 2 for w, p in law.items())
        assert var == pytest.approx(1.0)
