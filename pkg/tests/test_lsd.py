import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from spiketest.exceptions import DomainError, NoSolutionError, SeparationError
from spiketest.rmt.lsd import (
    DiscreteLSD,
    ModelMoments,
    SpikeSpec,
    beta_coefficient,
    critical_points,
    lsd_support,
    phi,
    phi_inverse,
)

DELTA = DiscreteLSD.delta()
TWO_ATOMS = DiscreteLSD.parse("1:0.5,3:0.5")


def test_discrete_lsd_parse_and_moments():
    assert TWO_ATOMS.values == (1.0, 3.0)
    assert TWO_ATOMS.mean == 2.0
    assert TWO_ATOMS.with_scale(2.0).mean == 4.0
    with pytest.raises(DomainError):
        DiscreteLSD.parse("1:0.5,3:0.4")
    with pytest.raises(DomainError):
        DiscreteLSD.parse("1:0.5,-3:0.5")


def test_spike_spec_parse():
    spec = SpikeSpec.parse("25x1,16x2,0.2x2,0.1x1")
    assert spec.total == 6
    assert spec.sides(DELTA) == ["large", "large", "small", "small"]
    assert_allclose(spec.scaled(4).alphas, [100, 64, 64, 0.8, 0.8, 0.4])
    with pytest.raises(DomainError):
        SpikeSpec.parse("25y")


def test_spike_spec_separation():
    with pytest.raises(SeparationError):
        SpikeSpec.parse("1x1").sides(DELTA)
    with pytest.raises(SeparationError):
        SpikeSpec.parse("10x1,10.2x1").check(DELTA)
    SpikeSpec.parse("10x1,12x1").check(DELTA)


def test_model_moments_validation():
    with pytest.raises(DomainError):
        ModelMoments(q=2)
    with pytest.raises(DomainError):
        ModelMoments(beta=math.nan)


def test_beta_gaussian_and_gamma():
    assert beta_coefficient(1.0, 3.0, q=1) == 0.0
    assert_allclose(beta_coefficient(1.0, 4.5, q=1), 1.5)
    assert beta_coefficient(1.0, math.inf) == 0.0


def test_gamma_fourth_moment_empirical():
    rng = np.random.default_rng(0)
    x = rng.gamma(4.0, 0.5, size=10**7) - 2.0
    assert_allclose(np.mean(x**4), 4.5, rtol=0.02)


def test_beta_vanishes_for_haar_eigenvectors():
    from spiketest.simulation import haar_orthogonal

    U = haar_orthogonal(400, np.random.default_rng(3))
    u4 = np.sum(U[:, 0] ** 4)
    assert u4 < 0.02
    assert abs(beta_coefficient(u4, 4.5)) < 0.03


def test_phi_examples():
    assert_allclose(phi(25.0, 0.5, DELTA), 25.5208333, rtol=1e-8)
    assert_allclose(phi(0.1, 0.5, DELTA), 0.0444444, rtol=1e-5)
    assert phi(7.0, 0.0, DELTA) == 7.0


def test_phi_inverse_example():
    assert_allclose(phi_inverse(25.5208333333333, 0.5, DELTA, "large"), 25.0, rtol=1e-12)


@pytest.mark.parametrize("c", [0.5, 1.0, 1.5])
@pytest.mark.parametrize("alpha", [16.0, 0.2, 0.1])
def test_phi_inverse_round_trip(alpha, c):
    side = "large" if alpha > 1 else "small"
    crit = critical_points(c, DELTA)
    if side == "small" and crit[0] <= 0:
        assert c >= 1
    assert_allclose(phi_inverse(phi(alpha, c, DELTA), c, DELTA, side), alpha, rtol=1e-12)


def test_phi_inverse_small_c_is_identity():
    assert_allclose(phi_inverse(7.0, 1e-12, DELTA, "large"), 7.0, rtol=1e-9)


def test_phi_inverse_inside_bulk_fails():
    with pytest.raises(NoSolutionError):
        phi_inverse(1.5, 0.5, DELTA, "large")


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(1.5, 200.0),
    c=st.floats(0.05, 3.0),
    w=st.floats(0.1, 0.9),
)
def test_phi_inverse_round_trip_two_atoms(alpha, c, w):
    H = DiscreteLSD((1.0, 1.3), (w, 1 - w))
    crit = critical_points(c, H)
    alpha = crit[-1] + alpha
    assert_allclose(phi_inverse(phi(alpha, c, H), c, H, "large"), alpha, rtol=1e-9)


def test_support_mp_edges():
    ((lo, hi),) = lsd_support(0.5, DELTA)
    assert_allclose([lo, hi], [(1 - math.sqrt(0.5)) ** 2, (1 + math.sqrt(0.5)) ** 2])
    ((lo, hi),) = lsd_support(1.0, DELTA)
    assert_allclose([lo, hi], [0.0, 4.0], atol=1e-12)


def test_support_scales_with_sigma2():
    base = np.array(lsd_support(0.5, DELTA))
    assert_allclose(np.array(lsd_support(0.5, DiscreteLSD.delta(3.0))), 3 * base)


def test_support_splits_for_separated_atoms():
    H = DiscreteLSD((1.0, 10.0), (0.5, 0.5))
    intervals = lsd_support(0.05, H)
    assert len(intervals) == 2
    assert intervals[0][1] < intervals[1][0]
