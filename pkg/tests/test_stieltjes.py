import numpy as np
import pytest
from numpy.testing import assert_allclose

from spiketest.rmt.lsd import DiscreteLSD
from spiketest.rmt.stieltjes import companion_stieltjes, residual, solve_branch

DELTA = DiscreteLSD.delta()


def test_small_c_limit():
    assert_allclose(companion_stieltjes(4.0, 1e-12, DELTA), -0.25, rtol=1e-9)


def test_point_mass_quadratic_branch():
    m = companion_stieltjes(4.0, 0.5, DELTA)
    roots = np.roots([4.0, 4.5, 1.0])
    expected = roots[np.argmin(np.abs(roots))]
    assert_allclose(m, expected, rtol=1e-12)
    assert_allclose(m.real, -0.3048, atol=5e-5)
    assert_allclose(-1 / m + 0.5 / (1 + m), 4.0, rtol=1e-12)


@pytest.mark.parametrize(
    "H", [DELTA, DiscreteLSD.parse("1:0.3,4:0.7"), DiscreteLSD.parse("1:0.5,10:0.5")]
)
@pytest.mark.parametrize("c", [0.2, 0.9, 2.0])
def test_residual_random_points(H, c):
    rng = np.random.default_rng(11)
    z = rng.uniform(-2, 30, 40) + 1j * rng.uniform(0.01, 5, 40)
    for zi in z:
        m = companion_stieltjes(zi, c, H)
        assert abs(residual(zi, m, c, H)) <= 1e-12 * max(1, abs(zi))
        assert m.imag > 0


def test_conjugate_symmetry():
    z = 1.3 + 0.4j
    H = DiscreteLSD.parse("1:0.5,3:0.5")
    assert_allclose(
        companion_stieltjes(z.conjugate(), 0.5, H), np.conj(companion_stieltjes(z, 0.5, H))
    )


def test_batched_matches_scalar():
    H = DiscreteLSD.parse("1:0.5,3:0.5")
    z = np.array([0.5 + 0.1j, 2.0 + 1.0j, 7.0 + 0.05j])
    batch = solve_branch(z, 0.7, H)
    assert_allclose(batch, [companion_stieltjes(zi, 0.7, H) for zi in z], rtol=1e-10)
