import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.stats import kstest

from spiketest.exceptions import DomainError
from spiketest.simulation import (
    PopulationModel,
    SamplerKind,
    generate_population,
    null_statistics,
    run_noise_mc,
    run_size_power,
    run_smallest_roots_size,
    sampler_beta,
    simulate_spectra,
)


def test_model1_spectrum():
    lam = PopulationModel("model1", 10).spectrum()
    assert_allclose(sorted(lam), sorted([25, 16, 16, 1, 1, 1, 1, 0.2, 0.2, 0.1]))


def test_model3_is_scaled_model1():
    assert_allclose(
        PopulationModel("model3", 20).spectrum(), 4 * PopulationModel("model1", 20).spectrum()
    )


def test_model2_rotation_preserves_spectrum():
    T, lam = generate_population(PopulationModel("model2", 30), np.random.default_rng(0))
    Sigma = T @ T.T
    assert np.max(np.abs(Sigma - np.diag(np.diag(Sigma)))) > 1e-3
    assert_allclose(np.sort(np.linalg.eigvalsh(Sigma)), np.sort(lam), atol=1e-8)


def test_unknown_model():
    with pytest.raises(DomainError):
        PopulationModel("model9", 20)


@pytest.mark.parametrize(
    "sampler, fourth",
    [(SamplerKind.GAUSSIAN, 3.0), (SamplerKind.GAMMA, 4.5)],
)
def test_sampler_moments(sampler, fourth):
    x = sampler.draw(np.random.default_rng(1), (4_000_000,))
    assert abs(x.mean()) < 3e-3
    assert_allclose(x.var(), 1.0, rtol=5e-3)
    assert_allclose(np.mean(x**4), fourth, rtol=0.03)


def test_t4_sampler():
    x = SamplerKind.T4.draw(np.random.default_rng(2), (4_000_000,))
    assert_allclose(x.var(), 1.0, rtol=0.05)
    assert math.isinf(SamplerKind.T4.fourth_moment)
    tail = np.mean(np.abs(x) > 10) / np.mean(np.abs(x) > 5)
    assert 0.03 < tail < 0.12


def test_sampler_beta():
    T = np.diag(np.sqrt(PopulationModel("model1", 20).spectrum()))
    assert sampler_beta(T, "gaussian") == 0.0
    assert_allclose(sampler_beta(T, "gamma_4_half_minus2"), 1.5)
    assert sampler_beta(T, "scaled_t4") == 0.0


def test_spectra_reproducible_across_workers():
    a = simulate_spectra("model2", 30, 60, "gaussian", 6, seed=4, workers=1)
    b = simulate_spectra("model2", 30, 60, "gaussian", 6, seed=4, workers=2)
    assert a.shape == (6, 30)
    assert np.array_equal(a, b)
    c = simulate_spectra("model2", 30, 60, "gaussian", 6, seed=5, workers=1)
    assert not np.array_equal(a, c)


def test_size_power_result_shape():
    res = run_size_power("model2", "gaussian", [(30, 60)], [3, 6], reps=20, seed=1, workers=1)
    cell = res.cell(30, 60)
    assert set(cell["rates"]) == {"3", "6"}
    assert all(0 <= v <= 1 for v in cell["rates"].values())
    again = run_size_power("model2", "gaussian", [(30, 60)], [3, 6], reps=20, seed=1, workers=1)
    assert res.to_json() == again.to_json()
    assert json.loads(res.to_json())["reps"] == 20
    assert res.to_csv().splitlines()[0].startswith("p,n")


def test_null_statistic_normal():
    stats = null_statistics("model1", "gaussian", 100, 200, reps=400, seed=3)
    assert kstest(stats, "norm").pvalue > 0.01


def test_noise_mc_and_roots_validation():
    res = run_noise_mc("model4", "gaussian", [(30, 60)], reps=10, seed=0, workers=1)
    assert res.cell(30, 60)["mae"]["sigma2_c"] > 0
    with pytest.raises(DomainError):
        run_noise_mc("model1", "gaussian", [(30, 60)], reps=10)
    with pytest.raises(DomainError):
        run_smallest_roots_size("model2", "gaussian", "T_L", [(100, 50)], reps=10)
    with pytest.raises(DomainError):
        run_size_power("model2", "gaussian", [(30, 60)], reps=0)
