import numpy as np
import pytest

from spiketest.simulation import PopulationModel, draw_sample, generate_population
from spiketest.spectral import spectrum_from_data

MODEL_SPIKES = "25x1,16x2,0.2x2,0.1x1"


def model_draw(kind, p, n, seed, sampler="gaussian"):
    rng = np.random.default_rng(seed)
    T, _ = generate_population(PopulationModel(kind, p), rng)
    return draw_sample(T, n, sampler, rng)


@pytest.fixture
def model1_data():
    return model_draw("model1", 100, 200, 5)


@pytest.fixture
def model1_spectrum(model1_data):
    return spectrum_from_data(model1_data, center=True)


@pytest.fixture
def model3_data():
    return model_draw("model3", 100, 200, 9)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
