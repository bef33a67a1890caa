import numpy as np
import pytest
from numpy.testing import assert_allclose
from sklearn.base import clone

from spiketest import (
    NoiseVarianceEstimator,
    SmallestRootsTest,
    SpikeCountTest,
    SpikeNumberEstimator,
)
from spiketest.exceptions import DomainError

from conftest import MODEL_SPIKES


@pytest.mark.parametrize(
    "est",
    [
        SpikeCountTest(n_large=3, n_small=3),
        SpikeNumberEstimator(m_max=8),
        NoiseVarianceEstimator(3, 3),
        SmallestRootsTest(3, 3),
    ],
)
def test_clone_round_trip(est):
    twin = clone(est)
    assert twin.get_params() == est.get_params()


def test_spike_count_test(model1_data):
    est = SpikeCountTest(n_large=3, n_small=3, spikes=MODEL_SPIKES).fit(model1_data.values)
    assert 0 <= est.p_value_ <= 1
    assert est.reject_ == (est.p_value_ < 0.05)
    assert est.eigenvalues_.shape == (100,)
    assert est.n_features_in_ == 100


def test_spike_number_estimator(model1_data):
    X = model1_data.values
    est = SpikeNumberEstimator(m_max=10).fit(X)
    assert est.n_spikes_ == 6
    assert est.split_ == (3, 3)
    assert est.components_.shape == (6, 100)
    assert_allclose(est.components_ @ est.components_.T, np.eye(6), atol=1e-10)
    Z = est.transform(X)
    assert Z.shape == (200, 6)
    assert_allclose(Z.mean(axis=0), 0, atol=1e-10)
    assert est.spike_values_.size == 6


def test_transform_before_fit():
    from sklearn.exceptions import NotFittedError

    with pytest.raises(NotFittedError):
        SpikeNumberEstimator().transform(np.ones((3, 3)))


def test_noise_variance_estimator(model3_data):
    est = NoiseVarianceEstimator(3, 3, spikes=MODEL_SPIKES).fit(model3_data.values)
    assert abs(est.sigma2_ - 4) < 0.2
    assert est.ci_[0] < est.sigma2_ < est.ci_[1]
    auto = NoiseVarianceEstimator(3, 3).fit(model3_data.values)
    assert abs(auto.sigma2_ - 4) < 0.25


def test_smallest_roots_test(model3_data):
    est = SmallestRootsTest(3, 3).fit(model3_data.values)
    assert est.report_.details["test"] == "T_L"
    assert 0 <= est.p_value_ <= 1
    fixed = SmallestRootsTest(3, 3, statistic="T_x", sigma2=4.0).fit(model3_data.values)
    assert fixed.report_.details["sigma2"] == 4.0
    with pytest.raises(DomainError):
        SmallestRootsTest(3, 3, statistic="T_z").fit(model3_data.values)
