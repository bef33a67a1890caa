"""Scikit-learn style front ends for data analysis.

Each estimator takes a data matrix (rows are observations), forms the
sample covariance (column-centred, divisor ``n - 1`` by default) and runs
one of the procedures of the package. Results are stored in attributes
with a trailing underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .noise import NoiseModelSpec, estimate_unit_spikes, sigma_hat_corrected
from .rmt.lsd import DiscreteLSD, ModelMoments, SpikeSpec
from .roots import SmallestRootsConfig, t_l_statistic, t_plr_statistic, t_x_statistic
from .exceptions import DomainError
from .spectral import (
    EigenSpectrum,
    SpikeRankSet,
    eigen_spectrum,
    sample_covariance,
    standardize_columns,
)
from .spikes import SpikeTestConfig, estimate_spike_count, test_spikes


def _bulk(bulk, sigma2):
    if isinstance(bulk, DiscreteLSD):
        return bulk.with_scale(sigma2)
    return DiscreteLSD.parse(bulk, sigma2)


def _spikes(spikes):
    if spikes is None or isinstance(spikes, SpikeSpec):
        return spikes
    return SpikeSpec.parse(spikes)


class _SpectrumMixin:
    def _fit_spectrum(self, X, vectors=False):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0) if self.center else np.zeros(X.shape[1])
        if self.standardize:
            X = standardize_columns(X)
        S = sample_covariance(X, center=self.center)
        spec = eigen_spectrum(S, X.shape[0], return_eigenvectors=vectors)
        self.eigenvalues_ = np.asarray(spec.eigenvalues)
        self.n_samples_ = X.shape[0]
        return spec


class SpikeCountTest(_SpectrumMixin, BaseEstimator):
    """Test that the population has exactly ``n_large + n_small`` spikes.

    Parameters
    ----------
    n_large, n_small : int
        Number of top and bottom sample eigenvalues treated as spiked.
    f : {"x", "log"}, default="x"
    bulk : str or DiscreteLSD, default="1:1"
        Bulk atoms as ``"r1:w1,r2:w2"``.
    sigma2 : float, default=1.0
    spikes : str or SpikeSpec, optional
        Known spike values (``"25x1,16x2"``); estimated when omitted.
    beta : float, default=0.0
    q : int, default=1
    alpha : float, default=0.05
    center : bool, default=True
    standardize : bool, default=False

    Attributes
    ----------
    report_ : TestReport
    statistic_, p_value_ : float
    reject_ : bool
    """

    def __init__(
        self,
        n_large=0,
        n_small=0,
        f="x",
        bulk="1:1",
        sigma2=1.0,
        spikes=None,
        beta=0.0,
        q=1,
        alpha=0.05,
        center=True,
        standardize=False,
    ):
        self.n_large = n_large
        self.n_small = n_small
        self.f = f
        self.bulk = bulk
        self.sigma2 = sigma2
        self.spikes = spikes
        self.beta = beta
        self.q = q
        self.alpha = alpha
        self.center = center
        self.standardize = standardize

    def _config(self):
        return SpikeTestConfig(
            large_count=self.n_large,
            small_count=self.n_small,
            f_tag=self.f,
            H=_bulk(self.bulk, self.sigma2),
            spikes=_spikes(self.spikes),
            moments=ModelMoments(self.q, self.beta),
            alpha_level=self.alpha,
        )

    def fit(self, X, y=None):
        spec = self._fit_spectrum(X)
        self.report_ = test_spikes(spec, self._config())
        self.statistic_ = self.report_.statistic
        self.p_value_ = self.report_.p_value
        self.reject_ = self.report_.reject
        return self


class SpikeNumberEstimator(_SpectrumMixin, TransformerMixin, BaseEstimator):
    """Estimate the spike count by a sequential scan and project onto the
    spiked eigenvectors.

    Parameters
    ----------
    m_max : int, default=10
    f : {"x", "log"}, default="x"
    bulk : str or DiscreteLSD, default="1:1"
    sigma2 : float, default=1.0
    beta : float, default=0.0
    q : int, default=1
    alpha : float, default=0.05
    split_policy : {"edge", "large"}, default="edge"
    center : bool, default=True
    standardize : bool, default=False

    Attributes
    ----------
    n_spikes_ : int
    found_ : bool
        False when the p-value scan has no local maximum.
    p_values_ : ndarray of shape (m_max,)
    spike_values_ : ndarray
        Estimated spike values at the selected count.
    components_ : ndarray of shape (n_spikes_, n_features)
        Sample eigenvectors of the flagged ranks.
    """

    def __init__(
        self,
        m_max=10,
        f="x",
        bulk="1:1",
        sigma2=1.0,
        beta=0.0,
        q=1,
        alpha=0.05,
        split_policy="edge",
        center=True,
        standardize=False,
    ):
        self.m_max = m_max
        self.f = f
        self.bulk = bulk
        self.sigma2 = sigma2
        self.beta = beta
        self.q = q
        self.alpha = alpha
        self.split_policy = split_policy
        self.center = center
        self.standardize = standardize

    def fit(self, X, y=None):
        spec = self._fit_spectrum(X, vectors=True)
        template = SpikeTestConfig(
            f_tag=self.f,
            H=_bulk(self.bulk, self.sigma2),
            moments=ModelMoments(self.q, self.beta),
            alpha_level=self.alpha,
        )
        result = estimate_spike_count(
            EigenSpectrum(spec.eigenvalues, spec.n), template, self.m_max, self.split_policy
        )
        self.result_ = result
        self.n_spikes_ = result.m_hat
        self.found_ = result.found
        self.p_values_ = np.array(result.p_values)
        large, small = result.splits[result.m_hat - 1]
        self.split_ = (large, small)
        ranks = SpikeRankSet(large, small)
        mask = ranks.mask(spec.p)
        self.components_ = spec.eigenvectors[:, mask].T
        report = result.reports[result.m_hat - 1]
        estimates = report.details.get("spike_estimates") if report is not None else None
        self.spike_values_ = np.array(estimates["values"] if estimates else [], dtype=float)
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        return (X - self.mean_) @ self.components_.T


class NoiseVarianceEstimator(_SpectrumMixin, BaseEstimator):
    """Bias-corrected noise variance.

    Parameters
    ----------
    n_large, n_small : int
        Spiked top and bottom ranks.
    bulk : str or DiscreteLSD, default="1:1"
    spikes : str or SpikeSpec, optional
        Spike values in units of the noise variance; estimated if omitted.
    beta : float, default=0.0
    q : int, default=1
    level : float, default=0.95
    center : bool, default=True
    standardize : bool, default=False

    Attributes
    ----------
    sigma2_ : float
        Corrected estimate.
    sigma2_hat_ : float
        Naive estimate.
    ci_ : tuple of float
    estimate_ : NoiseEstimate
    """

    def __init__(
        self,
        n_large=0,
        n_small=0,
        bulk="1:1",
        spikes=None,
        beta=0.0,
        q=1,
        level=0.95,
        center=True,
        standardize=False,
    ):
        self.n_large = n_large
        self.n_small = n_small
        self.bulk = bulk
        self.spikes = spikes
        self.beta = beta
        self.q = q
        self.level = level
        self.center = center
        self.standardize = standardize

    def fit(self, X, y=None):
        spec = self._fit_spectrum(X)
        ranks = SpikeRankSet(self.n_large, self.n_small)
        bulk = _bulk(self.bulk, 1.0)
        spikes = _spikes(self.spikes)
        if spikes is None:
            model = estimate_unit_spikes(spec, ranks, bulk)
        else:
            model = NoiseModelSpec(spikes, bulk)
        self.estimate_ = sigma_hat_corrected(
            spec, model, ranks, ModelMoments(self.q, self.beta), level=self.level
        )
        self.sigma2_ = self.estimate_.sigma2_c
        self.sigma2_hat_ = self.estimate_.sigma2_hat
        self.ci_ = self.estimate_.ci
        return self


class SmallestRootsTest(_SpectrumMixin, BaseEstimator):
    """Test that all but the ``n_large + n_small`` extreme population roots
    are equal.

    Parameters
    ----------
    n_large, n_small : int
    statistic : {"T_L", "T_x", "T_PLR"}, default="T_L"
    sigma2 : float or "auto", default="auto"
        ``"auto"`` plugs in the bias-corrected noise variance.
    spikes : str or SpikeSpec, optional
        Spike values in units of ``sigma2``; estimated if omitted.
    beta : float, default=0.0
    q : int, default=1
    alpha : float, default=0.05
    center : bool, default=True
    standardize : bool, default=False
    """

    def __init__(
        self,
        n_large=1,
        n_small=0,
        statistic="T_L",
        sigma2="auto",
        spikes=None,
        beta=0.0,
        q=1,
        alpha=0.05,
        center=True,
        standardize=False,
    ):
        self.n_large = n_large
        self.n_small = n_small
        self.statistic = statistic
        self.sigma2 = sigma2
        self.spikes = spikes
        self.beta = beta
        self.q = q
        self.alpha = alpha
        self.center = center
        self.standardize = standardize

    def fit(self, X, y=None):
        spec = self._fit_spectrum(X)
        self.report_ = smallest_roots_report(
            spec,
            SpikeRankSet(self.n_large, self.n_small),
            self.statistic,
            self.sigma2,
            _spikes(self.spikes),
            ModelMoments(self.q, self.beta),
            self.alpha,
        )
        self.statistic_ = self.report_.statistic
        self.p_value_ = self.report_.p_value
        self.reject_ = self.report_.reject
        return self


def smallest_roots_report(spec, ranks, statistic, sigma2, spikes, moments, alpha):
    """Run one smallest-roots test, estimating ``sigma2`` and the spike
    values from the data when they are not given."""
    bulk = DiscreteLSD.delta()
    noise = None
    if spikes is None:
        model = estimate_unit_spikes(spec, ranks, bulk)
    else:
        model = NoiseModelSpec(spikes, bulk)
    if sigma2 == "auto":
        noise = sigma_hat_corrected(spec, model, ranks, moments)
        sigma2 = noise.sigma2_c
    cfg = SmallestRootsConfig(model.spikes, float(sigma2), moments, ranks, alpha)
    fn = {"T_L": t_l_statistic, "T_x": t_x_statistic}.get(statistic)
    if statistic == "T_PLR":
        report = t_plr_statistic(spec, cfg)
    elif fn is not None:
        report = fn(spec, cfg)
    else:
        raise DomainError(f"statistic must be T_L, T_x or T_PLR, got {statistic!r}")
    if noise is not None:
        report.details["noise"] = noise.to_dict()
    report.details["spikes"] = [list(s) for s in model.spikes.spikes]
    return report
