"""Tests for the number of spikes in a generalized spiked covariance model,
with bias-corrected noise-variance estimation and a test of equality of
the smallest population roots."""

__version__ = "0.1.0"

from .estimators import (  # noqa: E402
    NoiseVarianceEstimator,
    SmallestRootsTest,
    SpikeCountTest,
    SpikeNumberEstimator,
)
from .exceptions import (  # noqa: E402
    ConvergenceError,
    CSVParseError,
    DomainError,
    IntegrationError,
    SpikeTestError,
)
from .noise import NoiseModelSpec, sigma_hat, sigma_hat_corrected  # noqa: E402
from .rmt import DiscreteLSD, ModelMoments, SpikeSpec  # noqa: E402
from .roots import SmallestRootsConfig, t_l_statistic, t_plr_statistic, t_x_statistic  # noqa: E402
from .spectral import (
    EigenSpectrum,
    SpikeRankSet,
    eigen_spectrum,
    ingest_csv,
    spectrum_from_data,
)  # noqa: E402
from .spikes import SpikeTestConfig, estimate_spike_count, test_spikes  # noqa: E402

__all__ = [
    "CSVParseError",
    "ConvergenceError",
    "DiscreteLSD",
    "DomainError",
    "EigenSpectrum",
    "IntegrationError",
    "ModelMoments",
    "NoiseModelSpec",
    "NoiseVarianceEstimator",
    "SmallestRootsConfig",
    "SmallestRootsTest",
    "SpikeCountTest",
    "SpikeNumberEstimator",
    "SpikeRankSet",
    "SpikeSpec",
    "SpikeTestConfig",
    "SpikeTestError",
    "eigen_spectrum",
    "estimate_spike_count",
    "ingest_csv",
    "sigma_hat",
    "sigma_hat_corrected",
    "spectrum_from_data",
    "t_l_statistic",
    "t_plr_statistic",
    "t_x_statistic",
    "test_spikes",
]
