"""Noise-variance estimation when ``Sigma = sigma2 * (spikes + bulk)``.

The naive estimate divides the non-spiked eigenvalue sum by
``(p - M) * sum w_i r_i``. It is biased downward by an amount that the
linear-statistic CLT predicts; :func:`sigma_hat_corrected` adds that
amount back once, using the naive estimate as a plug-in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.stats import norm

from ._validation import check_probability
from .exceptions import DomainError, NoSolutionError, SeparationError
from .rmt.clt import clt_mu_nu
from .rmt.lsd import DiscreteLSD, ModelMoments, SpikeSpec, critical_points, phi_inverse
from .spectral import split_spectrum


@dataclass(frozen=True)
class NoiseModelSpec:
    """Spikes ``alpha_k`` (in units of ``sigma2``) and the bulk atoms.

    Parameters
    ----------
    spikes : SpikeSpec
        Unit-noise spike values; the population spikes are
        ``sigma2 * alpha_k``.
    bulk : DiscreteLSD
        Bulk atoms ``r_i`` with weights ``w_i``; its scale is ignored.
    """

    spikes: SpikeSpec = field(default_factory=SpikeSpec)
    bulk: DiscreteLSD = field(default_factory=DiscreteLSD.delta)

    def __post_init__(self):
        if self.bulk.sigma2 != 1.0:
            object.__setattr__(self, "bulk", self.bulk.with_scale(1.0))
        for alpha, _ in self.spikes.spikes:
            if any(alpha == r for r in self.bulk.values):
                raise SeparationError(f"spike {alpha:g} coincides with a bulk atom")

    @property
    def M(self):
        return self.spikes.total

    @property
    def s(self):
        return self.bulk.size

    @property
    def atom_mean(self):
        return self.bulk.atom_mean


def sigma_hat(spec, model, ranks):
    """Naive noise-variance estimate from the non-spiked eigenvalues."""
    ranks.check(spec.p)
    _, nonspiked = split_spectrum(spec, ranks, "x")
    return nonspiked / ((spec.p - ranks.total) * model.atom_mean)


def bias_term(model, sigma2, c):
    """``sum_k sum_i m_k c alpha_k sigma2 r_i w_i / (alpha_k - r_i)``.

    Linear in ``sigma2``.
    """
    if sigma2 < 0:
        raise DomainError("sigma2 must be non-negative")
    terms = []
    for alpha, m in model.spikes.spikes:
        for r, w in zip(model.bulk.values, model.bulk.weights):
            if alpha == r:
                raise SeparationError(f"spike {alpha:g} coincides with bulk atom {r:g}")
            terms.append(m * c * alpha * r * w / (alpha - r))
    return sigma2 * math.fsum(terms)


@dataclass(frozen=True)
class NoiseEstimate:
    """Naive and bias-corrected noise variance with a confidence interval."""

    sigma2_hat: float
    sigma2_c: float
    ci: tuple
    level: float
    bias: float
    mu_x: float
    nu_x: float
    denominator: float
    spikes: tuple = ()

    def to_dict(self):
        return {
            "sigma2_hat": self.sigma2_hat,
            "sigma2_c": self.sigma2_c,
            "ci": list(self.ci),
            "level": self.level,
            "bias": self.bias,
            "mu_x": self.mu_x,
            "nu_x": self.nu_x,
            "denominator": self.denominator,
            "spikes": [list(s) for s in self.spikes],
        }


def sigma_hat_corrected(spec, model, ranks, moments=None, c=None, level=0.95, iterations=1):
    """Bias-corrected noise variance.

    Parameters
    ----------
    spec : EigenSpectrum
    model : NoiseModelSpec
    ranks : SpikeRankSet
        Must flag ``model.M`` ranks.
    moments : ModelMoments, optional
    c : float, optional
        Defaults to ``spec.c_n``.
    level : float, default=0.95
        Confidence level of the interval.
    iterations : int, default=1
        Number of plug-in passes. One is the standard estimator; more
        passes feed the corrected value back in (experimental).

    Returns
    -------
    NoiseEstimate
    """
    check_probability(level, "level")
    if ranks.total != model.M:
        raise DomainError(f"{ranks.total} flagged ranks but the model has M={model.M} spikes")
    moments = moments or ModelMoments()
    c = spec.c_n if c is None else c
    denom = (spec.p - model.M) * model.atom_mean
    base = sigma_hat(spec, model, ranks)
    plug = base
    for _ in range(max(1, int(iterations))):
        bias = bias_term(model, plug, c)
        mu_x, nu_x = clt_mu_nu("x", c, model.bulk.with_scale(base), moments)
        corrected = base + (bias - mu_x) / denom
        plug = corrected
    half = norm.ppf(0.5 + level / 2.0) * math.sqrt(nu_x) / denom
    return NoiseEstimate(
        sigma2_hat=float(base),
        sigma2_c=float(corrected),
        ci=(float(corrected - half), float(corrected + half)),
        level=level,
        bias=float(bias),
        mu_x=float(mu_x),
        nu_x=float(nu_x),
        denominator=float(denom),
        spikes=model.spikes.spikes,
    )


def estimate_unit_spikes(spec, ranks, bulk=None, c=None):
    """Spike values in units of the noise variance, for data mode.

    The flagged eigenvalues are divided by the naive noise estimate and
    inverted through the spike map of the unit-scale bulk. A value inside
    the bulk support is replaced by the spike whose image is the nearest
    support edge.
    """
    bulk = (bulk or DiscreteLSD.delta()).with_scale(1.0)
    c = spec.c_n if c is None else c
    provisional = NoiseModelSpec(SpikeSpec(), bulk)
    s2 = sigma_hat(spec, provisional, ranks)
    crit = critical_points(c, bulk)
    values = []
    for r in ranks.ranks(spec.p):
        side = "large" if r <= ranks.large_count else "small"
        if side == "small" and crit[0] <= 0:
            raise DomainError("spikes below the bulk are not identifiable when c >= 1")
        try:
            values.append(phi_inverse(spec.eigenvalues[r - 1] / s2, c, bulk, side))
        except NoSolutionError:
            values.append(crit[-1] if side == "large" else crit[0])
    return NoiseModelSpec(SpikeSpec.from_values(values), bulk)
