"""Test that the ``p - M`` smallest population roots are equal.

Under ``Sigma = A A' + sigma2 I`` with ``rank(A A') = M`` the non-spiked
population roots all equal ``sigma2``. The classical likelihood-ratio
statistic compares the arithmetic and geometric means of the non-spiked
sample eigenvalues; its chi-square reference breaks down when ``p`` grows
with ``n``. :func:`t_l_statistic` recentres it with the linear-statistic
CLT and :func:`t_x_statistic` uses the trace part alone, which also works
for ``p > n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chi2

from ._validation import check_positive, check_probability
from .exceptions import ConfigurationError, DomainError
from .rmt.clt import CltTerms, centering_b, closed_form_mu_nu
from .rmt.lsd import DiscreteLSD, ModelMoments, SpikeSpec
from .spectral import SpikeRankSet, split_spectrum
from .spikes import make_report


@dataclass(frozen=True)
class SmallestRootsConfig:
    """Null model for the smallest-roots tests.

    Parameters
    ----------
    spikes : SpikeSpec
        Spike values in units of ``sigma2`` (``alpha* / sigma2 + 1`` for a
        factor model).
    sigma2 : float
        Common value of the non-spiked roots.
    moments : ModelMoments
    ranks : SpikeRankSet or None
        Which sample ranks are excluded. Defaults to the top ``M``.
    alpha_level : float
    """

    spikes: SpikeSpec = field(default_factory=SpikeSpec)
    sigma2: float = 1.0
    moments: ModelMoments = field(default_factory=ModelMoments)
    ranks: SpikeRankSet | None = None
    alpha_level: float = 0.05

    def __post_init__(self):
        check_positive(self.sigma2, "sigma2")
        check_probability(self.alpha_level, "alpha_level")
        self.spikes.sides(DiscreteLSD.delta())
        if self.ranks is None:
            object.__setattr__(self, "ranks", SpikeRankSet(self.spikes.total, 0))
        elif self.ranks.total != self.spikes.total:
            raise DomainError(
                f"{self.ranks.total} excluded ranks but spikes sum to M={self.spikes.total}"
            )

    @property
    def M(self):
        return self.spikes.total

    @property
    def bulk(self):
        return DiscreteLSD.delta(self.sigma2)


def _as_ranks(spec, ranks):
    if isinstance(ranks, SpikeRankSet):
        return ranks.check(spec.p)
    return SpikeRankSet(int(ranks), 0).check(spec.p)


def pseudo_lr(spec, ranks):
    """``-2 log L / (n (p - M))``: log of the arithmetic mean minus the
    mean log of the non-spiked eigenvalues.

    Parameters
    ----------
    spec : EigenSpectrum
    ranks : int or SpikeRankSet
        ``M`` (the top ``M`` ranks are excluded) or an explicit rank set.
    """
    ranks = _as_ranks(spec, ranks)
    k = spec.p - ranks.total
    if k < 2:
        raise DomainError("need at least two non-spiked eigenvalues")
    values = spec.eigenvalues[~ranks.mask(spec.p)]
    if np.any(values <= 0):
        raise DomainError(
            "non-spiked eigenvalues must be positive for the log statistic; "
            "use the trace statistic T_x when p >= n"
        )
    total = math.fsum(values)
    logs = math.fsum(np.log(values))
    return max(0.0, math.log(total / k) - logs / k)


def _x_terms(spec, cfg, c):
    H = cfg.bulk
    spikes = cfg.spikes.scaled(cfg.sigma2)
    b_x = centering_b("x", spec.p, c, H, spikes)
    mu_x, nu_x = closed_form_mu_nu("x", c, H, cfg.moments)
    return b_x, mu_x, nu_x


def t_x_statistic(spec, cfg, c_n=None):
    """Trace-only statistic ``(sum l_i - b_x - mu_x) / sqrt(nu_x)``.

    Valid for any ``p / n``, including ``p > n``.
    """
    c = spec.c_n if c_n is None else c_n
    ranks = cfg.ranks.check(spec.p)
    b_x, mu_x, nu_x = _x_terms(spec, cfg, c)
    _, nonspiked = split_spectrum(spec, ranks, "x")
    terms = CltTerms(b=b_x, mu=mu_x, nu=nu_x, f_tag="x", method="closed_form")
    details = {
        "test": "T_x",
        "M": cfg.M,
        "sigma2": cfg.sigma2,
        "c_n": c,
        "delta_1": nonspiked - b_x - mu_x,
    }
    return make_report(terms.standardize(nonspiked), cfg.alpha_level, terms, nonspiked, details)


def t_l_statistic(spec, cfg, c_n=None):
    """Recentred pseudo-likelihood-ratio statistic.

    ``T_L = (L' - log(b_x / k) + (b_log + mu_log) / k) / sqrt(nu_L)`` with
    ``L' = pseudo_lr`` and ``k = p - M``; ``nu_L`` combines the variances
    of the trace and log-determinant parts and their covariance
    ``(q + 1 + beta) c sigma2``.

    Raises
    ------
    ConfigurationError
        If ``nu_L`` is not positive; the message lists every term.
    """
    c = spec.c_n if c_n is None else c_n
    if not c < 1:
        raise DomainError(f"T_L needs p < n (c_n={c:.4g}); use T_x")
    ranks = cfg.ranks.check(spec.p)
    k = spec.p - ranks.total
    L = pseudo_lr(spec, ranks)
    b_x, mu_x, nu_x = _x_terms(spec, cfg, c)
    H = cfg.bulk
    b_log = centering_b("log", spec.p, c, H, cfg.spikes.scaled(cfg.sigma2))
    mu_log, nu_log = closed_form_mu_nu("log", c, H, cfg.moments)
    cov = (cfg.moments.q + 1 + cfg.moments.beta) * c * cfg.sigma2
    nu_L = nu_x / b_x**2 - 2.0 * cov / (b_x * k) + nu_log / k**2
    details = {
        "test": "T_L",
        "M": cfg.M,
        "sigma2": cfg.sigma2,
        "c_n": c,
        "pseudo_lr": L,
        "b_x": b_x,
        "mu_x": mu_x,
        "nu_x": nu_x,
        "b_log": b_log,
        "mu_log": mu_log,
        "nu_log": nu_log,
        "cov_x_log": cov,
        "nu_L": nu_L,
    }
    if not nu_L > 0:
        dump = ", ".join(f"{key}={value!r}" for key, value in details.items())
        raise ConfigurationError(f"nu_L is not positive: {dump}")
    centre = L - math.log(b_x / k) + (b_log + mu_log) / k
    statistic = centre / math.sqrt(nu_L)
    _, nonspiked = split_spectrum(spec, ranks, "x")
    return make_report(statistic, cfg.alpha_level, None, nonspiked, details)


def t_plr_statistic(spec, cfg):
    """Classical ``-2 log L`` with its chi-square reference,
    ``(k + 2)(k - 1) / 2`` degrees of freedom for ``k = p - M``."""
    ranks = cfg.ranks.check(spec.p)
    k = spec.p - ranks.total
    L = pseudo_lr(spec, ranks)
    stat = spec.n * k * L
    df = (k + 2) * (k - 1) / 2
    p_value = float(chi2.sf(stat, df))
    _, nonspiked = split_spectrum(spec, ranks, "x")
    details = {"test": "T_PLR", "M": cfg.M, "sigma2": cfg.sigma2, "df": df, "pseudo_lr": L}
    return make_report(stat, cfg.alpha_level, None, nonspiked, details, p_value=p_value)
