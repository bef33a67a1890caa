"""Test for the number of spikes and the sequential count estimate.

Under ``M = M0`` the sum of ``f`` over the sample eigenvalues that are not
flagged as spiked, centred by ``b + mu`` and scaled by ``sqrt(nu)``, is
asymptotically standard normal. Scanning ``M0 = 1, 2, ...`` and picking the
first local maximum of the p-values estimates the spike count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from ._validation import check_count, check_f_tag, check_probability
from .exceptions import DomainError, NoSolutionError, SpikeTestError
from .rmt.clt import CltTerms, clt_terms
from .rmt.lsd import DiscreteLSD, ModelMoments, SpikeSpec, critical_points, lsd_support, phi_inverse
from .spectral import SpikeRankSet, split_spectrum

SPLIT_POLICIES = ("edge", "large")


def two_sided_p(statistic):
    return float(min(1.0, 2.0 * norm.sf(abs(statistic))))


@dataclass(frozen=True)
class TestReport:
    """Outcome of one test.

    Attributes
    ----------
    statistic : float
    p_value : float
        Two-sided normal p-value (chi-square upper tail for the classical
        likelihood-ratio baseline).
    reject : bool
        ``p_value < alpha_level``.
    alpha_level : float
    terms : CltTerms or None
    nonspiked_sum : float
    details : dict
        Every other intermediate quantity, for audit.
    """

    __test__ = False

    statistic: float
    p_value: float
    reject: bool
    alpha_level: float
    terms: CltTerms | None
    nonspiked_sum: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha_level": self.alpha_level,
            "nonspiked_sum": self.nonspiked_sum,
        }
        if self.terms is not None:
            out["terms"] = self.terms.to_dict()
        out.update(self.details)
        return out


def make_report(statistic, alpha_level, terms, nonspiked_sum, details=None, p_value=None):
    if not math.isfinite(statistic):
        raise SpikeTestError(f"test statistic is not finite ({statistic!r})")
    p = two_sided_p(statistic) if p_value is None else float(p_value)
    return TestReport(
        statistic=float(statistic),
        p_value=p,
        reject=bool(p < alpha_level),
        alpha_level=alpha_level,
        terms=terms,
        nonspiked_sum=float(nonspiked_sum),
        details=dict(details or {}),
    )


@dataclass(frozen=True)
class SpikeTestConfig:
    """Hypothesis ``M = M0`` and everything needed to centre the statistic.

    Parameters
    ----------
    large_count, small_count : int
        How many of the top and bottom sample eigenvalues are spiked.
    f_tag : {"x", "log"}
    H : DiscreteLSD
        Bulk spectrum, default the unit point mass.
    spikes : SpikeSpec or None
        Spike values used in the centering. ``None`` estimates them from
        the flagged sample eigenvalues.
    moments : ModelMoments
    alpha_level : float
    separation : float
        Constant in the spike separation condition.
    method : {"closed_form", "contour"} or None
    """

    large_count: int = 0
    small_count: int = 0
    f_tag: str = "x"
    H: DiscreteLSD = field(default_factory=DiscreteLSD.delta)
    spikes: SpikeSpec | None = None
    moments: ModelMoments = field(default_factory=ModelMoments)
    alpha_level: float = 0.05
    separation: float = 0.05
    method: str | None = None

    def __post_init__(self):
        check_count(self.large_count, "large_count")
        check_count(self.small_count, "small_count")
        check_f_tag(self.f_tag)
        check_probability(self.alpha_level, "alpha_level")
        if self.spikes is not None and self.spikes.total != self.M0:
            raise DomainError(f"spike multiplicities sum to {self.spikes.total} but M0={self.M0}")

    @property
    def M0(self):
        return self.large_count + self.small_count

    @property
    def ranks(self):
        return SpikeRankSet(self.large_count, self.small_count)

    def with_split(self, large_count, small_count):
        return replace(self, large_count=large_count, small_count=small_count, spikes=None)


@dataclass(frozen=True)
class SpikeEstimates:
    """Per-rank spike estimates; failed ranks are listed in ``failed``."""

    ranks: tuple
    values: tuple
    sides: tuple
    failed: tuple = ()

    def spec(self):
        return SpikeSpec.from_values([v for v in self.values if math.isfinite(v)])

    def to_dict(self):
        return {
            "ranks": list(self.ranks),
            "values": [v if math.isfinite(v) else None for v in self.values],
            "sides": list(self.sides),
            "failed": list(self.failed),
        }


def estimate_spike_values(spec, ranks, H=None, c=None, clamp=False):
    """Invert the spike map at each flagged sample eigenvalue.

    Parameters
    ----------
    spec : EigenSpectrum
    ranks : SpikeRankSet
    H : DiscreteLSD, optional
    c : float, optional
        Defaults to ``spec.c_n``.
    clamp : bool, default=False
        Replace a failed inversion (eigenvalue inside the bulk support) by
        the spike value whose image is the nearest support edge. Otherwise
        the value is NaN.

    Returns
    -------
    SpikeEstimates
    """
    H = H or DiscreteLSD.delta()
    c = spec.c_n if c is None else c
    eig = spec.eigenvalues
    crit = critical_points(c, H)
    out, sides, failed = [], [], []
    rank_list = ranks.ranks(spec.p)
    for r in rank_list:
        side = "large" if r <= ranks.large_count else "small"
        if side == "small" and crit[0] <= 0:
            raise DomainError("spikes below the bulk are not identifiable when c >= 1")
        try:
            value = phi_inverse(eig[r - 1], c, H, side)
        except NoSolutionError:
            failed.append(r)
            value = (crit[-1] if side == "large" else crit[0]) if clamp else math.nan
        out.append(float(value))
        sides.append(side)
    return SpikeEstimates(tuple(rank_list), tuple(out), tuple(sides), tuple(failed))


def test_spikes(spec, cfg):
    """Test ``H0: M = M0`` with the ranks and spike values in ``cfg``.

    Returns
    -------
    TestReport
        ``details`` holds the hypothesis, ``c_n`` and the spike values
        used in the centering.
    """
    c = spec.c_n
    if cfg.f_tag == "log" and c >= 1:
        raise DomainError(f"f=log needs p < n (c_n={c:.4g}); use f=x")
    ranks = cfg.ranks.check(spec.p)
    details = {
        "M0": cfg.M0,
        "large_count": cfg.large_count,
        "small_count": cfg.small_count,
        "p": spec.p,
        "n": spec.n,
        "c_n": c,
    }
    if cfg.spikes is None:
        estimates = estimate_spike_values(spec, ranks, cfg.H, c, clamp=True)
        spikes = estimates.spec()
        spikes.sides(cfg.H)
        details["spike_estimates"] = estimates.to_dict()
    else:
        spikes = cfg.spikes.check(cfg.H, cfg.separation)
    details["spikes"] = [[a, m] for a, m in spikes.spikes]
    terms = clt_terms(cfg.f_tag, spec.p, c, cfg.H, spikes, cfg.moments, cfg.method)
    _, nonspiked = split_spectrum(spec, ranks, cfg.f_tag)
    return make_report(terms.standardize(nonspiked), cfg.alpha_level, terms, nonspiked, details)


def split_for(spec, M0, H=None, policy="edge"):
    """Large/small split for hypothesis ``M0``.

    ``"large"`` puts every spike at the top. ``"edge"`` gives the next
    spike to the bottom side while the next bottom sample eigenvalue lies
    below the lower edge of the bulk support, and to the top otherwise.
    """
    if policy not in SPLIT_POLICIES:
        raise DomainError(f"split policy must be one of {SPLIT_POLICIES}, got {policy!r}")
    if policy == "large" or spec.c_n >= 1:
        return SpikeRankSet(M0, 0)
    lower = lsd_support(spec.c_n, H or DiscreteLSD.delta())[0][0]
    eig = spec.eigenvalues
    small = 0
    for _ in range(M0):
        if eig[spec.p - 1 - small] < lower:
            small += 1
        else:
            break
    return SpikeRankSet(M0 - small, small)


def find_inflection(p_values):
    """Index of the first local maximum of a p-value sequence.

    A run of equal values counts as one point and reports its first
    index. The first run is a maximum when it exceeds its right
    neighbour; the last run never is.

    Returns
    -------
    index : int or None
    """
    vals = np.nan_to_num(np.asarray(p_values, dtype=float), nan=0.0)
    runs = []
    for i, v in enumerate(vals):
        if runs and v == runs[-1][1]:
            continue
        runs.append((i, v))
    for k in range(len(runs) - 1):
        left = runs[k - 1][1] if k > 0 else -math.inf
        if runs[k][1] > left and runs[k][1] > runs[k + 1][1]:
            return runs[k][0]
    return None


@dataclass(frozen=True)
class SpikeCountResult:
    """Outcome of the sequential scan over ``M0 = 1..M_max``."""

    m_hat: int
    found: bool
    m0_values: tuple
    p_values: tuple
    splits: tuple
    reports: tuple = field(repr=False, compare=False, default=())
    errors: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "m_hat": self.m_hat,
            "found": self.found,
            "M0": list(self.m0_values),
            "p_values": [None if math.isnan(v) else v for v in self.p_values],
            "splits": [list(s) for s in self.splits],
            "errors": {str(k): v for k, v in self.errors.items()},
        }


def _check_outside_bulk(spec, cfg):
    est = estimate_spike_values(spec, cfg.ranks, cfg.H, spec.c_n)
    if est.failed:
        ranks = ", ".join(str(r) for r in est.failed)
        raise NoSolutionError(
            f"M0={cfg.M0}: eigenvalue rank(s) {ranks} lie inside the bulk support"
        )


def estimate_spike_count(spec, cfg_template=None, M_max=10, policy="edge"):
    """Scan ``M0 = 1..M_max`` and take the first local p-value maximum.

    Spike values are always estimated from the data in the scan. A
    hypothesis that cannot be evaluated gets a NaN p-value (treated as
    zero by the local-maximum rule) and its message in ``errors``. This
    includes flagging an eigenvalue that lies inside the bulk support,
    since no spike maps there.

    Returns
    -------
    SpikeCountResult
        ``found`` is False when no local maximum exists; ``m_hat`` is then
        ``M_max``.
    """
    cfg_template = cfg_template or SpikeTestConfig()
    check_count(M_max, "M_max", minimum=1)
    if M_max >= spec.p / 2:
        raise DomainError(f"M_max={M_max} must be below p/2={spec.p / 2:g}")
    p_values, splits, reports, errors = [], [], [], {}
    for M0 in range(1, M_max + 1):
        ranks = split_for(spec, M0, cfg_template.H, policy)
        cfg = cfg_template.with_split(ranks.large_count, ranks.small_count)
        splits.append((ranks.large_count, ranks.small_count))
        try:
            _check_outside_bulk(spec, cfg)
            report = test_spikes(spec, cfg)
        except DomainError as exc:
            errors[M0] = str(exc)
            p_values.append(math.nan)
            reports.append(None)
            continue
        p_values.append(report.p_value)
        reports.append(report)
    idx = find_inflection(p_values)
    m0_values = tuple(range(1, M_max + 1))
    return SpikeCountResult(
        m_hat=m0_values[idx] if idx is not None else M_max,
        found=idx is not None,
        m0_values=m0_values,
        p_values=tuple(p_values),
        splits=tuple(splits),
        reports=tuple(reports),
        errors=errors,
    )
