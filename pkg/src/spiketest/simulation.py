"""Population models, samplers and Monte Carlo drivers.

Four population models share the spikes ``(25, 16, 16, 0.2, 0.2, 0.1)``
on top of an identity bulk. Models 1 and 2 have unit noise, Models 3 and
4 multiply everything by ``sigma2 = 4``. Models 2 and 4 rotate the
eigenvectors by a Haar orthogonal matrix drawn afresh for every replicate.

Replicate ``r`` of grid cell ``k`` draws from the stream
``SeedSequence(seed, spawn_key=(k, r))``. The streams do not depend on
how replicates are scheduled, so serial and parallel runs agree
bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.stats import norm
from threadpoolctl import threadpool_limits

from ._validation import check_count
from .exceptions import DomainError, NoSolutionError
from .noise import NoiseModelSpec, sigma_hat_corrected
from .rmt.clt import clt_terms
from .rmt.lsd import DiscreteLSD, ModelMoments, SpikeSpec, critical_points, phi_inverse
from .roots import SmallestRootsConfig, t_l_statistic, t_plr_statistic, t_x_statistic
from .spectral import DataMatrix, EigenSpectrum, SpikeRankSet, split_spectrum

MODEL_SPIKES = (25.0, 16.0, 16.0, 0.2, 0.2, 0.1)
MODEL_SPLIT = (3, 3)
WORKERS_ENV = "SPIKETEST_NUM_WORKERS"
LEVEL = 0.05


class SamplerKind(str, Enum):
    """Standardised entry distributions (mean 0, variance 1)."""

    GAUSSIAN = "gaussian"
    GAMMA = "gamma_4_half_minus2"
    T4 = "scaled_t4"

    @property
    def fourth_moment(self):
        return {"gaussian": 3.0, "gamma_4_half_minus2": 4.5, "scaled_t4": math.inf}[self.value]

    def draw(self, rng, shape):
        if self is SamplerKind.GAUSSIAN:
            return rng.standard_normal(shape)
        if self is SamplerKind.GAMMA:
            # shape 4, scale 0.5: mean 2, variance 1
            return rng.gamma(4.0, 0.5, shape) - 2.0
        return rng.standard_t(4, shape) / math.sqrt(2.0)


@dataclass(frozen=True)
class PopulationModel:
    """One of the four benchmark population models in dimension ``p``."""

    kind: str
    p: int

    def __post_init__(self):
        if self.kind not in ("model1", "model2", "model3", "model4"):
            raise DomainError(f"unknown model {self.kind!r}")
        check_count(self.p, "p", minimum=len(MODEL_SPIKES) + 2)

    @property
    def sigma2(self):
        return 4.0 if self.kind in ("model3", "model4") else 1.0

    @property
    def rotated(self):
        return self.kind in ("model2", "model4")

    @property
    def unit_spikes(self):
        return SpikeSpec.from_values(MODEL_SPIKES)

    @property
    def spikes(self):
        return self.unit_spikes.scaled(self.sigma2)

    @property
    def bulk(self):
        return DiscreteLSD.delta(self.sigma2)

    @property
    def ranks(self):
        return SpikeRankSet(*MODEL_SPLIT)

    def spectrum(self):
        """Population eigenvalues, spikes placed at the top and bottom."""
        lam = np.ones(self.p)
        lam[:3] = MODEL_SPIKES[:3]
        lam[self.p - 3 :] = MODEL_SPIKES[3:]
        return lam * self.sigma2


def haar_orthogonal(p, rng):
    """Haar-distributed orthogonal matrix (QR with sign correction)."""
    Q, R = np.linalg.qr(rng.standard_normal((p, p)))
    return Q * np.sign(np.diag(R))


def generate_population(model, rng):
    """Factor ``T`` with ``T T' = Sigma`` and the population spectrum.

    Returns
    -------
    T : ndarray of shape (p, p)
    lam : ndarray of shape (p,)
    """
    rng = np.random.default_rng(rng)
    lam = model.spectrum()
    root = np.sqrt(lam)
    if model.rotated:
        return haar_orthogonal(model.p, rng) * root, lam
    return np.diag(root), lam


def draw_sample(T, n, sampler, rng):
    """``n`` observations ``T x`` with i.i.d. standardised entries in ``x``."""
    rng = np.random.default_rng(rng)
    sampler = SamplerKind(sampler)
    X = sampler.draw(rng, (n, T.shape[1]))
    return DataMatrix(X @ T.T)


def sampler_beta(T, sampler, q=1):
    """Fourth-cumulant coefficient for data ``T x``.

    When ``T' T`` is diagonal (every model here, rotated or not, since
    the rotation acts on the left) the coefficient is the excess
    kurtosis. Otherwise it is averaged over the eigenvectors of ``T' T``.
    Infinite fourth moments give zero.
    """
    sampler = SamplerKind(sampler)
    fourth = sampler.fourth_moment
    if not math.isfinite(fourth):
        return 0.0
    G = T.T @ T
    off = G - np.diag(np.diag(G))
    if np.max(np.abs(off)) <= 1e-10 * np.max(np.abs(G)):
        u4 = 1.0
    else:
        _, V = np.linalg.eigh(G)
        u4 = float(np.mean(np.sum(V**4, axis=0)))
    return u4 * (fourth - 2 - q)


def _rng(seed, cell, rep):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(cell, rep)))


def _replicate_spectrum(args):
    kind, p, n, sampler, seed, cell, rep = args
    rng = _rng(seed, cell, rep)
    model = PopulationModel(kind, p)
    T, _ = generate_population(model, rng)
    sample = draw_sample(T, n, sampler, rng)
    Y = sample.values
    if p <= n:
        w = np.linalg.eigvalsh(Y.T @ Y / n)
    else:
        w = np.concatenate([np.linalg.eigvalsh(Y @ Y.T / n), np.zeros(p - n)])
    return np.sort(w)[::-1]


def _num_workers(workers):
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _worker_init():
    threadpool_limits(1)


def simulate_spectra(kind, p, n, sampler, reps, seed, cell=0, workers=None):
    """Sample spectra of ``reps`` replicates, shape ``(reps, p)``."""
    jobs = [(kind, p, n, SamplerKind(sampler).value, seed, cell, r) for r in range(reps)]
    count = _num_workers(workers)
    if count == 1:
        return np.array([_replicate_spectrum(job) for job in jobs])
    with ProcessPoolExecutor(count, initializer=_worker_init) as pool:
        return np.array(
            list(pool.map(_replicate_spectrum, jobs, chunksize=max(1, reps // (4 * count))))
        )


@dataclass
class McResult:
    """Monte Carlo output: one record per grid cell."""

    kind: str
    model: str
    sampler: str
    reps: int
    seed: int
    cells: list = field(default_factory=list)
    settings: dict = field(default_factory=dict)

    def cell(self, p, n):
        for rec in self.cells:
            if rec["p"] == p and rec["n"] == n:
                return rec
        raise KeyError((p, n))

    def to_dict(self):
        return {
            "kind": self.kind,
            "model": self.model,
            "sampler": self.sampler,
            "reps": self.reps,
            "seed": self.seed,
            "settings": self.settings,
            "cells": self.cells,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def long_rows(self):
        """Long format: ``(p, n, metric, key, value)``."""
        rows = []
        for rec in self.cells:
            for metric, value in rec.items():
                if metric in ("p", "n"):
                    continue
                if isinstance(value, dict):
                    for key, v in value.items():
                        rows.append((rec["p"], rec["n"], metric, key, v))
                else:
                    rows.append((rec["p"], rec["n"], metric, "", value))
        return rows

    def to_csv(self):
        """One row per grid cell, nested metrics flattened as ``metric[key]``."""
        columns = []
        flat = []
        for rec in self.cells:
            row = {}
            for metric, value in rec.items():
                if isinstance(value, dict):
                    for key, v in value.items():
                        row[f"{metric}[{key}]"] = v
                else:
                    row[metric] = value
            for col in row:
                if col not in columns:
                    columns.append(col)
            flat.append(row)
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(flat)
        return buf.getvalue()

    def to_long_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["p", "n", "metric", "key", "value"])
        writer.writerows(self.long_rows())
        return buf.getvalue()


def _check_reps(reps):
    check_count(reps, "reps", minimum=1)


def hypothesis(M0, unit_values=MODEL_SPIKES):
    """Oracle hypothesis for ``M0``: the first ``M0`` model spikes in the
    order (25, 16, 16, 0.2, 0.2, 0.1); values above the bulk take top
    ranks and the rest bottom ranks.

    Returns ``(large_values, small_values)``; beyond the model's six
    spikes the extra ranks are top ranks whose values are estimated.
    """
    chosen = unit_values[: min(M0, len(unit_values))]
    large = [a for a in chosen if a > 1]
    small = [a for a in chosen if a < 1]
    extra = max(0, M0 - len(unit_values))
    return large, small, extra


def _spike_stat(eig, n, M0, sigma2, beta, c):
    p = eig.size
    H = DiscreteLSD.delta(sigma2)
    large, small, extra = hypothesis(M0)
    values = [a * sigma2 for a in large + small]
    n_large = len(large) + extra
    if extra:
        crit = critical_points(c, H)[-1]
        for r in range(len(large), n_large):
            try:
                values.append(phi_inverse(eig[r], c, H, "large"))
            except NoSolutionError:
                values.append(crit)
    spikes = SpikeSpec.from_values(values)
    terms = clt_terms("x", p, c, H, spikes, ModelMoments(1, beta))
    spec = EigenSpectrum(eig, n)
    _, nonspiked = split_spectrum(spec, SpikeRankSet(n_large, len(small)), "x")
    return terms.standardize(nonspiked)


def run_size_power(
    model, sampler, grid, M0_range=range(1, 8), reps=1000, seed=0, beta="auto", workers=None
):
    """Rejection rates of the spike-count test over a grid of ``(p, n)``.

    Parameters
    ----------
    model : {"model1", "model2", "model3", "model4"}
    sampler : SamplerKind or str
    grid : iterable of (p, n)
    M0_range : iterable of int
        Hypothesised counts. Up to six the centering uses the true spike
        values; beyond that the extra top ranks get estimated values.
    reps : int
    seed : int
    beta : float or "auto"
        ``"auto"`` uses :func:`sampler_beta` of the population factor.
    workers : int, optional

    Returns
    -------
    McResult
        Each cell holds ``rates`` (M0 -> rejection rate at level 0.05)
        and the pooled ``statistics`` summary at the true count.
    """
    _check_reps(reps)
    sampler = SamplerKind(sampler)
    M0s = list(M0_range)
    result = McResult(
        "size_power", model, sampler.value, reps, seed, settings={"M0": M0s, "level": LEVEL}
    )
    for cell, (p, n) in enumerate(grid):
        pm = PopulationModel(model, p)
        b = _auto_beta(pm, sampler) if beta == "auto" else float(beta)
        spectra = simulate_spectra(model, p, n, sampler, reps, seed, cell, workers)
        c = p / n
        rates = {}
        stats_true = None
        for M0 in M0s:
            stats = np.array([_spike_stat(eig, n, M0, pm.sigma2, b, c) for eig in spectra])
            rates[str(M0)] = float(np.mean(2 * norm.sf(np.abs(stats)) < LEVEL))
            if M0 == len(MODEL_SPIKES):
                stats_true = stats
        rec = {"p": p, "n": n, "beta": b, "rates": rates}
        if stats_true is not None:
            rec["null_statistic"] = {
                "mean": float(stats_true.mean()),
                "sd": float(stats_true.std(ddof=1)),
            }
        result.cells.append(rec)
    return result


def null_statistics(model, sampler, p, n, reps=1000, seed=0, beta="auto", workers=None):
    """Test statistics at the true spike count, one per replicate."""
    pm = PopulationModel(model, p)
    b = _auto_beta(pm, sampler) if beta == "auto" else float(beta)
    spectra = simulate_spectra(model, p, n, sampler, reps, seed, 0, workers)
    return np.array(
        [_spike_stat(eig, n, len(MODEL_SPIKES), pm.sigma2, b, p / n) for eig in spectra]
    )


def _auto_beta(model, sampler):
    # T'T is diagonal for all benchmark models
    T = np.diag(np.sqrt(model.spectrum()))
    return sampler_beta(T, sampler)


def run_noise_mc(model, sampler, grid, reps=1000, seed=0, beta="auto", workers=None):
    """MAE and MSE of the naive and corrected noise variance estimates.

    Returns
    -------
    McResult
        Each cell holds ``mae`` and ``mse`` for ``sigma2_hat`` and
        ``sigma2_c`` and the coverage of the 95% interval.
    """
    if model not in ("model3", "model4"):
        raise DomainError("noise simulations use model3 or model4")
    _check_reps(reps)
    sampler = SamplerKind(sampler)
    result = McResult("noise", model, sampler.value, reps, seed, settings={"level": 0.95})
    for cell, (p, n) in enumerate(grid):
        pm = PopulationModel(model, p)
        b = _auto_beta(pm, sampler) if beta == "auto" else float(beta)
        moments = ModelMoments(1, b)
        spec_model = NoiseModelSpec(pm.unit_spikes, DiscreteLSD.delta())
        spectra = simulate_spectra(model, p, n, sampler, reps, seed, cell, workers)
        naive, corrected, covered = [], [], 0
        for eig in spectra:
            est = sigma_hat_corrected(EigenSpectrum(eig, n), spec_model, pm.ranks, moments)
            naive.append(est.sigma2_hat)
            corrected.append(est.sigma2_c)
            covered += est.ci[0] <= pm.sigma2 <= est.ci[1]
        naive = np.array(naive) - pm.sigma2
        corrected = np.array(corrected) - pm.sigma2
        result.cells.append(
            {
                "p": p,
                "n": n,
                "beta": b,
                "mae": {
                    "sigma2_hat": float(np.mean(np.abs(naive))),
                    "sigma2_c": float(np.mean(np.abs(corrected))),
                },
                "mse": {
                    "sigma2_hat": float(np.mean(naive**2)),
                    "sigma2_c": float(np.mean(corrected**2)),
                },
                "coverage": covered / reps,
            }
        )
    return result


STATISTICS = {"T_L": t_l_statistic, "T_x": t_x_statistic, "T_PLR": t_plr_statistic}


def run_smallest_roots_size(
    model, sampler, statistic, grid, reps=1000, seed=0, beta="auto", workers=None
):
    """Empirical size of a smallest-roots test at level 0.05.

    The null excludes the model's spiked ranks (top three, bottom three)
    and uses the true spike values and noise variance.
    """
    if model not in ("model1", "model2"):
        raise DomainError("smallest-roots simulations use model1 or model2")
    if statistic not in STATISTICS:
        raise DomainError(f"statistic must be one of {sorted(STATISTICS)}")
    _check_reps(reps)
    sampler = SamplerKind(sampler)
    result = McResult(
        "roots", model, sampler.value, reps, seed, settings={"statistic": statistic, "level": LEVEL}
    )
    for cell, (p, n) in enumerate(grid):
        if statistic != "T_x" and p >= n:
            raise DomainError(f"{statistic} needs p < n; got p={p}, n={n}")
        pm = PopulationModel(model, p)
        b = _auto_beta(pm, sampler) if beta == "auto" else float(beta)
        cfg = SmallestRootsConfig(pm.unit_spikes, pm.sigma2, ModelMoments(1, b), pm.ranks, LEVEL)
        spectra = simulate_spectra(model, p, n, sampler, reps, seed, cell, workers)
        fn = STATISTICS[statistic]
        rejects = [fn(EigenSpectrum(eig, n), cfg).reject for eig in spectra]
        result.cells.append({"p": p, "n": n, "beta": b, "size": float(np.mean(rejects))})
    return result
