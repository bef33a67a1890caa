"""Centering, mean and variance of linear spectral statistics.

For ``f`` in ``{x, log}`` the sum ``sum_{j not spiked} f(l_j)`` is
asymptotically normal after subtracting ``b`` and ``mu`` and dividing by
``sqrt(nu)``. For a point-mass bulk the three terms have closed forms;
for a general discrete bulk ``mu`` and ``nu`` are contour integrals
around the support, evaluated here by the trapezoidal rule.

The contour lives in the ``z`` plane. Writing ``s = log z`` it is the
ellipse

    s(theta) = s0 + h cosh(tau) cos(theta) + i h sinh(tau) sin(theta)

with foci at ``log a`` and ``log b`` (the support edges). Keeping
``h sinh(tau) < pi`` stops the curve from reaching the negative real
axis, so ``log z = s`` holds exactly on it. Being an ellipse in
log-coordinates, its distance to each edge scales with the edge itself,
which keeps the rule accurate when the support spans several orders of
magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson

from .._validation import check_f_tag, check_positive
from ..exceptions import DomainError, IntegrationError
from .lsd import ModelMoments, SpikeSpec, lsd_support, phi
from .stieltjes import branch_gauge, dz_dm, solve_branch

METHODS = ("closed_form", "contour")

DEFAULT_NODES = 2048
MAX_NODES = 16384
TARGET_RTOL = 1e-8
ACCEPT_RTOL = 1e-6
DOUBLE_CHUNK = 512


@dataclass(frozen=True)
class CltTerms:
    """Centering ``b``, mean correction ``mu`` and variance ``nu``."""

    b: float
    mu: float
    nu: float
    f_tag: str
    method: str

    def __post_init__(self):
        check_f_tag(self.f_tag)
        if not self.nu > 0:
            raise DomainError(f"variance term nu={self.nu!r} is not positive")

    def standardize(self, total):
        """``(total - b - mu) / sqrt(nu)``."""
        return (total - self.b - self.mu) / math.sqrt(self.nu)

    def to_dict(self):
        return {
            "b": self.b,
            "mu": self.mu,
            "nu": self.nu,
            "f": self.f_tag,
            "method": self.method,
        }


def mp_log_mean(c):
    """``int log x dF^{c, delta_1}(x)`` for ``0 < c < 1``."""
    if not 0 < c < 1:
        raise DomainError(f"log statistic needs 0 < c < 1, got c={c:g}; use f=x")
    return (c - 1.0) / c * math.log1p(-c) - 1.0


# ---------------------------------------------------------------- contours


@dataclass(frozen=True)
class _Nodes:
    z: np.ndarray
    dz: np.ndarray
    logz: np.ndarray
    m: np.ndarray

    def f(self, f_tag):
        return self.z if f_tag == "x" else self.logz


def _envelope(c, H):
    intervals = lsd_support(c, H)
    return intervals[0][0], intervals[-1][1]


def _contour(c, H, level, N):
    """Trapezoid nodes on a closed curve around the support.

    ``level`` in (0, 1) sets how far the curve sits from the support,
    as a fraction of the largest admissible opening.
    """
    a, b = _envelope(c, H)
    theta = 2.0 * np.pi * (np.arange(N) + 0.5) / N
    weight = 2.0 * np.pi / N
    if a > 0:
        s0 = 0.5 * (math.log(a) + math.log(b))
        h = 0.5 * (math.log(b) - math.log(a))
        tau = level * math.asinh(math.pi / h)
        s = s0 + h * math.cosh(tau) * np.cos(theta) + 1j * h * math.sinh(tau) * np.sin(theta)
        ds = (
            -h * math.cosh(tau) * np.sin(theta) + 1j * h * math.sinh(tau) * np.cos(theta)
        ) * weight
        z = np.exp(s)
        dz = z * ds
        logz = s
    else:
        # support reaches zero (c = 1): plain ellipse enclosing [0, b]
        x0, h = 0.5 * b, 0.5 * b
        tau = 0.25 + level
        z = x0 + h * math.cosh(tau) * np.cos(theta) + 1j * h * math.sinh(tau) * np.sin(theta)
        dz = (
            -h * math.cosh(tau) * np.sin(theta) + 1j * h * math.sinh(tau) * np.cos(theta)
        ) * weight
        logz = np.log(z)
    m = solve_branch(z, c, H)
    with np.errstate(all="ignore"):
        gauge = branch_gauge(m, c, H)
    if not np.all(gauge < 1) or not np.all(np.sign(m.imag) == np.sign(z.imag)):
        raise IntegrationError("contour nodes fell off the Stieltjes branch")
    return _Nodes(z, dz, logz, m)


def _mu_parts(nodes, c, H, f_tag, raw):
    m = nodes.m
    tm = 1.0 + np.multiply.outer(m, H.t)
    w, t = H.w, H.t
    den = 1.0 - c * np.sum(w * t**2 / tm**2, axis=-1) * m**2
    A = c * m**3 * np.sum(w * t**2 / tm**3, axis=-1) / den**2
    B = m**3 * np.sum(w * t / tm, axis=-1) * np.sum(w / tm**2, axis=-1) / den
    f = _f_values(nodes, c, H, f_tag, raw)
    qa = f * A * nodes.dz
    qb = f * B * nodes.dz
    factor = -1.0 / (2j * np.pi)
    return (
        (factor * qa.sum()).real,
        (factor * c * qb.sum()).real,
        np.abs(qa).sum() / (2 * np.pi),
        np.abs(qb).sum() * c / (2 * np.pi),
    )


def _f_values(nodes, c, H, f_tag, raw):
    if raw:
        # bracket of the raw integrals; equals z on the solution branch
        m = nodes.m
        return -1.0 / m + c * np.sum(H.w * H.t / (1.0 + np.multiply.outer(m, H.t)), axis=-1)
    return nodes.f(f_tag)


def _nu_parts(inner, outer, c, H, f1, f2, raw):
    dm1 = inner.dz / dz_dm(inner.m, c, H)
    dm2 = outer.dz / dz_dm(outer.m, c, H)
    a = _f_values(inner, c, H, f1, raw) * dm1
    b = _f_values(outer, c, H, f2, raw) * dm2
    total = 0.0 + 0.0j
    l1 = 0.0
    for start in range(0, a.size, DOUBLE_CHUNK):
        block = a[start : start + DOUBLE_CHUNK, None] * b[None, :]
        block = block / (inner.m[start : start + DOUBLE_CHUNK, None] - outer.m[None, :]) ** 2
        total += block.sum()
        l1 += np.abs(block).sum()
    double = (-total / (4.0 * np.pi**2)).real

    def single(nodes, dm, f_tag):
        K = np.sum(H.w * H.t / (1.0 + np.multiply.outer(nodes.m, H.t)) ** 2, axis=-1)
        return (_f_values(nodes, c, H, f_tag, raw) * K * dm).sum()

    beta = (-c / (4.0 * np.pi**2) * single(inner, dm1, f1) * single(inner, dm1, f2)).real
    return double, beta, l1 / (4 * np.pi**2)


def _refine(compute, what):
    N = DEFAULT_NODES
    prev, scale = compute(N)
    while True:
        N *= 2
        cur, scale = compute(N)
        err = max(abs(x - y) / max(abs(y), 1e-9 * s, 1e-300) for x, y, s in zip(prev, cur, scale))
        if err <= TARGET_RTOL:
            return cur
        if N >= MAX_NODES:
            if err <= ACCEPT_RTOL:
                return cur
            raise IntegrationError(
                f"{what} contour integral did not converge (relative change {err:.2e} at {N} nodes)"
            )
        prev = cur


@lru_cache(maxsize=256)
def _contour_components(f1, f2, c, H, raw):
    """Unit-coefficient pieces ``(mu_q, mu_beta, nu_q, nu_beta)``.

    ``mu = q mu_q + beta mu_beta`` (using ``f1``) and
    ``cov(f1, f2) = (q + 1) nu_q + beta nu_beta``.
    """

    def mu(N):
        nodes = _contour(c, H, 0.5, N)
        mq, mb, sq, sb = _mu_parts(nodes, c, H, f1, raw)
        return (mq, mb), (sq, sb)

    def nu(N):
        inner = _contour(c, H, 0.35, N)
        outer = _contour(c, H, 0.65, N)
        dq, db, s = _nu_parts(inner, outer, c, H, f1, f2, raw)
        return (dq, db), (s, abs(db) + s)

    mu_q, mu_b = _refine(mu, "mean")
    nu_q, nu_b = _refine(nu, "variance")
    return mu_q, mu_b, nu_q, nu_b


def _check_log(f_tag, c):
    if f_tag == "log" and not c < 1:
        raise DomainError(f"the log statistic needs c < 1 (got c={c:g}); use f=x instead")


def closed_form_mu_nu(f_tag, c, H, moments):
    """Mean and variance terms for a point-mass bulk ``sigma2 * delta_1``."""
    if not H.is_point_mass:
        raise DomainError("closed forms need a single-atom bulk")
    q, beta = moments.q, moments.beta
    s2 = H.t[0]
    if f_tag == "x":
        return 0.0, (q + 1 + beta) * c * s2**2
    _check_log(f_tag, c)
    lg = math.log1p(-c)
    return q / 2.0 * lg - beta * c / 2.0, -(q + 1) * lg + beta * c


def clt_mu_nu(f_tag, c, H, moments=None, method=None, raw=False):
    """Mean correction and variance of the linear spectral statistic.

    Parameters
    ----------
    f_tag : {"x", "log"}
    c : float
        Ratio ``p / n``.
    H : DiscreteLSD
        Bulk spectrum.
    moments : ModelMoments, optional
        Defaults to real Gaussian-like data (``q=1``, ``beta=0``).
    method : {"closed_form", "contour"}, optional
        Defaults to the closed form for a point-mass bulk and the contour
        rule otherwise.
    raw : bool, default=False
        Contour only, ``f=x`` only: evaluate ``z`` through the defining
        equation of the Stieltjes transform instead of using the node
        location directly. A consistency check.

    Returns
    -------
    mu, nu : float
    """
    check_f_tag(f_tag)
    check_positive(c, "c")
    _check_log(f_tag, c)
    moments = moments or ModelMoments()
    if method is None:
        method = "closed_form" if H.is_point_mass and not raw else "contour"
    if method not in METHODS:
        raise DomainError(f"method must be one of {METHODS}, got {method!r}")
    if method == "closed_form":
        return closed_form_mu_nu(f_tag, c, H, moments)
    if raw and f_tag != "x":
        raise DomainError("the raw form applies to f=x only")
    mu_q, mu_b, nu_q, nu_b = _contour_components(f_tag, f_tag, float(c), H, bool(raw))
    mu = moments.q * mu_q + moments.beta * mu_b
    nu = (moments.q + 1) * nu_q + moments.beta * nu_b
    return float(mu), float(nu)


def clt_covariance(f1, f2, c, H, moments=None):
    """Limiting covariance of the statistics for ``f1`` and ``f2``,
    always by contour integration."""
    check_f_tag(f1)
    check_f_tag(f2)
    check_positive(c, "c")
    _check_log(f1, c)
    _check_log(f2, c)
    moments = moments or ModelMoments()
    _, _, nu_q, nu_b = _contour_components(f1, f2, float(c), H, False)
    return float((moments.q + 1) * nu_q + moments.beta * nu_b)


# --------------------------------------------------------------- integrals


def lsd_integral(f_tag, c, H, method="auto"):
    """``int f dF^{c,H}`` over the continuous part of the limiting law.

    Parameters
    ----------
    f_tag : {"x", "log"}
    c : float
    H : DiscreteLSD
    method : {"auto", "density", "contour"}
        ``auto`` uses exact identities: the mean of ``F^{c,H}`` equals the
        mean of ``H``, and its log-mean equals the log-mean of ``H`` plus
        the unit Marchenko-Pastur log-mean. ``density`` recovers the
        density from the Stieltjes transform just above the real axis and
        integrates it by Simpson's rule. ``contour`` integrates
        ``f(z) m(z)`` around the support.

    Examples
    --------
    >>> round(lsd_integral("log", 0.5, DiscreteLSD.delta()), 6)
    -0.306853
    """
    check_f_tag(f_tag)
    check_positive(c, "c")
    _check_log(f_tag, c)
    if method == "auto":
        if f_tag == "x":
            return H.mean
        return H.mean_log + mp_log_mean(c)
    if method == "density":
        return _density_integral(f_tag, c, H)
    if method == "contour":
        return _contour_integral(f_tag, c, H)
    raise DomainError(f"unknown integration method {method!r}")


def _density_integral(f_tag, c, H, points=10_000):
    intervals = lsd_support(c, H)
    eps = 1e-6 * (intervals[-1][1] - intervals[0][0])
    mass = 0.0
    total = 0.0
    for lo, hi in intervals:
        x = np.linspace(lo, hi, points + 1)
        z = x + 1j * eps
        m = solve_branch(z, c, H)
        density = np.maximum(((m + (1.0 - c) / z) / c).imag / np.pi, 0.0)
        fx = x if f_tag == "x" else np.log(np.maximum(x, 1e-300))
        mass += simpson(density, x=x)
        total += simpson(fx * density, x=x)
    return total * min(1.0, 1.0 / c) / mass


def _contour_integral(f_tag, c, H):
    def run(N):
        nodes = _contour(c, H, 0.5, N)
        return (-(nodes.f(f_tag) * nodes.m * nodes.dz).sum() / (2j * np.pi * c)).real

    prev = run(DEFAULT_NODES)
    N = DEFAULT_NODES
    while N < MAX_NODES:
        N *= 2
        cur = run(N)
        if abs(cur - prev) <= TARGET_RTOL * max(abs(cur), 1e-12):
            return float(cur)
        prev = cur
    raise IntegrationError("contour integral of the limiting law did not converge")


def centering_b(f_tag, p, c, H, spikes=None, method="auto"):
    """Centering term for the sum of ``f`` over the non-spiked eigenvalues.

    ``p * int f dF^{c, H_p} - sum_k m_k f(phi(alpha_k))`` where ``H_p`` is
    the spectrum of the whole population matrix (bulk plus spikes) and
    ``phi`` uses the bulk ``H``.
    """
    check_f_tag(f_tag)
    check_positive(c, "c")
    _check_log(f_tag, c)
    spikes = spikes or SpikeSpec()
    full = H.with_spikes(spikes, p)
    integral = lsd_integral(f_tag, c, full, method=method)
    images = [(phi(alpha, c, H), m) for alpha, m in spikes.spikes]
    if f_tag == "log":
        bad = [img for img, _ in images if img <= 0]
        if bad:
            raise DomainError(f"spike image {bad[0]:.4g} is not positive; log is undefined")
        spike_part = math.fsum(m * math.log(img) for img, m in images)
    else:
        spike_part = math.fsum(m * img for img, m in images)
    return p * integral - spike_part


def clt_terms(f_tag, p, c, H, spikes=None, moments=None, method=None):
    """All three terms at once, as :class:`CltTerms`."""
    b = centering_b(f_tag, p, c, H, spikes)
    mu, nu = clt_mu_nu(f_tag, c, H, moments, method=method)
    used = method or ("closed_form" if H.is_point_mass else "contour")
    return CltTerms(b=float(b), mu=float(mu), nu=float(nu), f_tag=f_tag, method=used)
