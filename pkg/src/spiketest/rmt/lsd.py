"""Discrete population spectra, the spike map and the limiting support.

A bulk spectrum ``H`` puts mass ``w_i`` on ``r_i * sigma2``. The sample
covariance of ``n`` draws of dimension ``p = c n`` has a limiting spectral
distribution ``F^{c,H}`` whose support is computed by :func:`lsd_support`.
A population spike ``alpha`` outside the bulk produces a sample eigenvalue
near ``phi(alpha)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .._validation import check_count, check_positive, check_q
from ..exceptions import DomainError, NoSolutionError, SeparationError

SIDES = ("large", "small")


@dataclass(frozen=True)
class DiscreteLSD:
    """Bulk population spectrum as weighted atoms.

    Parameters
    ----------
    values : sequence of float
        Atom locations ``r_i``, strictly increasing and positive.
    weights : sequence of float
        Atom masses, summing to one.
    sigma2 : float, default=1.0
        Common scale; the atoms actually sit at ``r_i * sigma2``.

    Examples
    --------
    >>> H = DiscreteLSD.parse("1:0.5,3:0.5")
    >>> H.mean
    2.0
    """

    values: tuple
    weights: tuple
    sigma2: float = 1.0

    def __post_init__(self):
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        weights = tuple(float(v) for v in np.atleast_1d(self.weights))
        if not values or len(values) != len(weights):
            raise DomainError("atoms and weights must be non-empty and of equal length")
        if not all(np.isfinite(values)) or min(values) <= 0:
            raise DomainError("atom values must be positive and finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise DomainError("atom values must be strictly increasing")
        if any(not 0 < w <= 1 for w in weights):
            raise DomainError("atom weights must lie in (0, 1]")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise DomainError(f"atom weights sum to {math.fsum(weights)!r}, not 1")
        check_positive(self.sigma2, "sigma2")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @classmethod
    def delta(cls, sigma2=1.0):
        """Point mass at ``sigma2``."""
        return cls((1.0,), (1.0,), sigma2)

    @classmethod
    def parse(cls, text, sigma2=1.0):
        """Parse ``"r1:w1,r2:w2,..."``; atoms may come in any order."""
        pairs = []
        try:
            for item in str(text).split(","):
                r, w = item.split(":")
                pairs.append((float(r), float(w)))
        except ValueError:
            raise DomainError(f"bulk must look like 'r1:w1,r2:w2', got {text!r}") from None
        pairs.sort()
        return cls(tuple(r for r, _ in pairs), tuple(w for _, w in pairs), sigma2)

    def __getstate__(self):
        return {"values": self.values, "weights": self.weights, "sigma2": self.sigma2}

    def __setstate__(self, state):
        for key, value in state.items():
            object.__setattr__(self, key, value)

    @cached_property
    def t(self):
        """Atom locations including the scale, as an array."""
        out = np.asarray(self.values) * self.sigma2
        out.setflags(write=False)
        return out

    @cached_property
    def w(self):
        out = np.asarray(self.weights)
        out.setflags(write=False)
        return out

    @property
    def size(self):
        return len(self.values)

    @property
    def is_point_mass(self):
        return self.size == 1

    @property
    def mean(self):
        """``int t dH(t)``."""
        return math.fsum(self.w * self.t)

    @property
    def atom_mean(self):
        """``sum w_i r_i``, the mean without the scale."""
        return math.fsum(self.w * np.asarray(self.values))

    @property
    def second_moment(self):
        return math.fsum(self.w * self.t**2)

    @property
    def mean_log(self):
        return math.fsum(self.w * np.log(self.t))

    def with_scale(self, sigma2):
        return DiscreteLSD(self.values, self.weights, sigma2)

    def with_spikes(self, spikes, p):
        """Empirical spectrum of the full ``p x p`` population matrix.

        The bulk keeps mass ``(p - M) / p`` and each spike ``alpha_k``
        gets ``m_k / p``. Spike values are absolute (they already include
        any scale).
        """
        M = spikes.total if spikes is not None else 0
        if M == 0:
            return self
        if M >= p:
            raise DomainError(f"{M} spikes leave no bulk in dimension {p}")
        mass = {}
        for t, w in zip(self.t, self.w):
            mass[float(t)] = mass.get(float(t), 0.0) + w * (p - M) / p
        for alpha, m in spikes.spikes:
            mass[alpha] = mass.get(alpha, 0.0) + m / p
        atoms = sorted(mass)
        weights = np.array([mass[a] for a in atoms])
        weights /= weights.sum()
        return DiscreteLSD(tuple(atoms), tuple(weights), 1.0)


@dataclass(frozen=True)
class SpikeSpec:
    """Population spikes ``alpha_k`` with multiplicities ``m_k``."""

    spikes: tuple = ()

    def __post_init__(self):
        clean = []
        for alpha, m in self.spikes:
            check_positive(alpha, "spike value")
            check_count(m, "spike multiplicity", minimum=1)
            clean.append((float(alpha), int(m)))
        object.__setattr__(self, "spikes", tuple(clean))

    @classmethod
    def parse(cls, text):
        """Parse ``"a1xm1,a2xm2,..."``, e.g. ``"25x1,16x2,0.2x2,0.1x1"``."""
        text = str(text).strip()
        if not text:
            return cls(())
        pairs = []
        try:
            for item in text.split(","):
                a, _, m = item.strip().partition("x")
                pairs.append((float(a), int(m) if m else 1))
        except ValueError:
            raise DomainError(f"spikes must look like '25x1,16x2', got {text!r}") from None
        return cls(tuple(pairs))

    @classmethod
    def from_values(cls, values):
        """One spike of multiplicity one per value, equal values merged."""
        merged = {}
        for v in values:
            merged[float(v)] = merged.get(float(v), 0) + 1
        return cls(tuple(merged.items()))

    @property
    def total(self):
        return sum(m for _, m in self.spikes)

    @property
    def alphas(self):
        """Spike values repeated by multiplicity."""
        return np.array([a for a, m in self.spikes for _ in range(m)], dtype=float)

    def scaled(self, k):
        return SpikeSpec(tuple((a * k, m) for a, m in self.spikes))

    def sides(self, H):
        """``"large"`` or ``"small"`` for each distinct spike."""
        lo, hi = H.t[0], H.t[-1]
        out = []
        for alpha, _ in self.spikes:
            if alpha > hi:
                out.append("large")
            elif alpha < lo:
                out.append("small")
            else:
                raise SeparationError(
                    f"spike {alpha:g} lies inside the bulk atom range [{lo:g}, {hi:g}]"
                )
        return out

    def check(self, H, separation=0.05):
        """Check spikes lie outside the bulk and are mutually separated.

        ``min_{i != k} |alpha_k / alpha_i - 1| > separation`` over distinct
        spike values.
        """
        self.sides(H)
        values = sorted({a for a, _ in self.spikes})
        for a, b in zip(values, values[1:]):
            if min(abs(b / a - 1), abs(a / b - 1)) <= separation:
                raise SeparationError(
                    f"spikes {a:g} and {b:g} violate the separation condition (d={separation})"
                )
        return self


@dataclass(frozen=True)
class ModelMoments:
    """Fourth-moment setup: ``q=1`` for real data, ``q=0`` for complex,
    and the fourth-cumulant coefficient ``beta``."""

    q: int = 1
    beta: float = 0.0

    def __post_init__(self):
        check_q(self.q)
        if not math.isfinite(self.beta):
            raise DomainError("beta must be finite")


def beta_coefficient(u_fourth_power_sum, fourth_moment, q=1):
    """``sum |u|^4 * (E|x|^4 - 2 - q)``.

    Pass ``fourth_moment=math.inf`` (or ``None``) for heavy-tailed
    populations; the coefficient is then taken as zero.
    """
    check_q(q)
    if fourth_moment is None or not math.isfinite(fourth_moment):
        return 0.0
    return float(u_fourth_power_sum) * (float(fourth_moment) - 2 - q)


def _atoms(H):
    return H.t, H.w


def phi(alpha, c, H):
    """Spike map ``alpha * (1 + c * sum w t / (alpha - t))``.

    Raises
    ------
    SeparationError
        If ``alpha`` lies within the range of the bulk atoms.
    """
    t, w = _atoms(H)
    alpha = float(alpha)
    if t[0] <= alpha <= t[-1]:
        raise SeparationError(
            f"spike {alpha:g} lies inside the bulk atom range [{t[0]:g}, {t[-1]:g}]"
        )
    return alpha * (1.0 + c * math.fsum(w * t / (alpha - t)))


def phi_prime(alpha, c, H):
    t, w = _atoms(H)
    return 1.0 - c * math.fsum(w * t**2 / (alpha - t) ** 2)


def _h(alpha, c, t, w):
    return c * np.sum(w * t**2 / (alpha - t) ** 2)


def _offset(c, t, w, i):
    # h >= 4 at this distance from atom i
    return 0.5 * t[i] * math.sqrt(c * w[i])


def critical_points(c, H):
    """Real ``alpha`` with ``phi'(alpha) = 0``, in increasing order.

    The outermost two always exist (for ``c > 0``); interior pairs appear
    between atoms where the bulk splits into several intervals.
    """
    check_positive(c, "c")
    t, w = _atoms(H)
    f = lambda a: _h(a, c, t, w) - 1.0
    reach = math.sqrt(c * np.sum(w * t**2)) * 1.01 + 1e-300
    out = []
    if abs(c - 1.0) < 1e-15 and H.is_point_mass:
        out.append(0.0)
    else:
        near = t[0] - min(_offset(c, t, w, 0), 0.5 * t[0] + reach)
        out.append(brentq(f, t[0] - reach, near, xtol=1e-300, rtol=1e-15, maxiter=500))
    for i in range(len(t) - 1):
        gap = t[i + 1] - t[i]
        lo = t[i] + min(_offset(c, t, w, i), gap / 2)
        hi = t[i + 1] - min(_offset(c, t, w, i + 1), gap / 2)
        if lo >= hi:
            continue
        dh = lambda a: np.sum(w * t**2 / (a - t) ** 3)
        a_min = brentq(dh, t[i] + gap * 1e-9, t[i + 1] - gap * 1e-9, xtol=1e-300, rtol=1e-15)
        if f(a_min) < 0:
            out.append(brentq(f, t[i] + gap * 1e-12, a_min, xtol=1e-300, rtol=1e-15))
            out.append(brentq(f, a_min, t[i + 1] - gap * 1e-12, xtol=1e-300, rtol=1e-15))
    near = t[-1] + _offset(c, t, w, len(t) - 1)
    out.append(brentq(f, near, t[-1] + reach, xtol=1e-300, rtol=1e-15, maxiter=500))
    return out


def lsd_support(c, H):
    """Support intervals of ``F^{c,H}`` (excluding the point mass at zero
    when ``c > 1``).

    Returns
    -------
    list of (float, float)

    Examples
    --------
    >>> [tuple(round(x, 5) for x in iv) for iv in lsd_support(0.5, DiscreteLSD.delta())]
    [(0.08579, 2.91421)]
    """
    t, w = _atoms(H)
    if H.is_point_mass:
        s2 = t[0]
        return [(s2 * (1 - math.sqrt(c)) ** 2, s2 * (1 + math.sqrt(c)) ** 2)]
    crit = critical_points(c, H)
    edges = [0.0 if a == 0.0 else a * (1.0 + c * np.sum(w * t / (a - t))) for a in crit]
    edges[0] = max(edges[0], 0.0)
    return [(float(edges[k]), float(edges[k + 1])) for k in range(0, len(edges), 2)]


def _single_atom_roots(l, c, s2):
    # alpha^2 + alpha (c - 1 - l) + l = 0 on the unit scale
    lu = l / s2
    B = 1.0 + lu - c
    disc = B * B - 4.0 * lu
    if disc < 0:
        raise NoSolutionError(f"l={l:g} is inside the bulk support (negative discriminant)")
    root = math.sqrt(disc)
    big = (B + math.copysign(root, B)) / 2.0 if B != 0 else root / 2.0
    other = lu / big if big != 0 else 0.0
    return sorted((big * s2, other * s2))


def phi_inverse(l, c, H, side="large"):
    """Population spike whose image under :func:`phi` is ``l``.

    Parameters
    ----------
    l : float
        Sample eigenvalue (or limit position).
    c : float
        Dimension-to-sample-size ratio.
    H : DiscreteLSD
    side : {"large", "small"}
        Invert the branch above the bulk or the one below it.

    Raises
    ------
    NoSolutionError
        If ``l`` is not in the image of the requested branch, in
        particular if it lies inside the bulk support.
    """
    if side not in SIDES:
        raise DomainError(f"side must be 'large' or 'small', got {side!r}")
    l = float(l)
    if not math.isfinite(l):
        raise DomainError("l must be finite")
    if c == 0:
        return l
    check_positive(c, "c")
    t, w = _atoms(H)
    crit = critical_points(c, H)
    if side == "large":
        lo, hi = crit[-1], None
        upper = phi(lo, c, H) if lo > t[-1] else None
        if upper is None or l <= upper:
            raise NoSolutionError(f"l={l:g} does not lie above the bulk support")
    else:
        # below the bulk phi is increasing on (0, crit[0]) when c < 1 and
        # decreasing on (0, t_1) when c >= 1
        lo, hi = 0.0, (crit[0] if crit[0] > 0 else t[0])
        if crit[0] > 0:
            edge = phi(crit[0], c, H)
            ok = 0 < l < edge
        else:
            ok = l < 0
        if not ok:
            raise NoSolutionError(f"l={l:g} is not in the range of the small-spike branch")
    if H.is_point_mass:
        roots = _single_atom_roots(l, c, t[0])
        for r in (roots[::-1] if side == "large" else roots):
            if (side == "large" and r > lo) or (side == "small" and lo < r < hi):
                return r
        raise NoSolutionError(f"no root of the spike equation on the {side} branch for l={l:g}")
    g = lambda a: a * (1.0 + c * np.sum(w * t / (a - t))) - l
    if side == "large":
        hi = max(l, lo * 2.0)
        while g(hi) < 0:
            hi *= 2.0
        return brentq(g, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    if crit[0] > 0:
        return brentq(g, 1e-300, hi, xtol=1e-300, rtol=1e-15, maxiter=500)
    step = hi / 2.0
    b = hi - step
    while g(b) > 0:
        step /= 2.0
        b = hi - step
        if step < hi * 1e-15:
            raise NoSolutionError(f"could not bracket l={l:g} on the small branch")
    return brentq(g, 1e-300, b, xtol=1e-300, rtol=1e-15, maxiter=500)
