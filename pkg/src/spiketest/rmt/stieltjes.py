"""Companion Stieltjes transform of ``F^{c,H}`` for discrete ``H``.

The companion transform ``m`` solves

    z = -1/m + c * sum_i w_i t_i / (1 + t_i m).

Clearing denominators gives a polynomial of degree ``s + 1`` in ``m``
(``s`` atoms). Exactly one root is the transform: for ``Im z > 0`` it is
the one in the upper half plane, and for real ``z`` outside the support
it is the real root with ``z'(m) > 0``. Both cases are captured by

    g(m) = c * sum_i w_i t_i^2 |m|^2 / |1 + t_i m|^2 < 1,

since ``m^2 z'(m) = 1 - g(m)`` on the real line and
``Im z = Im m * (1 - g(m)) / |m|^2`` off it.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as P

from .._validation import check_positive
from ..exceptions import ConvergenceError

MAX_NEWTON = 200
RESIDUAL_TOL = 1e-12


def z_of_m(m, c, H):
    """Right-hand side of the defining equation."""
    m = np.asarray(m)
    tm = 1.0 + np.multiply.outer(m, H.t)
    return -1.0 / m + c * np.sum(H.w * H.t / tm, axis=-1)


def dz_dm(m, c, H):
    m = np.asarray(m)
    tm = 1.0 + np.multiply.outer(m, H.t)
    return 1.0 / m**2 - c * np.sum(H.w * H.t**2 / tm**2, axis=-1)


def branch_gauge(m, c, H):
    """``g(m)``; the transform is the root with ``g < 1``."""
    m = np.asarray(m)
    tm = 1.0 + np.multiply.outer(m, H.t)
    return c * np.sum(H.w * H.t**2 * (np.abs(m) ** 2)[..., None] / np.abs(tm) ** 2, axis=-1)


def residual(z, m, c, H):
    return np.abs(z - z_of_m(m, c, H))


def _poly_parts(c, H):
    # z * A(m) + B(m) = 0, coefficients in increasing degree
    t, w = H.t, H.w
    full = np.array([1.0])
    for ti in t:
        full = P.polymul(full, [1.0, ti])
    A = P.polymul([0.0, 1.0], full)
    B = np.zeros(len(t) + 2)
    B[: len(full)] += full
    for i, ti in enumerate(t):
        part = np.array([1.0])
        for j, tj in enumerate(t):
            if j != i:
                part = P.polymul(part, [1.0, tj])
        term = P.polymul([0.0, 1.0], part) * (-c * w[i] * ti)
        B[: len(term)] += term
    return A, B


def polynomial_roots(z, c, H):
    """All ``s + 1`` roots of the cleared defining equation, per ``z``.

    Returns an array of shape ``z.shape + (s + 1,)``.
    """
    z = np.asarray(z, dtype=complex)
    A, B = _poly_parts(c, H)
    coeffs = np.multiply.outer(z, A) + B
    lead = coeffs[..., -1:]
    monic = coeffs[..., :-1] / lead
    deg = monic.shape[-1]
    comp = np.zeros(z.shape + (deg, deg), dtype=complex)
    if deg > 1:
        idx = np.arange(deg - 1)
        comp[..., idx + 1, idx] = 1.0
    comp[..., :, -1] = -monic
    return np.linalg.eigvals(comp)


def _newton(z, m, c, H, iters):
    for _ in range(iters):
        step = (z_of_m(m, c, H) - z) / dz_dm(m, c, H)
        m = m - step
    return m


def solve_branch(z, c, H, polish=3):
    """Vectorised companion transform at every entry of ``z``.

    ``z`` must avoid the support; entries in the lower half plane are
    handled by conjugate symmetry.
    """
    z = np.asarray(z, dtype=complex)
    lower = z.imag < 0
    zu = np.where(lower, np.conj(z), z)
    with np.errstate(all="ignore"):
        roots = polynomial_roots(zu, c, H)
        gauge = branch_gauge(roots, c, H)
        gauge = np.where(np.abs(roots) == 0, np.inf, gauge)
        pick = np.argmin(gauge, axis=-1)
        m = np.take_along_axis(roots, pick[..., None], axis=-1)[..., 0]
        m = _newton(zu, m, c, H, polish)
    real_z = zu.imag == 0
    m = np.where(real_z, m.real + 0j, m)
    return np.where(lower, np.conj(m), m)


def _accept(z, m, c, H):
    if not np.isfinite(m) or m == 0:
        return False
    with np.errstate(all="ignore"):
        if not branch_gauge(m, c, H) < 1:
            return False
    if z.imag > 0 and m.imag <= 0:
        return False
    scale = max(abs(z), 1.0)
    return residual(z, m, c, H) <= RESIDUAL_TOL * scale


def companion_stieltjes(z, c, H):
    """Companion Stieltjes transform ``m(z)``.

    Newton iterations are started from ``-1/z`` and small imaginary
    perturbations of it; the accepted root must satisfy the branch
    condition. If no start converges the polynomial companion-matrix
    roots are used instead.

    Parameters
    ----------
    z : complex
        Point off the support of ``F^{c,H}``.
    c : float
        Ratio ``p / n``; ``c = 0`` gives ``-1/z``.
    H : DiscreteLSD

    Returns
    -------
    complex

    Raises
    ------
    ConvergenceError
        If no start yields a root on the correct branch.

    Examples
    --------
    >>> from spiketest.rmt.lsd import DiscreteLSD
    >>> round(companion_stieltjes(4.0, 0.5, DiscreteLSD.delta()).real, 4)
    -0.3048
    """
    z = complex(z)
    if c == 0:
        return -1.0 / z
    check_positive(c, "c")
    if z.imag < 0:
        return complex(np.conj(companion_stieltjes(np.conj(z), c, H)))
    base = -1.0 / z if z != 0 else 1j
    seeds = [base] + [base + d for d in (1e-3j, 1e-1j, 1j, -1e-1 + 1e-1j, 1e-1 + 1e-1j)]
    if z.imag == 0:
        seeds = [complex(base.real)] + seeds
    for seed in seeds:
        m = seed
        with np.errstate(all="ignore"):
            m = _newton_scalar(z, m, c, H)
        m = complex(m)
        if z.imag == 0:
            m = complex(m.real)
        if _accept(z, m, c, H):
            return m
    with np.errstate(all="ignore"):
        m = complex(solve_branch(np.array([z]), c, H, polish=5)[0])
    if _accept(z, m, c, H):
        return m
    raise ConvergenceError(f"companion Stieltjes solver did not converge at z={z!r}")


def _newton_scalar(z, m, c, H):
    for _ in range(MAX_NEWTON):
        d = complex(dz_dm(m, c, H))
        if d == 0 or not np.isfinite(d):
            break
        step = (complex(z_of_m(m, c, H)) - z) / d
        m = m - step
        if abs(step) <= 1e-15 * max(abs(m), 1e-300):
            break
    return m


def stieltjes_F(z, c, H):
    """Stieltjes transform of ``F^{c,H}`` itself, from the companion one."""
    z = np.asarray(z, dtype=complex)
    m = solve_branch(z, c, H)
    return (m + (1.0 - c) / z) / c
