"""Data ingestion, sample covariance and sample spectra.

The objects here are the raw material for every test in the package: a
:class:`DataMatrix` of observations (rows) by variables (columns), the
descending :class:`EigenSpectrum` of its sample covariance matrix and a
:class:`SpikeRankSet` saying which ranks are treated as spiked.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_count, check_f_tag, check_matrix, check_symmetric
from .exceptions import (
    ConvergenceError,
    CSVParseError,
    DegenerateColumnError,
    DomainError,
)

MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none", "?"})

# relative size below which negative eigenvalues are treated as roundoff
NEGATIVE_EIG_TOL = 1e-10


@dataclass(frozen=True)
class DataMatrix:
    """Observations in rows, variables in columns.

    Attributes
    ----------
    values : ndarray of shape (n, p)
    column_names : tuple of str or None
    dropped_rows : int
        Number of input rows removed because they had missing cells.
    """

    values: np.ndarray
    column_names: tuple | None = None
    dropped_rows: int = 0

    def __post_init__(self):
        values = check_matrix(self.values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.column_names is not None and len(self.column_names) != values.shape[1]:
            raise DomainError(
                f"{len(self.column_names)} column names for {values.shape[1]} columns"
            )

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def p(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class EigenSpectrum:
    """Sample eigenvalues in non-increasing order together with ``(p, n)``."""

    eigenvalues: np.ndarray
    n: int
    eigenvectors: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        eig = np.asarray(self.eigenvalues, dtype=float).ravel().copy()
        if eig.size < 2:
            raise DomainError("a spectrum needs at least two eigenvalues")
        if not np.all(np.isfinite(eig)):
            raise DomainError("eigenvalues must be finite")
        check_count(self.n, "n", minimum=1)
        if np.any(np.diff(eig) > 0):
            order = np.argsort(-eig, kind="stable")
            eig = eig[order]
            if self.eigenvectors is not None:
                object.__setattr__(self, "eigenvectors", np.asarray(self.eigenvectors)[:, order])
        top = max(eig[0], 0.0)
        if eig[-1] < -NEGATIVE_EIG_TOL * max(top, 1e-300):
            raise DomainError(
                f"eigenvalue {eig[-1]:.3g} is negative beyond roundoff; "
                "input is not positive semi-definite"
            )
        eig = np.maximum(eig, 0.0)
        eig.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def p(self):
        return self.eigenvalues.size

    @property
    def c_n(self):
        return self.p / self.n

    def scaled(self, k):
        """Spectrum of ``k * S``."""
        return EigenSpectrum(self.eigenvalues * k, self.n)


@dataclass(frozen=True)
class SpikeRankSet:
    """Ranks flagged as spiked: the ``large_count`` largest and the
    ``small_count`` smallest sample eigenvalues."""

    large_count: int = 0
    small_count: int = 0

    def __post_init__(self):
        check_count(self.large_count, "large_count")
        check_count(self.small_count, "small_count")

    @property
    def total(self):
        return self.large_count + self.small_count

    @classmethod
    def parse(cls, text):
        """Parse ``"L:S"``, e.g. ``"5:1"``."""
        try:
            large, small = (int(part) for part in str(text).split(":"))
        except ValueError:
            raise DomainError(f"split must look like 'L:S', got {text!r}") from None
        return cls(large, small)

    def check(self, p):
        if self.total >= p:
            raise DomainError(f"{self.total} spiked ranks leave no bulk in dimension {p}")
        return self

    def mask(self, p):
        """Boolean mask over descending ranks, True for spiked ranks."""
        self.check(p)
        flagged = np.zeros(p, dtype=bool)
        flagged[: self.large_count] = True
        if self.small_count:
            flagged[p - self.small_count :] = True
        return flagged

    def ranks(self, p):
        """1-based spiked ranks, large ones first."""
        self.check(p)
        return list(range(1, self.large_count + 1)) + list(range(p - self.small_count + 1, p + 1))


def _parse_cell(token, row, col):
    token = token.strip()
    if token.lower() in MISSING_TOKENS:
        return None
    try:
        return float(token)
    except ValueError:
        raise CSVParseError(
            f"non-numeric cell {token!r} at row {row}, column {col}", row=row, column=col
        ) from None


def ingest_csv(path, has_header=False, standardize=False):
    """Read a numeric CSV file (rows are observations).

    Rows containing a missing cell (empty, ``NA``, ``NaN``, ``null``,
    ``?``) are dropped and counted in :attr:`DataMatrix.dropped_rows`.

    Parameters
    ----------
    path : str or Path
    has_header : bool
        Treat the first row as column names.
    standardize : bool
        Center each column and scale it to unit sample variance
        (divisor ``n - 1``).

    Raises
    ------
    CSVParseError
        On a non-numeric cell or a row of the wrong length.
    DegenerateColumnError
        When ``standardize`` is requested and a column is constant.
    """
    path = Path(path)
    rows = []
    names = None
    dropped = 0
    width = None
    with path.open(newline="") as handle:
        for row_no, record in enumerate(csv.reader(handle), start=1):
            if not record or all(not cell.strip() for cell in record):
                continue
            if has_header and names is None:
                names = tuple(cell.strip() for cell in record)
                width = len(names)
                continue
            if width is None:
                width = len(record)
            if len(record) != width:
                raise CSVParseError(
                    f"row {row_no} has {len(record)} cells, expected {width}", row=row_no
                )
            parsed = [_parse_cell(tok, row_no, j) for j, tok in enumerate(record, start=1)]
            if any(v is None for v in parsed):
                dropped += 1
                continue
            rows.append(parsed)
    if not rows:
        raise CSVParseError(f"{path} contains no complete numeric rows")
    values = np.array(rows, dtype=float)
    if standardize:
        values = standardize_columns(values)
    return DataMatrix(values, column_names=names, dropped_rows=dropped)


def standardize_columns(X):
    """Center columns and scale to unit sample variance (ddof=1)."""
    X = np.asarray(X, dtype=float)
    centered = X - X.mean(axis=0)
    sd = centered.std(axis=0, ddof=1)
    scale = np.max(np.abs(X), axis=0)
    degenerate = sd <= 1e-12 * np.maximum(scale, 1e-300)
    if np.any(degenerate):
        cols = (np.flatnonzero(degenerate) + 1).tolist()
        raise DegenerateColumnError(f"constant column(s) {cols} cannot be standardized")
    return centered / sd


def _as_values(X):
    if isinstance(X, DataMatrix):
        return X.values
    return check_matrix(X)


def sample_covariance(X, center=False):
    """Sample covariance of the rows of ``X``.

    With ``center=False`` this is ``X.T @ X / n``, the convention for
    mean-zero populations used in the simulations; with ``center=True``
    column means are removed first and the divisor is ``n - 1``.
    """
    values = _as_values(X)
    n = values.shape[0]
    if center:
        values = values - values.mean(axis=0)
        S = values.T @ values / (n - 1)
    else:
        S = values.T @ values / n
    return (S + S.T) / 2


def eigen_spectrum(S, n, return_eigenvectors=False):
    """Descending eigenvalues of a symmetric PSD matrix.

    Negative eigenvalues within ``1e-10 * max`` are clipped to zero;
    larger negatives raise :class:`DomainError`.
    """
    S = check_symmetric(S)
    if return_eigenvectors:
        w, Q = np.linalg.eigh(S)
        recon = (Q * w) @ Q.T
        norm = np.linalg.norm(S)
        if np.linalg.norm(S - recon) > 1e-8 * max(norm, 1e-300):
            raise ConvergenceError("eigendecomposition failed the reconstruction check")
    else:
        w, Q = np.linalg.eigvalsh(S), None
    order = np.argsort(-w, kind="stable")
    return EigenSpectrum(w[order], n, None if Q is None else Q[:, order])


def spectrum_from_data(X, center=False):
    """Sample spectrum straight from data.

    When ``p > n`` the nonzero eigenvalues are taken from the smaller
    ``n x n`` Gram matrix and padded with zeros.
    """
    values = _as_values(X)
    n, p = values.shape
    if center:
        values = values - values.mean(axis=0)
        divisor = n - 1
    else:
        divisor = n
    if p <= n:
        w = np.linalg.eigvalsh(values.T @ values / divisor)
    else:
        w = np.concatenate([np.linalg.eigvalsh(values @ values.T / divisor), np.zeros(p - n)])
    return EigenSpectrum(np.sort(w)[::-1], n)


def split_spectrum(spec, ranks, f_tag="x"):
    """Split ``sum f(l_j)`` into the spiked and the non-spiked part.

    Returns
    -------
    spiked_sum, nonspiked_sum : float
        Exactly rounded sums (``math.fsum``), so the result does not depend
        on summation order.
    """
    check_f_tag(f_tag)
    flagged = ranks.mask(spec.p)
    eig = spec.eigenvalues
    if f_tag == "log":
        bad = np.flatnonzero(eig <= 0)
        if bad.size:
            raise DomainError(
                f"log of non-positive eigenvalue {eig[bad[0]]:.3g} at rank {bad[0] + 1}"
            )
        values = np.log(eig)
    else:
        values = eig
    return math.fsum(values[flagged]), math.fsum(values[~flagged])
