import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from spiketest.exceptions import CSVParseError, DegenerateColumnError, DomainError
from spiketest.spectral import (
    DataMatrix,
    EigenSpectrum,
    SpikeRankSet,
    eigen_spectrum,
    ingest_csv,
    sample_covariance,
    spectrum_from_data,
    split_spectrum,
    standardize_columns,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_ingest_plain(tmp_path):
    data = ingest_csv(write(tmp_path, "1,2\n3,4\n5,6\n"))
    assert_array_equal(data.values, [[1, 2], [3, 4], [5, 6]])
    assert (data.n, data.p, data.dropped_rows) == (3, 2, 0)


def test_ingest_standardize(tmp_path):
    data = ingest_csv(write(tmp_path, "1,2\n3,4\n5,6\n"), standardize=True)
    assert_allclose(data.values.mean(axis=0), 0.0, atol=1e-15)
    assert_allclose(data.values.std(axis=0, ddof=1), 1.0)


def test_ingest_drops_missing_rows(tmp_path):
    data = ingest_csv(write(tmp_path, "1,2\n3,NA\n5,6\n"))
    assert data.n == 2
    assert data.dropped_rows == 1


def test_ingest_header(tmp_path):
    data = ingest_csv(write(tmp_path, "a,b\n1,2\n3,4\n"), has_header=True)
    assert list(data.column_names) == ["a", "b"]
    assert data.n == 2


def test_ingest_reports_bad_cell(tmp_path):
    with pytest.raises(CSVParseError) as info:
        ingest_csv(write(tmp_path, "1,2\n3,x\n"))
    assert info.value.row == 2
    assert info.value.column == 2


def test_ingest_ragged(tmp_path):
    with pytest.raises(CSVParseError):
        ingest_csv(write(tmp_path, "1,2\n3\n"))


def test_standardize_constant_column():
    X = np.column_stack([np.arange(4.0), np.ones(4)])
    with pytest.raises(DegenerateColumnError):
        standardize_columns(X)


def test_sample_covariance_identity_rows():
    assert_allclose(sample_covariance(np.eye(2)), [[0.5, 0], [0, 0.5]])


def test_sample_covariance_identical_rows_centered():
    X = np.tile([1.0, 2.0, 3.0], (4, 1))
    assert_allclose(sample_covariance(X, center=True), 0.0)


def test_sample_covariance_brute_force():
    X = np.random.default_rng(0).standard_normal((5, 3))
    brute = sum(np.outer(x, x) for x in X) / 5
    assert_allclose(sample_covariance(X), brute, atol=1e-12)


@pytest.mark.parametrize(
    "S, expected",
    [(np.diag([3.0, 1.0, 2.0]), [3, 2, 1]), (np.array([[2.0, 1.0], [1.0, 2.0]]), [3, 1])],
)
def test_eigen_spectrum_small(S, expected):
    assert_allclose(eigen_spectrum(S, 10).eigenvalues, expected)


def test_eigen_spectrum_trace():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((80, 50))
    S = sample_covariance(X)
    spec = eigen_spectrum(S, 80)
    assert_allclose(np.sum(spec.eigenvalues), np.trace(S), rtol=1e-9)
    assert np.all(np.diff(spec.eigenvalues) <= 0)


def test_eigen_spectrum_clips_roundoff_and_rejects_negative():
    spec = EigenSpectrum(np.array([2.0, -1e-14]), 10)
    assert spec.eigenvalues[-1] == 0.0
    with pytest.raises(DomainError):
        EigenSpectrum(np.array([2.0, -0.1]), 10)


def test_spectrum_from_data_wide_matches_square():
    X = np.random.default_rng(2).standard_normal((20, 40))
    wide = spectrum_from_data(DataMatrix(X))
    full = eigen_spectrum(sample_covariance(X), 20)
    assert_allclose(wide.eigenvalues, full.eigenvalues, atol=1e-12)
    assert wide.c_n == 2.0


def test_rank_set_parse_and_mask():
    ranks = SpikeRankSet.parse("2:1")
    assert ranks.total == 3
    assert_array_equal(ranks.ranks(6), [1, 2, 6])
    assert_array_equal(ranks.mask(6), [True, True, False, False, False, True])
    with pytest.raises(DomainError):
        SpikeRankSet(4, 3).check(6)


def test_split_direct_sums():
    spec = EigenSpectrum(np.array([5.0, 2.0, 1.0, 0.1]), 10)
    spiked, rest = split_spectrum(spec, SpikeRankSet(1, 1), "x")
    assert_allclose([spiked, rest], [5.1, 3.0])
    spiked, rest = split_spectrum(spec, SpikeRankSet(0, 0), "x")
    assert spiked == 0.0
    assert_allclose(rest, 8.1)


def test_split_log_matches_index_loop(model1_spectrum):
    ranks = SpikeRankSet(5, 1)
    spiked, rest = split_spectrum(model1_spectrum, ranks, "log")
    eig = model1_spectrum.eigenvalues
    p = eig.size
    flagged = [j for j in range(p) if j < 5 or j == p - 1]
    assert_allclose(spiked, sum(np.log(eig[j]) for j in flagged), rtol=1e-13)
    assert_allclose(rest, sum(np.log(eig[j]) for j in range(p) if j not in flagged), rtol=1e-13)
    assert_allclose(spiked + rest, np.sum(np.log(eig)), rtol=1e-12)


def test_split_log_rejects_zero():
    spec = EigenSpectrum(np.array([2.0, 1.0, 0.0]), 2)
    with pytest.raises(DomainError, match="3"):
        split_spectrum(spec, SpikeRankSet(1, 0), "log")
