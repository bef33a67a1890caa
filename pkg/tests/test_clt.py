import math

import pytest
from numpy.testing import assert_allclose

from spiketest.exceptions import DomainError
from spiketest.rmt.clt import (
    CltTerms,
    centering_b,
    clt_covariance,
    clt_mu_nu,
    closed_form_mu_nu,
    lsd_integral,
)
from spiketest.rmt.lsd import DiscreteLSD, ModelMoments, SpikeSpec

DELTA = DiscreteLSD.delta()
MODEL1 = SpikeSpec.parse("25x1,16x2,0.2x2,0.1x1")


def test_lsd_integral_examples():
    assert_allclose(lsd_integral("x", 0.5, DELTA), 1.0)
    assert_allclose(lsd_integral("log", 0.5, DELTA), -0.306853, atol=1e-6)
    assert_allclose(lsd_integral("x", 0.5, DiscreteLSD.parse("1:0.5,3:0.5")), 2.0)


@pytest.mark.parametrize("method", ["density", "contour"])
@pytest.mark.parametrize("f_tag", ["x", "log"])
def test_lsd_integral_numeric_routes(method, f_tag):
    H = DiscreteLSD.parse("1:0.5,3:0.5")
    exact = lsd_integral(f_tag, 0.4, H)
    rtol = 1e-4 if method == "density" else 1e-10
    assert_allclose(lsd_integral(f_tag, 0.4, H, method=method), exact, rtol=rtol)


def test_centering_examples():
    assert_allclose(centering_b("x", 100, 0.5, DELTA, MODEL1), 92.7180556, rtol=1e-9)
    assert_allclose(centering_b("log", 100, 0.5, DELTA, MODEL1), -27.9989, atol=5e-5)
    H = DiscreteLSD.parse("1:0.5,3:0.5")
    assert_allclose(centering_b("x", 40, 0.5, H), 80.0)


def test_centering_scaled():
    b = centering_b("x", 100, 0.5, DiscreteLSD.delta(4.0), MODEL1.scaled(4.0))
    assert_allclose(b, 94 * 4 - 4 * 1.2819444444, rtol=1e-9)


def test_closed_form_examples():
    mu, nu = closed_form_mu_nu("x", 0.5, DELTA, ModelMoments())
    assert_allclose([mu, nu], [0.0, 1.0], atol=1e-15)
    mu, nu = closed_form_mu_nu("log", 0.5, DELTA, ModelMoments())
    assert_allclose([mu, nu], [0.5 * math.log(0.5), -2 * math.log(0.5)])
    mu, nu = closed_form_mu_nu("x", 0.5, DiscreteLSD.delta(4.0), ModelMoments())
    assert_allclose([mu, nu], [0.0, 16.0], atol=1e-14)


@pytest.mark.parametrize("c", [0.2, 0.5, 0.9])
@pytest.mark.parametrize("f_tag", ["x", "log"])
def test_contour_matches_closed_form(c, f_tag):
    moments = ModelMoments(1, 1.5)
    exact = closed_form_mu_nu(f_tag, c, DELTA, moments)
    numeric = clt_mu_nu(f_tag, c, DELTA, moments, method="contour")
    assert_allclose(numeric, exact, rtol=1e-6, atol=1e-12)


def test_log_refuses_c_at_least_one():
    with pytest.raises(DomainError, match="f=x"):
        clt_mu_nu("log", 1.2, DELTA)


def test_multi_atom_variance_identity():
    H = DiscreteLSD.parse("1:0.4,3:0.6")
    c, beta = 0.6, 1.5
    mu, nu = clt_mu_nu("x", c, H, ModelMoments(1, beta), method="contour")
    second = 0.4 * 1 + 0.6 * 9
    mean = 0.4 * 1 + 0.6 * 3
    assert_allclose(nu, 2 * c * second + beta * c * mean**2, rtol=1e-6)
    mu0, _ = clt_mu_nu("x", c, H, ModelMoments(1, 0.0), method="contour")
    assert abs(mu0) < 1e-9


def test_log_terms_do_not_depend_on_bulk():
    moments = ModelMoments(1, 0.0)
    H = DiscreteLSD.parse("1:0.4,3:0.6")
    numeric = clt_mu_nu("log", 0.6, H, moments, method="contour")
    assert_allclose(numeric, closed_form_mu_nu("log", 0.6, DELTA, moments), rtol=1e-6)


def test_covariance_x_log():
    cov = clt_covariance("x", "log", 0.5, DiscreteLSD.delta(2.0), ModelMoments(1, 1.5))
    assert_allclose(cov, (2 + 1.5) * 0.5 * 2.0, rtol=1e-6)


def test_terms_standardize():
    terms = CltTerms(b=10.0, mu=0.5, nu=4.0, f_tag="x", method="closed_form")
    assert terms.standardize(10.5) == 0.0
    assert_allclose(terms.standardize(12.5), 1.0)
    with pytest.raises(DomainError):
        CltTerms(b=0.0, mu=0.0, nu=0.0, f_tag="x", method="closed_form")
