"""Random-matrix primitives: spike map, Stieltjes transform and the CLT
for linear spectral statistics."""

from .clt import (
    CltTerms,
    centering_b,
    clt_covariance,
    clt_mu_nu,
    clt_terms,
    closed_form_mu_nu,
    lsd_integral,
)
from .lsd import (
    DiscreteLSD,
    ModelMoments,
    SpikeSpec,
    beta_coefficient,
    critical_points,
    lsd_support,
    phi,
    phi_inverse,
)
from .stieltjes import companion_stieltjes

__all__ = [
    "CltTerms",
    "DiscreteLSD",
    "ModelMoments",
    "SpikeSpec",
    "beta_coefficient",
    "centering_b",
    "clt_covariance",
    "clt_mu_nu",
    "clt_terms",
    "closed_form_mu_nu",
    "companion_stieltjes",
    "critical_points",
    "lsd_integral",
    "lsd_support",
    "phi",
    "phi_inverse",
]
