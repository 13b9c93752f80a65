"""Gaussian- and t-copula alternatives built on Matérn fields.

Both generators keep the Matérn spatial structure of each margin and add
cross-dependence between the two fields.  Substreams of ``seed``: 0 and 1 feed
the two latent fields (shared with the null generator), 2 feeds the shared
t-copula scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .matern import MaternParams, generate_independent_bivariate_field
from .seeding import derive_seed


@dataclass(frozen=True)
class CopulaSpec:
    kind: str
    rho: float = 0.0
    tau: float | None = None
    nu_t: float = 4.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "t"):
            raise ValueError(f"unknown copula kind {self.kind!r}")
        if self.kind == "t":
            if self.tau is None:
                raise ValueError("t copula is parameterised by Kendall's tau")
            object.__setattr__(self, "rho", kendall_tau_to_rho(self.tau))
        _check_rho(self.rho)

    @property
    def parameter(self) -> float:
        return self.rho if self.kind == "gaussian" else self.tau


def _check_rho(rho: float) -> None:
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"copula correlation must lie in [0, 1), got {rho}")


def kendall_tau_to_rho(tau: float) -> float:
    if not 0.0 <= tau < 1.0:
        raise ValueError(f"Kendall's tau must lie in [0, 1), got {tau}")
    return float(np.sin(np.pi * tau / 2.0))


def standardize(values: np.ndarray) -> np.ndarray:
    """Zero sample mean, unit sample (ddof=0) standard deviation."""
    x = np.ravel(values).astype(float)
    return (x - x.mean()) / x.std()


def latent_gaussian_pair(m: int, p: MaternParams, rho: float, seed: int):
    """Standardised latent fields ``(X_hat, Y_hat)``, flattened row-major."""
    _check_rho(rho)
    x, eps = generate_independent_bivariate_field(m, p, seed)
    xh, eh = standardize(x.values), standardize(eps.values)
    return xh, rho * xh + np.sqrt(1.0 - rho * rho) * eh


def gaussian_copula_pair(m: int, p: MaternParams, rho: float, seed: int):
    xh, yh = latent_gaussian_pair(m, p, rho, seed)
    return special.ndtr(xh), special.ndtr(yh)


def shared_scale(nu_t: float, seed: int) -> float:
    """One draw of ``chi2(nu_t) / nu_t``, shared by every site."""
    if not nu_t > 0:
        raise ValueError("t degrees of freedom must be positive")
    return float(np.random.default_rng(seed).chisquare(nu_t) / nu_t)


def t_copula_pair(m: int, p: MaternParams, tau: float, nu_t: float, seed: int,
                  scale_seed: int | None = None):
    """t-copula pair with a single chi-square scale for the whole lattice.

    ``scale_seed`` overrides substream 2 of ``seed`` for the scale draw.
    """
    rho = kendall_tau_to_rho(tau)
    if not nu_t > 0:
        raise ValueError("t degrees of freedom must be positive")
    xh, yh = latent_gaussian_pair(m, p, rho, seed)
    s = shared_scale(nu_t, derive_seed(seed, 2) if scale_seed is None else scale_seed)
    root = np.sqrt(s)
    return special.stdtr(nu_t, xh / root), special.stdtr(nu_t, yh / root)


def copula_pair(m: int, p: MaternParams, spec: CopulaSpec, seed: int):
    if spec.kind == "gaussian":
        return gaussian_copula_pair(m, p, spec.rho, seed)
    return t_copula_pair(m, p, spec.tau, spec.nu_t, seed)
