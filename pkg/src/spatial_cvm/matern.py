"""Stationary Gaussian Matérn fields on a regular lattice.

Fields are simulated exactly (up to eigenvalue clamping) by circulant
embedding on a ``2m x 2m`` torus and then rescaled so the sample standard
deviation of the ``m x m`` output equals ``sqrt(sigma2)``.  Distances are in
grid units throughout.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import special

from .seeding import derive_seed


class GenerationError(RuntimeError):
    """Raised when the circulant embedding has no usable spectral mass."""


@dataclass(frozen=True)
class MaternParams:
    sigma2: float = 1.0
    kappa: float = 5.66
    nu: float = 2.0

    def __post_init__(self):
        for name in ("sigma2", "kappa", "nu"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))

    @property
    def effective_range(self) -> float:
        return float(np.sqrt(8.0 * self.nu) / self.kappa)


@dataclass(frozen=True)
class MixingRegime:
    theta: float
    nu: float


MIXING_REGIMES = {
    "strong": MixingRegime(theta=6.0, nu=3.0),
    "moderate": MixingRegime(theta=4.0, nu=2.0),
    "weak": MixingRegime(theta=3.0, nu=1.5),
}


def regime_for_theta(theta: float) -> MixingRegime:
    for regime in MIXING_REGIMES.values():
        if regime.theta == theta:
            return regime
    raise ValueError(f"no mixing regime with theta={theta}; known: "
                     f"{sorted(r.theta for r in MIXING_REGIMES.values())}")


@dataclass(frozen=True)
class FieldGrid:
    values: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.size

    def to_csv(self, path) -> None:
        np.savetxt(Path(path), self.values, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "FieldGrid":
        return cls(np.loadtxt(Path(path), delimiter=",", ndmin=2))


def matern_covariance(h, p: MaternParams):
    """Matérn covariance ``C(h)``; returns ``sigma2`` at ``h == 0``.

    Works elementwise on arrays.  Bessel underflow at large ``kappa * h``
    is clamped to zero.
    """
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValueError("distances must be non-negative")
    scalar = h.ndim == 0
    with np.errstate(over="ignore"):
        x = p.kappa * np.atleast_1d(h)
    out = np.full(x.shape, float(p.sigma2))
    pos = x > 0
    if np.any(pos):
        xp = x[pos]
        # log-space avoids inf * 0 for large x and overflow of x**nu
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            kv = special.kve(p.nu, xp)  # K_nu(x) * exp(x)
            log_c = ((1.0 - p.nu) * np.log(2.0) - special.gammaln(p.nu)
                     + p.nu * np.log(xp) + np.log(kv) - xp)
            c = p.sigma2 * np.exp(log_c)
        # non-finite only at the extremes: x -> 0 tends to sigma2, x -> inf to 0
        c = np.where(np.isfinite(c), c, np.where(xp < 1.0, p.sigma2, 0.0))
        out[pos] = np.minimum(c, p.sigma2)
    return float(out[0]) if scalar else out


def effective_range_to_kappa(rho_eff: float, nu: float) -> float:
    if rho_eff <= 0 or nu <= 0:
        raise ValueError("effective range and smoothness must be positive")
    return float(np.sqrt(8.0 * nu) / rho_eff)


def kappa_to_effective_range(kappa: float, nu: float) -> float:
    if kappa <= 0 or nu <= 0:
        raise ValueError("kappa and smoothness must be positive")
    return float(np.sqrt(8.0 * nu) / kappa)


def range_fraction_to_kappa(r: float, m: int, nu: float) -> float:
    """Kappa for an effective range of ``r * (m - 1)`` grid units."""
    return effective_range_to_kappa(r * (m - 1), nu)


def _torus_distances(size: int) -> np.ndarray:
    idx = np.arange(size)
    d = np.minimum(idx, size - idx).astype(float)
    return np.hypot(d[:, None], d[None, :])


@lru_cache(maxsize=64)
def _embedding_spectrum(m: int, p: MaternParams) -> tuple[np.ndarray, float]:
    cov = matern_covariance(_torus_distances(2 * m), p)
    lam = np.fft.fft2(cov).real
    clamped = float(-lam[lam < 0].sum())
    lam = np.maximum(lam, 0.0)
    lam.setflags(write=False)
    return lam, clamped


def embedding_diagnostics(m: int, p: MaternParams) -> dict:
    """Spectral mass removed by clamping, relative to the retained mass."""
    lam, clamped = _embedding_spectrum(m, p)
    total = float(lam.sum())
    return {"clamped": clamped, "total": total,
            "fraction": clamped / total if total > 0 else np.inf}


def generate_matern_field(m: int, p: MaternParams, seed: int) -> FieldGrid:
    """One ``m x m`` Matérn field, deterministic in ``(m, p, seed)``."""
    if m < 2:
        raise ValueError("grid side m must be at least 2")
    lam, _ = _embedding_spectrum(m, p)
    if not np.any(lam > 0):
        raise GenerationError("all circulant eigenvalues clamped to zero")
    size = 2 * m
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
    x = np.fft.ifft2(np.sqrt(lam) * z).real * size
    x = x[:m, :m]
    sd = x.std()
    if not sd > 0:
        raise GenerationError("generated field has zero variance")
    return FieldGrid(x * (p.sigma / sd))


def generate_independent_bivariate_field(m: int, p: MaternParams, seed: int):
    """Two independent fields from substreams 0 and 1 of ``seed``."""
    x = generate_matern_field(m, p, derive_seed(seed, 0))
    y = generate_matern_field(m, p, derive_seed(seed, 1))
    return x, y


def pit_transform(x: FieldGrid, y: FieldGrid, sigma: float = 1.0):
    """Row-major ``(U, V) = (Phi(X / sigma), Phi(Y / sigma))``."""
    u = special.ndtr(np.ravel(x.values) / sigma)
    v = special.ndtr(np.ravel(y.values) / sigma)
    return u, v


def empirical_variogram(x: FieldGrid, max_lag: int):
    """Method-of-moments semivariance at axis-aligned integer lags.

    Returns ``(lags, gamma)`` with lags ``0..max_lag``; both axes are pooled.
    """
    values = np.asarray(x.values, dtype=float)
    m = values.shape[0]
    if not 0 <= max_lag < m:
        raise ValueError("max_lag must lie in [0, m)")
    lags = np.arange(max_lag + 1)
    gamma = np.zeros(max_lag + 1)
    for h in lags[1:]:
        dx = values[h:, :] - values[:-h, :]
        dy = values[:, h:] - values[:, :-h]
        gamma[h] = 0.5 * (np.sum(dx**2) + np.sum(dy**2)) / (dx.size + dy.size)
    return lags, gamma


def theoretical_variogram(lags, p: MaternParams):
    return p.sigma2 - matern_covariance(np.asarray(lags, dtype=float), p)
