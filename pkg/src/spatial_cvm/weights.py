"""Weight functions for the Cramér-von Mises kernels.

Each weight bundles its eigenvalue sequence with evaluators for the marginal
kernel ``G_W`` and the inner-form corrections ``(A_W, B_W)`` that account for
centring with the empirical CDF.  Built-ins: ``uniform``, ``optimal_normal``,
``anderson_darling``.  Further weights can be added with
:func:`register_custom_weight` or built from a plain ``W(u)`` with
:func:`quadrature_weight`.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from . import _piecewise as pw

BOUNDARY_GUARD = 1e-12


@dataclass(frozen=True)
class CorrectionPair:
    A: np.ndarray
    B: float


@dataclass(frozen=True)
class WeightSpec:
    name: str
    eigenvalue_fn: Callable[[np.ndarray], np.ndarray]
    kernel_fn: Callable[[np.ndarray], np.ndarray]
    corrections_fn: Callable[[np.ndarray], CorrectionPair]
    weight_fn: Callable[[np.ndarray], np.ndarray] | None = None
    quadrature: str = "custom"
    eigenvalue_total: float | None = None   # math.inf when the series diverges
    basis: object = field(default=None, repr=False, compare=False)


def _check_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("data must be non-empty")
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0) or np.any(x >= 1.0):
        raise ValueError("data must lie strictly inside (0, 1)")
    return np.clip(x, BOUNDARY_GUARD, 1.0 - BOUNDARY_GUARD)


def _from_basis(basis):
    def kernel(data):
        x = _check_data(data)
        return pw.kernel_from_sums(x, pw.piece_sums(x, basis))

    def corrections(data):
        x = _check_data(data)
        s = pw.piece_sums(x, basis)
        return CorrectionPair(A=s.a_corr, B=s.b_corr)

    return kernel, corrections


def uniform_kernel(data) -> np.ndarray:
    """Closed form ``G(s, t) = (s^2 + t^2)/2 - max(s, t) + 1/3``."""
    x = _check_data(data)
    sq = 0.5 * x * x
    return sq[:, None] + sq[None, :] - np.maximum(x[:, None], x[None, :]) + 1.0 / 3.0


def _make_uniform() -> WeightSpec:
    basis = pw.UniformBasis()
    _, corrections = _from_basis(basis)
    return WeightSpec(
        name="uniform",
        eigenvalue_fn=lambda j: 1.0 / (np.pi * np.asarray(j, dtype=float)) ** 2,
        kernel_fn=uniform_kernel,
        corrections_fn=corrections,
        weight_fn=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        quadrature="closed-form",
        eigenvalue_total=1.0 / 6.0,
        basis=basis,
    )


def _make_anderson_darling() -> WeightSpec:
    basis = pw.AndersonDarlingBasis()
    kernel, corrections = _from_basis(basis)
    return WeightSpec(
        name="anderson_darling",
        eigenvalue_fn=lambda j: 1.0 / (np.asarray(j, dtype=float) * (np.asarray(j, dtype=float) + 1.0)),
        kernel_fn=kernel,
        corrections_fn=corrections,
        weight_fn=lambda u: 1.0 / (u * (1.0 - u)),
        quadrature="closed-form antiderivatives (theta-space Gauss-Legendre cross-check)",
        eigenvalue_total=1.0,
        basis=basis,
    )


def _make_optimal_normal(order: int = 16) -> WeightSpec:
    basis = pw.QuadratureBasis(pw.Z_SPACE, order=order)
    kernel, corrections = _from_basis(basis)

    def w(u):
        z = special.ndtri(u)
        return np.exp(z * z) * 2.0 * np.pi

    return WeightSpec(
        name="optimal_normal",
        eigenvalue_fn=lambda j: 1.0 / np.asarray(j, dtype=float),
        kernel_fn=kernel,
        corrections_fn=corrections,
        weight_fn=w,
        quadrature=f"z-space Gauss-Legendre, {order} nodes per piece",
        eigenvalue_total=math.inf,
        basis=basis,
    )


def anderson_darling_theta_quadrature(order: int = 16) -> WeightSpec:
    """AD weight through the ``u = sin^2(theta)`` route instead of closed forms."""
    basis = pw.QuadratureBasis(pw.THETA_SPACE, order=order)
    kernel, corrections = _from_basis(basis)
    base = _make_anderson_darling()
    return WeightSpec(
        name="anderson_darling_theta", eigenvalue_fn=base.eigenvalue_fn,
        kernel_fn=kernel, corrections_fn=corrections, weight_fn=base.weight_fn,
        quadrature=f"theta-space Gauss-Legendre, {order} nodes per piece",
        eigenvalue_total=1.0, basis=basis,
    )


def optimal_normal_with_order(order: int) -> WeightSpec:
    return _make_optimal_normal(order)


def quadrature_weight(name: str, weight_fn, eigenvalue_fn, order: int = 16,
                      eigenvalue_total: float | None = None) -> WeightSpec:
    """Weight spec for an arbitrary integrable ``W(u)`` on ``(0, 1)``."""
    basis = pw.QuadratureBasis(pw.u_space(weight_fn), order=order)
    kernel, corrections = _from_basis(basis)
    return WeightSpec(
        name=name, eigenvalue_fn=eigenvalue_fn, kernel_fn=kernel,
        corrections_fn=corrections, weight_fn=weight_fn,
        quadrature=f"u-space Gauss-Legendre, {order} nodes per piece",
        eigenvalue_total=eigenvalue_total, basis=basis,
    )


_REGISTRY: dict[str, WeightSpec] = {}
_REGISTRY_LOCK = threading.Lock()

BUILTIN_WEIGHTS = ("uniform", "optimal_normal", "anderson_darling")


def register_custom_weight(spec: WeightSpec) -> WeightSpec:
    for attr in ("eigenvalue_fn", "kernel_fn", "corrections_fn"):
        if not callable(getattr(spec, attr, None)):
            raise ValueError(f"weight {spec.name!r} is missing a callable {attr}")
    if not callable(spec.weight_fn):
        raise ValueError(f"weight {spec.name!r} is missing a callable weight_fn")
    with _REGISTRY_LOCK:
        if spec.name in _REGISTRY:
            raise ValueError(f"weight {spec.name!r} is already registered")
        _REGISTRY[spec.name] = spec
    return spec


def unregister_weight(name: str) -> None:
    if name in BUILTIN_WEIGHTS:
        raise ValueError("built-in weights cannot be removed")
    with _REGISTRY_LOCK:
        _REGISTRY.pop(name, None)


def get_weight(w) -> WeightSpec:
    if isinstance(w, WeightSpec):
        return w
    try:
        return _REGISTRY[w]
    except KeyError:
        raise KeyError(f"unknown weight {w!r}; registered: {sorted(_REGISTRY)}") from None


def registered_weights() -> list[str]:
    return sorted(_REGISTRY)


for _spec in (_make_uniform(), _make_optimal_normal(), _make_anderson_darling()):
    register_custom_weight(_spec)


def eigenvalues(w, J: int) -> np.ndarray:
    if J < 1:
        raise ValueError("J must be at least 1")
    return np.asarray(get_weight(w).eigenvalue_fn(np.arange(1, J + 1)), dtype=float)


def eigenvalue_sum(w) -> float:
    """Sum of all eigenvalues, ``math.inf`` if the series diverges.

    The centring constant of the limit is the square of this value.
    """
    total = get_weight(w).eigenvalue_total
    if total is None:
        raise ValueError(f"weight {get_weight(w).name!r} does not declare its eigenvalue sum")
    return total


def centering_constant(w) -> float:
    return eigenvalue_sum(w) ** 2


def marginal_kernel_matrix(data, w) -> np.ndarray:
    return get_weight(w).kernel_fn(data)


def inner_form_corrections(data, w) -> CorrectionPair:
    return get_weight(w).corrections_fn(data)


def inner_kernel(g: np.ndarray, corr: CorrectionPair) -> np.ndarray:
    a = corr.A
    return g + a[:, None] + a[None, :] + corr.B


def kernel_matrix_inner(data, w) -> np.ndarray:
    spec = get_weight(w)
    return inner_kernel(spec.kernel_fn(data), spec.corrections_fn(data))
