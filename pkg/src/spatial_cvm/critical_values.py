"""Asymptotic critical values from the weighted chi-square limit.

The centred statistic converges to

    S = sum_{j,k} lambda_j lambda_k (N_jk^2 - 1)
      = lambda' (N o N) lambda - (sum_j lambda_j)^2,

with ``N`` a ``J x J`` matrix of independent standard normals.  Two samplers
are provided.  ``method="full"`` draws ``N`` literally.  ``method="paired"``
(the default) uses ``N_jk^2 + N_kj^2 ~ 2 Exp(1)`` for ``j < k``, which is the
same distribution with half the random numbers; both are evaluated in chunks
that do not change the draws.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._permsum import row_dots
from .seeding import derive_seed
from .weights import eigenvalues, get_weight

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.10, 0.05, 0.01)
DEFAULT_SEED = 20240917
CHUNK_SIZE = 5000
CHUNK_BYTES = 256 * 2**20   # cap on one chunk's draw array

# reference asymptotic critical values, J = 200 and n_mc = 200 000
TABLE1 = {
    "uniform": {"0.10": 0.019, "0.05": 0.031, "0.01": 0.060},
    "optimal_normal": {"0.10": 2.98, "0.05": 4.17, "0.01": 6.91},
    "anderson_darling": {"0.10": 0.504, "0.05": 0.776, "0.01": 1.430},
}
TABLE1_TOLERANCE = {"uniform": 0.005, "anderson_darling": 0.02, "optimal_normal": 0.10}


def alpha_key(alpha: float) -> str:
    return f"{alpha:.2f}"


def table_value(weight: str, alpha: float) -> float:
    return TABLE1[weight][alpha_key(alpha)]


@dataclass
class CriticalValueTable:
    weight: str
    alphas: tuple
    values: dict
    J: int
    n_mc: int
    seed: int
    method: str = "paired"
    sample_stats: dict = field(default_factory=dict)

    def __getitem__(self, alpha: float) -> float:
        return self.values[alpha_key(alpha)]


def _streams(seed: int):
    return (np.random.default_rng(derive_seed(seed, 0)),
            np.random.default_rng(derive_seed(seed, 1)))


def _paired_chunks(lams: np.ndarray, n_mc: int, seed: int, chunk_size: int):
    """Yield ``(k, W)`` samples for the eigenvalue columns of ``lams`` (J x W)."""
    J = lams.shape[0]
    iu, ju = np.triu_indices(J, k=1)
    diag_coef = lams**2
    off_coef = 2.0 * lams[iu] * lams[ju]
    offset = lams.sum(axis=0) ** 2
    diag_rng, off_rng = _streams(seed)
    done = 0
    while done < n_mc:
        k = min(chunk_size, n_mc - done)
        d = diag_rng.standard_normal((k, J))
        d *= d
        e = off_rng.standard_exponential((k, iu.size))
        yield row_dots(d, diag_coef) + row_dots(e, off_coef) - offset
        done += k


def _full_chunks(lams: np.ndarray, n_mc: int, seed: int, chunk_size: int):
    J = lams.shape[0]
    rng, _ = _streams(seed)
    coef = np.einsum("jw,kw->jkw", lams, lams).reshape(J * J, -1)
    offset = lams.sum(axis=0) ** 2
    done = 0
    while done < n_mc:
        k = min(chunk_size, n_mc - done)
        z = rng.standard_normal((k, J, J))
        z *= z
        yield row_dots(z.reshape(k, J * J), coef) - offset
        done += k


def simulate_limit_samples(weights, J: int = 200, n_mc: int = 200_000,
                           seed: int = DEFAULT_SEED, chunk_size: int = CHUNK_SIZE,
                           method: str = "paired") -> dict:
    """Draws of the limit variable for several weights from shared normals.

    Each weight's sample is exactly what :func:`simulate_limit_sample` returns
    for it alone.
    """
    if J < 1 or n_mc < 1:
        raise ValueError("J and n_mc must be at least 1")
    names = [get_weight(w).name for w in weights]
    lams = np.column_stack([eigenvalues(w, J) for w in weights])
    chunks = {"paired": _paired_chunks, "full": _full_chunks}[method]
    # draws do not depend on the chunking, so shrinking chunks for large J is free
    rows = max(1, min(chunk_size, CHUNK_BYTES // (8 * J * J)))
    out = np.concatenate(list(chunks(lams, n_mc, seed, rows)), axis=0)
    return {name: out[:, i].copy() for i, name in enumerate(names)}


def simulate_limit_sample(w, J: int = 200, n_mc: int = 200_000, seed: int = DEFAULT_SEED,
                          chunk_size: int = CHUNK_SIZE, method: str = "paired") -> np.ndarray:
    return next(iter(simulate_limit_samples([w], J, n_mc, seed, chunk_size, method).values()))


def _table_from_sample(name, sample, alphas, J, n_mc, seed, method):
    qs = np.quantile(sample, [1.0 - a for a in alphas])  # type-7 interpolation
    values = {alpha_key(a): float(q) for a, q in zip(alphas, qs)}
    stats = {"mean": float(sample.mean()), "var": float(sample.var(ddof=1))}
    return CriticalValueTable(weight=name, alphas=tuple(alphas), values=values, J=J,
                              n_mc=n_mc, seed=seed, method=method, sample_stats=stats)


def critical_values(w, alphas=DEFAULT_ALPHAS, J: int = 200, n_mc: int = 200_000,
                    seed: int = DEFAULT_SEED, method: str = "paired") -> CriticalValueTable:
    name = get_weight(w).name
    sample = simulate_limit_sample(w, J, n_mc, seed, method=method)
    return _table_from_sample(name, sample, alphas, J, n_mc, seed, method)


def critical_value_tables(weights, alphas=DEFAULT_ALPHAS, J: int = 200, n_mc: int = 200_000,
                          seed: int = DEFAULT_SEED, method: str = "paired") -> dict:
    samples = simulate_limit_samples(weights, J, n_mc, seed, method=method)
    return {name: _table_from_sample(name, s, alphas, J, n_mc, seed, method)
            for name, s in samples.items()}


@dataclass(frozen=True)
class CellCheck:
    weight: str
    alpha: str
    reference: float
    computed: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.computed - self.reference) <= self.tolerance


def verify_table1(J: int = 200, n_mc: int = 200_000, seed: int = DEFAULT_SEED,
                  tolerance_scale: float = 1.0, method: str = "paired") -> list[CellCheck]:
    """Recompute the nine reference cells and compare within per-weight tolerances."""
    tables = critical_value_tables(list(TABLE1), J=J, n_mc=n_mc, seed=seed, method=method)
    report = []
    for name, ref in TABLE1.items():
        for key, value in ref.items():
            report.append(CellCheck(name, key, value, tables[name].values[key],
                                    TABLE1_TOLERANCE[name] * tolerance_scale))
    for cell in report:
        log.info("%-17s alpha=%s ref=%.3f got=%.4f %s", cell.weight, cell.alpha,
                 cell.reference, cell.computed, "PASS" if cell.passed else "FAIL")
    return report


def format_report(report: list[CellCheck]) -> str:
    lines = [f"{'weight':<18}{'alpha':>6}{'reference':>11}{'computed':>11}{'tol':>7}  result"]
    for c in report:
        lines.append(f"{c.weight:<18}{c.alpha:>6}{c.reference:>11.3f}{c.computed:>11.4f}"
                     f"{c.tolerance:>7.3f}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
