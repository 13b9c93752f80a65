"""Size, power, bandwidth and comparison experiments.

Every replication is a pure function of ``(cell, replication index, master
seed)``: the data seed is ``derive_seed(master_seed, rep)``, shared by all
cells so that alternatives of different strength see the same latent noise.
Completed replications are appended to a JSONL checkpoint, one record per
line, and skipped when a run is resumed.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import competing
from .copula import CopulaSpec, copula_pair
from .critical_values import DEFAULT_ALPHAS, alpha_key, critical_value_tables, table_value
from .matern import (GenerationError, MaternParams, generate_independent_bivariate_field,
                     pit_transform, range_fraction_to_kappa, regime_for_theta)
from .seeding import derive_seed
from .statistic import compute_cvm_statistic

log = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("size", "power", "weaker", "bandwidth", "comparison")
# substreams of a replication seed: 0-2 data generation, then one per permutation test
_TEST_STREAM = {"mantel": 3, "cross_k": 4, "dcov": 5}


@dataclass(frozen=True)
class Alternative:
    kind: str            # "gaussian" or "t"
    parameter: float     # rho for gaussian, Kendall's tau for t
    nu_t: float = 4.0

    def spec(self) -> CopulaSpec:
        if self.kind == "gaussian":
            return CopulaSpec("gaussian", rho=self.parameter)
        return CopulaSpec("t", tau=self.parameter, nu_t=self.nu_t)

    @property
    def label(self) -> str:
        name = "rho" if self.kind == "gaussian" else "tau"
        return f"{self.kind}:{name}={self.parameter:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    grid_sizes: tuple = (20,)
    thetas: tuple = (4.0,)
    weights: tuple = ("anderson_darling",)
    alternatives: tuple = ()
    replications: int = 200
    size_replications: int | None = None      # bandwidth: B for the size column
    alphas: tuple = DEFAULT_ALPHAS
    tests: tuple = ()                         # comparison: e.g. ("cvm:anderson_darling", "mantel")
    bandwidths: tuple = ()
    range_fraction: float | None = 0.05
    kappa: float | None = None
    sigma2: float = 1.0
    b_max: int = 999
    b_min: int = 99
    epsilon: float = 0.02
    critical_values: str = "table"            # "table" or "simulate"
    master_seed: int = 2024
    name: str | None = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.replications < 1:
            raise ValueError("replication counts must be at least 1")
        if self.size_replications is not None and self.size_replications < 1:
            raise ValueError("replication counts must be at least 1")
        if self.range_fraction is None and self.kappa is None:
            raise ValueError("set either range_fraction or kappa")
        alts = tuple(a if isinstance(a, Alternative) else Alternative(**a)
                     for a in self.alternatives)
        object.__setattr__(self, "alternatives", alts)
        for attr in ("grid_sizes", "thetas", "weights", "alphas", "tests", "bandwidths"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))

    @property
    def label(self) -> str:
        return self.name or self.kind

    def policy(self, alpha: float = 0.05) -> competing.PermutationPolicy:
        return competing.PermutationPolicy(self.b_max, self.b_min, self.epsilon, alpha)

    def matern_params(self, m: int, theta: float, h: float | None = None) -> MaternParams:
        nu = regime_for_theta(theta).nu
        if h is not None:
            kappa = math.sqrt(8.0 * nu) / h
        elif self.kappa is not None:
            kappa = self.kappa
        else:
            kappa = range_fraction_to_kappa(self.range_fraction, m, nu)
        return MaternParams(sigma2=self.sigma2, kappa=kappa, nu=nu)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alternatives"] = [asdict(a) for a in self.alternatives]
        return d

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class Cell:
    """One data-generating setting and the tests evaluated on it."""

    id: str
    m: int
    params: MaternParams
    alternative: Alternative | None
    replications: int
    tests: tuple
    alphas: tuple
    meta: dict = field(default_factory=dict, compare=False, hash=False)


@dataclass
class ExperimentTable:
    experiment: str
    columns: tuple
    rows: list
    caption: str = ""

    def row_for(self, **match):
        for row in self.rows:
            if all(row.get(k) == v for k, v in match.items()):
                return row
        raise KeyError(match)


def standard_error(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / reps) if reps > 0 else float("nan")


def build_cells(cfg: ExperimentConfig) -> list[Cell]:
    cells = []
    cvm_tests = tuple(f"cvm:{w}" for w in cfg.weights)
    if cfg.kind == "size":
        for theta in cfg.thetas:
            for m in cfg.grid_sizes:
                cells.append(Cell(f"theta={theta:g}|n={m * m}", m, cfg.matern_params(m, theta),
                                  None, cfg.replications, cvm_tests, cfg.alphas,
                                  {"theta": theta, "n": m * m}))
    elif cfg.kind in ("power", "weaker"):
        theta, m = cfg.thetas[0], cfg.grid_sizes[0]
        for alt in cfg.alternatives:
            cells.append(Cell(alt.label, m, cfg.matern_params(m, theta), alt,
                              cfg.replications, cvm_tests, (0.05,),
                              {"alternative": alt.kind, "parameter": alt.parameter}))
    elif cfg.kind == "bandwidth":
        theta, m = cfg.thetas[0], cfg.grid_sizes[0]
        b_size = cfg.size_replications or cfg.replications
        for h in cfg.bandwidths:
            params = cfg.matern_params(m, theta, h=h)
            ratio = cfg.range_fraction * (m - 1) / h if cfg.range_fraction else float("nan")
            base = {"h": h, "rho_over_h": ratio}
            cells.append(Cell(f"h={h:g}|null", m, params, None, b_size, cvm_tests, (0.05,),
                              {**base, "alternative": "null", "parameter": 0.0}))
            for alt in cfg.alternatives:
                cells.append(Cell(f"h={h:g}|{alt.label}", m, params, alt, cfg.replications,
                                  cvm_tests, (0.05,),
                                  {**base, "alternative": alt.kind, "parameter": alt.parameter}))
    else:
        theta, m = cfg.thetas[0], cfg.grid_sizes[0]
        tests = cfg.tests or cvm_tests
        for alt in cfg.alternatives:
            cells.append(Cell(alt.label, m, cfg.matern_params(m, theta), alt,
                              cfg.replications, tests, (0.05,),
                              {"alternative": alt.kind, "parameter": alt.parameter}))
    return cells


def resolve_critical_values(cfg: ExperimentConfig, cells: list[Cell]) -> dict:
    weights = sorted({t.split(":", 1)[1] for c in cells for t in c.tests if t.startswith("cvm:")})
    alphas = sorted({a for c in cells for a in c.alphas}, reverse=True)
    if cfg.critical_values == "table":
        return {w: {alpha_key(a): table_value(w, a) for a in alphas} for w in weights}
    if cfg.critical_values == "simulate":
        tables = critical_value_tables(weights, alphas=tuple(alphas))
        return {w: dict(t.values) for w, t in tables.items()}
    raise ValueError(f"unknown critical value source {cfg.critical_values!r}")


def generate_cell_data(cell: Cell, seed: int):
    if cell.alternative is None:
        x, y = generate_independent_bivariate_field(cell.m, cell.params, seed)
        return pit_transform(x, y, sigma=cell.params.sigma)
    return copula_pair(cell.m, cell.params, cell.alternative.spec(), seed)


def run_replication(cell: Cell, rep: int, master_seed: int, crit: dict, cfg: ExperimentConfig) -> dict:
    seed = derive_seed(master_seed, rep)
    record = {"cell": cell.id, "rep": rep, "seed": seed, "failed": False, "decisions": {}}
    try:
        u, v = generate_cell_data(cell, seed)
    except GenerationError as exc:
        log.warning("replication %d of %s failed: %s", rep, cell.id, exc)
        record["failed"] = True
        return record
    coords = None
    decisions = record["decisions"]
    for test in cell.tests:
        if test.startswith("cvm:"):
            weight = test.split(":", 1)[1]
            t_cent = compute_cvm_statistic(u, v, weight).t_cent
            for a in cell.alphas:
                decisions[f"{test}@{alpha_key(a)}"] = bool(t_cent > crit[weight][alpha_key(a)])
            continue
        test_seed = derive_seed(seed, _TEST_STREAM[test])
        for a in cell.alphas:
            policy = cfg.policy(a)
            if test == "mantel":
                coords = competing.lattice_coords(cell.m) if coords is None else coords
                out = competing.mantel_test(u, v, coords, policy, test_seed)
            elif test == "cross_k":
                coords = competing.lattice_coords(cell.m) if coords is None else coords
                out = competing.cross_k_test(u, v, coords, policy=policy, seed=test_seed)
            elif test == "dcov":
                out = competing.distance_covariance_test(u, v, policy, test_seed)
            else:
                raise ValueError(f"unknown test {test!r}")
            decisions[f"{test}@{alpha_key(a)}"] = out.reject(a)
    return record


class Checkpoint:
    """Append-only JSONL store of replication records."""

    def __init__(self, path):
        self.path = Path(path)

    def load(self) -> dict:
        done = {}
        if not self.path.exists():
            return done
        with self.path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    key = (rec["cell"], int(rec["rep"]))
                    rec["decisions"], rec["failed"]
                except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                    log.warning("skipping corrupt checkpoint line %d in %s", lineno, self.path)
                    continue
                done[key] = rec
        return done

    def append(self, record: dict) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        line = json.dumps(record, sort_keys=True) + "\n"
        with self.path.open("a") as fh:
            fh.write(line)
            fh.flush()


def _cell_columns(kind: str) -> tuple:
    return {
        "size": ("test", "theta", "n"),
        "power": ("alternative", "parameter", "test"),
        "weaker": ("alternative", "parameter", "test"),
        "bandwidth": ("h", "rho_over_h", "alternative", "parameter", "test"),
        "comparison": ("alternative", "parameter", "test"),
    }[kind]


def aggregate(cfg: ExperimentConfig, cells: list[Cell], records: dict) -> ExperimentTable:
    cols = _cell_columns(cfg.kind) + ("alpha", "rate", "se", "replications", "failures")
    rows = []
    for cell in cells:
        recs = [records[(cell.id, r)] for r in range(cell.replications) if (cell.id, r) in records]
        ok = [r for r in recs if not r["failed"]]
        failures = len(recs) - len(ok)
        for test in cell.tests:
            for a in cell.alphas:
                key = f"{test}@{alpha_key(a)}"
                reps = len(ok)
                rate = sum(r["decisions"][key] for r in ok) / reps if reps else float("nan")
                row = {**cell.meta, "test": test, "alpha": a, "rate": rate,
                       "se": standard_error(rate, reps), "replications": reps,
                       "failures": failures}
                rows.append({c: row.get(c) for c in cols})
    return ExperimentTable(cfg.label, cols, rows, caption=default_caption(cfg))


def default_caption(cfg: ExperimentConfig) -> str:
    n = ", ".join(str(m * m) for m in cfg.grid_sizes)
    what = {
        "size": "Empirical rejection rates under H0",
        "power": "Power at 5% level",
        "weaker": "Power at 5% level for weaker alternatives",
        "bandwidth": "Sensitivity to Matern effective range",
        "comparison": "Power comparison at 5% level",
    }[cfg.kind]
    reps = f"{cfg.replications} replications"
    if cfg.size_replications:
        reps = f"B = {cfg.size_replications}, M = {cfg.replications}"
    return f"{what} (n = {n}, {reps}, seed {cfg.master_seed})"


def run_experiment(cfg: ExperimentConfig, output_dir=None, n_jobs: int = 1,
                   checkpoint: bool = True, stop_after: int | None = None) -> ExperimentTable:
    """Run (or resume) an experiment and return its aggregated table.

    ``stop_after`` ends the run after that many new replications; it exists to
    exercise resumption.
    """
    cells = build_cells(cfg)
    crit = resolve_critical_values(cfg, cells)
    store = None
    records = {}
    if checkpoint and output_dir is not None:
        store = Checkpoint(Path(output_dir) / "checkpoints" /
                           f"{cfg.label}-{cfg.fingerprint()}.jsonl")
        records = store.load()
    todo = [(cell, r) for cell in cells for r in range(cell.replications)
            if (cell.id, r) not in records]
    if stop_after is not None:
        todo = todo[:stop_after]
    log.info("%s: %d cells, %d replications to run (%d resumed)",
             cfg.label, len(cells), len(todo), len(records))

    if n_jobs == 1:
        results = (run_replication(c, r, cfg.master_seed, crit, cfg) for c, r in todo)
    else:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=n_jobs, backend="loky", return_as="generator")(
            delayed(run_replication)(c, r, cfg.master_seed, crit, cfg) for c, r in todo)
    for rec in results:
        records[(rec["cell"], rec["rep"])] = rec
        if store is not None:
            store.append(rec)
    return aggregate(cfg, cells, records)


def run_size_experiment(cfg, **kw) -> ExperimentTable:
    return run_experiment(_expect(cfg, "size"), **kw)


def run_power_experiment(cfg, **kw) -> ExperimentTable:
    return run_experiment(_expect(cfg, "power", "weaker"), **kw)


def run_bandwidth_experiment(cfg, **kw) -> ExperimentTable:
    return run_experiment(_expect(cfg, "bandwidth"), **kw)


def run_comparison_experiment(cfg, **kw) -> ExperimentTable:
    return run_experiment(_expect(cfg, "comparison"), **kw)


def _expect(cfg: ExperimentConfig, *kinds) -> ExperimentConfig:
    if cfg.kind not in kinds:
        raise ValueError(f"expected a {'/'.join(kinds)} config, got {cfg.kind!r}")
    return cfg


def _alts(kind: str, values, nu_t: float = 4.0) -> tuple:
    return tuple(Alternative(kind, v, nu_t) for v in values)


SCALES = {"desk": {"B": 500, "M": 200}, "full": {"B": 2000, "M": 1000}}


def default_configs(scale: str = "desk", master_seed: int = 2024) -> dict:
    """The experiment grid behind every reported table, at ``scale``."""
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; choose from {sorted(SCALES)}")
    B, M = SCALES[scale]["B"], SCALES[scale]["M"]
    base = dict(master_seed=master_seed)
    strong = _alts("gaussian", (0.1, 0.3, 0.5)) + _alts("t", (0.1, 0.3, 0.5))
    weak = _alts("gaussian", (0.05, 0.10, 0.15, 0.20, 0.25)) + _alts("t", (0.05, 0.10, 0.15, 0.20, 0.25))
    return {
        "size": ExperimentConfig("size", grid_sizes=(10, 20), thetas=(3.0, 4.0, 6.0),
                                 weights=("uniform", "anderson_darling"),
                                 replications=B, **base),
        "power": ExperimentConfig("power", weights=("uniform", "optimal_normal", "anderson_darling"),
                                  alternatives=strong, replications=M, **base),
        "weaker": ExperimentConfig("weaker", weights=("uniform", "anderson_darling"),
                                   alternatives=weak, replications=M, **base),
        "bandwidth": ExperimentConfig("bandwidth", bandwidths=(0.02, 0.05, 0.10, 0.20),
                                      alternatives=(Alternative("gaussian", 0.3), Alternative("t", 0.3)),
                                      replications=M, size_replications=B, **base),
        "comparison": ExperimentConfig(
            "comparison", alternatives=_alts("gaussian", (0.3, 0.5)) + _alts("t", (0.3, 0.5)),
            tests=("cvm:anderson_darling", "mantel", "cross_k"), replications=M, **base),
        "comparison_dcov": ExperimentConfig(
            "comparison", name="comparison_dcov",
            alternatives=_alts("gaussian", (0.1, 0.2, 0.3)) + _alts("t", (0.1, 0.2, 0.3)),
            tests=("cvm:anderson_darling", "cvm:uniform", "dcov"), replications=M, **base),
    }


def with_seed(cfg: ExperimentConfig, master_seed: int) -> ExperimentConfig:
    return replace(cfg, master_seed=master_seed)
