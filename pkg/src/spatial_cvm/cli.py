"""Command-line entry points: experiments, critical-value check, single-dataset test."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

# which default configurations each experiment subcommand runs
SUBCOMMAND_TABLES = {
    "size": ("size",),
    "power": ("power", "weaker"),
    "bandwidth": ("bandwidth",),
    "comparison": ("comparison", "comparison_dcov"),
}
SUBCOMMAND_TABLES["all"] = tuple(t for v in SUBCOMMAND_TABLES.values() for t in v)

log = logging.getLogger("spatial_cvm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--out", default="results", help="output directory (default ./results)")
    common.add_argument("--scale", choices=("desk", "full"), default="desk")
    common.add_argument("--weight", action="append", default=None,
                        help="weight function; repeat to select several")
    common.add_argument("--m", type=int, default=None, help="lattice side, n = m^2")
    common.add_argument("--config", default=None, help="JSON experiment configuration")
    common.add_argument("--n-jobs", type=int, default=1)
    common.add_argument("--raw", action="store_true", help="also dump full-precision JSON")
    common.add_argument("--no-checkpoint", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="spatial-cvm", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name in SUBCOMMAND_TABLES:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment(s)")
    vcv = sub.add_parser("verify-cv", parents=[common], help="recompute asymptotic critical values")
    vcv.add_argument("--n-mc", type=int, default=200_000)
    vcv.add_argument("--J", type=int, default=200)
    t = sub.add_parser("test", parents=[common], help="test one simulated dataset")
    t.add_argument("--n-perm", type=int, default=999)
    t.add_argument("--rho", type=float, default=0.0,
                   help="Gaussian-copula dependence of the simulated pair")
    return parser


def _experiment_configs(args, names):
    from .simulation import ExperimentConfig, default_configs, with_seed

    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
        configs = {cfg.label: cfg}
    else:
        defaults = default_configs(args.scale)
        configs = {n: defaults[n] for n in names}
    out = {}
    for name, cfg in configs.items():
        if args.seed is not None:
            cfg = with_seed(cfg, args.seed)
        if args.m is not None:
            cfg = replace(cfg, grid_sizes=(args.m,))
        if args.weight and not cfg.tests:
            cfg = replace(cfg, weights=tuple(args.weight))
        out[name] = cfg
    return out


def cmd_experiments(args) -> int:
    from .output import TableArtifact, write_table
    from .simulation import run_experiment

    out_dir = Path(args.out)
    for name, cfg in _experiment_configs(args, SUBCOMMAND_TABLES[args.command]).items():
        start = time.perf_counter()
        table = run_experiment(cfg, output_dir=out_dir, n_jobs=args.n_jobs,
                               checkpoint=not args.no_checkpoint)
        paths = write_table(TableArtifact.from_experiment(table, name), out_dir, raw=args.raw)
        print(f"{name}: {len(table.rows)} rows in {time.perf_counter() - start:.1f}s -> "
              + ", ".join(str(p) for p in paths.values()))
    return EXIT_OK


def cmd_verify_cv(args) -> int:
    from .critical_values import DEFAULT_SEED, format_report, verify_table1

    seed = DEFAULT_SEED if args.seed is None else args.seed
    report = verify_table1(J=args.J, n_mc=args.n_mc, seed=seed)
    print(format_report(report))
    ok = all(c.passed for c in report)
    print(f"{sum(c.passed for c in report)}/{len(report)} cells within tolerance")
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def cmd_test(args) -> int:
    from .copula import gaussian_copula_pair
    from .critical_values import table_value
    from .matern import MaternParams
    from .statistic import compute_cvm_statistic, cvm_permutation_pvalue

    weights = args.weight or ["anderson_darling"]
    m = args.m or 20
    seed = 42 if args.seed is None else args.seed
    params = MaternParams()
    u, v = gaussian_copula_pair(m, params, args.rho, seed)
    print(f"n = {m * m}, Matern kappa = {params.kappa}, nu = {params.nu}, rho = {args.rho}, seed = {seed}")
    for w in weights:
        res = compute_cvm_statistic(u, v, w)
        crit = table_value(w, 0.05)
        p = cvm_permutation_pvalue(u, v, w, n_permutations=args.n_perm, seed=seed)
        print(f"[{w}] T_n = {res.t_n:.6f}  mu_n = {res.mu_n:.6f}  T_cent = {res.t_cent:.6f}")
        print(f"[{w}] asymptotic: c_0.05 = {crit:g} -> {'reject' if res.t_cent > crit else 'do not reject'}")
        print(f"[{w}] permutation p = {p:.4f} ({args.n_perm} permutations)")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"verify-cv": cmd_verify_cv, "test": cmd_test}.get(args.command, cmd_experiments)
    try:
        return handler(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, FileNotFoundError) else EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
