"""Seed and truncation sensitivity of the simulated critical values."""
import argparse

from spatial_cvm.critical_values import critical_value_tables

WEIGHTS = ("uniform", "optimal_normal", "anderson_darling")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[20240917, 1, 2])
    ap.add_argument("--J", type=int, nargs="+", default=[200])
    ap.add_argument("--n-mc", type=int, default=200_000)
    ap.add_argument("--method", choices=("paired", "full"), default="paired")
    args = ap.parse_args()

    print(f"{'J':>5}{'seed':>10}  " + "  ".join(f"{w[:6]:>6}@{a}" for w in WEIGHTS for a in ("0.1", "0.05", "0.01")))
    for J in args.J:
        for seed in args.seeds:
            tables = critical_value_tables(WEIGHTS, J=J, n_mc=args.n_mc, seed=seed, method=args.method)
            cells = [tables[w].values[a] for w in WEIGHTS for a in ("0.1", "0.05", "0.01")]
            print(f"{J:>5}{seed:>10}  " + "  ".join(f"{c:>11.4f}" for c in cells))


if __name__ == "__main__":
    main()
