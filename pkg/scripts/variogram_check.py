"""Average empirical variograms of simulated Matérn fields against the model."""
import argparse

import numpy as np

from spatial_cvm.matern import (MaternParams, empirical_variogram, generate_matern_field,
                                range_fraction_to_kappa, theoretical_variogram)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--m", type=int, default=20)
    ap.add_argument("--nu", type=float, default=2.0)
    ap.add_argument("--kappa", type=float, default=None,
                    help="inverse range in grid units (default: range fraction 0.05 of m)")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--max-lag", type=int, default=6)
    args = ap.parse_args()

    kappa = args.kappa or range_fraction_to_kappa(0.05, args.m, args.nu)
    p = MaternParams(kappa=kappa, nu=args.nu)
    gam = np.mean([empirical_variogram(generate_matern_field(args.m, p, s), args.max_lag)[1]
                   for s in range(args.seeds)], axis=0)
    print(f"kappa = {kappa:.4f}, effective range = {p.effective_range:.3f} grid units")
    print(f"{'lag':>4}{'empirical':>12}{'model':>12}{'rel.err':>10}")
    for h in range(1, args.max_lag + 1):
        model = float(theoretical_variogram(np.array([h]), p)[0])
        print(f"{h:>4}{gam[h]:>12.5f}{model:>12.5f}{gam[h] / model - 1:>10.2%}")


if __name__ == "__main__":
    main()
