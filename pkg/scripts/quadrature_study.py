"""Convergence of the quadrature-based kernels as the node count doubles."""
import argparse

import numpy as np

from spatial_cvm import weights as wt


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=400)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    x = np.random.default_rng(args.seed).uniform(size=args.n)
    ref = wt.marginal_kernel_matrix(x, "anderson_darling")
    print("anderson-darling, theta-space Gauss-Legendre vs exact antiderivatives")
    for order in (4, 8, 16, 32):
        g = wt.anderson_darling_theta_quadrature(order).kernel_fn(x)
        print(f"  order {order:>2}: max abs diff {np.abs(g - ref).max():.3e}")
    print("optimal normal, node doubling per piece")
    prev = None
    for order in (4, 8, 16, 32, 64):
        g = wt.optimal_normal_with_order(order).kernel_fn(x)
        if prev is not None:
            rel = np.abs(g - prev).max() / np.abs(g).max()
            print(f"  {order // 2:>2} -> {order:>2}: max rel change {rel:.3e}")
        prev = g


if __name__ == "__main__":
    main()
