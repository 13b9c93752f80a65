"""Run every experiment at the chosen scale and write CSV/LaTeX tables.

    python3 scripts/run_all.py --scale desk --out results --n-jobs 1
"""
import sys

from spatial_cvm.cli import main

if __name__ == "__main__":
    argv = sys.argv[1:]
    sys.exit(main(["all", *argv]))
