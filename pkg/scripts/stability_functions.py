#!/usr/bin/env python3
"""Stability functions and modified frequencies of all six methods.

Writes one CSV per scheme (mu, half_trace, det, m11, m22, modified_mu) plus
a JSON interval report, mirroring `symparc stability` for the whole family.
The interpolation family stays inside [-1, 1] for every mu; the collocation
family leaves it and the reports list the exact windows.
"""

import argparse

from symparc.cli import main as cli_main


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--mu-max", type=float, default=14.0, dest="mu_max")
    parser.add_argument("--grid", type=int, default=2801)
    parser.add_argument("--prefix", default="")
    args = parser.parse_args()

    for name in ("lgl2", "lgl4", "lgl6", "lglc2", "lglc4", "lglc6"):
        cli_main(["stability", "--scheme", name, "--mu-max", str(args.mu_max),
                  "--grid", str(args.grid), "--out", f"{args.prefix}{name}"])


if __name__ == "__main__":
    main()
