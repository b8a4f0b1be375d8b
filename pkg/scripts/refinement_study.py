#!/usr/bin/env python3
"""Grid refinement on the closed-form problem u = v = sinh(r)/r.

Prints the sup error and the observed order for successive doublings of n.
"""
import argparse
from pathlib import Path

import numpy as np

from phirad.config import build_config, read_raw, with_value
from phirad.solver import solve

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "sinh.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(CONFIG))
    ap.add_argument("--n0", type=int, default=500)
    ap.add_argument("--levels", type=int, default=5)
    args = ap.parse_args()

    raw = read_raw(args.config)
    print(f"{'n':>7} {'sup error':>12} {'order':>7} {'sweeps':>7}")
    prev = None
    for k in range(args.levels):
        n = args.n0 * 2 ** k
        spec = build_config(with_value(raw, "numerics.n", n)).spec
        sol, diag = solve(spec)
        r = sol.r
        exact = np.ones_like(r)
        exact[1:] = np.sinh(r[1:]) / r[1:]
        err = float(np.max(np.abs(sol.u - exact)))
        order = "" if prev is None else f"{np.log2(prev / err):.3f}"
        print(f"{n:7d} {err:12.4e} {order:>7} {diag.iterations:7d}")
        prev = err


if __name__ == "__main__":
    main()
