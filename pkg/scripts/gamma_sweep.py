#!/usr/bin/env python3
"""Probe P_1 at infinity for weights (1+r)^-gamma across a range of gamma.

The limit is finite exactly when gamma > 2; the table shows the verdict
flipping and, for convergent cases, the estimated value. Near gamma = 2 the
tail decays too slowly for the probe depth and the verdict is Inconclusive.
"""
import argparse
from pathlib import Path

from phirad.config import build_config, read_raw, with_value
from phirad.functionals import probe_limits

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "gamma_sweep.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gammas", type=float, nargs="+",
                    default=[1.0, 1.5, 1.9, 2.1, 2.5, 3.0, 4.0])
    ap.add_argument("--K", type=int, default=14)
    args = ap.parse_args()

    raw = with_value(read_raw(CONFIG), "probe.K", args.K)
    print(f"{'gamma':>6}  verdict")
    for g in args.gammas:
        spec = build_config(with_value(raw, "params.gamma", g)).spec
        verdict = probe_limits(spec, ("P1",))[0]["P1"]
        print(f"{g:6.2f}  {verdict}")


if __name__ == "__main__":
    main()
