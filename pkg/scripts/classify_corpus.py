#!/usr/bin/env python3
"""Classify every config in a directory and print the matched rule.

Configs with a [sweep] table are classified at their base parameters.
"""
import argparse
from pathlib import Path

from phirad.classify import classify
from phirad.config import ConfigError, load_config
from phirad.functionals import probe_limits
from phirad.models import ModelError
from phirad.problem import validate

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory", nargs="?", default=str(CONFIGS))
    args = ap.parse_args()

    for path in sorted(Path(args.directory).glob("*.toml")):
        try:
            spec = load_config(path).spec
        except (ConfigError, ModelError) as exc:
            print(f"{path.stem:16s} config error: {exc}")
            continue
        rep = validate(spec)
        if not rep.solvable:
            print(f"{path.stem:16s} invalid data")
            continue
        verdicts, _ = probe_limits(spec, c2_ok=rep.c2_ok)
        report = classify(verdicts)
        print(f"{path.stem:16s} {report.rule:24s} u={report.u_type:8s} v={report.v_type}")


if __name__ == "__main__":
    main()
