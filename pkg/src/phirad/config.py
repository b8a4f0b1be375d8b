"""TOML run configurations.

Layout::

    [problem]            N, a1, a2, optional M1, M2
    [problem.model1]     family, p, q, phi, t_lo, t_hi   (same for model2)
    [problem.eq1]        sigma, p                        (same for eq2)
    [problem.eq1.f]      kind = "power": beta, alpha
                         kind = "custom": expr, h, fbar
                         (h, fbar oriented by the equation's own unknown:
                          eq1: f(t, t s) <= h(t, t) fbar(s),
                          eq2: f(t s, t) <= h(t, t) fbar(s))
    [params]             named constants usable in every expression
    [numerics]           R, n, grading, tol, max_iter, overflow
    [probe]              R0, K, eps_c, delta_d, eps_d, n, grading, z_cap, arg_points
    [sampling]           S, T, points
    [modes]              theta = "o4" | "o3", punder = "notation" | "proof"
    [output]             solution, functionals, report, sweep (file names)
    [sweep]              key = "dotted.path", values = [...]

Unknown keys are errors.
"""
from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .models import PhiModel
from .problem import (Coefficient, Nonlinearity, Numerics, ProbeSettings,
                      ProblemSpec, Sampling)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class OutputSettings:
    solution: str = "solution.csv"
    functionals: str = "functionals.csv"
    report: str = "report.json"
    sweep: str = "sweep.csv"


@dataclass(frozen=True)
class SweepSettings:
    key: str = ""
    values: tuple = ()


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    output: OutputSettings = OutputSettings()
    sweep: SweepSettings = SweepSettings()
    raw: dict = field(default_factory=dict, compare=False, repr=False)


_TOP = {"problem", "params", "numerics", "probe", "sampling", "modes", "output", "sweep"}
_PROBLEM = {"N", "a1", "a2", "M1", "M2", "model1", "model2", "eq1", "eq2"}
_MODEL = {"family", "p", "q", "phi", "t_lo", "t_hi"}
_EQ = {"sigma", "p", "f"}
_F = {"kind", "beta", "alpha", "expr", "h", "fbar"}
_MODES = {"theta", "punder"}


def _keys(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"[{where}] must be a table")
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(extra))}")


def _dataclass_from(cls, d, where):
    names = {f.name for f in fields(cls) if f.init}
    _keys(d, names, where)
    try:
        return cls(**d)
    except TypeError as err:
        raise ConfigError(f"[{where}]: {err}") from None


def _model(d, where, theta):
    _keys(d, _MODEL, where)
    if "family" not in d:
        raise ConfigError(f"[{where}] needs a family")
    kw = {k: d[k] for k in ("p", "q", "t_lo", "t_hi") if k in d}
    return PhiModel(d["family"], phi_text=d.get("phi"), theta_source=theta,
                    **{k: float(v) for k, v in kw.items()})


def _nonlinearity(d, where, consts, own):
    if isinstance(d, str):
        return Nonlinearity("custom", text=d, constants=consts, own=own)
    _keys(d, _F, where)
    kind = d.get("kind", "power")
    if kind == "power":
        return Nonlinearity("power", beta=float(d.get("beta", 0.0)),
                            alpha=float(d.get("alpha", 0.0)), own=own)
    return Nonlinearity(kind, text=d.get("expr"), h_text=d.get("h"),
                        fbar_text=d.get("fbar"), constants=consts, own=own)


def build_config(raw: dict, theta: str | None = None, punder: str | None = None) -> RunConfig:
    """Turn a parsed TOML document into a RunConfig (raises ConfigError / model errors)."""
    _keys(raw, _TOP, "top level")
    params = raw.get("params", {})
    _keys(params, params.keys(), "params")
    for k, v in params.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"params.{k} must be a number")
    consts = tuple(sorted((k, float(v)) for k, v in params.items()))
    modes = raw.get("modes", {})
    _keys(modes, _MODES, "modes")
    theta = theta or modes.get("theta", "o4")
    punder = punder or modes.get("punder", "notation")

    prob = raw.get("problem")
    if prob is None:
        raise ConfigError("missing [problem] table")
    _keys(prob, _PROBLEM, "problem")
    for req in ("N", "a1", "a2", "model1", "model2", "eq1", "eq2"):
        if req not in prob:
            raise ConfigError(f"[problem] needs {req}")
    eqs = []
    for i in (1, 2):
        eq = prob[f"eq{i}"]
        _keys(eq, _EQ, f"problem.eq{i}")
        if "f" not in eq or "p" not in eq:
            raise ConfigError(f"[problem.eq{i}] needs p and f")
        eqs.append((Coefficient(str(eq.get("sigma", "0")), consts),
                    Coefficient(str(eq["p"]), consts),
                    _nonlinearity(eq["f"], f"problem.eq{i}.f", consts, i)))
    spec = ProblemSpec(
        N=prob["N"],
        model1=_model(prob["model1"], "problem.model1", theta),
        model2=_model(prob["model2"], "problem.model2", theta),
        sigma1=eqs[0][0], sigma2=eqs[1][0], p1=eqs[0][1], p2=eqs[1][1],
        f1=eqs[0][2], f2=eqs[1][2],
        a1=float(prob["a1"]), a2=float(prob["a2"]),
        M1=prob.get("M1"), M2=prob.get("M2"),
        numerics=_dataclass_from(Numerics, raw.get("numerics", {}), "numerics"),
        probe=_dataclass_from(ProbeSettings, raw.get("probe", {}), "probe"),
        sampling=_dataclass_from(Sampling, raw.get("sampling", {}), "sampling"),
        punder_variant=punder,
    )
    output = _dataclass_from(OutputSettings, raw.get("output", {}), "output")
    sw = raw.get("sweep", {})
    _keys(sw, {"key", "values"}, "sweep")
    sweep = SweepSettings(sw.get("key", ""), tuple(sw.get("values", ())))
    return RunConfig(spec, output, sweep, raw)


def read_raw(path) -> dict:
    with open(Path(path), "rb") as fh:
        return tomllib.load(fh)


def load_config(path, theta=None, punder=None) -> RunConfig:
    return build_config(read_raw(path), theta, punder)


def with_value(raw: dict, key: str, value) -> dict:
    """Copy of ``raw`` with the dotted ``key`` set to ``value``."""
    out = copy.deepcopy(raw)
    parts = key.split(".")
    node = out
    for p in parts[:-1]:
        node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"sweep key {key!r} does not name a table entry")
    node[parts[-1]] = value
    out.pop("sweep", None)
    return out
