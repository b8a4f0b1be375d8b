"""Criteria functionals Z, H_i, P_i, Pbar_i, Punder_i and their limits at infinity.

Radial functionals are per-node tables built from the same prefix sums as
the solver.  Z and H_i live on log-spaced argument grids and are integrated
in the variable s = ln t, so 1/t-type integrands are captured exactly.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .problem import ProblemSpec
from .quadrature import RadialAverage, RadialGrid, cumulative_integral

RADIAL_NAMES = ("P1", "P2", "Pbar1", "Pbar2", "Punder1", "Punder2")
LIMIT_NAMES = ("H1", "H2", "Punder1", "Punder2", "Pbar1", "Pbar2")

log = logging.getLogger(__name__)


class FunctionalError(ValueError):
    pass


def _safe_product(p, f):
    # p = 0 kills an infinite f instead of producing NaN
    with np.errstate(invalid="ignore", over="ignore"):
        return np.where(p > 0, p * f, 0.0)


# ------------------------------------------------------------ argument tables

def _expm1_ratio(x):
    """expm1(x) / x, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        return np.where(small, 1.0 + 0.5 * x, np.expm1(safe) / safe)


def _log1p_ratio(x):
    """log1p(x) / x, equal to 1 at x = 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - 0.5 * x, np.log1p(np.maximum(safe, -1 + 1e-300)) / safe)


@dataclass
class ArgumentTable:
    """Prefix integral F(t) = int_{t0}^t g on a log-spaced grid t0..cap.

    On each interval g(t) t = G(s), s = ln t, is interpolated as an
    exponential in s (a power law in t), so power-type integrands such as
    1/t, constants or t^-2 are integrated exactly; F and its inverse then
    have closed forms.  Intervals where G vanishes fall back to the
    linear-in-s rule.
    """

    name: str
    t: np.ndarray
    G: np.ndarray          # g(t) * t
    values: np.ndarray
    kappa: np.ndarray = field(repr=False, default=None)   # d ln G / ds per interval

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def cap(self) -> float:
        return float(self.t[-1])

    @property
    def sup(self) -> float:
        return float(self.values[-1])

    def _segment(self, j):
        s_nodes = np.log(self.t)
        return s_nodes, s_nodes[j + 1] - s_nodes[j], self.G[j], self.G[j + 1], self.kappa[j]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.t0 * (1 - 1e-15)) or np.any(x > self.cap * (1 + 1e-15)):
            raise FunctionalError(f"{self.name}: argument outside [{self.t0:g}, {self.cap:g}]")
        s_all = np.log(self.t)
        s = np.clip(np.log(np.clip(x, self.t0, self.cap)), s_all[0], s_all[-1])
        j = np.clip(np.searchsorted(s_all, s, side="right") - 1, 0, len(self.t) - 2)
        _, delta, G0, G1, kap = self._segment(j)
        d = s - s_all[j]
        power = G0 * d * _expm1_ratio(kap * d)
        linear = G0 * d + (G1 - G0) * d * d / (2 * delta)
        out = self.values[j] + np.where(np.isfinite(kap), power, linear)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y):
        """Return (x, saturated) with F(x) = y; y beyond the table saturates at cap."""
        y = np.asarray(y, dtype=float)
        if np.any(y < 0):
            raise FunctionalError(f"{self.name}^-1 needs y >= 0")
        saturated = y > self.values[-1]
        yc = np.minimum(y, self.values[-1])
        s_all = np.log(self.t)
        j = np.clip(np.searchsorted(self.values, yc, side="right") - 1, 0, len(self.t) - 2)
        _, delta, G0, G1, kap = self._segment(j)
        c = yc - self.values[j]
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            ratio = np.where(G0 > 0, c / np.where(G0 > 0, G0, 1.0), np.inf)
            d_pow = ratio * _log1p_ratio(np.where(np.isfinite(kap), kap, 0.0) * ratio)
            disc = np.maximum(G0 * G0 + 2 * (G1 - G0) * c / delta, 0.0)
            d_lin = 2 * c / (G0 + np.sqrt(disc))
        d = np.where(np.isfinite(kap), d_pow, d_lin)
        d = np.where(np.isfinite(d), np.clip(d, 0.0, delta), np.where(c > 0, delta, 0.0))
        x = np.exp(s_all[j] + d)
        x = np.where(j == 0, np.maximum(x, self.t0), x)
        x = np.where(saturated, self.cap, np.minimum(x, self.cap))
        if x.ndim == 0:
            return float(x), bool(saturated)
        return x, saturated


def _snap_kinks(t, thetas):
    """Move the nearest interior node onto each t where a theta argument crosses 1.

    The comparison functions switch exponent there, and a cell straddling
    the switch would be the only one not integrated as a single power law.
    """
    t = t.copy()
    for arg in thetas:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            side = np.sign(np.log(arg(t)))
        for j in np.flatnonzero(side[:-1] * side[1:] < 0):
            def crossing(x):
                with np.errstate(divide="ignore", over="ignore"):
                    return float(np.log(arg(np.exp(x))))
            k = float(np.exp(brentq(crossing, np.log(t[j]), np.log(t[j + 1]), xtol=1e-14)))
            near = j if np.log(k / t[j]) < np.log(t[j + 1] / k) else j + 1
            if 0 < near < len(t) - 1:
                t[near] = k
    return t


def _argument_table(name, integrand, t0, cap, points, thetas=()) -> ArgumentTable:
    if not t0 > 0:
        raise FunctionalError(f"{name}: left endpoint must be positive")
    cap = max(cap, 10 * t0)
    s = np.linspace(np.log(t0), np.log(cap), points)
    t = np.exp(s)
    t[0], t[-1] = t0, cap
    t = _snap_kinks(t, thetas)
    s = np.log(t)
    with np.errstate(divide="ignore", over="ignore"):
        g = integrand(t)
    if np.any(np.isnan(g)) or np.any(g < 0):
        raise FunctionalError(f"{name}: integrand undefined or negative")
    G = g * t
    delta = np.diff(s)
    G0, G1 = G[:-1], G[1:]
    pos = (G0 > 0) & (G1 > 0) & np.isfinite(G0) & np.isfinite(G1)
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = np.where(pos, np.log(np.where(pos, G1 / np.where(pos, G0, 1.0), 1.0)) / delta, np.inf)
    seg = np.where(pos, G0 * delta * _expm1_ratio(np.where(pos, kappa * delta, 0.0)),
                   0.5 * delta * (G0 + G1))
    values = np.concatenate([[0.0], np.cumsum(seg)])
    return ArgumentTable(name, t, G, values, kappa)


def compute_Z(spec: ProblemSpec, cap: Optional[float] = None, points: Optional[int] = None):
    """Z(t) = int_{a1+a2}^t dt / (thetabar1(f1(t,t)) + thetabar2(f2(t,t)))."""
    cap = spec.probe.z_cap if cap is None else cap
    points = spec.probe.arg_points if points is None else points
    m1, m2 = spec.model1, spec.model2

    def g(t):
        return 1.0 / (m1.theta_upper(spec.f1(t, t)) + m2.theta_upper(spec.f2(t, t)))

    kinks = (lambda t: spec.f1(t, t), lambda t: spec.f2(t, t))
    return _argument_table("Z", g, spec.a1 + spec.a2, cap, points, kinks)


def compute_H(spec: ProblemSpec, i: int, cap: Optional[float] = None,
              points: Optional[int] = None):
    """H_i(t) = int_{a_i}^t dt / thetabar_i(h_i(t, M_i t))."""
    cap = spec.probe.z_cap if cap is None else cap
    points = spec.probe.arg_points if points is None else points
    f = spec.f(i)
    if not f.has_decomposition:
        raise FunctionalError(f"H{i} needs the (C2) decomposition of f{i}")
    model, M = spec.model(i), spec.M(i)

    def g(t):
        return 1.0 / model.theta_upper(f.h(t, M * t))

    return _argument_table(f"H{i}", g, spec.a(i), cap, points, (lambda t: f.h(t, M * t),))


def invert_Z(Z: ArgumentTable, y):
    return Z.inverse(y)


def invert_H(H: ArgumentTable, y):
    return H.inverse(y)


# ------------------------------------------------------------ radial tables

def _outer(spec, i, grid, avg, g):
    J = avg(g)
    dP = spec.model(i).psi_inverse(J)
    return cumulative_integral(dP, grid), dP


def compute_P(spec: ProblemSpec, i: int, grid: RadialGrid, avg=None):
    """P_i on the grid; returns (values, derivative samples)."""
    avg = avg or RadialAverage(spec, i, grid)
    return _outer(spec, i, grid, avg, spec.p(i)(grid.nodes))


def compute_Pbar(spec: ProblemSpec, i: int, grid: RadialGrid, P1, P2,
                 Z: ArgumentTable, avg=None):
    """Pbar_i on the grid; returns (values, saturated) where ``saturated``
    marks nodes whose value depends on a saturated Z^-1 (value is a lower bound)."""
    avg = avg or RadialAverage(spec, i, grid)
    zinv, sat = Z.inverse(np.asarray(P1) + np.asarray(P2))
    fbar = spec.f(i).fbar
    g = _safe_product(spec.p(i)(grid.nodes), fbar(1.0 + zinv))
    values, _ = _outer(spec, i, grid, avg, g)
    # saturation only matters if fbar keeps growing past the cap
    if np.any(sat) and not fbar(1.0 + 1e6 * Z.cap) > fbar(1.0 + Z.cap):
        sat = np.zeros_like(sat)
    return values, np.maximum.accumulate(sat)


def punder_factor(spec: ProblemSpec, i: int) -> float:
    """The constant theta_lower(...) multiplying P_other inside Punder_i."""
    if i == 1:
        return spec.model2.theta_lower(float(spec.f2(spec.a1, spec.a2)))
    c = spec.f1 if spec.punder_variant == "notation" else spec.f2
    return spec.model1.theta_lower(float(c(spec.a1, spec.a2)))


def compute_Punder(spec: ProblemSpec, i: int, grid: RadialGrid, P_other, avg=None):
    avg = avg or RadialAverage(spec, i, grid)
    k = punder_factor(spec, i)
    P_other = np.asarray(P_other, dtype=float)
    if i == 1:
        fv = spec.f1(spec.a1, spec.a2 + k * P_other)
    else:
        fv = spec.f2(spec.a1 + k * P_other, spec.a2)
    g = _safe_product(spec.p(i)(grid.nodes), fv)
    values, _ = _outer(spec, i, grid, avg, g)
    return values


@dataclass
class FunctionalTable:
    grid: RadialGrid
    P: tuple
    dP: tuple
    Pbar: tuple
    Punder: tuple
    Z: ArgumentTable
    H: Optional[tuple] = None
    pbar_saturated: tuple = field(default_factory=tuple)

    def column(self, name: str) -> np.ndarray:
        kind, i = name[:-1], int(name[-1]) - 1
        return {"P": self.P, "Pbar": self.Pbar, "Punder": self.Punder}[kind][i]


def build_tables(spec: ProblemSpec, grid: RadialGrid, with_h: bool = True,
                 z_cap: Optional[float] = None) -> FunctionalTable:
    avgs = (RadialAverage(spec, 1, grid), RadialAverage(spec, 2, grid))
    P1, d1 = compute_P(spec, 1, grid, avgs[0])
    P2, d2 = compute_P(spec, 2, grid, avgs[1])
    Z = compute_Z(spec, cap=z_cap)
    Pb1, s1 = compute_Pbar(spec, 1, grid, P1, P2, Z, avgs[0]) if _has_fbar(spec, 1) else (None, None)
    Pb2, s2 = compute_Pbar(spec, 2, grid, P1, P2, Z, avgs[1]) if _has_fbar(spec, 2) else (None, None)
    Pu1 = compute_Punder(spec, 1, grid, P2, avgs[0])
    Pu2 = compute_Punder(spec, 2, grid, P1, avgs[1])
    H = None
    if with_h and _has_fbar(spec, 1) and _has_fbar(spec, 2):
        H = (compute_H(spec, 1, cap=z_cap), compute_H(spec, 2, cap=z_cap))
    return FunctionalTable(grid, (P1, P2), (d1, d2), (Pb1, Pb2), (Pu1, Pu2), Z, H, (s1, s2))


def _has_fbar(spec, i):
    return spec.f(i).has_decomposition


# --------------------------------------------------------------- limit probes

@dataclass
class LimitVerdict:
    kind: str                      # 'diverges' | 'converges' | 'inconclusive'
    value: Optional[float] = None
    err: Optional[float] = None
    evidence: list = field(default_factory=list)
    note: str = ""

    @property
    def diverges(self) -> bool:
        return self.kind == "diverges"

    @property
    def converges(self) -> bool:
        return self.kind == "converges"

    def as_dict(self):
        return {"kind": self.kind, "value": self.value, "err": self.err,
                "evidence": [[float(a), float(b)] for a, b in self.evidence],
                "note": self.note}

    def __str__(self):
        if self.converges:
            return f"Converges({self.value:.6g} +/- {self.err:.2g})"
        return self.kind.capitalize()


def judge_limit(evidence, eps_c: float = 1e-3, delta_d: float = 1.5,
                eps_d: float = 0.05) -> LimitVerdict:
    """Three-way verdict on lim F from samples (R_k, F(R_k)) with R_k doubling."""
    evidence = [(float(a), float(b)) for a, b in evidence]
    v = np.array([b for _, b in evidence])
    if v.size == 0 or np.any(np.isnan(v)):
        return LimitVerdict("inconclusive", evidence=evidence, note="numerical failure")
    if np.any(np.isinf(v)):
        return LimitVerdict("diverges", np.inf, evidence=evidence, note="overflow")
    if np.all(v == 0):
        return LimitVerdict("converges", 0.0, 0.0, evidence)
    if v.size < 3:
        return LimitVerdict("inconclusive", evidence=evidence, note="too few probes")
    inc = np.diff(v)
    if v[-3] > 0 and v[-1] >= delta_d * v[-3]:
        return LimitVerdict("diverges", evidence=evidence,
                            note=f"grew by {v[-1] / v[-3]:.3g} over two doublings")
    if inc[-1] >= inc[-2] * (1 - 1e-9) and inc[-1] > eps_d * v[-1]:
        return LimitVerdict("diverges", evidence=evidence, note="increments not shrinking")
    if inc.size >= 3 and np.all(v[-3:] > 0):
        rel = inc[-3:] / v[-3:]
        if np.all(rel < eps_c) and rel[0] >= rel[1] >= rel[2]:
            q = inc[-1] / inc[-2] if inc[-2] > 0 else 0.0
            err = inc[-1] * q / (1 - q) if q < 1 else inc[-1]
            return LimitVerdict("converges", float(v[-1]), float(err), evidence)
    return LimitVerdict("inconclusive", evidence=evidence, note="no plateau and no clear growth")


def probe_schedule(spec: ProblemSpec) -> np.ndarray:
    R0 = spec.probe.R0 or spec.numerics.R
    return R0 * 2.0 ** np.arange(spec.probe.K + 1)


def probe_limits(spec: ProblemSpec, names=LIMIT_NAMES, c2_ok: bool = True):
    """Verdicts on the limits at infinity of the named functionals.

    Radial functionals are evaluated once on a graded grid out to the last
    probe radius; H_i is probed at arguments a_i 2^(k+1).
    """
    pr = spec.probe
    radii = probe_schedule(spec)
    K = pr.K
    want_h = c2_ok and any(n.startswith("H") for n in names)
    top_arg = max(spec.a1, spec.a2) * 2.0 ** (K + 2)
    cap = max(pr.z_cap, top_arg)
    grid = RadialGrid(float(radii[-1]), pr.n, pr.grading)
    tables = build_tables(spec, grid, with_h=want_h, z_cap=cap)
    out = {}
    for name in names:
        kw = dict(eps_c=pr.eps_c, delta_d=pr.delta_d, eps_d=pr.eps_d)
        if name.startswith("H"):
            i = int(name[-1])
            if tables.H is None:
                out[name] = LimitVerdict("inconclusive", note="(C2) unavailable")
                continue
            args = spec.a(i) * 2.0 ** np.arange(1, K + 2)
            out[name] = judge_limit(zip(args, tables.H[i - 1](args)), **kw)
            continue
        col = tables.column(name)
        if col is None or (name.startswith("Pbar") and not c2_ok):
            out[name] = LimitVerdict("inconclusive", note="(C2) unavailable")
            continue
        verdict = judge_limit(zip(radii, np.interp(radii, grid.nodes, col)), **kw)
        if name.startswith("Pbar"):
            sat = tables.pbar_saturated[int(name[-1]) - 1]
            if sat is not None and sat[-1] and verdict.converges:
                verdict = LimitVerdict("inconclusive", evidence=verdict.evidence,
                                       note="Z^-1 saturated; values are lower bounds only")
        out[name] = verdict
    for name, verdict in out.items():
        log.debug("%s(inf): %s %s", name, verdict, verdict.note)
    return out, tables


def probe_limit(spec: ProblemSpec, name: str, c2_ok: bool = True) -> LimitVerdict:
    verdicts, _ = probe_limits(spec, (name,), c2_ok=c2_ok)
    return verdicts[name]
