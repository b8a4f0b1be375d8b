"""Monotone successive approximation for the radial integral equations.

Each sweep maps (u, v) to

    u_new(r) = a1 + int_0^r psi1^-1( xi1^-1 int_0^t xi1 p1 f1(u, v) ) dt

and symmetrically for v, starting from the constants (a1, a2).  Values
past the overflow guard become inf and propagate forward through the
prefix sums, which marks blow-up inside [0, R].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .functionals import FunctionalTable
from .problem import ProblemSpec
from .quadrature import RadialAverage, RadialGrid, cumulative_integral

BOUND_IDS = ("zc2", "int", "int2", "ints1", "ints2")

log = logging.getLogger(__name__)


@dataclass
class SolutionPair:
    grid: RadialGrid
    u: np.ndarray
    v: np.ndarray
    du: np.ndarray
    dv: np.ndarray
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes


@dataclass
class Diagnostics:
    converged: bool
    iterations: int
    final_difference: float
    history: list
    blowup_node: Optional[int] = None
    blowup_radius: Optional[float] = None
    monotone: bool = True
    worst_monotone_drop: float = 0.0

    @property
    def blew_up(self) -> bool:
        return self.blowup_node is not None

    def as_dict(self):
        return {
            "converged": self.converged, "iterations": self.iterations,
            "final_difference": self.final_difference,
            "blowup_node": self.blowup_node, "blowup_radius": self.blowup_radius,
            "monotone": self.monotone, "worst_monotone_drop": self.worst_monotone_drop,
        }


class _Sweeper:
    """Caches the grid-dependent weights so one sweep is O(n)."""

    def __init__(self, spec: ProblemSpec, grid: RadialGrid):
        self.spec = spec
        self.grid = grid
        self.avg = (RadialAverage(spec, 1, grid), RadialAverage(spec, 2, grid))
        self.p = (spec.p1(grid.nodes), spec.p2(grid.nodes))

    def component(self, i, u, v):
        spec = self.spec
        with np.errstate(over="ignore", invalid="ignore"):
            fv = spec.f(i)(u, v)
            g = np.where(self.p[i - 1] > 0, self.p[i - 1] * fv, 0.0)
            J = self.avg[i - 1](g)
        J = np.where(np.isnan(J), np.inf, J)
        d = np.asarray(spec.model(i).psi_inverse(J), dtype=float)
        with np.errstate(invalid="ignore", over="ignore"):
            w = spec.a(i) + cumulative_integral(d, self.grid)
        w = np.where(np.isnan(w) | (w > spec.numerics.overflow), np.inf, w)
        # once infinite, stay infinite
        w = np.where(np.maximum.accumulate(np.isinf(w)), np.inf, w)
        return w, d

    def __call__(self, u, v):
        u1, du = self.component(1, u, v)
        v1, dv = self.component(2, u, v)
        return u1, v1, du, dv


def _initial(spec, grid):
    n = len(grid)
    z = np.zeros(n)
    return SolutionPair(grid, np.full(n, spec.a1), np.full(n, spec.a2), z, z.copy())


def iterate_once(spec: ProblemSpec, grid: RadialGrid, prev: Optional[SolutionPair] = None,
                 _sweeper: Optional[_Sweeper] = None) -> SolutionPair:
    prev = prev or _initial(spec, grid)
    sw = _sweeper or _Sweeper(spec, grid)
    u, v, du, dv = sw(prev.u, prev.v)
    return SolutionPair(grid, u, v, du, dv, prev.iterations + 1, list(prev.history))


def _sup_diff(a, b):
    """Sup of |a - b| over nodes where both are finite."""
    both = np.isfinite(a) & np.isfinite(b)
    return float(np.max(np.abs(a[both] - b[both]))) if np.any(both) else 0.0


def _onset(sol):
    blow = np.isinf(sol.u) | np.isinf(sol.v)
    return int(np.argmax(blow)) if np.any(blow) else None


def solve(spec: ProblemSpec, grid: Optional[RadialGrid] = None):
    """Iterate to a Cauchy-converged pair; returns (SolutionPair, Diagnostics).

    Once some node overflows, sweeping continues so the overflow onset can
    move inward (iterates only grow); it stops when the onset node and the
    finite part have both settled, or at the iteration cap.
    """
    num = spec.numerics
    grid = grid or RadialGrid(num.R, num.n, num.grading)
    sw = _Sweeper(spec, grid)
    cur = _initial(spec, grid)
    history = []
    monotone, worst = True, 0.0
    settled = False
    for k in range(1, num.max_iter + 1):
        nxt = iterate_once(spec, grid, cur, sw)
        for new, old in ((nxt.u, cur.u), (nxt.v, cur.v)):
            fin = np.isfinite(old)
            with np.errstate(invalid="ignore"):
                drop = np.where(fin, old - new, 0.0)
            slack = 1e-12 * (1 + np.abs(np.where(fin, old, 0.0)))
            over = drop - slack
            if np.any(over > 0):
                monotone = False
                worst = max(worst, float(np.max(over)))
        diff = _sup_diff(nxt.u, cur.u) + _sup_diff(nxt.v, cur.v)
        history.append(diff)
        prev_onset, cur = _onset(cur), nxt
        log.debug("sweep %d: difference %.3e, overflow onset %s", k, diff, _onset(cur))
        top = cur.u[np.isfinite(cur.u)]
        small = diff < num.tol * (1 + (float(np.max(top)) if top.size else 0.0))
        if small and _onset(cur) == prev_onset:
            settled = True
            break
    cur.history = history
    cur.iterations = len(history)
    node = _onset(cur)
    diag = Diagnostics(
        converged=settled and node is None, iterations=len(history),
        final_difference=history[-1] if history else 0.0, history=history,
        blowup_node=node, blowup_radius=None if node is None else float(grid.nodes[node]),
        monotone=monotone, worst_monotone_drop=worst,
    )
    return cur, diag


def residual(spec: ProblemSpec, sol: SolutionPair) -> tuple[float, float]:
    """Sup-node change of each component under one more sweep."""
    nxt = iterate_once(spec, sol.grid, sol)
    return _sup_diff(nxt.u, sol.u), _sup_diff(nxt.v, sol.v)


def refined_residual(spec: ProblemSpec, sol: SolutionPair, factor: int = 2) -> float:
    """Residual of the solution interpolated onto a ``factor``-times finer grid.

    Unlike :func:`residual` this measures the discretization error, so it
    decreases as the grid is refined.
    """
    if not (np.all(np.isfinite(sol.u)) and np.all(np.isfinite(sol.v))):
        return float("inf")
    fine = sol.grid.refined(factor)
    r = sol.r
    u = PchipInterpolator(r, sol.u)(fine.nodes)
    v = PchipInterpolator(r, sol.v)(fine.nodes)
    n = len(fine)
    z = np.zeros(n)
    lifted = SolutionPair(fine, u, v, z, z)
    ru, rv = residual(spec, lifted)
    return max(ru, rv)


# ------------------------------------------------------------- a-priori bounds

@dataclass
class BoundRecord:
    bound: str
    status: str            # 'pass' | 'fail' | 'n/a' | 'lower-bound-only'
    max_violation: float = 0.0
    worst_node: Optional[int] = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status in ("pass", "n/a", "lower-bound-only")


@dataclass
class BoundReport:
    records: list

    def __getitem__(self, bound: str) -> BoundRecord:
        for rec in self.records:
            if rec.bound == bound:
                return rec
        raise KeyError(bound)

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.records)

    def as_dict(self):
        return [dict(bound=r.bound, status=r.status, max_violation=r.max_violation,
                     worst_node=r.worst_node, detail=r.detail) for r in self.records]


def _check(bound, lhs, rhs, rtol, soft=None):
    """Node-wise lhs <= rhs.

    ``soft`` marks nodes where ``rhs`` is only a lower estimate of the true
    right-hand side (a saturated inverse); lhs <= rhs still confirms the
    bound there, but a violation is inconclusive rather than a failure.
    """
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    with np.errstate(invalid="ignore"):
        viol = lhs - rhs - rtol * np.maximum(np.abs(lhs), np.abs(rhs))
    # inf on the right is a vacuous bound; inf on the left only against a finite right
    viol = np.where(np.isinf(rhs) & (rhs > 0), -np.inf, viol)
    viol = np.where(np.isnan(viol), np.inf, viol)
    soft = np.zeros(viol.shape, bool) if soft is None else np.asarray(soft, bool)
    hard = np.where(soft, -np.inf, viol)
    k = int(np.argmax(hard))
    if hard[k] > 0:
        raw = float(lhs[k] - rhs[k]) if np.isfinite(lhs[k] - rhs[k]) else float("inf")
        return BoundRecord(bound, "fail", raw, k, f"lhs={lhs[k]:.12g} rhs={rhs[k]:.12g}")
    open_nodes = soft & (viol > 0)
    if np.any(open_nodes):
        j = int(np.argmax(open_nodes))
        return BoundRecord(bound, "lower-bound-only", 0.0, None,
                           f"envelope saturated; unconfirmed from node {j}")
    return BoundRecord(bound, "pass", 0.0, None)


def verify_bounds(spec: ProblemSpec, sol: SolutionPair, tables: FunctionalTable,
                  c2_ok: bool = True, rtol: float = 1e-6) -> BoundReport:
    """Check the comparison inequalities node by node.

    zc2   u + v <= Z^-1(P1 + P2)
    int   u <= H1^-1(Pbar1)
    int2  v <= H2^-1(Pbar2)
    ints1 a1 + Punder1 <= u
    ints2 a2 + Punder2 <= v

    Where an envelope saturates, the tabulated value under-estimates it,
    so those nodes can confirm the bound but not refute it.
    """
    records = []
    zinv, sat = tables.Z.inverse(tables.P[0] + tables.P[1])
    records.append(_check("zc2", sol.u + sol.v, zinv, rtol, soft=sat))
    for bound, i, w in (("int", 1, sol.u), ("int2", 2, sol.v)):
        if not c2_ok or tables.H is None or tables.Pbar[i - 1] is None:
            records.append(BoundRecord(bound, "n/a", detail="(C2) not satisfied"))
            continue
        hinv, hsat = tables.H[i - 1].inverse(tables.Pbar[i - 1])
        records.append(_check(bound, w, hinv, rtol, soft=hsat | tables.pbar_saturated[i - 1]))
    records.append(_check("ints1", spec.a1 + tables.Punder[0], sol.u, rtol))
    records.append(_check("ints2", spec.a2 + tables.Punder[1], sol.v, rtol))
    return BoundReport(records)
