"""Growth models Phi, phi, psi = Phi' for the phi-Laplacian.

Families E1..E5 carry closed forms; ``custom`` models take an expression
for phi(t).  ``psi_inverse`` is vectorized (closed form for E5, bracketed
bisection otherwise) because the solver calls it once per node per sweep.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import quad

from . import expr as ex

FAMILIES = ("E1", "E2", "E3", "E4", "E5", "custom")
THETA_SOURCES = ("o4", "o3")

_BISECT_STEPS = 60


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class GrowthConstants:
    l: float
    m: float
    a0: float
    a1: float
    exact: bool = False


@dataclass(frozen=True)
class PhiModel:
    """A growth model with cached O3/O4 constants.

    ``theta_source`` picks the exponents of the comparison functions:
    ``"o4"`` uses (a0, a1), ``"o3"`` uses (l, m).
    """

    family: str
    p: float = 2.0
    q: float = 0.0
    phi_text: Optional[str] = None
    theta_source: str = "o4"
    t_lo: float = 1e-6
    t_hi: float = 1e6
    constants: GrowthConstants = field(init=False, repr=False, compare=False)
    _phi_expr: Optional[ex.Expr] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ModelError(f"unknown family {self.family!r}")
        if self.theta_source not in THETA_SOURCES:
            raise ModelError(f"theta source must be one of {THETA_SOURCES}")
        _check_range(self.family, self.p, self.q)
        phi_expr = None
        if self.family == "custom":
            if not self.phi_text:
                raise ModelError("custom model needs a phi expression over t")
            phi_expr = ex.parse(self.phi_text, {"t"})
        object.__setattr__(self, "_phi_expr", phi_expr)
        if self.family == "custom":
            _check_custom(self)
        object.__setattr__(self, "constants", _model_constants(self))
        c = self.constants
        if not (1.0 < c.l <= c.m):
            raise ModelError(f"O3 violated: need 1 < l <= m, got l={c.l:.6g}, m={c.m:.6g}")
        if not (0.0 < c.a0 <= c.a1):
            raise ModelError(f"O4 violated: need 0 < a0 <= a1, got a0={c.a0:.6g}, a1={c.a1:.6g}")

    # -- basic functions ------------------------------------------------------

    def phi(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise ModelError("phi is defined for t > 0 only")
        p, q = self.p, self.q
        f = self.family
        if f == "E1":
            out = 2 * p * (1 + t * t) ** (p - 1)
        elif f == "E2":
            lg = np.log1p(t)
            out = lg ** (q - 1) / (t + 1) * ((p * t ** (p - 1) + p * t ** (p - 2)) * lg + q * t ** (p - 1))
        elif f == "E3":
            out = t ** (-p) * np.arcsinh(t) ** q
        elif f == "E4":
            out = t ** (p - 2) + t ** (q - 2)
        elif f == "E5":
            out = t ** (p - 2)
        else:
            out = np.broadcast_to(ex.evaluate(self._phi_expr, t=t), t.shape)
        return _scalar(out)

    def psi(self, t):
        """psi(t) = t phi(t) = Phi'(t), extended by psi(0) = 0."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ModelError("psi is defined for t >= 0 only")
        p, q = self.p, self.q
        f = self.family
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if f == "E1":
                out = 2 * p * t * (1 + t * t) ** (p - 1)
            elif f == "E2":
                lg = np.log1p(t)
                out = p * t ** (p - 1) * lg ** q + q * t ** p * lg ** (q - 1) / (1 + t)
            elif f == "E3":
                out = t ** (1 - p) * np.arcsinh(t) ** q
            elif f == "E4":
                out = t ** (p - 1) + t ** (q - 1)
            elif f == "E5":
                out = t ** (p - 1)
            else:
                pos = np.where(t > 0, t, 1.0)
                out = t * np.broadcast_to(ex.evaluate(self._phi_expr, t=pos), t.shape)
        out = np.where(t == 0, 0.0, out)
        out = np.where(np.isinf(t), np.inf, out)
        return _scalar(out)

    def Phi(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ModelError("Phi is defined for t >= 0 only")
        p, q = self.p, self.q
        f = self.family
        if f == "E1":
            out = np.expm1(p * np.log1p(t * t))
        elif f == "E2":
            out = t ** p * np.log1p(t) ** q
        elif f == "E4":
            out = t ** p / p + t ** q / q
        elif f == "E5":
            out = t ** p / p
        else:
            out = np.vectorize(self._Phi_quad, otypes=[float])(t)
        return _scalar(out)

    def _Phi_quad(self, t: float) -> float:
        if t == 0.0:
            return 0.0
        # Phi(t) = t * int_0^1 psi(t x) dx keeps the relative accuracy at small t
        val, _ = quad(lambda x: float(self.psi(t * x)), 0.0, 1.0,
                      epsabs=1e-12 / t, epsrel=1e-12, limit=200)
        return t * val

    def psi_inverse(self, s):
        """Solve psi(t) = s for t >= 0 (vectorized)."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ModelError("psi_inverse needs s >= 0")
        if self.family == "E5":
            with np.errstate(over="ignore"):
                return _scalar(s ** (1.0 / (self.p - 1.0)))
        return _scalar(_bisect_inverse(self.psi, s))

    # -- comparison functions -------------------------------------------------

    @property
    def theta_exponents(self) -> tuple[float, float]:
        c = self.constants
        if self.theta_source == "o4":
            return c.a0, c.a1
        return c.l, c.m

    def theta_lower(self, t):
        t = _positive(t)
        e_lo, e_hi = self.theta_exponents
        with np.errstate(over="ignore"):
            return _scalar(np.minimum(t ** (1 / e_hi), t ** (1 / e_lo)))

    def theta_upper(self, t):
        t = _positive(t)
        e_lo, e_hi = self.theta_exponents
        with np.errstate(over="ignore"):
            return _scalar(np.maximum(t ** (1 / e_hi), t ** (1 / e_lo)))


def _positive(t):
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ModelError("comparison functions need t > 0")
    return t


def _scalar(a):
    a = np.asarray(a, dtype=float)
    return float(a) if a.ndim == 0 else a


def _check_range(family, p, q):
    ok = {
        "E1": p > 0.5,
        "E2": p > 1 and q > 0,
        "E3": 0 <= p <= 1 and q > 0,
        "E4": 1 < p < q,
        "E5": p > 1,
        "custom": True,
    }[family]
    if not ok:
        raise ModelError(f"parameters p={p}, q={q} outside the range of family {family}")


def _check_custom(model: PhiModel):
    t = np.geomspace(model.t_lo, model.t_hi, 256)
    try:
        phi = model.phi(t)
    except ex.EvalError as err:
        raise ModelError(f"phi expression failed: {err}") from err
    if np.any(~np.isfinite(phi)) or np.any(phi <= 0):
        raise ModelError("phi must be positive and finite on (0, inf) (O1)")
    if np.any(np.diff(model.psi(t)) <= 0):
        raise ModelError("t*phi(t) must be strictly increasing (O2)")


def _bisect_inverse(psi, s):
    """Invert an increasing psi with psi(0)=0 by bracketing then bisection."""
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    out = np.zeros_like(flat)
    todo = (flat > 0) & np.isfinite(flat)
    out[np.isinf(flat)] = np.inf
    if not np.any(todo):
        return out.reshape(s.shape)
    target = flat[todo]
    lo = np.ones_like(target)
    # bracket [lo, 2 lo] with psi(lo) <= s <= psi(2 lo)
    for _ in range(2100):
        with np.errstate(over="ignore"):
            too_big = psi(lo) > target
            too_small = psi(2 * lo) < target
        if not (np.any(too_big) or np.any(too_small)):
            break
        lo = np.where(too_big, lo / 2, np.where(too_small, lo * 2, lo))
    else:
        raise ModelError("psi_inverse: could not bracket the root (model violates O2?)")
    with np.errstate(over="ignore"):
        hi = 2 * lo
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        below = psi(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out[todo] = 0.5 * (lo + hi)
    return out.reshape(s.shape)


# -------------------------------------------------------- growth constants

def growth_constants(model: PhiModel, t_lo: float = 1e-6, t_hi: float = 1e6,
                     samples: int = 256, margin: float = 0.01) -> GrowthConstants:
    """Sampled O3/O4 bounds over [t_lo, t_hi], widened by ``margin``.

    Phi'' is taken as a central difference of psi with step t*1e-6.
    """
    if not 0 < t_lo < t_hi:
        raise ModelError("need 0 < t_lo < t_hi")
    if samples < 64:
        raise ModelError("need at least 64 samples")
    t = np.geomspace(t_lo, t_hi, samples)
    Phi = np.asarray(model.Phi(t))
    psi = np.asarray(model.psi(t))
    if np.any(Phi <= 0):
        raise ModelError("Phi vanishes at a positive t; invalid model")
    h = t * 1e-6
    dpsi = (np.asarray(model.psi(t + h)) - np.asarray(model.psi(t - h))) / (2 * h)
    r_o3 = t * psi / Phi
    r_o4 = t * dpsi / psi
    raw = GrowthConstants(r_o3.min(), r_o3.max(), r_o4.min(), r_o4.max())
    return _widen(raw, margin)


def _model_constants(model: PhiModel) -> GrowthConstants:
    p, q = model.p, model.q
    # inf/sup over (0, inf) are known in closed form for these families
    if model.family == "E5":
        return GrowthConstants(p, p, p - 1, p - 1, exact=True)
    if model.family == "E4":
        return GrowthConstants(p, q, p - 1, q - 1, exact=True)
    if model.family == "E1":
        return GrowthConstants(min(2, 2 * p), max(2, 2 * p),
                               min(1, 2 * p - 1), max(1, 2 * p - 1), exact=True)
    raw = growth_constants(model, model.t_lo, model.t_hi, margin=0.0)
    if not raw.l > 1.0:
        raise ModelError(f"O3 violated on the sample window: l={raw.l:.6g} <= 1")
    return _widen(raw, 0.01)


def _widen(c: GrowthConstants, margin: float) -> GrowthConstants:
    return GrowthConstants(float(c.l * (1 - margin)), float(c.m * (1 + margin)),
                           float(c.a0 * (1 - margin)), float(c.a1 * (1 + margin)))
