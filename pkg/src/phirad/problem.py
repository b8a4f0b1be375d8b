"""Problem instances and the sampled checks of (P1), (C1), (C2)."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import expr as ex
from .models import PhiModel

PUNDER_VARIANTS = ("notation", "proof")


class ProblemError(ValueError):
    pass


@dataclass(frozen=True)
class Coefficient:
    """A radial coefficient r -> value given by an expression over r."""

    text: str
    constants: tuple = ()
    tree: ex.Expr = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "tree", ex.parse(self.text, {"r"}, dict(self.constants)))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return np.broadcast_to(ex.evaluate(self.tree, r=r), r.shape).astype(float)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.tree, ex.Num) and self.tree.value == 0.0


@dataclass(frozen=True)
class Nonlinearity:
    """f(u, v) together with its (C2) pieces h(t1, t2) and fbar(s).

    The decomposition is oriented by the equation's own unknown ``own``
    (1 for u, 2 for v): with x the own argument and y the other one,
    f(x = t, y = t s) <= h(t, t) fbar(s).  For the second equation this
    means f(t s, t) <= h(t, t) fbar(s).

    ``kind="power"`` is f = u^beta v^alpha with the exact decomposition
    h(t1, t2) = t1^e_own t2^e_other, fbar(s) = s^e_other.  ``kind="custom"``
    takes expression strings; h and fbar are optional there, and without
    them the H-based bounds are unavailable.
    """

    kind: str = "power"
    beta: float = 0.0
    alpha: float = 0.0
    text: Optional[str] = None
    h_text: Optional[str] = None
    fbar_text: Optional[str] = None
    constants: tuple = ()
    own: int = 1
    _f: Optional[ex.Expr] = field(init=False, repr=False, compare=False)
    _h: Optional[ex.Expr] = field(init=False, repr=False, compare=False)
    _fbar: Optional[ex.Expr] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        consts = dict(self.constants)
        if self.own not in (1, 2):
            raise ProblemError("own must be 1 (u) or 2 (v)")
        if self.kind == "power":
            if self.alpha < 0 or self.beta < 0:
                raise ProblemError("power exponents must be >= 0")
            if self.alpha ** 2 + self.beta ** 2 == 0:
                raise ProblemError("power product needs alpha^2 + beta^2 != 0")
            if self.own == 1:
                h, fbar = auto_decompose(self.beta, self.alpha)
            else:
                h, fbar = auto_decompose(self.alpha, self.beta)
            object.__setattr__(self, "_f", None)
        elif self.kind == "custom":
            if not self.text:
                raise ProblemError("custom nonlinearity needs an expression over u, v")
            object.__setattr__(self, "_f", ex.parse(self.text, {"u", "v"}, consts))
            h = ex.parse(self.h_text, {"t1", "t2"}, consts) if self.h_text else None
            fbar = ex.parse(self.fbar_text, {"s"}, consts) if self.fbar_text else None
            if (h is None) != (fbar is None):
                raise ProblemError("give both h and fbar, or neither")
        else:
            raise ProblemError(f"unknown nonlinearity kind {self.kind!r}")
        object.__setattr__(self, "_h", h)
        object.__setattr__(self, "_fbar", fbar)

    def oriented(self, x, y):
        """f with its own unknown at ``x`` and the other one at ``y``."""
        return self(x, y) if self.own == 1 else self(y, x)

    def __call__(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self._f is None:
            with np.errstate(over="ignore", invalid="ignore"):
                out = u ** self.beta * v ** self.alpha
        else:
            out = ex.evaluate(self._f, u=u, v=v)
        return np.broadcast_to(out, np.broadcast(u, v).shape).astype(float)

    @property
    def has_decomposition(self) -> bool:
        return self._h is not None

    def h(self, t1, t2):
        if self._h is None:
            raise ProblemError("no (C2) decomposition available")
        t1, t2 = np.broadcast_arrays(np.asarray(t1, float), np.asarray(t2, float))
        return np.broadcast_to(ex.evaluate(self._h, t1=t1, t2=t2), t1.shape).astype(float)

    def fbar(self, s):
        if self._fbar is None:
            raise ProblemError("no (C2) decomposition available")
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(ex.evaluate(self._fbar, s=s), s.shape).astype(float)


def auto_decompose(beta: float, alpha: float) -> tuple[ex.Expr, ex.Expr]:
    """(h, fbar) with f(t1, t2 s) = h(t1, t2) fbar(s) for f(x, y) = x^beta y^alpha."""
    h = ex.BinOp("*", ex.BinOp("^", ex.Var("t1"), ex.Num(float(beta))),
                 ex.BinOp("^", ex.Var("t2"), ex.Num(float(alpha))))
    fbar = ex.BinOp("^", ex.Var("s"), ex.Num(float(alpha)))
    return h, fbar


@dataclass(frozen=True)
class Numerics:
    R: float = 10.0
    n: int = 4000
    grading: float = 1.0
    tol: float = 1e-10
    max_iter: int = 200
    overflow: float = 1e300


@dataclass(frozen=True)
class ProbeSettings:
    """Controls of the limit probes; ``R0=None`` means the problem radius."""

    R0: Optional[float] = None
    K: int = 10
    eps_c: float = 1e-3
    delta_d: float = 1.5
    eps_d: float = 0.05
    n: int = 20000
    grading: float = 2.0
    z_cap: float = 1e8
    arg_points: int = 4000


@dataclass(frozen=True)
class Sampling:
    S: float = 1e3
    T: float = 1e3
    points: int = 32


@dataclass(frozen=True)
class ProblemSpec:
    N: int
    model1: PhiModel
    model2: PhiModel
    sigma1: Coefficient
    sigma2: Coefficient
    p1: Coefficient
    p2: Coefficient
    f1: Nonlinearity
    f2: Nonlinearity
    a1: float
    a2: float
    M1: Optional[float] = None
    M2: Optional[float] = None
    numerics: Numerics = Numerics()
    probe: ProbeSettings = ProbeSettings()
    sampling: Sampling = Sampling()
    punder_variant: str = "notation"

    def __post_init__(self):
        # each nonlinearity is oriented by the unknown of its own equation
        if self.f1.own != 1:
            object.__setattr__(self, "f1", replace(self.f1, own=1))
        if self.f2.own != 2:
            object.__setattr__(self, "f2", replace(self.f2, own=2))
        if int(self.N) != self.N or self.N < 3:
            raise ProblemError("dimension N must be an integer >= 3")
        if not (self.a1 > 0 and self.a2 > 0):
            raise ProblemError("initial values a1, a2 must be positive")
        for name, a in (("M1", self.a1), ("M2", self.a2)):
            lower = max(1.0, 1.0 / a)
            M = getattr(self, name)
            if M is None:
                object.__setattr__(self, name, lower)
            elif M < lower:
                raise ProblemError(f"{name} must be >= max(1, 1/a) = {lower:.6g}")
        if self.punder_variant not in PUNDER_VARIANTS:
            raise ProblemError(f"punder variant must be one of {PUNDER_VARIANTS}")

    def model(self, i: int) -> PhiModel:
        return (self.model1, self.model2)[i - 1]

    def sigma(self, i: int) -> Coefficient:
        return (self.sigma1, self.sigma2)[i - 1]

    def p(self, i: int) -> Coefficient:
        return (self.p1, self.p2)[i - 1]

    def f(self, i: int) -> Nonlinearity:
        return (self.f1, self.f2)[i - 1]

    def a(self, i: int) -> float:
        return (self.a1, self.a2)[i - 1]

    def M(self, i: int) -> float:
        return (self.M1, self.M2)[i - 1]


# ------------------------------------------------------------- validation

@dataclass
class ConditionCheck:
    name: str
    passed: bool
    detail: str = ""
    witness: Optional[dict] = None


@dataclass
class ValidationReport:
    checks: list

    @property
    def solvable(self) -> bool:
        """(P1) and (C1) hold; the solver may run."""
        return all(c.passed for c in self.checks if c.name.startswith(("P1", "C1")))

    @property
    def c2_ok(self) -> bool:
        return all(c.passed for c in self.checks if c.name.startswith("C2"))

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def as_dict(self):
        return {
            "solvable": self.solvable, "c2_ok": self.c2_ok,
            "checks": [dict(name=c.name, passed=c.passed, detail=c.detail, witness=c.witness)
                       for c in self.checks],
        }


def _radius_samples(spec: ProblemSpec) -> np.ndarray:
    R = spec.numerics.R
    R0 = spec.probe.R0 or R
    R_max = max(R, R0 * 2.0 ** spec.probe.K)
    r = np.concatenate([np.linspace(0.0, R, 513), np.geomspace(R, R_max, 129)])
    return np.unique(r)


def _check_p1(spec, i, r):
    out = []
    for label, coef in ((f"sigma{i}", spec.sigma(i)), (f"p{i}", spec.p(i))):
        name = f"P1:{label}"
        try:
            vals = coef(r)
        except ex.EvalError as err:
            out.append(ConditionCheck(name, False, f"evaluation failed: {err}"))
            continue
        bad = ~(vals >= 0) | ~np.isfinite(vals)
        if np.any(bad):
            k = int(np.argmax(bad))
            out.append(ConditionCheck(name, False, f"{label} negative or non-finite",
                                      {"r": float(r[k]), "value": float(vals[k])}))
        else:
            out.append(ConditionCheck(name, True))
    return out


def _check_c1(spec, i):
    f = spec.f(i)
    s = np.geomspace(1e-3, spec.sampling.S, spec.sampling.points)
    U, V = np.meshgrid(s, s, indexing="ij")
    try:
        F = f(U, V)
    except ex.EvalError as err:
        return [ConditionCheck(f"C1:f{i}", False, f"evaluation failed: {err}")]
    out = []
    bad = ~(F > 0)
    if np.any(bad):
        k = np.unravel_index(np.argmax(bad), F.shape)
        out.append(ConditionCheck(f"C1:f{i}:positive", False, "f not positive",
                                  {"u": float(U[k]), "v": float(V[k]), "f": float(F[k])}))
    else:
        out.append(ConditionCheck(f"C1:f{i}:positive", True))
    slack = 1e-12 * np.abs(F)
    for axis, var in ((0, "u"), (1, "v")):
        with np.errstate(invalid="ignore"):
            d = np.diff(F, axis=axis)
        sl = slack[1:, :] if axis == 0 else slack[:, 1:]
        bad = d < -sl
        name = f"C1:f{i}:increasing-in-{var}"
        if np.any(bad):
            k = np.unravel_index(np.argmax(bad), d.shape)
            out.append(ConditionCheck(name, False, f"f decreases in {var}",
                                      {"u": float(U[k]), "v": float(V[k])}))
        else:
            out.append(ConditionCheck(name, True))
    return out


def _check_c2(spec, i):
    f = spec.f(i)
    if not f.has_decomposition:
        return [ConditionCheck(f"C2:f{i}", False, "no h/fbar decomposition supplied")]
    Ma = spec.M(i) * spec.a(i)
    M = spec.M(i)
    t = np.geomspace(Ma, max(spec.sampling.T, 10 * Ma), spec.sampling.points)
    s = np.geomspace(1.0, spec.sampling.S, spec.sampling.points)
    T, S = np.meshgrid(t, s, indexing="ij")
    out = []
    # the unscaled form, and the scaled form f(t, M t s) <= h(t, M t) fbar(s)
    # that the upper-bound argument actually uses (own unknown first)
    for name, scale in ((f"C2:f{i}", 1.0), (f"C2:f{i}:scaled", M)):
        try:
            lhs = f.oriented(T, scale * T * S)
            rhs = f.h(T, scale * T) * f.fbar(S)
        except ex.EvalError as err:
            out.append(ConditionCheck(name, False, f"evaluation failed: {err}"))
            continue
        with np.errstate(invalid="ignore"):
            bad = lhs > rhs * (1 + 1e-12)
        if np.any(bad):
            k = np.unravel_index(np.argmax(bad), lhs.shape)
            out.append(ConditionCheck(name, False, "f(t, t s) exceeds h fbar",
                                      {"t": float(T[k]), "s": float(S[k])}))
        else:
            out.append(ConditionCheck(name, True))
    return out


def validate(spec: ProblemSpec) -> ValidationReport:
    """Sampled checks of (P1), (C1) and (C2); never raises on a failed condition."""
    r = _radius_samples(spec)
    checks = []
    for i in (1, 2):
        checks += _check_p1(spec, i, r)
    for i in (1, 2):
        checks += _check_c1(spec, i)
    for i in (1, 2):
        checks += _check_c2(spec, i)
    return ValidationReport(checks)
