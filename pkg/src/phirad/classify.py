"""Decision table from limit verdicts to predicted solution types."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .functionals import LIMIT_NAMES, FunctionalTable, LimitVerdict

RULES = ("Thm1-large", "Thm2-bounded", "Thm3-case1", "Thm3-case2",
         "Thm4-bounded-sandwich", "Thm5-i", "Thm5-ii")
NO_RULE = "NoRuleMatched"

LARGE, BOUNDED, UNKNOWN = "Large", "Bounded", "Unknown"


class ClassificationError(ValueError):
    pass


@dataclass
class ClassificationReport:
    rule: str
    verdicts: dict
    u_type: str = UNKNOWN
    v_type: str = UNKNOWN
    envelope: dict = field(default_factory=dict)
    blocking: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def matched(self) -> bool:
        return self.rule != NO_RULE

    def as_dict(self):
        return {
            "rule": self.rule, "u_type": self.u_type, "v_type": self.v_type,
            "verdicts": {k: v.as_dict() for k, v in self.verdicts.items()},
            "envelope": self.envelope, "blocking": self.blocking,
            "notes": self.notes, "warnings": self.warnings,
        }


# hypothesis atoms: (description, predicate over the verdict dict)

def _inf(name):
    return (f"{name}=inf", lambda v: v[name].diverges, (name,))


def _fin(name):
    return (f"{name}<inf", lambda v: v[name].converges, (name,))


def _below(i):
    # Pbar_i(inf) < H_i(inf) < inf, with the Pbar error bar included
    def pred(v):
        pb, h = v[f"Pbar{i}"], v[f"H{i}"]
        return pb.converges and h.converges and pb.value + pb.err < h.value
    return (f"Pbar{i}<H{i}<inf", pred, (f"Pbar{i}", f"H{i}"))


_TABLE = (
    ("Thm1-large", LARGE, LARGE, (_inf("H1"), _inf("H2"), _inf("Punder1"), _inf("Punder2"))),
    ("Thm2-bounded", BOUNDED, BOUNDED, (_inf("H1"), _inf("H2"), _fin("Pbar1"), _fin("Pbar2"))),
    ("Thm3-case1", BOUNDED, LARGE, (_inf("H1"), _inf("H2"), _fin("Pbar1"), _inf("Punder2"))),
    ("Thm3-case2", LARGE, BOUNDED, (_inf("H1"), _inf("H2"), _inf("Punder1"), _fin("Pbar2"))),
    ("Thm4-bounded-sandwich", BOUNDED, BOUNDED, (_below(1), _below(2))),
    ("Thm5-i", LARGE, BOUNDED, (_inf("H1"), _inf("Punder1"), _below(2))),
    ("Thm5-ii", BOUNDED, LARGE, (_below(1), _inf("H2"), _inf("Punder2"))),
)

_CAVEATS = {
    "Thm4-bounded-sandwich": "existence here rests on the monotone scheme whose "
                             "convergence argument assumes H_i(inf) = inf; treat as a caveat",
    "Thm5-i": "the bounded component uses the H-envelope with H(inf) < inf; same caveat as the sandwich rule",
    "Thm5-ii": "the bounded component uses the H-envelope with H(inf) < inf; same caveat as the sandwich rule",
}


def classify(verdicts: dict) -> ClassificationReport:
    """First matching rule wins; Inconclusive verdicts never satisfy a hypothesis."""
    missing = [n for n in LIMIT_NAMES if n not in verdicts]
    if missing:
        raise ClassificationError(f"missing verdicts: {missing}")
    verdicts = {n: verdicts[n] for n in LIMIT_NAMES}
    report = None
    blocking = []
    for rule, ut, vt, hyps in _TABLE:
        failed = [(desc, names) for desc, pred, names in hyps if not pred(verdicts)]
        if not failed:
            if report is None:
                report = ClassificationReport(rule, verdicts, ut, vt)
            continue
        if report is None:
            blocking.append({"rule": rule, "unmet": [d for d, _ in failed],
                             "verdicts": sorted({f"{n}: {verdicts[n]}" for _, ns in failed for n in ns})})
    if report is None:
        return ClassificationReport(NO_RULE, verdicts, blocking=blocking)
    if report.rule in _CAVEATS:
        report.notes.append(_CAVEATS[report.rule])
    # the large and bounded patterns are exclusive analytically; both holding is a numerical conflict
    thm1 = all(p(verdicts) for _, p, _ in _TABLE[0][3])
    thm2 = all(p(verdicts) for _, p, _ in _TABLE[1][3])
    if thm1 and thm2:
        report.warnings.append("both the large and the bounded hypotheses hold numerically; "
                               "Punder and Pbar verdicts conflict")
    return report


def finite_envelope(report: ClassificationReport, tables: FunctionalTable,
                    component: Optional[int] = None):
    """Upper envelopes H_i^-1(Pbar_i(inf)) of the bounded components.

    Returns a dict {'u': value, 'v': value} over bounded components, or a
    single float when ``component`` is given.
    """
    types = {1: report.u_type, 2: report.v_type}
    wanted = (component,) if component else tuple(i for i in (1, 2) if types[i] == BOUNDED)
    if not wanted:
        raise ClassificationError("no bounded component to bound")
    if tables.H is None:
        raise ClassificationError("envelope needs the H tables ((C2) decomposition)")
    out = {}
    for i in wanted:
        if types[i] != BOUNDED:
            raise ClassificationError(f"component {'uv'[i - 1]} is predicted {types[i]}, not Bounded")
        verdict = report.verdicts[f"Pbar{i}"]
        if not verdict.converges:
            raise ClassificationError(f"Pbar{i}(inf) has no converged value")
        value, sat = tables.H[i - 1].inverse(verdict.value)
        out["uv"[i - 1]] = float("inf") if sat else value
    if component:
        return out["uv"[component - 1]]
    return out


def canned_verdict(kind: str, value: Optional[float] = None) -> LimitVerdict:
    """Shorthand used by tests and scripts: 'D', 'I', or 'C' with a value."""
    if kind == "D":
        return LimitVerdict("diverges")
    if kind == "I":
        return LimitVerdict("inconclusive")
    if kind == "C":
        return LimitVerdict("converges", float(value), 0.0)
    raise ValueError(kind)
