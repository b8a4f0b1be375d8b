from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from phirad.classify import (BOUNDED, LARGE, NO_RULE, RULES, ClassificationError,
                             canned_verdict, classify, finite_envelope)
from phirad.config import load_config
from phirad.functionals import build_tables, probe_limits, probe_schedule
from phirad.problem import Nonlinearity, validate
from phirad.quadrature import RadialGrid, build_grid
from phirad.solver import solve
from cases import make_spec

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def vec(H1="I", H2="I", Pu1="I", Pu2="I", Pb1="I", Pb2="I"):
    def one(x):
        return canned_verdict("C", x) if isinstance(x, (int, float)) else canned_verdict(x)
    return {"H1": one(H1), "H2": one(H2), "Punder1": one(Pu1), "Punder2": one(Pu2),
            "Pbar1": one(Pb1), "Pbar2": one(Pb2)}


CANNED = [
    (vec("D", "D", "D", "D"), "Thm1-large", LARGE, LARGE),
    (vec("D", "D", Pb1=1.0, Pb2=2.0), "Thm2-bounded", BOUNDED, BOUNDED),
    (vec("D", "D", Pu2="D", Pb1=1.0), "Thm3-case1", BOUNDED, LARGE),
    (vec("D", "D", Pu1="D", Pb2=1.0), "Thm3-case2", LARGE, BOUNDED),
    (vec(5.0, 6.0, Pb1=1.0, Pb2=2.0), "Thm4-bounded-sandwich", BOUNDED, BOUNDED),
    (vec("D", 6.0, Pu1="D", Pb2=2.0), "Thm5-i", LARGE, BOUNDED),
    (vec(5.0, "D", Pu2="D", Pb1=1.0), "Thm5-ii", BOUNDED, LARGE),
]


@pytest.mark.parametrize("verdicts, rule, ut, vt", CANNED, ids=[c[1] for c in CANNED])
def test_canned_vectors(verdicts, rule, ut, vt):
    report = classify(verdicts)
    assert (report.rule, report.u_type, report.v_type) == (rule, ut, vt)
    assert set(report.verdicts) == set(verdicts)


def test_every_rule_covered():
    assert sorted(c[1] for c in CANNED) == sorted(RULES)


def test_inconclusive_blocks():
    report = classify(vec("D", "D", Pb1=1.0))
    assert report.rule == NO_RULE and not report.matched
    thm2 = next(b for b in report.blocking if b["rule"] == "Thm2-bounded")
    assert thm2["unmet"] == ["Pbar2<inf"]
    assert thm2["verdicts"] == ["Pbar2: Inconclusive"]


def test_sandwich_needs_strict_gap():
    # Pbar equal to H(inf) is not below it
    assert classify(vec(1.0, 6.0, Pb1=1.0, Pb2=2.0)).rule == NO_RULE


def test_sandwich_error_bar_counts():
    v = vec(5.0, 6.0, Pb1=1.0, Pb2=2.0)
    v["Pbar1"].err = 4.5
    assert classify(v).rule == NO_RULE


def test_caveat_and_conflict_warning():
    assert classify(CANNED[4][0]).notes
    both = vec("D", "D", "D", "D", 1.0, 1.0)
    report = classify(both)
    assert report.rule == "Thm1-large" and report.warnings


def test_missing_verdicts_rejected():
    v = vec()
    del v["H2"]
    with pytest.raises(ClassificationError):
        classify(v)


def test_all_inconclusive_never_guesses():
    report = classify(vec())
    assert report.rule == NO_RULE and report.u_type == report.v_type == "Unknown"
    assert len(report.blocking) == len(RULES)


# ------------------------------------------------------------ envelopes

@pytest.fixture(scope="module")
def log_tables():
    f = Nonlinearity("custom", text="v", h_text="t2", fbar_text="s")
    spec = make_spec(f1=f, f2=f)
    return build_tables(spec, build_grid(1.0, 50))


def test_envelope_inverts_H(log_tables):
    report = classify(vec("D", "D", Pb1=float(np.log(5)), Pb2=0.0))
    env = finite_envelope(report, log_tables)
    assert env["u"] == pytest.approx(5.0, rel=1e-10)
    assert env["v"] == 1.0
    assert finite_envelope(report, log_tables, component=1) == env["u"]


def test_envelope_refuses_large_component(log_tables):
    report = classify(CANNED[2][0])
    with pytest.raises(ClassificationError):
        finite_envelope(report, log_tables, component=2)
    with pytest.raises(ClassificationError):
        finite_envelope(classify(CANNED[0][0]), log_tables)


def test_envelope_beyond_cap_is_infinite(log_tables):
    report = classify(vec("D", "D", Pb1=1e6, Pb2=0.0))
    assert finite_envelope(report, log_tables)["u"] == float("inf")


# ------------------------------------------------------------ soundness on the corpus

CORPUS = ["thm1_large", "thm2_bounded", "thm4_sandwich", "thm5_i"]


@pytest.fixture(scope="module", params=CORPUS)
def corpus_run(request):
    spec = load_config(CONFIGS / f"{request.param}.toml").spec
    verdicts, tables = probe_limits(spec, c2_ok=validate(spec).c2_ok)
    report = classify(verdicts)
    radii = probe_schedule(spec)
    grid = RadialGrid(float(radii[-1]), spec.probe.n, spec.probe.grading)
    sol, diag = solve(replace(spec, numerics=replace(spec.numerics, max_iter=500)), grid)
    return request.param, report, tables, sol, radii


def test_corpus_rule(corpus_run):
    name, report, *_ = corpus_run
    expected = {"thm1_large": "Thm1-large", "thm2_bounded": "Thm2-bounded",
                "thm4_sandwich": "Thm4-bounded-sandwich", "thm5_i": "Thm5-i"}[name]
    assert report.rule == expected


def test_corpus_soundness(corpus_run):
    _, report, tables, sol, radii = corpus_run
    for i, kind, w in ((1, report.u_type, sol.u), (2, report.v_type, sol.v)):
        if kind == BOUNDED:
            sup = finite_envelope(report, tables, component=i)
            assert w[-1] <= sup * (1 + 1e-3)
        elif kind == LARGE:
            at = np.interp(radii, sol.r, w)
            fin = at[np.isfinite(at)]
            assert np.all(np.diff(fin) > 0)
            inc = np.diff(fin)
            assert len(fin) < len(at) or inc[-1] >= inc[0]
