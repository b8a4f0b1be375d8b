"""Random problem generators shared by the property suites."""
from __future__ import annotations

from functools import lru_cache

from hypothesis import strategies as st

from phirad.models import PhiModel
from phirad.problem import Coefficient, Nonlinearity, Numerics, ProblemSpec

MODEL_PARAMS = (
    ("E1", 0.6, 0.0), ("E1", 0.8, 0.0), ("E1", 1.5, 0.0),
    ("E2", 1.5, 0.5), ("E2", 2.0, 1.0), ("E2", 2.5, 0.5),
    ("E3", 0.0, 0.5), ("E3", 0.5, 1.0), ("E3", 0.3, 2.0),
    ("E4", 1.5, 2.5), ("E4", 2.0, 3.0), ("E4", 1.2, 1.8),
    ("E5", 1.5, 0.0), ("E5", 2.0, 0.0), ("E5", 2.5, 0.0), ("E5", 3.0, 0.0),
)


@lru_cache(maxsize=None)
def model(family, p, q, theta="o4"):
    return PhiModel(family, p=p, q=q, theta_source=theta)


models = st.sampled_from(MODEL_PARAMS).map(lambda a: model(*a))

exponents = st.tuples(st.floats(0.0, 2.0), st.floats(0.0, 2.0)).filter(
    lambda ba: ba[0] ** 2 + ba[1] ** 2 > 0.01)


@st.composite
def coefficients(draw, kind):
    c = draw(st.floats(0.05, 1.0))
    if kind == "sigma":
        form = draw(st.sampled_from(["0", "{c}/(1+r)", "{c}"]))
    else:
        form = draw(st.sampled_from(["{c}", "{c}*(1+r)^(-2)", "{c}*exp(-r)", "{c}*(1+r)"]))
    return Coefficient(form.format(c=repr(c)))


@st.composite
def problems(draw, n=300, laplacian=False, punder=None):
    """Random power-product problems on a short interval (no blow-up expected)."""
    if laplacian:
        m1 = m2 = model("E5", 2.0, 0.0)
    else:
        m1, m2 = draw(models), draw(models)
    b1, a1e = draw(exponents)
    b2, a2e = draw(exponents)
    return ProblemSpec(
        N=draw(st.sampled_from([3, 4, 5])),
        model1=m1, model2=m2,
        sigma1=draw(coefficients("sigma")), sigma2=draw(coefficients("sigma")),
        p1=draw(coefficients("p")), p2=draw(coefficients("p")),
        f1=Nonlinearity(beta=b1, alpha=a1e), f2=Nonlinearity(beta=b2, alpha=a2e),
        a1=draw(st.floats(0.3, 2.0)), a2=draw(st.floats(0.3, 2.0)),
        numerics=Numerics(R=draw(st.floats(0.5, 2.0)), n=n),
        punder_variant=punder or draw(st.sampled_from(["notation", "proof"])),
    )


def make_spec(p1="1", p2="1", f1=(0.0, 1.0), f2=(1.0, 0.0), sigma1="0", sigma2="0",
              a1=1.0, a2=1.0, N=3, m1=("E5", 2.0, 0.0), m2=("E5", 2.0, 0.0),
              R=1.0, n=1000, **kw):
    """Concise spec for example tests; f given as (beta, alpha) or a Nonlinearity."""
    def nl(f):
        return f if isinstance(f, Nonlinearity) else Nonlinearity(beta=f[0], alpha=f[1])
    return ProblemSpec(
        N=N, model1=model(*m1), model2=model(*m2),
        sigma1=Coefficient(sigma1), sigma2=Coefficient(sigma2),
        p1=Coefficient(p1), p2=Coefficient(p2), f1=nl(f1), f2=nl(f2),
        a1=a1, a2=a2, numerics=Numerics(R=R, n=n), **kw)
