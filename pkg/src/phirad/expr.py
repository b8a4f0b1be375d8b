"""Arithmetic expressions for coefficients and nonlinearities.

A small Pratt parser over numbers, declared variables, ``+ - * / ^``,
unary minus and a fixed set of functions.  Evaluation works on Python
floats and on numpy arrays alike, and raises :class:`EvalError` on
domain violations instead of producing NaN.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Expr", "Num", "Var", "Neg", "BinOp", "Call",
    "ParseError", "EvalError", "parse", "evaluate", "to_text", "variables",
]

FUNCTIONS = {
    "exp": 1, "ln": 1, "sqrt": 1, "sinh": 1, "asinh": 1,
    "pow": 2, "min": 2, "max": 2,
}


class ParseError(ValueError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class EvalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------- tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num' | 'name' | 'op' | 'end'
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    # '2.3.4' or '1e' style leftovers show up as adjacent numbers/names
    tokens.append(_Token("end", "", len(text)))
    return tokens


# ------------------------------------------------------------------- parser

# left binding powers; unary minus sits between * / and ^
_LBP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, text, allowed, constants):
        self.tokens = _tokenize(text)
        self.i = 0
        self.allowed = frozenset(allowed)
        self.constants = dict(constants or {})

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        tok = self.advance()
        if tok.text != text:
            where = "end of input" if tok.kind == "end" else repr(tok.text)
            raise ParseError(f"expected {text!r}, found {where}", tok.pos)
        return tok

    def expression(self, rbp=0) -> Expr:
        left = self.nud(self.advance())
        while True:
            tok = self.peek()
            lbp = _LBP.get(tok.text, 0) if tok.kind == "op" else 0
            if tok.kind not in ("op", "end"):
                raise ParseError(f"unexpected {tok.text!r} (no implicit multiplication)", tok.pos)
            if rbp >= lbp:
                return left
            self.advance()
            if tok.text == "^":
                # right associative; the exponent may carry its own unary minus
                right = self.expression(_LBP["^"] - 1)
            else:
                right = self.expression(lbp)
            left = BinOp(tok.text, left, right)

    def nud(self, tok: _Token) -> Expr:
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "name":
            return self.name(tok)
        if tok.text == "-":
            return Neg(self.expression(_UNARY_BP))
        if tok.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        if tok.kind == "end":
            raise ParseError("unexpected end of input", tok.pos)
        raise ParseError(f"unexpected {tok.text!r}", tok.pos)

    def name(self, tok: _Token) -> Expr:
        if self.peek().text == "(":
            if tok.text not in FUNCTIONS:
                raise ParseError(f"unknown function {tok.text!r}", tok.pos)
            self.advance()
            args = [self.expression()]
            while self.peek().text == ",":
                self.advance()
                args.append(self.expression())
            self.expect(")")
            arity = FUNCTIONS[tok.text]
            if len(args) != arity:
                raise ParseError(
                    f"{tok.text} takes {arity} argument(s), got {len(args)}", tok.pos)
            return Call(tok.text, tuple(args))
        if tok.text in self.allowed:
            return Var(tok.text)
        if tok.text in self.constants:
            return Num(float(self.constants[tok.text]))
        if tok.text in FUNCTIONS:
            raise ParseError(f"function {tok.text!r} used without arguments", tok.pos)
        raise ParseError(f"unknown identifier {tok.text!r}", tok.pos)


def parse(text: str, allowed_vars=(), constants: Mapping[str, float] | None = None) -> Expr:
    """Parse ``text`` into an AST.

    ``allowed_vars`` lists the free variables the expression may use;
    ``constants`` are named numbers substituted at parse time.
    """
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    p = _Parser(text, allowed_vars, constants)
    tree = p.expression()
    tok = p.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected {tok.text!r}", tok.pos)
    return tree


# --------------------------------------------------------------- evaluation

def _check(cond, message):
    if np.any(cond):
        raise EvalError(message)


def _power(base, expo):
    base = np.asarray(base, dtype=float)
    expo = np.asarray(expo, dtype=float)
    non_integer = expo != np.round(expo)
    _check((base < 0) & non_integer, "fractional power of a negative base")
    _check((base == 0) & (expo < 0), "division by zero in power")
    with np.errstate(over="ignore"):
        return np.power(base, expo)


def _apply(func, args):
    (x, *rest) = args
    if func == "exp":
        with np.errstate(over="ignore"):
            return np.exp(x)
    if func == "ln":
        _check(np.asarray(x) <= 0, "ln of a non-positive argument")
        return np.log(x)
    if func == "sqrt":
        _check(np.asarray(x) < 0, "sqrt of a negative argument")
        return np.sqrt(x)
    if func == "sinh":
        with np.errstate(over="ignore"):
            return np.sinh(x)
    if func == "asinh":
        return np.arcsinh(x)
    if func == "pow":
        return _power(x, rest[0])
    if func == "min":
        return np.minimum(x, rest[0])
    if func == "max":
        return np.maximum(x, rest[0])
    raise EvalError(f"unknown function {func!r}")  # pragma: no cover


def _eval(e, env):
    if isinstance(e, Num):
        return np.float64(e.value)
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"missing binding for {e.name!r}") from None
    if isinstance(e, Neg):
        return np.negative(_eval(e.arg, env))
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        with np.errstate(over="ignore"):
            if e.op == "+":
                return np.add(a, b)
            if e.op == "-":
                return np.subtract(a, b)
            if e.op == "*":
                return np.multiply(a, b)
            if e.op == "/":
                _check(np.asarray(b) == 0, "division by zero")
                return np.divide(a, b)
        return _power(a, b)
    return _apply(e.func, [_eval(a, env) for a in e.args])


def evaluate(e: Expr, bindings: Mapping[str, object] | None = None, **kw):
    """Evaluate ``e``; bindings may be floats or numpy arrays."""
    env = dict(bindings or {})
    env.update(kw)
    env = {k: (np.asarray(v, dtype=float) if np.ndim(v) else np.float64(v))
           for k, v in env.items()}
    with np.errstate(invalid="ignore"):
        out = _eval(e, env)
    if np.any(np.isnan(out)):
        raise EvalError("evaluation produced NaN")
    if np.ndim(out) == 0:
        return float(out)
    return out


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Call):
        return set().union(*(variables(a) for a in e.args))
    return set()


# ----------------------------------------------------------------- printing

_PREC = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg) or (isinstance(e, Num) and (e.value < 0 or str(e.value).startswith("-"))):
        return _UNARY_BP
    return 100


def to_text(e: Expr, full: bool = False) -> str:
    """Canonical text form of ``e``.

    With ``full=True`` every operator application is parenthesized;
    otherwise only the parentheses needed to reproduce the same tree are kept.
    """
    def wrap(s, needed):
        return f"({s})" if needed and not full else s

    if isinstance(e, Num):
        s = repr(float(e.value))
        return f"({s})" if s.startswith("-") else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({', '.join(to_text(a, full) for a in e.args)})"
    if isinstance(e, Neg):
        inner = to_text(e.arg, full)
        body = "-" + wrap(inner, _prec(e.arg) <= _UNARY_BP)
        return f"({body})" if full else body
    p = _PREC[e.op]
    lp, rp = _prec(e.left), _prec(e.right)
    if e.op == "^":
        left_paren, right_paren = lp <= p, rp < p
    else:
        left_paren, right_paren = lp < p, rp <= p
    text = (wrap(to_text(e.left, full), left_paren) + e.op
            + wrap(to_text(e.right, full), right_paren))
    return f"({text})" if full else text
