"""Potential functions: a small expression language plus built-in families.

Potentials act on points in the *original* (unscaled) coordinates.  The
expression language knows the coordinates ``x1 .. xN``, the radius ``r = |x|``,
numeric literals, ``+ - * / ^`` (with ``^`` right-associative and binding
tighter than unary minus), and the functions ``exp, log, cosh, min, max, abs``.

Expression values are immutable once parsed; evaluation is reentrant and safe
to call concurrently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.typing import NDArray

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

__all__ = [
    "PotentialExpr",
    "Potential",
    "ConstantPotential",
    "HarmonicRepulsive",
    "LocalMinUnbounded",
    "SaddleUnbounded",
    "CompetingPotential",
    "ShiftedPotential",
    "parse_potential",
    "eval_potential",
    "grad_potential",
    "builtin_potential",
]


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # "r" or "x<k>"


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str  # + - * / ^
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Node", ...]


Node = Union[Num, Var, Neg, Bin, Call]

_FUNCTIONS = {"exp": 1, "log": 1, "cosh": 1, "abs": 1, "min": None, "max": None}
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_NUMBER_RE = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_VAR_RE = re.compile(r"x([1-9]\d*)$")


class _Tokenizer:
    def __init__(self, src: str):
        self.src = src
        self.pos = 0
        self.kind = ""
        self.text = ""
        self.advance()

    def advance(self) -> None:
        s = self.src
        i = self.pos + len(self.text)
        while i < len(s) and s[i].isspace():
            i += 1
        self.pos = i
        if i >= len(s):
            self.kind, self.text = "end", ""
            return
        m = _NUMBER_RE.match(s, i)
        if m:
            self.kind, self.text = "number", m.group(0)
            return
        m = _IDENT_RE.match(s, i)
        if m:
            self.kind, self.text = "ident", m.group(0)
            return
        ch = s[i]
        if ch in "+-*/^(),":
            self.kind, self.text = ch, ch
            return
        raise ExprSyntaxError(f"unexpected character {ch!r}", i, {"number", "identifier", "operator"})

    def expect(self, kind: str) -> str:
        if self.kind != kind:
            raise ExprSyntaxError(f"unexpected {self.kind or 'end of input'}", self.pos, {kind})
        text = self.text
        self.advance()
        return text


class _Parser:
    """Recursive descent over: expr > term > unary > power > atom."""

    def __init__(self, src: str):
        self.tok = _Tokenizer(src)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(f"trailing input {self.tok.text!r}", self.tok.pos, {"end"})
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.tok.expect(self.tok.kind)
            node = Bin(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.kind in ("*", "/"):
            op = self.tok.expect(self.tok.kind)
            node = Bin(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "-":
            self.tok.advance()
            return Neg(self.unary())
        if self.tok.kind == "+":
            self.tok.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.kind == "^":
            self.tok.advance()
            # right associative; exponent may carry a unary minus
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "number":
            text = t.expect("number")
            return Num(float(text))
        if t.kind == "ident":
            name = t.expect("ident")
            if self.tok.kind == "(":
                if name not in _FUNCTIONS:
                    raise UnknownIdentifier(name)
                self.tok.advance()
                args = [self.expr()]
                while self.tok.kind == ",":
                    self.tok.advance()
                    args.append(self.expr())
                self.tok.expect(")")
                arity = _FUNCTIONS[name]
                if arity is not None and len(args) != arity:
                    raise ExprSyntaxError(f"{name} takes {arity} argument(s), got {len(args)}",
                                          self.tok.pos, {")"})
                if arity is None and len(args) < 2:
                    raise ExprSyntaxError(f"{name} takes at least 2 arguments", self.tok.pos, {","})
                return Call(name, tuple(args))
            if name == "r" or _VAR_RE.match(name):
                return Var(name)
            raise UnknownIdentifier(name)
        if t.kind == "(":
            self.tok.advance()
            node = self.expr()
            self.tok.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {t.kind or 'end of input'}", t.pos,
                              {"number", "identifier", "("})


def _print_node(node: Node) -> str:
    # Fully parenthesized canonical form: reparsing reproduces the tree.
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{_print_node(node.arg)})"
    if isinstance(node, Bin):
        return f"({_print_node(node.lhs)} {node.op} {_print_node(node.rhs)})"
    if isinstance(node, Call):
        return f"{node.fn}({', '.join(_print_node(a) for a in node.args)})"
    raise TypeError(node)


def _eval_node(node: Node, pts: NDArray, rnorm: NDArray) -> NDArray:
    if isinstance(node, Num):
        return np.full(pts.shape[0], node.value)
    if isinstance(node, Var):
        if node.name == "r":
            return rnorm
        k = int(node.name[1:])
        if k > pts.shape[1]:
            raise UnknownIdentifier(node.name)
        return pts[:, k - 1]
    if isinstance(node, Neg):
        return -_eval_node(node.arg, pts, rnorm)
    if isinstance(node, Bin):
        a = _eval_node(node.lhs, pts, rnorm)
        b = _eval_node(node.rhs, pts, rnorm)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(b == 0.0):
                raise DomainError("division by zero")
            return a / b
        if node.op == "^":
            with np.errstate(invalid="ignore", over="ignore"):
                out = np.power(a, b)
            if np.any(np.isnan(out)):
                raise DomainError("fractional power of a negative base")
            return out
        raise TypeError(node.op)
    if isinstance(node, Call):
        args = [_eval_node(a, pts, rnorm) for a in node.args]
        if node.fn == "exp":
            with np.errstate(over="ignore"):
                return np.exp(args[0])
        if node.fn == "log":
            if np.any(args[0] <= 0.0):
                raise DomainError("log of a non-positive number")
            return np.log(args[0])
        if node.fn == "cosh":
            with np.errstate(over="ignore"):
                return np.cosh(args[0])
        if node.fn == "abs":
            return np.abs(args[0])
        if node.fn == "min":
            return np.minimum.reduce(args)
        if node.fn == "max":
            return np.maximum.reduce(args)
        raise UnknownIdentifier(node.fn)
    raise TypeError(node)


# ---------------------------------------------------------------------------
# Potential objects
# ---------------------------------------------------------------------------

def _as_points(point) -> NDArray:
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    return pts


class Potential:
    """Base: a real-valued function of original-coordinate points."""

    def evaluate(self, pts: NDArray) -> NDArray:
        """Evaluate on an (M, N) array of points; returns shape (M,)."""
        raise NotImplementedError

    def __call__(self, point) -> float:
        return float(self.evaluate(_as_points(point))[0])


@dataclass(frozen=True)
class PotentialExpr(Potential):
    ast: Node
    source: str = ""

    def evaluate(self, pts: NDArray) -> NDArray:
        rnorm = np.sqrt(np.sum(pts * pts, axis=1))
        out = np.asarray(_eval_node(self.ast, pts, rnorm), dtype=float)
        if out.shape != (pts.shape[0],):
            out = np.broadcast_to(out, (pts.shape[0],)).copy()
        if not np.all(np.isfinite(out)):
            i = int(np.argmin(np.isfinite(out)))
            raise DomainError(f"non-finite value at point {pts[i]}")
        return out

    def to_source(self) -> str:
        return _print_node(self.ast)


@dataclass(frozen=True)
class ConstantPotential(Potential):
    a: float

    def evaluate(self, pts: NDArray) -> NDArray:
        return np.full(pts.shape[0], float(self.a))


@dataclass(frozen=True)
class HarmonicRepulsive(Potential):
    """-|x|^2: unbounded below with exactly quadratic decay speed."""

    def evaluate(self, pts: NDArray) -> NDArray:
        return -np.sum(pts * pts, axis=1)


@dataclass(frozen=True)
class LocalMinUnbounded(Potential):
    """(a r^2 - b r^4) / (1 + r^2): strict local minimum 0 at the origin,
    behaves like -b r^2 at infinity.  Defaults give the -r^2/4 tail."""

    a: float = 1.0
    b: float = 0.25

    def evaluate(self, pts: NDArray) -> NDArray:
        r2 = np.sum(pts * pts, axis=1)
        return (self.a * r2 - self.b * r2 * r2) / (1.0 + r2)


@dataclass(frozen=True)
class SaddleUnbounded(Potential):
    """a - b |x|^2: interior maximum a at the origin (1-D 'saddle')."""

    a: float = 0.0
    b: float = 1.0

    def evaluate(self, pts: NDArray) -> NDArray:
        return self.a - self.b * np.sum(pts * pts, axis=1)


# Smoothing scale below which the competing K stops decaying; keeps K bounded
# at the origin so the concentration functional has its minimum there.
_COMPETING_CORE = 0.2


@dataclass(frozen=True)
class CompetingPotential(Potential):
    """Pair (V, K) with V = a constant and K = b (s0^2 + r^2)^(-kappa/2).

    For kappa = 0 this is simply V = a, K = b.  For kappa > 0, K decays like
    b r^-kappa at infinity while staying bounded near the origin.
    """

    a: float = 1.0
    b: float = 1.0
    kappa: float = 0.0

    @property
    def v(self) -> Potential:
        return ConstantPotential(self.a)

    @property
    def k(self) -> Potential:
        return _CompetingK(self.b, self.kappa)

    def evaluate(self, pts: NDArray) -> NDArray:
        return self.v.evaluate(pts)


@dataclass(frozen=True)
class _CompetingK(Potential):
    b: float
    kappa: float

    def evaluate(self, pts: NDArray) -> NDArray:
        if self.kappa == 0.0:
            return np.full(pts.shape[0], float(self.b))
        r2 = np.sum(pts * pts, axis=1)
        return self.b * np.power(_COMPETING_CORE**2 + r2, -0.5 * self.kappa)


@dataclass(frozen=True)
class ShiftedPotential(Potential):
    """V + c*K; realizes the amplitude-rescaling shift of the linear part."""

    base: Potential
    c: float
    k: Potential | None = None

    def evaluate(self, pts: NDArray) -> NDArray:
        out = self.base.evaluate(pts)
        if self.c != 0.0:
            if self.k is None:
                out = out + self.c
            else:
                out = out + self.c * self.k.evaluate(pts)
        return out


_BUILTIN_FAMILIES = {
    "constant": ConstantPotential,
    "harmonic-repulsive": HarmonicRepulsive,
    "local-min-unbounded": LocalMinUnbounded,
    "saddle-unbounded": SaddleUnbounded,
    "competing": CompetingPotential,
}


def builtin_potential(family: str, **params) -> Potential:
    try:
        cls = _BUILTIN_FAMILIES[family]
    except KeyError:
        raise UnknownIdentifier(family) from None
    return cls(**params)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def parse_potential(src: str) -> PotentialExpr:
    """Parse source text into an immutable expression tree."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty potential source", 0, {"expression"})
    return PotentialExpr(ast=_Parser(src).parse(), source=src)


def eval_potential(p: Potential, point: Sequence[float]):
    """Evaluate at one point.  Competing pairs return the tuple (V, K)."""
    if isinstance(p, CompetingPotential):
        pts = _as_points(point)
        return (float(p.v.evaluate(pts)[0]), float(p.k.evaluate(pts)[0]))
    return p(point)


def grad_potential(p: Potential, point: Sequence[float], h: float = 1e-4) -> NDArray:
    """Central-difference gradient, O(h^2) accurate."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(point, dtype=float)
    n = x.size
    plus = np.tile(x, (n, 1))
    minus = np.tile(x, (n, 1))
    plus[np.arange(n), np.arange(n)] += h
    minus[np.arange(n), np.arange(n)] -= h
    if isinstance(p, CompetingPotential):
        p = p.v
    return (p.evaluate(plus) - p.evaluate(minus)) / (2.0 * h)
