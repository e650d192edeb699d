"""A small expression language for radial profiles.

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' signed-number)?
    base   := 't' | number | preset '(' number ')' | func '(' expr ')' | '(' expr ')'

Presets: power(a) = t^a, shell(a) = |1 - t|^-a, power_family(a) = t^(-a n)
with n bound at evaluation.  Functions: abs, exp.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .density import RadialDensity, _floor_for

PRESETS = ("power", "shell", "power_family")
FUNCS = ("abs", "exp")


class DensitySyntaxError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float


@dataclass(frozen=True)
class Func:
    name: str
    arg: object


@dataclass(frozen=True)
class Preset:
    name: str
    alpha: float


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") else s


def to_text(node, parent: int = 0, right: bool = False) -> str:
    """Canonical text; parse(to_text(a)) == a."""
    if isinstance(node, Num):
        return _num(node.value)
    if isinstance(node, Var):
        return "t"
    if isinstance(node, Preset):
        return f"{node.name}({_num(node.alpha)})"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Pow):
        s = f"{to_text(node.base, 3)}^{_num(node.exponent)}"
        # the grammar has no chained powers
        return f"({s})" if parent == 3 else s
    p = _PREC[node.op]
    s = f"{to_text(node.left, p)} {node.op} {to_text(node.right, p, True)}"
    # left-associative: a right operand of equal precedence needs parentheses
    return f"({s})" if p < parent or (right and p == parent) else s


# --- parser ----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\S))")


def _lex(text: str):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            break
        if m.group(1):
            toks.append(("num", m.group(1), m.start(1)))
        elif m.group(2):
            toks.append(("name", m.group(2), m.start(2)))
        elif m.group(3):
            toks.append(("op", m.group(3), m.start(3)))
        pos = m.end()
    toks.append(("end", "", len(text.encode("utf-8"))))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _lex(text)
        self.i = 0

    def _offset(self, tok) -> int:
        # byte offset of the token
        return len(self.text[:tok[2]].encode("utf-8")) if tok[0] != "end" else tok[2]

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, value=None):
        tok = self.toks[self.i]
        if (kind and tok[0] != kind) or (value is not None and tok[1] != value):
            want = value if value is not None else kind
            got = tok[1] or "end of input"
            raise DensitySyntaxError(f"expected '{want}', found '{got}'", self._offset(tok))
        self.i += 1
        return tok

    def parse(self):
        if self.peek()[0] == "end":
            raise DensitySyntaxError("empty expression", 0)
        node = self.expr()
        if self.peek()[0] != "end":
            tok = self.peek()
            raise DensitySyntaxError(f"unexpected '{tok[1]}'", self._offset(tok))
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.factor())
        return node

    def signed_number(self) -> float:
        sign = 1.0
        if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = -1.0 if self.take()[1] == "-" else 1.0
        return sign * float(self.take("num")[1])

    def factor(self):
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            node = Pow(node, self.signed_number())
        return node

    def base(self):
        tok = self.peek()
        if tok[0] == "num":
            self.take()
            return Num(float(tok[1]))
        if tok[0] == "name":
            self.take()
            if tok[1] == "t":
                return Var()
            if tok[1] in PRESETS:
                self.take("op", "(")
                a = self.signed_number()
                self.take("op", ")")
                return Preset(tok[1], a)
            if tok[1] in FUNCS:
                self.take("op", "(")
                arg = self.expr()
                self.take("op", ")")
                return Func(tok[1], arg)
            raise DensitySyntaxError(f"unknown name '{tok[1]}'", self._offset(tok))
        if tok[0] == "op" and tok[1] == "(":
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        raise DensitySyntaxError(f"unexpected '{tok[1] or 'end of input'}'", self._offset(tok))


def parse_density(text: str):
    if not text or not text.strip():
        raise DensitySyntaxError("empty expression", 0)
    return _Parser(text).parse()


def normalize(text: str) -> str:
    return to_text(parse_density(text))


# --- evaluation ------------------------------------------------------------

def evaluate(node, t, n: int | None = None):
    t = np.asarray(t, dtype=float)
    if isinstance(node, Num):
        return np.full(t.shape, node.value)
    if isinstance(node, Var):
        return t
    if isinstance(node, Preset):
        return np.exp(_log_preset(node, t, n))
    if isinstance(node, Func):
        x = evaluate(node.arg, t, n)
        return np.abs(x) if node.name == "abs" else np.exp(x)
    if isinstance(node, Pow):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.power(evaluate(node.base, t, n), node.exponent)
    a, b = evaluate(node.left, t, n), evaluate(node.right, t, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        return {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}[node.op](a, b)


def _log_preset(node: Preset, t, n):
    with np.errstate(divide="ignore"):
        if node.name == "power":
            return node.alpha * np.log(t)
        if node.name == "shell":
            return -node.alpha * np.log(np.abs(1.0 - t))
        if n is None:
            raise ValueError("power_family needs the dimension n")
        return -node.alpha * n * np.log(t)


def log_evaluate(node, t, n: int | None = None):
    """log of the profile; exact in log space for products, quotients and powers."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if isinstance(node, Num):
            return np.full(t.shape, math.log(node.value) if node.value > 0 else -np.inf)
        if isinstance(node, Var):
            return np.log(t)
        if isinstance(node, Preset):
            return _log_preset(node, t, n)
        if isinstance(node, Func) and node.name == "exp":
            return evaluate(node.arg, t, n)
        if isinstance(node, Func):
            return np.log(np.abs(evaluate(node.arg, t, n)))
        if isinstance(node, Pow):
            return node.exponent * log_evaluate(node.base, t, n)
        if node.op == "*":
            return log_evaluate(node.left, t, n) + log_evaluate(node.right, t, n)
        if node.op == "/":
            return log_evaluate(node.left, t, n) - log_evaluate(node.right, t, n)
        v = evaluate(node, t, n)
        return np.where(v >= 0, np.log(np.where(v >= 0, v, 1.0)), np.nan)


def homogeneity(node, n: int | None = None) -> float | None:
    """gamma if the profile is c t^gamma, else None."""
    if isinstance(node, Num):
        return 0.0
    if isinstance(node, Var):
        return 1.0
    if isinstance(node, Preset):
        if node.name == "power":
            return node.alpha
        if node.name == "power_family" and n is not None:
            return -node.alpha * n
        return None
    if isinstance(node, Pow):
        g = homogeneity(node.base, n)
        return None if g is None else g * node.exponent
    if isinstance(node, Bin) and node.op in "*/":
        a, b = homogeneity(node.left, n), homogeneity(node.right, n)
        if a is None or b is None:
            return None
        return a + b if node.op == "*" else a - b
    return None


def _linear_root(node) -> float | None:
    """a for nodes of the form a - t, t - a, abs(a - t), abs(t - a) (a > 0)."""
    if isinstance(node, Func) and node.name == "abs":
        node = node.arg
    if isinstance(node, Bin) and node.op == "-":
        if isinstance(node.left, Num) and isinstance(node.right, Var):
            return node.left.value
        if isinstance(node.left, Var) and isinstance(node.right, Num):
            return node.right.value
    return None


def singular_points(node) -> tuple[float, ...]:
    out = set()

    def walk(x, negative=False):
        if isinstance(x, Preset) and x.name == "shell" and x.alpha > 0:
            out.add(1.0)
        if isinstance(x, Pow):
            if x.exponent < 0:
                r = _linear_root(x.base)
                if r is not None and r > 0:
                    out.add(r)
            walk(x.base, negative ^ (x.exponent < 0))
        elif isinstance(x, Bin):
            walk(x.left, negative)
            if x.op == "/":
                r = _linear_root(x.right)
                if r is not None and r > 0:
                    out.add(r)
            walk(x.right, negative ^ (x.op == "/"))
        elif isinstance(x, Func):
            walk(x.arg, negative)

    walk(node)
    return tuple(sorted(out))


def _contains_family(node) -> bool:
    if isinstance(node, Preset):
        return node.name == "power_family"
    if isinstance(node, (Pow,)):
        return _contains_family(node.base)
    if isinstance(node, Bin):
        return _contains_family(node.left) or _contains_family(node.right)
    if isinstance(node, Func):
        return _contains_family(node.arg)
    return False


def density_from_text(text: str, n: int | None = None) -> RadialDensity:
    """Parse and bind a profile.  Flags not visible in the syntax are read off a mesh."""
    node = parse_density(text)
    if _contains_family(node) and n is None:
        raise ValueError("power_family needs the dimension n")

    def logp(t):
        return log_evaluate(node, t, n)

    gamma = homogeneity(node, n)
    mesh = np.geomspace(1e-6, 1e6, 2001)
    vals = logp(mesh)
    if np.any(np.isnan(vals)):
        raise ValueError(f"profile '{text}' is negative somewhere on (0, inf)")
    finite = vals[np.isfinite(vals)]
    decreasing = bool(np.all(np.diff(vals) <= 1e-12 * np.maximum(1.0, np.abs(vals[1:])))) if finite.size else False
    if gamma is not None:
        floor = _floor_for(gamma)
    else:
        # local exponent at the origin
        lo = logp(np.array([1e-10, 1e-9]))
        g0 = (lo[1] - lo[0]) / math.log(10.0) if np.all(np.isfinite(lo)) else 0.0
        floor = _floor_for(round(g0, 6))
    sing = set(singular_points(node))
    if (gamma is not None and gamma < 0) or floor > 1:
        sing.add(0.0)
    name = to_text(node) + (f"[n={n}]" if _contains_family(node) else "")
    return RadialDensity(logp, name=name, is_decreasing=decreasing, homogeneity=gamma,
                         integrability_floor=floor, singular_points=tuple(sorted(sing)))
