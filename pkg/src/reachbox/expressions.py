"""Arithmetic expressions for vector fields and Jacobian entries.

Expressions are parsed from a small grammar (see `parse`), evaluate over
reals and over intervals (natural interval extension), and compile to fast
numpy callables that broadcast over trailing batch axes.  min and max are
first-class n-ary operations because piecewise flow models are built from
them and their natural extension is exact.

Trees are immutable after parsing and evaluation is pure.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, DomainError, ExprSyntaxError
from .intervals import Box, Interval, IntervalMatrix

__all__ = [
    "Expr",
    "VectorFieldSpec",
    "parse",
    "pretty",
    "eval_real",
    "eval_interval",
    "jacobian_bounds",
]

_UNARY_FUNCTIONS = ("exp", "log", "sin", "cos", "sqrt", "abs")
_NARY_FUNCTIONS = ("min", "max")
_BINARY_OPS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


@dataclass(frozen=True)
class Expr:
    """Node of an expression tree.

    op is one of: "const", "t", "x", "p", "neg", "add", "sub", "mul", "div",
    "pow", "min", "max", "exp", "log", "sin", "cos", "sqrt", "abs".
    Variables x and p carry a 1-based index.
    """

    op: str
    args: tuple = ()
    value: float = 0.0
    index: int = 0

    def variables(self) -> tuple[int, int]:
        """Largest referenced (x, p) indexes, 0 when a kind is unused."""
        max_x = self.index if self.op == "x" else 0
        max_p = self.index if self.op == "p" else 0
        for a in self.args:
            ax, ap = a.variables()
            max_x = max(max_x, ax)
            max_p = max(max_p, ap)
        return max_x, max_p

    def __str__(self) -> str:
        return pretty(self)


def const(v: float) -> Expr:
    return Expr("const", value=float(v))


# ---------------------------------------------------------------------------
# Tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<num>(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r"|(?P<ws>\s+)"
    r"|(?P<bad>.)"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | one of "+-*/^()," | "end"
    text: str
    line: int
    column: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    for m in _TOKEN_RE.finditer(source):
        text = m.group(0)
        if m.lastgroup == "ws":
            newlines = text.count("\n")
            if newlines:
                line += newlines
                col = len(text) - text.rfind("\n")
            else:
                col += len(text)
            continue
        if m.lastgroup == "bad":
            raise ExprSyntaxError(f"unexpected character {text!r}", line, col)
        kind = text if m.lastgroup == "op" else m.lastgroup
        tokens.append(_Token(kind, text, line, col))
        col += len(text)
    tokens.append(_Token("end", "", line, col))
    return tokens


class _Parser:
    """Recursive descent over: expr := term (('+'|'-') term)*;
    term := factor (('*'|'/') factor)*; factor := base ('^' factor)?;
    base := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
    | '-' factor.  Exponentiation binds tighter than unary minus.
    """

    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.text or "end of input"
            raise ExprSyntaxError(f"expected {kind!r}, found {shown!r}", tok.line, tok.column)
        return self.next()

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExprSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.column)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.next().kind
            rhs = self.term()
            e = Expr("add" if op == "+" else "sub", (e, rhs))
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek().kind in ("*", "/"):
            op = self.next().kind
            rhs = self.factor()
            e = Expr("mul" if op == "*" else "div", (e, rhs))
        return e

    def factor(self) -> Expr:
        e = self.base()
        if self.peek().kind == "^":
            self.next()
            return Expr("pow", (e, self.factor()))
        return e

    def base(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return const(float(tok.text))
        if tok.kind == "-":
            self.next()
            inner = self.factor()
            if inner.op == "const":
                return const(-inner.value)
            return Expr("neg", (inner,))
        if tok.kind == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "ident":
            self.next()
            return self.ident(tok)
        shown = tok.text or "end of input"
        raise ExprSyntaxError(f"unexpected {shown!r}", tok.line, tok.column)

    def ident(self, tok: _Token) -> Expr:
        name = tok.text
        if self.peek().kind == "(":
            if name not in _UNARY_FUNCTIONS and name not in _NARY_FUNCTIONS:
                raise ExprSyntaxError(f"unknown function {name!r}", tok.line, tok.column)
            self.next()
            args = [self.expr()]
            while self.peek().kind == ",":
                self.next()
                args.append(self.expr())
            self.expect(")")
            if name in _UNARY_FUNCTIONS and len(args) != 1:
                raise ExprSyntaxError(
                    f"{name} takes 1 argument, got {len(args)}", tok.line, tok.column)
            if name in _NARY_FUNCTIONS and len(args) < 2:
                raise ExprSyntaxError(
                    f"{name} takes at least 2 arguments, got {len(args)}", tok.line, tok.column)
            return Expr(name, tuple(args))
        if name == "t":
            return Expr("t")
        m = re.fullmatch(r"x(\d+)", name)
        if m:
            idx = int(m.group(1))
            if idx < 1:
                raise ExprSyntaxError("state variables are 1-based", tok.line, tok.column)
            return Expr("x", index=idx)
        m = re.fullmatch(r"p(\d+)", name)
        if m:
            idx = int(m.group(1))
            if idx < 1:
                raise ExprSyntaxError("input variables are 1-based", tok.line, tok.column)
            return Expr("p", index=idx)
        raise ExprSyntaxError(f"unknown identifier {name!r}", tok.line, tok.column)


def parse(source: str) -> Expr:
    """Parse expression text; raises ExprSyntaxError with line/column."""
    return _Parser(_tokenize(source)).parse()


# ---------------------------------------------------------------------------
# Pretty printer (round-trips through parse to an identical tree)
# ---------------------------------------------------------------------------

_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _prec(e: Expr) -> int:
    return _PRECEDENCE.get(e.op, 5)


def _wrap(e: Expr, minimum: int) -> str:
    s = pretty(e)
    return f"({s})" if _prec(e) < minimum else s


def pretty(e: Expr) -> str:
    op = e.op
    if op == "const":
        return repr(e.value) if e.value >= 0 else f"-{repr(-e.value)}"
    if op == "t":
        return "t"
    if op in ("x", "p"):
        return f"{op}{e.index}"
    if op == "neg":
        return f"-{_wrap(e.args[0], 3)}"
    if op in ("add", "sub", "mul", "div"):
        own = _PRECEDENCE[op]
        # right operand is parenthesized at equal precedence so that the
        # reparse reproduces this exact tree shape
        return f"{_wrap(e.args[0], own)} {_BINARY_OPS[op]} {_wrap(e.args[1], own + 1)}"
    if op == "pow":
        return f"{_wrap(e.args[0], 5)}^{_wrap(e.args[1], 4)}"
    return f"{op}({', '.join(pretty(a) for a in e.args)})"


# ---------------------------------------------------------------------------
# Evaluation over reals
# ---------------------------------------------------------------------------

def eval_real(e: Expr, t: float, x, p) -> float:
    """Reference scalar evaluation with domain-error reporting."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    return _eval_real(e, float(t), x, p)


def _eval_real(e: Expr, t: float, x, p) -> float:
    op = e.op
    if op == "const":
        return e.value
    if op == "t":
        return t
    if op == "x":
        if e.index > len(x):
            raise DimensionError(f"x{e.index} out of range for n_x={len(x)}")
        return float(x[e.index - 1])
    if op == "p":
        if e.index > len(p):
            raise DimensionError(f"p{e.index} out of range for n_p={len(p)}")
        return float(p[e.index - 1])
    vals = [_eval_real(a, t, x, p) for a in e.args]
    if op == "neg":
        return -vals[0]
    if op == "add":
        return vals[0] + vals[1]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "div":
        if vals[1] == 0.0:
            raise DomainError("division by zero")
        return vals[0] / vals[1]
    if op == "pow":
        base, exponent = vals
        if base == 0.0 and exponent < 0.0:
            raise DomainError("zero raised to a negative power")
        if base < 0.0 and exponent != round(exponent):
            raise DomainError("negative base with non-integer exponent")
        return base ** exponent
    if op == "min":
        return min(vals)
    if op == "max":
        return max(vals)
    if op == "exp":
        return math.exp(vals[0])
    if op == "log":
        if vals[0] <= 0.0:
            raise DomainError("log of a non-positive value")
        return math.log(vals[0])
    if op == "sin":
        return math.sin(vals[0])
    if op == "cos":
        return math.cos(vals[0])
    if op == "sqrt":
        if vals[0] < 0.0:
            raise DomainError("sqrt of a negative value")
        return math.sqrt(vals[0])
    if op == "abs":
        return abs(vals[0])
    raise ValueError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# Natural interval extension
# ---------------------------------------------------------------------------

def eval_interval(e: Expr, t, x: Box, p: Box) -> Interval:
    """Natural interval extension over a time value/range and state/input boxes.

    The result contains {eval_real(e, t, xi, pi) : xi in x, pi in p} by
    inclusion isotonicity; dependency effects may make it wider than the
    exact range.
    """
    t_iv = t if isinstance(t, Interval) else Interval.point(float(t))
    return _eval_interval(e, t_iv, x, p)


def _eval_interval(e: Expr, t: Interval, x: Box, p: Box) -> Interval:
    op = e.op
    if op == "const":
        return Interval.point(e.value)
    if op == "t":
        return t
    if op == "x":
        if e.index > x.dim:
            raise DimensionError(f"x{e.index} out of range for n_x={x.dim}")
        return x.interval(e.index - 1)
    if op == "p":
        if e.index > p.dim:
            raise DimensionError(f"p{e.index} out of range for n_p={p.dim}")
        return p.interval(e.index - 1)
    vals = [_eval_interval(a, t, x, p) for a in e.args]
    if op == "neg":
        return -vals[0]
    if op == "add":
        return vals[0] + vals[1]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "div":
        return vals[0] / vals[1]
    if op == "pow":
        base, exponent = vals
        if exponent.width == 0.0 and exponent.lo == round(exponent.lo):
            return base.power(int(exponent.lo))
        # non-integer exponent requires a positive base
        return (exponent * base.log()).exp()
    if op == "min":
        return Interval.minimum(*vals)
    if op == "max":
        return Interval.maximum(*vals)
    if op == "exp":
        return vals[0].exp()
    if op == "log":
        return vals[0].log()
    if op == "sin":
        return vals[0].sin()
    if op == "cos":
        return vals[0].cos()
    if op == "sqrt":
        return vals[0].sqrt()
    if op == "abs":
        return abs(vals[0])
    raise ValueError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# Compilation to numpy callables
# ---------------------------------------------------------------------------

def _codegen(e: Expr) -> str:
    op = e.op
    if op == "const":
        return repr(e.value)
    if op == "t":
        return "t"
    if op == "x":
        return f"x[{e.index - 1}]"
    if op == "p":
        return f"p[{e.index - 1}]"
    if op == "neg":
        return f"(-{_codegen(e.args[0])})"
    if op in ("add", "sub", "mul", "div"):
        sym = {"add": "+", "sub": "-", "mul": "*", "div": "/"}[op]
        return f"({_codegen(e.args[0])} {sym} {_codegen(e.args[1])})"
    if op == "pow":
        return f"({_codegen(e.args[0])} ** {_codegen(e.args[1])})"
    if op in ("min", "max"):
        fn = "np.minimum" if op == "min" else "np.maximum"
        out = _codegen(e.args[0])
        for a in e.args[1:]:
            out = f"{fn}({out}, {_codegen(a)})"
        return out
    if op == "abs":
        return f"np.abs({_codegen(e.args[0])})"
    if op in ("exp", "log", "sin", "cos", "sqrt"):
        return f"np.{op}({_codegen(e.args[0])})"
    raise ValueError(f"unknown operation {op!r}")


def compile_components(components) -> "callable":
    """Compile expressions into f(t, x, p) -> array of shape (n,) + batch.

    x and p are indexed on their first axis, so any trailing batch axes
    broadcast through.  No domain checking is performed; non-finite values
    are left for the integrator's divergence detection.
    """
    components = tuple(components)
    body = ", ".join(_codegen(c) for c in components)
    src = f"def _tuple_fn(t, x, p):\n    return ({body}{',' if len(components) == 1 else ''})"
    ns = {"np": np}
    exec(src, ns)  # noqa: S102 - generated from a closed expression grammar
    tuple_fn = ns["_tuple_fn"]
    n = len(components)

    def fn(t, x, p):
        vals = tuple_fn(t, np.asarray(x, dtype=float), np.asarray(p, dtype=float))
        out = np.empty((n,) + np.shape(x)[1:])
        for i, v in enumerate(vals):
            out[i] = v
        return out

    return fn


def compile_matrix(entries) -> "callable":
    """Compile a matrix of expressions into f(t, x, p) -> (rows, cols) + batch."""
    rows = len(entries)
    cols = len(entries[0])
    flat = [entries[i][j] for i in range(rows) for j in range(cols)]
    body = ", ".join(_codegen(c) for c in flat)
    src = f"def _tuple_fn(t, x, p):\n    return ({body}{',' if len(flat) == 1 else ''})"
    ns = {"np": np}
    exec(src, ns)  # noqa: S102
    tuple_fn = ns["_tuple_fn"]

    def fn(t, x, p):
        vals = tuple_fn(t, np.asarray(x, dtype=float), np.asarray(p, dtype=float))
        out = np.empty((rows, cols) + np.shape(x)[1:])
        for k, v in enumerate(vals):
            out[k // cols, k % cols] = v
        return out

    return fn


# ---------------------------------------------------------------------------
# Vector field specifications
# ---------------------------------------------------------------------------

@dataclass
class VectorFieldSpec:
    """A vector field (and optional Jacobian entries) given as expressions.

    components has exactly n_x entries; jacobian_x and jacobian_p, when
    present, have shapes n_x*n_x and n_x*n_p.  Treated as immutable; the
    compiled evaluators are cached on first use.
    """

    n_x: int
    n_p: int
    components: tuple
    jacobian_x: tuple | None = None
    jacobian_p: tuple | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.components = tuple(self.components)
        if len(self.components) != self.n_x:
            raise DimensionError(
                f"expected {self.n_x} components, got {len(self.components)}")
        if self.jacobian_x is not None:
            self.jacobian_x = tuple(tuple(row) for row in self.jacobian_x)
            _check_matrix_shape(self.jacobian_x, self.n_x, self.n_x, "jacobian_x")
        if self.jacobian_p is not None:
            self.jacobian_p = tuple(tuple(row) for row in self.jacobian_p)
            _check_matrix_shape(self.jacobian_p, self.n_x, self.n_p, "jacobian_p")
        for e in self._all_exprs():
            mx, mp = e.variables()
            if mx > self.n_x or mp > self.n_p:
                raise DimensionError(
                    f"expression references x{mx}/p{mp} beyond (n_x={self.n_x}, n_p={self.n_p})")

    @classmethod
    def from_strings(cls, n_x, n_p, components, jacobian_x=None, jacobian_p=None):
        return cls(
            n_x, n_p,
            tuple(parse(s) for s in components),
            None if jacobian_x is None else tuple(tuple(parse(s) for s in row) for row in jacobian_x),
            None if jacobian_p is None else tuple(tuple(parse(s) for s in row) for row in jacobian_p),
        )

    def _all_exprs(self):
        yield from self.components
        for mat in (self.jacobian_x, self.jacobian_p):
            if mat is not None:
                for row in mat:
                    yield from row

    @property
    def has_jacobians(self) -> bool:
        return self.jacobian_x is not None and self.jacobian_p is not None

    def field_fn(self):
        if "field" not in self._cache:
            self._cache["field"] = compile_components(self.components)
        return self._cache["field"]

    def jac_x_fn(self):
        if self.jacobian_x is None:
            return None
        if "jac_x" not in self._cache:
            self._cache["jac_x"] = compile_matrix(self.jacobian_x)
        return self._cache["jac_x"]

    def jac_p_fn(self):
        if self.jacobian_p is None:
            return None
        if "jac_p" not in self._cache:
            self._cache["jac_p"] = compile_matrix(self.jacobian_p)
        return self._cache["jac_p"]


def _check_matrix_shape(mat, rows, cols, name):
    if len(mat) != rows or any(len(r) != cols for r in mat):
        raise DimensionError(f"{name} must have shape {rows}x{cols}")


def jacobian_bounds(v: VectorFieldSpec, t_range, x: Box, p: Box):
    """Entrywise interval bounds of the Jacobian expressions over a region.

    Inclusion isotonicity of the natural extension makes the result a valid
    global bound over t_range * x * p.
    """
    if not v.has_jacobians:
        raise DomainError("vector field spec has no Jacobian expressions")
    if x.dim != v.n_x or p.dim != v.n_p:
        raise DimensionError("jacobian_bounds: box dimensions do not match the field")

    def bounds_of(mat, cols):
        lo = np.empty((v.n_x, cols))
        hi = np.empty((v.n_x, cols))
        for i in range(v.n_x):
            for j in range(cols):
                iv = eval_interval(mat[i][j], t_range, x, p)
                lo[i, j] = iv.lo
                hi[i, j] = iv.hi
        return IntervalMatrix(lo, hi)

    return bounds_of(v.jacobian_x, v.n_x), bounds_of(v.jacobian_p, v.n_p)
