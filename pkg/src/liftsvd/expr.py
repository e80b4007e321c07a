"""Scalar math expressions over an input vector x = (x1, ..., xn).

Expressions are parsed by a small recursive-descent parser into an immutable
AST and evaluated with numpy, either at a single point or over a batch of
points at once. A :class:`FunctionSpec` bundles p such expressions with their
declared induced-norm bounds and a sampling box.

Grammar (whitespace-insensitive)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := base ("^" unary)?
    base  := number | var | func "(" expr ")" | "(" expr ")" | "normx"
    var   := "x" digits          (1-based)
    func  := sin | cos | exp | abs | sqrt | sgn
"""

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, SpecError

UNARY_FUNCS = ("sin", "cos", "exp", "abs", "sqrt", "sgn")
BINARY_OPS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1-based


@dataclass(frozen=True)
class NormX:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCS
    arg: "Expression"

    def __post_init__(self):
        if self.op != "neg" and self.op not in UNARY_FUNCS:
            raise ValueError(f"unknown unary op {self.op!r}")


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expression"
    right: "Expression"

    def __post_init__(self):
        if self.op not in BINARY_OPS:
            raise ValueError(f"unknown binary op {self.op!r}")


Expression = Union[Const, Var, NormX, Unary, Binary]


# -- parsing ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)
_VAR_RE = re.compile(r"x(\d+)")


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


class _Parser:
    def __init__(self, text, n):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.n = n

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        kind, tok, offset = self.peek()
        if tok != text or kind != "op":
            found = "end of input" if kind == "end" else repr(tok)
            raise ExprSyntaxError(f"expected {text!r}, found {found}", offset)
        self.advance()

    def parse(self):
        node = self.expr()
        kind, tok, offset = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {tok!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Unary("neg", self.unary())
        return self.power()

    def power(self):
        node = self.base()
        if self.peek()[:2] == ("op", "^"):
            self.advance()
            node = Binary("^", node, self.unary())
        return node

    def base(self):
        kind, tok, offset = self.advance()
        if kind == "num":
            return Const(float(tok))
        if kind == "op" and tok == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "id":
            if tok == "normx":
                return NormX()
            m = _VAR_RE.fullmatch(tok)
            if m:
                index = int(m.group(1))
                if not 1 <= index <= self.n:
                    raise ExprSyntaxError(
                        f"variable {tok} out of range for n={self.n}", offset
                    )
                return Var(index)
            if tok in UNARY_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(tok, arg)
            raise ExprSyntaxError(f"unknown identifier {tok!r}", offset)
        found = "end of input" if kind == "end" else repr(tok)
        raise ExprSyntaxError(f"expected an operand, found {found}", offset)


def parse(text: str, n: int) -> Expression:
    """Parse ``text`` into an expression over ``n`` variables.

    Raises :class:`ExprSyntaxError` carrying the byte offset of the problem.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, n).parse()


def to_text(e: Expression) -> str:
    """Render an expression so that ``parse(to_text(e))`` rebuilds ``e``.

    Binary nodes are fully parenthesized. A negative constant has no literal
    form and prints as ``(-c)``, which reparses as ``neg(c)``.
    """
    if isinstance(e, Const):
        if e.value < 0 or (e.value == 0 and np.signbit(e.value)):
            return f"(-{-e.value!r})"
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, NormX):
        return "normx"
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{to_text(e.arg)})"
        return f"{e.op}({to_text(e.arg)})"
    return f"({to_text(e.left)} {e.op} {to_text(e.right)})"


def variables(e: Expression) -> set:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Unary):
        return variables(e.arg)
    if isinstance(e, Binary):
        return variables(e.left) | variables(e.right)
    return set()


def uses_normx(e: Expression) -> bool:
    if isinstance(e, NormX):
        return True
    if isinstance(e, Unary):
        return uses_normx(e.arg)
    if isinstance(e, Binary):
        return uses_normx(e.left) or uses_normx(e.right)
    return False


# -- evaluation ------------------------------------------------------------

class _BatchEval:
    """Evaluates one AST over N points, tracking which points left the domain."""

    def __init__(self, X):
        self.X = X
        self.ok = np.ones(X.shape[0], dtype=bool)
        self.reason = None
        self._norm = None

    def fail(self, bad, message):
        newly = bad & self.ok
        if newly.any():
            self.ok &= ~bad
            if self.reason is None:
                self.reason = message

    def norm(self):
        if self._norm is None:
            self._norm = np.linalg.norm(self.X, axis=1)
        return self._norm

    def run(self, e):
        if isinstance(e, Const):
            return np.full(self.X.shape[0], float(e.value))
        if isinstance(e, Var):
            return self.X[:, e.index - 1]
        if isinstance(e, NormX):
            return self.norm()
        if isinstance(e, Unary):
            a = self.run(e.arg)
            if e.op == "neg":
                return -a
            if e.op == "sqrt":
                self.fail(a < 0, "sqrt of a negative number")
                return np.sqrt(np.where(a < 0, 0.0, a))
            if e.op == "sgn":
                return np.sign(a)
            return getattr(np, e.op)(a)
        a = self.run(e.left)
        b = self.run(e.right)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            zero = b == 0
            self.fail(zero, "division by zero")
            return a / np.where(zero, 1.0, b)
        bad_root = (a < 0) & (b != np.round(b))
        self.fail(bad_root, "negative base with non-integer exponent")
        zero_neg = (a == 0) & (b < 0)
        self.fail(zero_neg, "division by zero (zero to a negative power)")
        return np.power(np.where(bad_root | zero_neg, 1.0, a), b)


def evaluate_batch(e: Expression, X):
    """Evaluate ``e`` at every row of ``X`` (shape (N, n)).

    Returns ``(values, valid)``. Points that hit a domain error or produce a
    non-finite value have ``valid`` False and ``values`` NaN.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ev = _BatchEval(X)
    with np.errstate(all="ignore"):
        values = np.array(ev.run(e), dtype=float, copy=True)
    ev.fail(~np.isfinite(values), "non-finite result")
    values[~ev.ok] = np.nan
    return values, ev.ok


def evaluate(e: Expression, x) -> float:
    """Evaluate ``e`` at the single point ``x``; raises DomainError off-domain."""
    X = np.asarray(x, dtype=float).reshape(1, -1)
    if not np.all(np.isfinite(X)):
        raise ValueError("x must be finite")
    ev = _BatchEval(X)
    with np.errstate(all="ignore"):
        value = float(np.asarray(ev.run(e)).reshape(-1)[0])
    if ev.reason is None and not np.isfinite(value):
        ev.reason = "non-finite result"
    if ev.reason is not None:
        raise DomainError(ev.reason)
    return value


# -- function specs --------------------------------------------------------

@dataclass(frozen=True)
class FunctionSpec:
    """A BIBO function f: R^n -> R^p given by p expressions.

    ``norm_bounds[i]`` is the user's declared upper bound on the induced norm
    of component i. ``domain_box`` holds one ``(lo, hi)`` pair per input
    coordinate and is only used for sampling.
    """

    n: int
    p: int
    components: tuple
    norm_bounds: tuple
    domain_box: tuple
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "norm_bounds", tuple(float(b) for b in self.norm_bounds))
        box = tuple((float(lo), float(hi)) for lo, hi in self.domain_box)
        if len(box) == 1 and self.n > 1:
            box = box * self.n
        object.__setattr__(self, "domain_box", box)

        if self.n < 1 or self.p < 1:
            raise SpecError("n and p must be positive")
        if len(self.components) != self.p or len(self.norm_bounds) != self.p:
            raise SpecError(
                f"expected {self.p} components and norm bounds, got "
                f"{len(self.components)} and {len(self.norm_bounds)}"
            )
        for i, b in enumerate(self.norm_bounds):
            if not np.isfinite(b) or b < 0:
                raise SpecError(f"norm bound {i} must be finite and >= 0, got {b}")
        for i, c in enumerate(self.components):
            bad = [k for k in variables(c) if not 1 <= k <= self.n]
            if bad:
                raise SpecError(f"component {i} uses variables {bad} outside 1..{self.n}")
        if len(box) != self.n:
            raise SpecError(f"domain_box needs {self.n} intervals, got {len(box)}")
        for lo, hi in box:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise SpecError(f"bad domain interval [{lo}, {hi}]")
        self._check_vanishes_at_origin()

    def _check_vanishes_at_origin(self):
        # BIBO forces f(0) = 0. Where 0 is a singular point of the expression,
        # probe a few tiny points instead and require f to shrink with x.
        origin = np.zeros((1, self.n))
        for i, c in enumerate(self.components):
            value, ok = evaluate_batch(c, origin)
            if ok[0]:
                if value[0] != 0.0:
                    raise SpecError(f"component {i} has f(0) = {value[0]!r}; BIBO requires 0")
                continue
            radius = 1e-9
            probes = radius * np.vstack([np.eye(self.n), -np.eye(self.n),
                                         np.full((1, self.n), 1 / np.sqrt(self.n))])
            value, ok = evaluate_batch(c, probes)
            if ok.any() and np.max(np.abs(value[ok])) > 1e3 * radius:
                raise SpecError(f"component {i} does not vanish at the origin")

    @property
    def m(self) -> int:
        return self.n + self.p

    @property
    def box_array(self):
        return np.array(self.domain_box, dtype=float)

    @classmethod
    def from_strings(cls, n, components, norm_bounds, domain_box, name="custom"):
        exprs = []
        for i, text in enumerate(components):
            try:
                exprs.append(parse(text, n))
            except ExprSyntaxError as exc:
                raise SpecError(f"component {i}: {exc}") from exc
        return cls(n=n, p=len(exprs), components=exprs, norm_bounds=norm_bounds,
                   domain_box=domain_box, name=name)

    @classmethod
    def from_dict(cls, data, name="custom"):
        try:
            n = int(data["n"])
            components = list(data["components"])
            spec = cls.from_strings(n, components, data["norm_bounds"],
                                    data["domain_box"], name=data.get("name", name))
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed function spec: {exc!r}") from exc
        if "p" in data and int(data["p"]) != spec.p:
            raise SpecError(f"p={data['p']} but {spec.p} components given")
        return spec

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise SpecError(f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data, name=path.stem)

    def to_dict(self):
        return {
            "name": self.name,
            "n": self.n,
            "p": self.p,
            "components": [to_text(c) for c in self.components],
            "norm_bounds": list(self.norm_bounds),
            "domain_box": [list(iv) for iv in self.domain_box],
        }


def eval_f(f: FunctionSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != f.n:
        raise ValueError(f"expected x of length {f.n}, got {x.shape[0]}")
    out = np.empty(f.p)
    for i, c in enumerate(f.components):
        try:
            out[i] = evaluate(c, x)
        except DomainError as exc:
            raise DomainError(str(exc), component=i) from exc
    return out


def eval_f_batch(f: FunctionSpec, X):
    """Evaluate all components at each row of X -> ``(F, valid)`` with F of shape (N, p)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != f.n:
        raise ValueError(f"expected points of dimension {f.n}, got {X.shape[1]}")
    F = np.empty((X.shape[0], f.p))
    valid = np.ones(X.shape[0], dtype=bool)
    for i, c in enumerate(f.components):
        F[:, i], ok = evaluate_batch(c, X)
        valid &= ok
    return F, valid


# -- builtins --------------------------------------------------------------

SISO_TEXT = "0.5*(x1*sin(x1)+x1*cos(x1^2))"

# The second term is printed malformed in the source; it is read as cos(3*x1/x2).
MIMO_TERMS = (
    (1.0, "sin(0.1*x1*x2)"),
    (0.1, "cos(3*x1/x2)"),
    (0.4, "sin(20*x1)"),
    (0.3, "cos(x2+4)"),
    (0.3, "sin(0.1*exp(x1))"),
    (0.2, "cos(1/x1^2)"),
    (0.1, "sin(0.1*(x1+x2))"),
    (0.1, "cos(0.001*x2^2)"),
)
MIMO_SCALE = 2.5


def builtin_siso() -> FunctionSpec:
    """f(x) = (x sin x + x cos x^2) / 2 on [-20, 20]; induced norm at most 1."""
    return FunctionSpec.from_strings(1, [SISO_TEXT], [1.0], [(-20.0, 20.0)], name="siso")


def builtin_mimo() -> FunctionSpec:
    """f(x) = (||x|| / 2.5) * sum of eight bounded sinusoids, n=2, p=1.

    The declared bound is the sum of the sinusoid amplitudes over 2.5, i.e. 1.
    """
    body = " + ".join(f"{amp!r}*{term}" for amp, term in MIMO_TERMS)
    text = f"normx/{MIMO_SCALE!r}*({body})"
    return FunctionSpec.from_strings(2, [text], [1.0], [(-10.0, 10.0), (-10.0, 10.0)],
                                     name="mimo")


BUILTINS = {"siso": builtin_siso, "mimo": builtin_mimo}
