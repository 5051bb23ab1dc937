"""Small expression trees for the input map ``g(x)`` and the derived ``B(x)``.

Expressions are built from real constants, state variables, sums, products,
non-negative integer powers and ``sin``/``cos``/``exp``. Simplification
expands everything into a sum of coefficient * product-of-atom-powers,
where atoms are state variables and function applications; that folds
constants, flattens nested sums/products and merges powers, and nothing
more (no trigonometric identities).
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .poly_core import Monomial

FUNCTIONS = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


class ExprError(ValueError):
    """Malformed or unsupported expression."""

    def __init__(self, msg: str, col: int | None = None):
        super().__init__(msg)
        self.col = col


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self) -> str:
        return _fmt_number(self.value)


@dataclass(frozen=True)
class Var:
    index: int  # 1-based

    def __str__(self) -> str:
        return f"x{self.index}"


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = str(self.terms[0])
        for t in self.terms[1:]:
            s = str(t)
            out += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
        return out


@dataclass(frozen=True)
class Prod:
    factors: tuple

    def __str__(self) -> str:
        if not self.factors:
            return "1"
        parts = []
        for f in self.factors:
            s = str(f)
            parts.append(f"({s})" if isinstance(f, Sum) else s)
        if isinstance(self.factors[0], Const) and self.factors[0].value == -1 and len(parts) > 1:
            return "-" + "*".join(parts[1:])
        return "*".join(parts)


@dataclass(frozen=True)
class Pow:
    base: "InputExpr"
    exp: int

    def __post_init__(self):
        if not isinstance(self.exp, int) or self.exp < 0:
            raise ExprError(f"powers must be non-negative integers, got {self.exp!r}")

    def __str__(self) -> str:
        b = str(self.base)
        if not isinstance(self.base, (Var, Func)) and not (isinstance(self.base, Const) and self.base.value >= 0):
            b = f"({b})"
        return f"{b}^{self.exp}"


@dataclass(frozen=True)
class Func:
    name: str
    arg: "InputExpr"

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ExprError(f"unknown function {self.name!r}")

    def __str__(self) -> str:
        return f"{self.name}({self.arg})"


InputExpr = Union[Const, Var, Sum, Prod, Pow, Func]

ZERO = Const(0.0)
ONE = Const(1.0)


def _fmt_number(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


# ---------------------------------------------------------------------------
# parsing

_BINOPS = {ast.Add, ast.Sub, ast.Mult, ast.Pow}


def parse_expr(text: str, n_x: int | None = None) -> InputExpr:
    """Parse ``"x1*x2^2 + sin(x3)"``-style text. ``^`` and ``**`` both mean power."""
    src = text.replace("^", "**")
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExprError(f"cannot parse expression {text!r}: {exc.msg}", exc.offset) from None
    return _convert(tree.body, text, n_x)


def _flat(kind, items) -> InputExpr:
    out = []
    for it in items:
        if isinstance(it, kind):
            out.extend(it.terms if kind is Sum else it.factors)
        else:
            out.append(it)
    return kind(tuple(out))


def _convert(node: ast.AST, text: str, n_x: int | None) -> InputExpr:
    col = getattr(node, "col_offset", None)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Const(float(node.value))
    if isinstance(node, ast.Name):
        name = node.id
        if name.startswith("x") and name[1:].isdigit():
            i = int(name[1:])
            if i < 1 or (n_x is not None and i > n_x):
                raise ExprError(f"state variable {name} out of range in {text!r}", col)
            return Var(i)
        raise ExprError(f"unknown symbol {name!r} in {text!r}", col)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _convert(node.operand, text, n_x)
        return inner if isinstance(node.op, ast.UAdd) else _flat(Prod, (Const(-1.0), inner))
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        left = _convert(node.left, text, n_x)
        if isinstance(node.op, ast.Pow):
            exp = node.right
            if isinstance(exp, ast.Constant) and isinstance(exp.value, int) and exp.value >= 0:
                return Pow(left, exp.value)
            raise ExprError(f"exponent must be a non-negative integer literal in {text!r}", col)
        right = _convert(node.right, text, n_x)
        if isinstance(node.op, ast.Add):
            return _flat(Sum, (left, right))
        if isinstance(node.op, ast.Sub):
            return _flat(Sum, (left, _flat(Prod, (Const(-1.0), right))))
        return _flat(Prod, (left, right))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        if node.func.id not in FUNCTIONS:
            raise ExprError(f"unknown function {node.func.id!r} in {text!r}", col)
        if len(node.args) != 1:
            raise ExprError(f"{node.func.id} takes one argument", col)
        return Func(node.func.id, _convert(node.args[0], text, n_x))
    raise ExprError(f"unsupported construct in {text!r}", col)


# ---------------------------------------------------------------------------
# evaluation

def evaluate(e: InputExpr, x: Sequence[float]) -> float:
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return float(x[e.index - 1])
    if isinstance(e, Sum):
        return sum((evaluate(t, x) for t in e.terms), 0.0)
    if isinstance(e, Prod):
        return math.prod(evaluate(f, x) for f in e.factors)
    if isinstance(e, Pow):
        return evaluate(e.base, x) ** e.exp
    if isinstance(e, Func):
        return FUNCTIONS[e.name](evaluate(e.arg, x))
    raise TypeError(f"not an expression: {e!r}")


def to_source(e: InputExpr, var: str = "x") -> str:
    """Python source for ``e`` reading state ``i`` from ``var[i-1]``."""
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return f"{var}[{e.index - 1}]"
    if isinstance(e, Sum):
        return "(" + " + ".join(to_source(t, var) for t in e.terms) + ")" if e.terms else "0.0"
    if isinstance(e, Prod):
        return "(" + " * ".join(to_source(f, var) for f in e.factors) + ")" if e.factors else "1.0"
    if isinstance(e, Pow):
        return f"({to_source(e.base, var)} ** {e.exp})"
    if isinstance(e, Func):
        return f"_{e.name}({to_source(e.arg, var)})"
    raise TypeError(f"not an expression: {e!r}")


def compile_matrix(rows: Sequence[Sequence[InputExpr]]) -> Callable[[Sequence[float]], np.ndarray]:
    """Compile a matrix of expressions into ``x -> ndarray``.

    Only the leading ``max variable index`` entries of the argument are read,
    so the same function evaluates ``B(x)`` from a state and ``B_z(z)`` from a
    lifted vector whose first entries are the states.
    """
    body = "(" + ", ".join("(" + "".join(to_source(e) + ", " for e in row) + ")" for row in rows) + ",)"
    env = {f"_{k}": v for k, v in FUNCTIONS.items()}
    fn = eval(compile(f"lambda x: {body}", "<input-map>", "eval"), env)  # noqa: S307 - generated from a closed grammar
    shape = (len(rows), len(rows[0]) if rows else 0)

    def evaluate_matrix(x):
        return np.array(fn(x), dtype=float).reshape(shape)

    return evaluate_matrix


# ---------------------------------------------------------------------------
# simplification

def _atom_key(a: InputExpr) -> tuple:
    if isinstance(a, Var):
        return (0, a.index, "")
    return (1, 0, str(a))


def _term_key(key: tuple) -> tuple:
    # key is a tuple of (atom, power) pairs; order like graded lex on variables
    deg = sum(p for _, p in key)
    return (deg, tuple((_atom_key(a), -p) for a, p in key))


def _mul_keys(k1: tuple, k2: tuple) -> tuple:
    acc: dict = {}
    for a, p in k1 + k2:
        acc[a] = acc.get(a, 0) + p
    return tuple(sorted(acc.items(), key=lambda ap: _atom_key(ap[0])))


def _mul_terms(t1: dict, t2: dict) -> dict:
    out: dict = {}
    for k1, c1 in t1.items():
        for k2, c2 in t2.items():
            k = _mul_keys(k1, k2)
            out[k] = out.get(k, 0.0) + c1 * c2
    return {k: c for k, c in out.items() if c != 0.0}


def _terms(e: InputExpr) -> dict:
    if isinstance(e, Const):
        return {(): e.value} if e.value != 0.0 else {}
    if isinstance(e, Var):
        return {((e, 1),): 1.0}
    if isinstance(e, Sum):
        out: dict = {}
        for t in e.terms:
            for k, c in _terms(t).items():
                out[k] = out.get(k, 0.0) + c
        return {k: c for k, c in out.items() if c != 0.0}
    if isinstance(e, Prod):
        out = {(): 1.0}
        for f in e.factors:
            out = _mul_terms(out, _terms(f))
        return out
    if isinstance(e, Pow):
        base = _terms(e.base)
        out = {(): 1.0}
        for _ in range(e.exp):
            out = _mul_terms(out, base)
        return out
    if isinstance(e, Func):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            v = FUNCTIONS[e.name](arg.value)
            return {(): v} if v != 0.0 else {}
        return {((Func(e.name, arg), 1),): 1.0}
    raise TypeError(f"not an expression: {e!r}")


def _from_terms(terms: dict) -> InputExpr:
    if not terms:
        return ZERO
    out = []
    for key in sorted(terms, key=_term_key):
        c = terms[key]
        factors = [a if p == 1 else Pow(a, p) for a, p in key]
        if c != 1.0 or not factors:
            factors.insert(0, Const(c))
        out.append(factors[0] if len(factors) == 1 else Prod(tuple(factors)))
    return out[0] if len(out) == 1 else Sum(tuple(out))


def simplify(e: InputExpr) -> InputExpr:
    return _from_terms(_terms(e))


def equivalent(e1: InputExpr, e2: InputExpr) -> bool:
    """Structural equality after simplification."""
    return _terms(e1) == _terms(e2)


def from_monomial(coeff: float, m: Monomial) -> InputExpr:
    if coeff == 0:
        return ZERO
    factors = [Var(i) if e == 1 else Pow(Var(i), e) for i, e in enumerate(m.exponents, start=1) if e]
    if coeff != 1 or not factors:
        factors.insert(0, Const(float(coeff)))
    return factors[0] if len(factors) == 1 else Prod(tuple(factors))


def max_var(e: InputExpr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Const):
        return 0
    if isinstance(e, (Sum, Prod)):
        kids = e.terms if isinstance(e, Sum) else e.factors
        return max((max_var(k) for k in kids), default=0)
    if isinstance(e, Pow):
        return max_var(e.base)
    return max_var(e.arg)
