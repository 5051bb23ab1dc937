"""Ready-made systems: the fourth-order showcase and a random triangular generator."""

from __future__ import annotations

import numpy as np

from . import inputexpr as ie
from .lifting import SystemSpec
from .poly_core import Monomial, ParamId, ParamLinForm, ParamPolynomial


def make_system(n_x: int, terms: dict[int, list[tuple[tuple[int, ...], float | None]]], a: dict[int, float] | float | None = None, g=None) -> SystemSpec:
    """Build a system from ``{state: [(exponents, value), ...]}``.

    Each polynomial term gets its own coefficient ``alpha^state_{j_1..j_{state-1}}``
    bound to ``value`` (left unbound when ``value`` is None). Entries of
    ``g`` may be expression strings.
    """
    params: dict[ParamId, float] = {}
    linear = []
    for i in range(1, n_x + 1):
        p = ParamId.linear(i)
        linear.append(p)
        v = a.get(i) if isinstance(a, dict) else a
        if v is not None:
            params[p] = float(v)
    nonlinear = []
    for i in range(1, n_x + 1):
        poly = []
        for exps, value in terms.get(i, []):
            m = Monomial(tuple(exps))
            if i == 1:
                raise ValueError("state 1 has no polynomial part")
            p = ParamId.poly(i, m.exponents[: i - 1])
            poly.append((m, ParamLinForm.of(p)))
            if value is not None:
                params[p] = float(value)
        nonlinear.append(ParamPolynomial(n_x, poly))
    if g is not None:
        g = tuple(tuple(ie.parse_expr(e, n_x) if isinstance(e, str) else e for e in row) for row in g)
    return SystemSpec(n_x, linear, nonlinear, params, g)


def fourth_order_example(a: float = -0.5, alpha: float = -0.2, with_input: bool = False) -> SystemSpec:
    """The four-state showcase system, optionally with ``g = [1, x1, x2^2, sin(x3)]^T``."""
    terms = {
        2: [((3, 0, 0, 0), alpha)],
        3: [((1, 1, 0, 0), alpha), ((0, 2, 0, 0), alpha)],
        4: [((1, 1, 1, 0), alpha)],
    }
    g = None
    if with_input:
        g = [[ie.parse_expr(s, 4)] for s in ("1", "x1", "x2^2", "sin(x3)")]
    return make_system(4, terms, a, g)


# Observable order of the published state matrix and Jacobian.
REFERENCE_ORDER = [
    (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1),
    (3, 0, 0, 0), (1, 1, 0, 0), (0, 2, 0, 0), (4, 0, 0, 0), (3, 1, 0, 0), (6, 0, 0, 0),
    (1, 1, 1, 0), (4, 0, 1, 0), (2, 2, 0, 0), (1, 3, 0, 0), (5, 1, 0, 0), (4, 2, 0, 0),
    (8, 0, 0, 0), (7, 1, 0, 0), (10, 0, 0, 0),
]


def random_triangular_system(
    rng: np.random.Generator,
    max_states: int = 5,
    max_terms: int = 3,
    max_degree: int = 3,
    constant_terms: bool = False,
) -> SystemSpec:
    """Random stable lower-triangular system with bound parameters.

    ``max_degree`` bounds each variable's exponent in a term. Linear
    coefficients are drawn from ``[-1, -0.1]``, polynomial ones from ``[-0.5, 0.5]``.
    """
    n_x = int(rng.integers(1, max_states + 1))
    terms: dict[int, list] = {}
    for i in range(2, n_x + 1):
        seen = set()
        for _ in range(int(rng.integers(0, max_terms + 1))):
            exps = tuple(int(e) for e in rng.integers(0, max_degree + 1, size=i - 1)) + (0,) * (n_x - i + 1)
            if not constant_terms and not any(exps):
                continue
            if exps in seen:
                continue
            seen.add(exps)
            terms.setdefault(i, []).append((exps, float(rng.uniform(-0.5, 0.5))))
    a = {i: float(rng.uniform(-1.0, -0.1)) for i in range(1, n_x + 1)}
    return make_system(n_x, terms, a)
