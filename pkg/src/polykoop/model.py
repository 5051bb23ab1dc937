"""Symbolic lifted model: state matrix A, selection C, Jacobian dPhi/dx and B(x)."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from . import inputexpr as ie
from .lifting import LiftingSet, SystemSpec, compute_lifting, lie_derivative
from .poly_core import (
    ZERO_FORM,
    DimensionError,
    Monomial,
    ParamAssignment,
    ParamId,
    ParamLinForm,
    UnboundParameterError,
    mono_partial,
    plf_eval,
)

# Jacobian entry: integer coefficient times monomial; coefficient 0 means zero.
JacEntry = tuple[int, Monomial]


class ClosureError(RuntimeError):
    """A Lie derivative produced a monomial outside the lifting."""


@dataclass(frozen=True)
class KoopmanModel:
    phi: LiftingSet
    A: tuple[tuple[ParamLinForm, ...], ...]
    J: tuple[tuple[JacEntry, ...], ...]
    B: tuple[tuple[ie.InputExpr, ...], ...] | None = None
    params: Mapping[ParamId, float] = field(default_factory=dict)

    @property
    def n_x(self) -> int:
        return self.phi.n_x

    @property
    def n_f(self) -> int:
        return len(self.phi)

    @property
    def n_u(self) -> int:
        return len(self.B[0]) if self.B else 0

    @property
    def C(self) -> np.ndarray:
        C = np.zeros((self.n_x, self.n_f))
        C[:, : self.n_x] = np.eye(self.n_x)
        return C

    @cached_property
    def A_entries(self) -> tuple[tuple[int, int, ParamLinForm], ...]:
        return nonzero_entries(self.A)


def nonzero_entries(A: Sequence[Sequence[ParamLinForm]]) -> tuple[tuple[int, int, ParamLinForm], ...]:
    """``(row, col, form)`` for every non-zero entry, row-major."""
    out = []
    for r, row in enumerate(A):
        # identity test first: built matrices share one ZERO_FORM object
        out.extend((r, c, f) for c, f in enumerate(row) if f is not ZERO_FORM and f)
    return tuple(out)


def _build_A(phi: LiftingSet, spec: SystemSpec):
    n = len(phi)
    rows, entries = [], []
    for k, obs in enumerate(phi):
        row = [ZERO_FORM] * n
        found = []
        for m, form in lie_derivative(obs, spec).items():
            try:
                c = phi.index(m)
            except KeyError:
                raise ClosureError(f"d/dt({obs}) contains {m}, which is not an observable") from None
            row[c] = form
            found.append((k, c, form))
        rows.append(tuple(row))
        entries.extend(sorted(found))
    return tuple(rows), tuple(entries)


def build_A(phi: LiftingSet, spec: SystemSpec) -> tuple[tuple[ParamLinForm, ...], ...]:
    """Row ``k`` holds the coordinates of ``d phi_k / dt`` in the basis ``phi``."""
    return _build_A(phi, spec)[0]


def _with_entries(model: KoopmanModel, entries) -> KoopmanModel:
    # seed the cached_property so large models never scan their zeros
    model.__dict__["A_entries"] = entries
    return model


def build_jacobian(phi: LiftingSet) -> tuple[tuple[JacEntry, ...], ...]:
    one = Monomial.one(phi.n_x)
    rows = []
    for obs in phi:
        row = []
        for i in range(1, phi.n_x + 1):
            d = mono_partial(obs, i)
            row.append(d if d is not None else (0, one))
        rows.append(tuple(row))
    return tuple(rows)


def jacobian_expr(entry: JacEntry) -> ie.InputExpr:
    c, m = entry
    return ie.from_monomial(c, m)


def build_B(J: Sequence[Sequence[JacEntry]], g: Sequence[Sequence[ie.InputExpr]]) -> tuple[tuple[ie.InputExpr, ...], ...]:
    """``B(x) = dPhi/dx(x) g(x)``, simplified entry by entry."""
    n_x = len(J[0]) if J else 0
    if len(g) != n_x:
        raise DimensionError(f"input map has {len(g)} rows, expected {n_x}")
    n_u = len(g[0]) if g else 0
    out = []
    for jrow in J:
        row = []
        for u in range(n_u):
            products = [
                ie.Prod((jacobian_expr(jrow[i]), g[i][u])) for i in range(n_x) if jrow[i][0] != 0
            ]
            row.append(ie.simplify(ie.Sum(tuple(products))))
        out.append(tuple(row))
    return tuple(out)


def build_model(spec: SystemSpec, phi: LiftingSet | None = None) -> KoopmanModel:
    phi = phi if phi is not None else compute_lifting(spec)
    J = build_jacobian(phi)
    B = build_B(J, spec.g) if spec.has_input else None
    A, entries = _build_A(phi, spec)
    return _with_entries(KoopmanModel(phi, A, J, B, dict(spec.params)), entries)


def reorder(model: KoopmanModel, order: Sequence[Monomial]) -> KoopmanModel:
    """Permute observables to ``order``; the state block must stay in place."""
    order = tuple(order)
    if len(order) != model.n_f or set(order) != set(model.phi.observables):
        raise ValueError("order must be a permutation of the model's observables")
    if order[: model.n_x] != model.phi.observables[: model.n_x]:
        raise ValueError("the state observables x_1..x_n must keep positions 1..n")
    perm = [model.phi.index(m) for m in order]
    A = tuple(tuple(model.A[r][c] for c in perm) for r in perm)
    J = tuple(model.J[r] for r in perm)
    B = tuple(model.B[r] for r in perm) if model.B is not None else None
    new_index = {old: new for new, old in enumerate(perm)}
    entries = sorted((new_index[r], new_index[c], f) for r, c, f in model.A_entries)
    return _with_entries(KoopmanModel(LiftingSet(order, model.n_x), A, J, B, model.params), tuple(entries))


def permutation_matrix(model: KoopmanModel, order: Sequence[Monomial]) -> np.ndarray:
    """``P`` with ``P @ Phi_old = Phi_new``."""
    P = np.zeros((model.n_f, model.n_f))
    for new, m in enumerate(order):
        P[new, model.phi.index(m)] = 1.0
    return P


# ---------------------------------------------------------------------------
# numeric evaluation

def exponent_matrix(phi: LiftingSet) -> np.ndarray:
    return np.array([m.exponents for m in phi], dtype=float)


def lift(phi: LiftingSet, x) -> np.ndarray:
    """``Phi(x)``; ``x`` may be one state or a batch with states along the last axis."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != phi.n_x:
        raise DimensionError(f"state of length {x.shape[-1]}, lifting over {phi.n_x} states")
    return np.prod(np.power(x[..., None, :], exponent_matrix(phi)), axis=-1)


def numeric_A(A: Sequence[Sequence[ParamLinForm]], params: ParamAssignment, entries=None) -> np.ndarray:
    entries = nonzero_entries(A) if entries is None else entries
    out = np.zeros((len(A), len(A)))
    for r, c, f in entries:
        out[r, c] = plf_eval(f, params)
    return out


def apply_A(model: KoopmanModel, params: ParamAssignment, v) -> np.ndarray:
    """``v @ A.T`` for a batch of lifted vectors, using only the non-zero entries of A."""
    v = np.atleast_2d(np.asarray(v, dtype=float))
    entries = model.A_entries
    out = np.zeros((model.n_f, v.shape[0]))
    if entries:
        rows = np.fromiter((e[0] for e in entries), dtype=np.intp, count=len(entries))
        cols = np.fromiter((e[1] for e in entries), dtype=np.intp, count=len(entries))
        vals = np.fromiter((plf_eval(e[2], params) for e in entries), dtype=float, count=len(entries))
        np.add.at(out, rows, vals[:, None] * v[:, cols].T)
    return out.T


def numeric_jacobian(J: Sequence[Sequence[JacEntry]], x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n_f, n_x = len(J), len(J[0])
    coeff = np.array([[c for c, _ in row] for row in J], dtype=float)
    exps = np.array([[m.exponents for _, m in row] for row in J], dtype=float)
    vals = np.prod(np.power(x[..., None, None, :], exps), axis=-1)
    return (coeff * vals).reshape(x.shape[:-1] + (n_f, n_x))


def _poly_source(spec: SystemSpec, params: ParamAssignment) -> list[str]:
    out = []
    for poly in spec.vector_field:
        terms = []
        for m, form in poly.items():
            c = plf_eval(form, params)
            factors = [repr(c)] + [
                f"x[{i}]" if e == 1 else f"x[{i}] ** {e}" for i, e in enumerate(m.exponents) if e
            ]
            terms.append(" * ".join(factors))
        out.append(" + ".join(terms) if terms else "0.0")
    return out


def vector_field(spec: SystemSpec, params: ParamAssignment | None = None) -> Callable[[Sequence[float]], np.ndarray]:
    """Compile the autonomous right-hand side ``f(x)`` into a fast numeric callable."""
    params = spec.params if params is None else params
    body = ", ".join(_poly_source(spec, params))
    fn = eval(compile(f"lambda x: ({body},)", "<vector-field>", "eval"), {})  # noqa: S307 - generated source

    def f(x):
        return np.array(fn(x), dtype=float)

    return f


def residual(model: KoopmanModel, spec: SystemSpec, x) -> float | np.ndarray:
    """``|| dPhi/dx(x) f(x) - A Phi(x) ||_inf``; a batch of states gives one value per state."""
    params = model.params or spec.params
    x = np.asarray(x, dtype=float)
    f = vector_field(spec, params)
    batch = x.reshape(-1, spec.n_x)
    fx = np.array([f(xi) for xi in batch])
    lhs = np.einsum("nki,ni->nk", numeric_jacobian(model.J, batch), fx)
    rhs = apply_A(model, params, lift(model.phi, batch))
    r = np.max(np.abs(lhs - rhs), axis=-1, initial=0.0)
    return float(r[0]) if x.ndim == 1 else r


def residual_bound(model: KoopmanModel, x, rtol: float = 1e-12) -> float | np.ndarray:
    """Tolerance ``rtol * (1 + ||A Phi(x)||_inf)`` used by the exactness checks."""
    x = np.asarray(x, dtype=float)
    scale = np.max(np.abs(apply_A(model, model.params, lift(model.phi, x.reshape(-1, model.n_x)))), axis=-1, initial=0.0)
    b = rtol * (1.0 + scale)
    return float(b[0]) if x.ndim == 1 else b


@dataclass(frozen=True)
class NumericModel:
    """Model with all parameters substituted.

    ``B_x`` evaluates the input matrix from an original state, ``B_z`` from
    a lifted vector; both share one compiled function since the states sit
    in the first ``n_x`` lifted coordinates.
    """

    phi: LiftingSet
    A: np.ndarray
    _B: Callable | None = None

    @property
    def n_x(self) -> int:
        return self.phi.n_x

    @property
    def n_f(self) -> int:
        return len(self.phi)

    @property
    def has_input(self) -> bool:
        return self._B is not None

    @property
    def C(self) -> np.ndarray:
        C = np.zeros((self.n_x, self.n_f))
        C[:, : self.n_x] = np.eye(self.n_x)
        return C

    def lift(self, x) -> np.ndarray:
        return lift(self.phi, x)

    def B_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_x,):
            raise DimensionError(f"expected a state of length {self.n_x}")
        return self._B(x)

    def B_z(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.n_f,):
            raise DimensionError(f"expected a lifted vector of length {self.n_f}")
        # scheduling p = z; the compiled B only reads z[0:n_x]
        return self._B(z)


def eval_numeric(model: KoopmanModel, params: ParamAssignment | None = None) -> NumericModel:
    params = model.params if params is None else params
    for _, _, form in model.A_entries:
        for p in form.params():
            if p not in params:
                raise UnboundParameterError(p)
    B = ie.compile_matrix(model.B) if model.B is not None else None
    return NumericModel(model.phi, numeric_A(model.A, params, model.A_entries), B)
