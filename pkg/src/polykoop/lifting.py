"""Lower-triangular polynomial systems and their exact monomial lifting.

A system ``dx_i/dt = a_i x_i + f_i(x_1, ..., x_{i-1})`` has a finite set of
monomial observables that is closed under the Lie derivative. The closure
is computed with a FIFO worklist over the monomials that actually appear,
so no power grid is ever materialized.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .poly_core import (
    DimensionError,
    Monomial,
    ParamAssignment,
    ParamId,
    ParamLinForm,
    ParamPolynomial,
    mono_mul,
    mono_partial,
    poly_add,
)

DEFAULT_CAP = 100_000


class StructureError(ValueError):
    """Raised when an operation needs a lower-triangular system and did not get one."""

    def __init__(self, violations: Sequence["StructureViolation"]):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class LiftingCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemSpec:
    """Control-affine polynomial system ``dx/dt = f(x) + g(x) u``.

    ``linear[i-1]`` is the parameter ``a_i`` and ``nonlinear[i-1]`` the
    polynomial ``f_i``. ``g`` is an ``n_x x n_u`` nested tuple of
    :class:`~polykoop.inputexpr.InputExpr`, or ``None`` for autonomous
    systems.
    """

    n_x: int
    linear: tuple[ParamId, ...]
    nonlinear: tuple[ParamPolynomial, ...]
    params: Mapping[ParamId, float] = field(default_factory=dict)
    g: tuple[tuple, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "linear", tuple(self.linear))
        object.__setattr__(self, "nonlinear", tuple(self.nonlinear))
        object.__setattr__(self, "params", dict(self.params))
        if self.g is not None:
            object.__setattr__(self, "g", tuple(tuple(row) for row in self.g))
        if self.n_x < 1:
            raise ValueError("n_x must be positive")
        if len(self.linear) != self.n_x or len(self.nonlinear) != self.n_x:
            raise DimensionError(
                f"expected {self.n_x} linear coefficients and nonlinear parts, "
                f"got {len(self.linear)} and {len(self.nonlinear)}"
            )
        for p in self.nonlinear:
            if p.n_x != self.n_x:
                raise DimensionError(f"nonlinear part over {p.n_x} states in a {self.n_x}-state system")
        if self.g is not None:
            if len(self.g) != self.n_x or len({len(r) for r in self.g}) > 1:
                raise DimensionError("input map must be an n_x x n_u matrix")

    def __eq__(self, other) -> bool:
        if not isinstance(other, SystemSpec):
            return NotImplemented
        return (
            self.n_x == other.n_x
            and self.linear == other.linear
            and [p.label for p in self.linear] == [p.label for p in other.linear]
            and self.nonlinear == other.nonlinear
            and self._labels() == other._labels()
            and dict(self.params) == dict(other.params)
            and self.g == other.g
        )

    __hash__ = None

    def _labels(self) -> dict:
        return {p: p.label for p in self.parameters()}

    @property
    def n_u(self) -> int:
        if self.g is None:
            return 0
        return len(self.g[0]) if self.g else 0

    @property
    def has_input(self) -> bool:
        return self.g is not None and self.n_u > 0

    @cached_property
    def vector_field(self) -> tuple[ParamPolynomial, ...]:
        """Right-hand sides ``a_i x_i + f_i`` as parameterized polynomials."""
        out = []
        for i, (a, f) in enumerate(zip(self.linear, self.nonlinear), start=1):
            lin = ParamPolynomial.term(Monomial.var(i, self.n_x), ParamLinForm.of(a))
            out.append(poly_add(lin, f))
        return tuple(out)

    def parameters(self) -> list[ParamId]:
        seen: dict[ParamId, None] = {}
        for a in self.linear:
            seen.setdefault(a, None)
        for f in self.nonlinear:
            for form in f.terms.values():
                for p in form.params():
                    seen.setdefault(p, None)
        return list(seen)

    def unbound(self) -> list[ParamId]:
        return [p for p in self.parameters() if p not in self.params]

    def with_params(self, params: ParamAssignment) -> "SystemSpec":
        merged = dict(self.params)
        merged.update(params)
        return SystemSpec(self.n_x, self.linear, self.nonlinear, merged, self.g)

    def with_input(self, g) -> "SystemSpec":
        return SystemSpec(self.n_x, self.linear, self.nonlinear, self.params, g)


@dataclass(frozen=True)
class StructureViolation:
    state: int
    monomial: Monomial | None
    reason: str

    def __str__(self) -> str:
        where = f"state {self.state}"
        if self.monomial is not None:
            where += f", monomial {self.monomial}"
        return f"{where}: {self.reason}"


def _allowed(i: int) -> str:
    return "x1" if i == 2 else f"x1..x{i - 1}"


def validate_structure(spec: SystemSpec) -> list[StructureViolation]:
    """Check the lower-triangular form; an empty list means the system is valid."""
    out: list[StructureViolation] = []
    for i, (a, f) in enumerate(zip(spec.linear, spec.nonlinear), start=1):
        if not a.is_linear or a.state != i:
            out.append(StructureViolation(i, None, f"linear coefficient {a.label} does not belong to state {i}"))
        for m in f:
            bad = [k + 1 for k in range(i - 1, spec.n_x) if m.exponents[k]]
            if bad:
                names = ", ".join(f"x{k}" for k in bad)
                out.append(StructureViolation(i, m, f"depends on {names}; f_{i} may only use {_allowed(i)}"))
            elif i == 1:
                out.append(StructureViolation(i, m, "state 1 must be purely linear"))
    return out


def require_valid(spec: SystemSpec) -> None:
    violations = validate_structure(spec)
    if violations:
        raise StructureError(violations)


def lie_derivative(m: Monomial, spec: SystemSpec) -> ParamPolynomial:
    """Time derivative of the observable ``m`` along the autonomous vector field."""
    if m.n_x != spec.n_x:
        raise DimensionError(f"monomial over {m.n_x} states, system has {spec.n_x}")
    # sum_i j_i * (m / x_i) * (a_i x_i + f_i), accumulated before canonicalising once
    acc: dict[Monomial, dict[ParamId, object]] = {}
    for i in range(1, spec.n_x + 1):
        d = mono_partial(m, i)
        if d is None:
            continue
        j, rest = d
        for k, form in spec.vector_field[i - 1].items():
            slot = acc.setdefault(mono_mul(rest, k), {})
            for p, c in form.items():
                slot[p] = slot.get(p, 0) + j * c
    return ParamPolynomial(spec.n_x, ((mon, ParamLinForm(terms)) for mon, terms in acc.items()))


@dataclass(frozen=True)
class LiftingSet:
    """Ordered observables ``Phi``; the first ``n_x`` entries are ``x_1..x_n``."""

    observables: tuple[Monomial, ...]
    n_x: int
    lookup: Mapping[Monomial, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        obs = tuple(self.observables)
        object.__setattr__(self, "observables", obs)
        lookup = {m: k for k, m in enumerate(obs)}
        if len(lookup) != len(obs):
            raise ValueError("duplicate observables")
        if any(m.n_x != self.n_x for m in obs):
            raise DimensionError("observables over mixed state dimensions")
        if obs[: self.n_x] != tuple(Monomial.var(i, self.n_x) for i in range(1, self.n_x + 1)):
            raise ValueError("the first n_x observables must be x_1..x_n in order")
        object.__setattr__(self, "lookup", lookup)

    def __len__(self) -> int:
        return len(self.observables)

    def __iter__(self) -> Iterator[Monomial]:
        return iter(self.observables)

    def __getitem__(self, k: int) -> Monomial:
        return self.observables[k]

    def __contains__(self, m: object) -> bool:
        return m in self.lookup

    def index(self, m: Monomial) -> int:
        return self.lookup[m]


def _closure(seeds: Iterable[Monomial], spec: SystemSpec, cap: int) -> list[Monomial]:
    order = list(seeds)
    seen = set(order)
    queue = deque(order)
    while queue:
        phi = queue.popleft()
        fresh = sorted(m for m in lie_derivative(phi, spec) if m not in seen)
        for m in fresh:
            seen.add(m)
            order.append(m)
            queue.append(m)
        if len(order) > cap:
            raise LiftingCapExceeded(
                f"lifting exceeded {cap} observables; check the system structure or raise the cap"
            )
    return order


def compute_lifting(spec: SystemSpec, cap: int = DEFAULT_CAP) -> LiftingSet:
    """Close ``{x_1, ..., x_n}`` under the Lie derivative.

    New monomials are appended in discovery order; the monomials first seen
    in one derivative are appended in graded-lex order. Parameter values are
    never consulted, so a parameter bound to zero still contributes.
    """
    require_valid(spec)
    seeds = [Monomial.var(i, spec.n_x) for i in range(1, spec.n_x + 1)]
    return LiftingSet(tuple(_closure(seeds, spec, cap)), spec.n_x)


def decompose_per_state(phi: LiftingSet, spec: SystemSpec) -> list[list[Monomial]]:
    """Split ``phi`` into ``W_1..W_n``.

    ``W_i`` holds the observables that first appear in the closure of
    ``{x_1, ..., x_i}``, listed in ``phi`` order with ``x_i`` first.
    """
    require_valid(spec)
    owner: dict[Monomial, int] = {}
    for i in range(1, spec.n_x + 1):
        seeds = [Monomial.var(k, spec.n_x) for k in range(1, i + 1)]
        for m in _closure(seeds, spec, DEFAULT_CAP):
            owner.setdefault(m, i)
    missing = [m for m in phi if m not in owner]
    if missing or len(owner) != len(phi):
        raise ValueError("lifting set does not match the closure of the system")
    return [[m for m in phi if owner[m] == i] for i in range(1, spec.n_x + 1)]


def is_closed(phi: LiftingSet, spec: SystemSpec) -> bool:
    return all(m in phi for obs in phi for m in lie_derivative(obs, spec))
