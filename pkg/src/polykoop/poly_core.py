"""Exact algebra over monomials, parameter linear forms and parameterized polynomials.

Structural multipliers (power-rule factors, literal rationals) are kept as
:class:`fractions.Fraction`; system parameters stay symbolic until a
numeric :data:`ParamAssignment` is supplied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

Rational = Union[int, Fraction]


class DimensionError(ValueError):
    """Raised when objects over different state dimensions are combined."""


class UnboundParameterError(LookupError):
    """Raised when a parameter has no numeric binding at evaluation time."""

    def __init__(self, param: "ParamId"):
        super().__init__(f"parameter {param.label} has no numeric value")
        self.param = param


@dataclass(frozen=True)
class Monomial:
    """Dense exponent vector ``(j_1, ..., j_n)`` standing for ``x_1^j_1 ... x_n^j_n``."""

    exponents: tuple[int, ...]

    def __post_init__(self):
        exps = tuple(int(e) for e in self.exponents)
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        object.__setattr__(self, "exponents", exps)

    @classmethod
    def one(cls, n_x: int) -> "Monomial":
        return cls((0,) * n_x)

    @classmethod
    def var(cls, i: int, n_x: int) -> "Monomial":
        """Unit monomial ``x_i`` (``i`` is 1-based)."""
        if not 1 <= i <= n_x:
            raise IndexError(f"state index {i} outside 1..{n_x}")
        exps = [0] * n_x
        exps[i - 1] = 1
        return cls(tuple(exps))

    @property
    def n_x(self) -> int:
        return len(self.exponents)

    @property
    def degree(self) -> int:
        return sum(self.exponents)

    @property
    def is_constant(self) -> bool:
        return not any(self.exponents)

    def sort_key(self) -> tuple:
        # graded lexicographic: total degree first, then exponent tuple
        return (self.degree, self.exponents)

    def __lt__(self, other: "Monomial") -> bool:
        return self.sort_key() < other.sort_key()

    def __mul__(self, other: "Monomial") -> "Monomial":
        return mono_mul(self, other)

    def __str__(self) -> str:
        parts = []
        for i, e in enumerate(self.exponents, start=1):
            if e == 1:
                parts.append(f"x{i}")
            elif e > 1:
                parts.append(f"x{i}^{e}")
        return "*".join(parts) if parts else "1"


def mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if m1.n_x != m2.n_x:
        raise DimensionError(f"cannot multiply monomials over {m1.n_x} and {m2.n_x} states")
    return Monomial(tuple(a + b for a, b in zip(m1.exponents, m2.exponents)))


def mono_partial(m: Monomial, i: int) -> tuple[int, Monomial] | None:
    """Power rule for ``d m / d x_i``.

    Returns ``(j_i, m / x_i)`` or ``None`` when ``x_i`` does not occur in ``m``.
    ``i`` is 1-based.
    """
    if not 1 <= i <= m.n_x:
        raise IndexError(f"state index {i} outside 1..{m.n_x}")
    j = m.exponents[i - 1]
    if j == 0:
        return None
    exps = list(m.exponents)
    exps[i - 1] -= 1
    return j, Monomial(tuple(exps))


def mono_eval(m: Monomial, x: Sequence[float]) -> float:
    if len(x) != m.n_x:
        raise DimensionError(f"monomial over {m.n_x} states evaluated at a point of length {len(x)}")
    return math.prod(float(xi) ** e for xi, e in zip(x, m.exponents) if e)


@dataclass(frozen=True)
class ParamId:
    """Identity of a system parameter.

    ``multi is None`` marks the linear coefficient ``a_state``; otherwise the
    id is the polynomial coefficient ``alpha^state_{multi}`` where ``multi``
    holds the exponents of ``x_1 ... x_{state-1}``. ``name`` is a display
    override and takes no part in equality.
    """

    state: int
    multi: tuple[int, ...] | None = None
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.state < 1:
            raise ValueError(f"state index must be >= 1, got {self.state}")
        if self.multi is not None:
            multi = tuple(int(j) for j in self.multi)
            if self.state < 2 or len(multi) != self.state - 1:
                raise ValueError(
                    f"polynomial coefficient of state {self.state} needs a multi-index "
                    f"of length {self.state - 1}, got {multi}"
                )
            if any(j < 0 for j in multi):
                raise ValueError(f"negative multi-index {multi}")
            object.__setattr__(self, "multi", multi)

    @classmethod
    def linear(cls, i: int, name: str | None = None) -> "ParamId":
        return cls(i, None, name)

    @classmethod
    def poly(cls, state: int, multi: Sequence[int], name: str | None = None) -> "ParamId":
        return cls(state, tuple(multi), name)

    @property
    def is_linear(self) -> bool:
        return self.multi is None

    @property
    def default_label(self) -> str:
        if self.multi is None:
            return f"a_{self.state}"
        if all(j < 10 for j in self.multi):
            idx = "".join(str(j) for j in self.multi)
        else:
            idx = ",".join(str(j) for j in self.multi)
        return f"alpha{self.state}_{idx}"

    @property
    def label(self) -> str:
        return self.name or self.default_label

    def sort_key(self) -> tuple:
        return (self.state, self.multi is not None, self.multi or ())

    def __str__(self) -> str:
        return self.label


ParamAssignment = Mapping[ParamId, float]


def _as_fraction(c: Rational) -> Fraction:
    if isinstance(c, float):
        # exact binary value; structural multipliers are integers in practice
        return Fraction(c)
    return Fraction(c)


class ParamLinForm:
    """Sparse linear combination ``sum_p c_p * p`` of parameters with rational ``c_p``.

    Instances are immutable and always canonical: no zero multipliers are
    stored, so equality is equality of the underlying maps.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[ParamId, Rational] | Iterable[tuple[ParamId, Rational]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[ParamId, Fraction] = {}
        for p, c in items:
            acc[p] = acc.get(p, Fraction(0)) + _as_fraction(c)
        self._terms = {p: c for p, c in sorted(acc.items(), key=lambda kv: kv[0].sort_key()) if c != 0}
        self._hash = None

    @classmethod
    def of(cls, param: ParamId, coeff: Rational = 1) -> "ParamLinForm":
        return cls({param: coeff})

    @property
    def terms(self) -> Mapping[ParamId, Fraction]:
        return dict(self._terms)

    def params(self) -> Iterator[ParamId]:
        return iter(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamLinForm):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __add__(self, other: "ParamLinForm") -> "ParamLinForm":
        return plf_combine(self, other, 1, 1)

    def __sub__(self, other: "ParamLinForm") -> "ParamLinForm":
        return plf_combine(self, other, 1, -1)

    def __neg__(self) -> "ParamLinForm":
        return plf_combine(self, ZERO_FORM, -1, 0)

    def scale(self, c: Rational) -> "ParamLinForm":
        return plf_combine(self, ZERO_FORM, c, 0)

    def __mul__(self, other):
        if isinstance(other, ParamLinForm):
            # only degree-1 forms are representable; see module docstring
            raise TypeError("products of parameters are not supported")
        return self.scale(other)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"ParamLinForm({format_linform(self)!r})"

    def __str__(self) -> str:
        return format_linform(self)


ZERO_FORM = ParamLinForm()


def _format_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"({c.numerator}/{c.denominator})"


def format_linform(f: ParamLinForm) -> str:
    """Render like ``3a_1``, ``a_1+a_2+a_3``, ``2alpha2_3``, ``-a_1``; zero as ``0``."""
    if f.is_zero():
        return "0"
    out = []
    for k, (p, c) in enumerate(f.items()):
        sign = "-" if c < 0 else ("+" if k else "")
        mag = abs(c)
        coeff = "" if mag == 1 else _format_coeff(mag)
        out.append(f"{sign}{coeff}{p.label}")
    return "".join(out)


def plf_combine(f1: ParamLinForm, f2: ParamLinForm, c1: Rational, c2: Rational) -> ParamLinForm:
    """Return ``c1*f1 + c2*f2`` in canonical form."""
    c1, c2 = _as_fraction(c1), _as_fraction(c2)
    acc: dict[ParamId, Fraction] = {}
    if c1:
        for p, c in f1.items():
            acc[p] = acc.get(p, Fraction(0)) + c1 * c
    if c2:
        for p, c in f2.items():
            acc[p] = acc.get(p, Fraction(0)) + c2 * c
    return ParamLinForm(acc)


def plf_eval(f: ParamLinForm, params: ParamAssignment) -> float:
    total = 0.0
    for p, c in f.items():
        try:
            v = params[p]
        except KeyError:
            raise UnboundParameterError(p) from None
        total += float(c) * float(v)
    return total


class ParamPolynomial:
    """Polynomial in ``x_1..x_n`` whose coefficients are :class:`ParamLinForm`."""

    __slots__ = ("n_x", "_terms")

    def __init__(self, n_x: int, terms: Mapping[Monomial, ParamLinForm] | Iterable[tuple[Monomial, ParamLinForm]] = ()):
        self.n_x = n_x
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Monomial, ParamLinForm] = {}
        for m, f in items:
            if m.n_x != n_x:
                raise DimensionError(f"monomial {m} is over {m.n_x} states, polynomial over {n_x}")
            acc[m] = acc[m] + f if m in acc else f
        self._terms = {m: f for m, f in sorted(acc.items()) if not f.is_zero()}

    @classmethod
    def zero(cls, n_x: int) -> "ParamPolynomial":
        return cls(n_x)

    @classmethod
    def term(cls, m: Monomial, f: ParamLinForm) -> "ParamPolynomial":
        return cls(m.n_x, {m: f})

    @property
    def terms(self) -> Mapping[Monomial, ParamLinForm]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def monomials(self) -> list[Monomial]:
        return list(self._terms)

    def coeff(self, m: Monomial) -> ParamLinForm:
        return self._terms.get(m, ZERO_FORM)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParamPolynomial):
            return NotImplemented
        return self.n_x == other.n_x and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.n_x, frozenset(self._terms.items())))

    def __add__(self, other: "ParamPolynomial") -> "ParamPolynomial":
        return poly_add(self, other)

    def __neg__(self) -> "ParamPolynomial":
        return poly_scale(self, -1)

    def __sub__(self, other: "ParamPolynomial") -> "ParamPolynomial":
        return poly_add(self, poly_scale(other, -1))

    def __repr__(self) -> str:
        return f"ParamPolynomial({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for m, f in self._terms.items():
            coeff = format_linform(f)
            if len(f) > 1:
                coeff = f"({coeff})"
            parts.append(coeff if m.is_constant else f"{coeff}*{m}")
        return " + ".join(parts)


def poly_add(p1: ParamPolynomial, p2: ParamPolynomial) -> ParamPolynomial:
    if p1.n_x != p2.n_x:
        raise DimensionError(f"cannot add polynomials over {p1.n_x} and {p2.n_x} states")
    acc = dict(p1.items())
    for m, f in p2.items():
        acc[m] = acc[m] + f if m in acc else f
    return ParamPolynomial(p1.n_x, acc)


def poly_scale(p: ParamPolynomial, c: Rational = 1, m: Monomial | None = None) -> ParamPolynomial:
    """Return ``c * m * p``."""
    if m is not None and m.n_x != p.n_x:
        raise DimensionError(f"cannot multiply polynomial over {p.n_x} states by {m}")
    return ParamPolynomial(
        p.n_x, ((mono_mul(m, k) if m is not None else k, f.scale(c)) for k, f in p.items())
    )


def poly_eval(p: ParamPolynomial, x: Sequence[float], params: ParamAssignment) -> float:
    if len(x) != p.n_x:
        raise DimensionError(f"polynomial over {p.n_x} states evaluated at a point of length {len(x)}")
    return sum((plf_eval(f, params) * mono_eval(m, x) for m, f in p.items()), 0.0)
