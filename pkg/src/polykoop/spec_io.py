"""JSON system documents: parsing with located diagnostics, and rendering back.

Document layout::

    {
      "n_x": 2,
      "states": [
        {"a": -0.5},
        {"a": {"name": "a_2", "value": -0.5},
         "terms": [{"coeff": -0.2, "exponents": [3, 0]}]}
      ],
      "params": {"a_2": -0.5},
      "input": {"g": [["1"], ["sin(x1)"]]},
      "sim": {"x0": [1, 1], "h": 0.001, "T": 10, "input": "step:1@0"}
    }

A coefficient (``a`` or ``coeff``) is a number (bound value, default
name), a string (name only, value from ``params`` or left unbound) or an
object with optional ``name`` and ``value``. Default names are ``a_<i>``
and ``alpha<n>_<j1j2...>``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

from . import inputexpr as ie
from .lifting import SystemSpec, validate_structure
from .poly_core import Monomial, ParamId, ParamLinForm, ParamPolynomial

SYNTAX = "syntax"
DIMENSION = "dimension"
TRIANGULARITY = "triangularity"


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    category: str
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.category}: {self.message}"


class SpecError(ValueError):
    """Document could not be turned into a system; ``diagnostics`` says why."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class SimDefaults:
    x0: tuple[float, ...] | None = None
    h: float | None = None
    T: float | None = None
    input: str | None = None


@dataclass(frozen=True)
class SpecDocument:
    spec: SystemSpec
    sim: SimDefaults = field(default_factory=SimDefaults)


# ---------------------------------------------------------------------------
# value locations

def _locate(text: str) -> dict[tuple, int]:
    """Map JSON paths (tuples of keys/indices) to the offset where each value starts."""
    dec = json.JSONDecoder()
    pos: dict[tuple, int] = {}

    def ws(i: int) -> int:
        while i < len(text) and text[i] in " \t\r\n":
            i += 1
        return i

    def value(i: int, path: tuple) -> int:
        i = ws(i)
        pos[path] = i
        if text[i] == "{":
            i = ws(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = dec.raw_decode(text, ws(i))
                i = ws(i) + 1  # ':'
                i = ws(value(i, path + (key,)))
                if text[i] == "}":
                    return i + 1
                i += 1  # ','
        if text[i] == "[":
            i = ws(i + 1)
            if text[i] == "]":
                return i + 1
            k = 0
            while True:
                i = ws(value(i, path + (k,)))
                k += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = dec.raw_decode(text, i)
        return end

    value(0, ())
    return pos


class _Collector:
    def __init__(self, text: str):
        self.text = text
        self.diags: list[Diagnostic] = []
        try:
            self.positions = _locate(text)
        except (ValueError, IndexError):
            self.positions = {}

    def where(self, path: tuple) -> tuple[int, int]:
        while path and path not in self.positions:
            path = path[:-1]
        off = self.positions.get(path, 0)
        line = self.text.count("\n", 0, off) + 1
        col = off - (self.text.rfind("\n", 0, off) + 1) + 1
        return line, col

    def add(self, path: tuple, category: str, message: str, col_shift: int = 0) -> None:
        line, col = self.where(path)
        self.diags.append(Diagnostic(line, col + col_shift, category, message))


def _path_str(path: tuple) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else p)
    return out


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _coefficient(raw: Any, path: tuple, col: _Collector) -> tuple[str | None, float | None] | None:
    """Decode a coefficient into ``(name, value)``; ``None`` after a diagnostic."""
    if _is_number(raw):
        return None, float(raw)
    if isinstance(raw, str):
        if not raw.strip():
            col.add(path, SYNTAX, f"{_path_str(path)}: empty parameter name")
            return None
        return raw.strip(), None
    if isinstance(raw, dict):
        extra = set(raw) - {"name", "value"}
        if extra:
            col.add(path, SYNTAX, f"{_path_str(path)}: unknown keys {sorted(extra)}")
            return None
        name, value = raw.get("name"), raw.get("value")
        if name is not None and (not isinstance(name, str) or not name.strip()):
            col.add(path + ("name",), SYNTAX, f"{_path_str(path)}.name must be a non-empty string")
            return None
        if value is not None and not _is_number(value):
            col.add(path + ("value",), SYNTAX, f"{_path_str(path)}.value must be a finite number")
            return None
        return (name.strip() if name else None), (float(value) if value is not None else None)
    col.add(path, SYNTAX, f"{_path_str(path)}: coefficient must be a number, a name or an object")
    return None


def parse_document(text: str) -> SpecDocument:
    """Parse a system document; raise :class:`SpecError` listing every problem found."""
    col = _Collector(text)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError([Diagnostic(exc.lineno, exc.colno, SYNTAX, exc.msg)]) from None
    if not isinstance(doc, dict):
        col.add((), SYNTAX, "document must be a JSON object")
        raise SpecError(col.diags)

    known = {"n_x", "states", "params", "input", "sim"}
    for key in doc:
        if key not in known:
            col.add((key,), SYNTAX, f"unknown top-level key {key!r}")

    n_x = doc.get("n_x")
    if not isinstance(n_x, int) or isinstance(n_x, bool) or n_x < 1:
        col.add(("n_x",), SYNTAX, "n_x must be a positive integer")
        raise SpecError(col.diags)

    named_values: dict[str, float] = {}
    raw_params = doc.get("params", {})
    if not isinstance(raw_params, dict):
        col.add(("params",), SYNTAX, "params must be an object of name -> number")
    else:
        for k, v in raw_params.items():
            if not _is_number(v):
                col.add(("params", k), SYNTAX, f"params.{k} must be a finite number")
            else:
                named_values[k] = float(v)

    states = doc.get("states")
    if not isinstance(states, list):
        col.add(("states",), SYNTAX, "states must be a list")
        raise SpecError(col.diags)
    if len(states) != n_x:
        col.add(("states",), DIMENSION, f"expected {n_x} state entries, found {len(states)}")
        raise SpecError(col.diags)

    params: dict[ParamId, float] = {}
    linear: list[ParamId] = []
    nonlinear: list[ParamPolynomial] = []
    term_paths: dict[tuple[int, Monomial], tuple] = {}
    used_names: dict[str, tuple] = {}

    def bind(p: ParamId, name: str | None, value: float | None, path: tuple) -> ParamId:
        if name is not None:
            p = ParamId(p.state, p.multi, name if name != p.default_label else None)
        label = p.label
        if label in used_names:
            col.add(path, SYNTAX, f"parameter name {label!r} already used at {_path_str(used_names[label])}")
        used_names[label] = path
        if value is None:
            value = named_values.get(label)
        if value is not None:
            params[p] = value
        return p

    for i, st in enumerate(states, start=1):
        spath = ("states", i - 1)
        if not isinstance(st, dict):
            col.add(spath, SYNTAX, f"states[{i - 1}] must be an object")
            linear.append(ParamId.linear(i))
            nonlinear.append(ParamPolynomial.zero(n_x))
            continue
        for key in st:
            if key not in ("a", "terms"):
                col.add(spath + (key,), SYNTAX, f"unknown key {key!r} in states[{i - 1}]")
        if "a" not in st:
            col.add(spath, SYNTAX, f"states[{i - 1}] is missing the linear coefficient 'a'")
            linear.append(ParamId.linear(i))
        else:
            c = _coefficient(st["a"], spath + ("a",), col)
            linear.append(bind(ParamId.linear(i), *(c or (None, None)), spath + ("a",)))
        terms = st.get("terms", [])
        if not isinstance(terms, list):
            col.add(spath + ("terms",), SYNTAX, f"states[{i - 1}].terms must be a list")
            terms = []
        poly = []
        for j, term in enumerate(terms):
            tpath = spath + ("terms", j)
            if not isinstance(term, dict) or set(term) != {"coeff", "exponents"}:
                col.add(tpath, SYNTAX, "a term must be an object with exactly 'coeff' and 'exponents'")
                continue
            exps = term["exponents"]
            epath = tpath + ("exponents",)
            if not isinstance(exps, list) or not all(isinstance(e, int) and not isinstance(e, bool) and e >= 0 for e in exps):
                col.add(epath, SYNTAX, "exponents must be a list of non-negative integers")
                continue
            if len(exps) != n_x:
                col.add(epath, DIMENSION, f"expected {n_x} exponents, found {len(exps)}")
                continue
            m = Monomial(tuple(exps))
            if (i, m) in term_paths:
                col.add(epath, SYNTAX, f"duplicate term {m} in state {i}")
                continue
            term_paths[(i, m)] = epath
            if i == 1:
                col.add(epath, TRIANGULARITY, f"state 1, monomial {m}: state 1 must be purely linear")
                continue
            c = _coefficient(term["coeff"], tpath + ("coeff",), col)
            if c is None:
                continue
            p = bind(ParamId.poly(i, m.exponents[: i - 1]), *c, tpath + ("coeff",))
            poly.append((m, ParamLinForm.of(p)))
        nonlinear.append(ParamPolynomial(n_x, poly))

    g = None
    if "input" in doc:
        g = _parse_input(doc["input"], n_x, col)

    sim = _parse_sim(doc.get("sim", {}), n_x, col)

    if col.diags:
        raise SpecError(col.diags)

    spec = SystemSpec(n_x, linear, nonlinear, params, g)
    for v in validate_structure(spec):
        path = term_paths.get((v.state, v.monomial), ("states", v.state - 1))
        col.add(path, TRIANGULARITY, str(v))
    if col.diags:
        raise SpecError(col.diags)
    return SpecDocument(spec, sim)


def _parse_input(raw: Any, n_x: int, col: _Collector):
    if not isinstance(raw, dict) or "g" not in raw or set(raw) - {"g"}:
        col.add(("input",), SYNTAX, "input must be an object with a single key 'g'")
        return None
    rows = raw["g"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        col.add(("input", "g"), SYNTAX, "input.g must be a list of rows")
        return None
    if len(rows) != n_x:
        col.add(("input", "g"), DIMENSION, f"input.g needs {n_x} rows, found {len(rows)}")
        return None
    widths = {len(r) for r in rows}
    if len(widths) != 1 or 0 in widths:
        col.add(("input", "g"), DIMENSION, "input.g rows must all have the same, non-zero length")
        return None
    g = []
    for r, row in enumerate(rows):
        out = []
        for c, cell in enumerate(row):
            path = ("input", "g", r, c)
            if _is_number(cell):
                out.append(ie.Const(float(cell)))
                continue
            if not isinstance(cell, str):
                col.add(path, SYNTAX, "input.g entries must be expression strings")
                continue
            try:
                out.append(ie.parse_expr(cell, n_x))
            except ie.ExprError as exc:
                # +1 skips the opening quote of the JSON string
                col.add(path, SYNTAX, str(exc), col_shift=(exc.col or 0) + 1 if exc.col is not None else 0)
        g.append(out)
    return g


def _parse_sim(raw: Any, n_x: int, col: _Collector) -> SimDefaults:
    if not isinstance(raw, dict):
        col.add(("sim",), SYNTAX, "sim must be an object")
        return SimDefaults()
    for key in raw:
        if key not in ("x0", "h", "T", "input"):
            col.add(("sim", key), SYNTAX, f"unknown key {key!r} in sim")
    x0 = raw.get("x0")
    if x0 is not None:
        if not isinstance(x0, list) or not all(_is_number(v) for v in x0):
            col.add(("sim", "x0"), SYNTAX, "sim.x0 must be a list of numbers")
            x0 = None
        elif len(x0) != n_x:
            col.add(("sim", "x0"), DIMENSION, f"sim.x0 needs {n_x} entries, found {len(x0)}")
            x0 = None
        else:
            x0 = tuple(float(v) for v in x0)
    vals = {}
    for key in ("h", "T"):
        v = raw.get(key)
        if v is not None and (not _is_number(v) or v < 0 or (key == "h" and v == 0)):
            col.add(("sim", key), SYNTAX, f"sim.{key} must be a {'positive' if key == 'h' else 'non-negative'} number")
            v = None
        vals[key] = float(v) if v is not None else None
    inp = raw.get("input")
    if inp is not None and not isinstance(inp, str):
        col.add(("sim", "input"), SYNTAX, "sim.input must be a string such as 'zero' or 'step:1@0'")
        inp = None
    return SimDefaults(x0, vals["h"], vals["T"], inp)


def parse_spec(text: str) -> SystemSpec:
    return parse_document(text).spec


# ---------------------------------------------------------------------------
# rendering

def _coeff_json(p: ParamId, params) -> Any:
    value = params.get(p)
    if p.name is None:
        return value if value is not None else p.default_label
    out: dict[str, Any] = {"name": p.name}
    if value is not None:
        out["value"] = value
    return out


def render_document(spec: SystemSpec, sim: SimDefaults | None = None) -> str:
    """Serialize a system so that :func:`parse_document` gives it back unchanged."""
    states = []
    for i, (a, f) in enumerate(zip(spec.linear, spec.nonlinear), start=1):
        entry: dict[str, Any] = {"a": _coeff_json(a, spec.params)}
        terms = []
        for m, form in f.items():
            items = list(form.items())
            if len(items) != 1 or items[0][1] != 1:
                raise ValueError(f"coefficient {form} of state {i} is not a single parameter")
            p = items[0][0]
            if p.multi != m.exponents[: i - 1]:
                raise ValueError(f"parameter {p.label} does not match monomial {m}")
            terms.append({"coeff": _coeff_json(p, spec.params), "exponents": list(m.exponents)})
        if terms:
            entry["terms"] = terms
        states.append(entry)
    doc: dict[str, Any] = {"n_x": spec.n_x, "states": states}
    if spec.g is not None:
        doc["input"] = {"g": [[str(e) for e in row] for row in spec.g]}
    if sim is not None:
        s = {k: v for k, v in (("x0", list(sim.x0) if sim.x0 else None), ("h", sim.h), ("T", sim.T), ("input", sim.input)) if v is not None}
        if s:
            doc["sim"] = s
    return json.dumps(doc, indent=2) + "\n"
