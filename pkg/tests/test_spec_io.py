import json

import pytest

from polykoop.poly_core import ParamId
from polykoop.spec_io import (
    DIMENSION,
    SYNTAX,
    TRIANGULARITY,
    SimDefaults,
    SpecError,
    parse_document,
    parse_spec,
    render_document,
)
from polykoop.systems import fourth_order_example, make_system, random_triangular_system

from conftest import ROOT

SPECS = ROOT / "specs"


def diagnostics(text):
    with pytest.raises(SpecError) as err:
        parse_document(text)
    return err.value.diagnostics


def test_example_file_parses_to_example(example):
    assert parse_spec((SPECS / "fourth_order.json").read_text()) == example


def test_example_with_input(example_input):
    doc = parse_document((SPECS / "fourth_order_input.json").read_text())
    assert doc.spec == example_input
    assert doc.sim == SimDefaults((1.0, 1.0, 1.0, 1.0), 1e-3, 10.0, "step:1@0")


def test_hand_written_document(example):
    text = """{
  "n_x": 4,
  "params": {"alpha2_3": -0.2},
  "states": [
    {"a": -0.5},
    {"a": {"value": -0.5}, "terms": [{"coeff": "alpha2_3", "exponents": [3, 0, 0, 0]}]},
    {"a": -0.5, "terms": [{"coeff": -0.2, "exponents": [1, 1, 0, 0]},
                          {"coeff": {"value": -0.2}, "exponents": [0, 2, 0, 0]}]},
    {"a": -0.5, "terms": [{"coeff": -0.2, "exponents": [1, 1, 1, 0]}]}
  ]
}"""
    assert parse_spec(text) == example


def test_custom_names_survive():
    text = json.dumps({"n_x": 2, "states": [{"a": {"name": "k", "value": -1}}, {"a": "lam", "terms": [{"coeff": "beta", "exponents": [2, 0]}]}], "params": {"lam": -2}})
    spec = parse_spec(text)
    assert [p.label for p in spec.linear] == ["k", "lam"]
    assert spec.params[ParamId.linear(2)] == -2.0
    assert spec.unbound() == [ParamId.poly(2, (2,))]
    assert spec.unbound()[0].label == "beta"


def test_triangularity_diagnostic_is_located():
    text = """{
  "n_x": 3,
  "states": [
    {"a": -1},
    {"a": -1, "terms": [{"coeff": 1, "exponents": [1, 0, 0]},
                        {"coeff": 1, "exponents": [0, 0, 1]}]},
    {"a": -1}
  ]
}"""
    (d,) = diagnostics(text)
    assert d.category == TRIANGULARITY
    assert (d.line, d.col) == (6, 51)
    assert text.splitlines()[d.line - 1][d.col - 1 :].startswith("[0, 0, 1]")
    assert "x3" in d.message


def test_first_state_must_be_linear():
    text = json.dumps({"n_x": 1, "states": [{"a": -1, "terms": [{"coeff": 1, "exponents": [0]}]}]})
    assert [d.category for d in diagnostics(text)] == [TRIANGULARITY]


@pytest.mark.parametrize("text", ["", "   ", "{", "[1, 2]", '{"n_x": 0, "states": []}'])
def test_syntax_diagnostics(text):
    diags = diagnostics(text)
    assert diags and diags[0].category == SYNTAX


def test_empty_document_position():
    (d,) = diagnostics("")
    assert (d.line, d.col) == (1, 1)


@pytest.mark.parametrize(
    "doc",
    [
        {"n_x": 2, "states": [{"a": -1}]},
        {"n_x": 2, "states": [{"a": -1}, {"a": -1, "terms": [{"coeff": 1, "exponents": [1]}]}]},
        {"n_x": 1, "states": [{"a": -1}], "input": {"g": [["1"], ["x1"]]}},
        {"n_x": 1, "states": [{"a": -1}], "sim": {"x0": [1, 2]}},
    ],
)
def test_dimension_diagnostics(doc):
    assert DIMENSION in {d.category for d in diagnostics(json.dumps(doc))}


@pytest.mark.parametrize(
    "doc, fragment",
    [
        ({"n_x": 1, "states": [{"a": True}]}, "coefficient"),
        ({"n_x": 1, "states": [{}]}, "missing"),
        ({"n_x": 1, "states": [{"a": -1}], "extra": 1}, "unknown top-level key"),
        ({"n_x": 1, "states": [{"a": -1}], "input": {"g": [["tan(x1)"]]}}, "tan"),
        ({"n_x": 2, "states": [{"a": -1}, {"a": -1, "terms": [{"coeff": 1, "exponents": [1, 0]}, {"coeff": 2, "exponents": [1, 0]}]}]}, "duplicate"),
        ({"n_x": 2, "states": [{"a": "p"}, {"a": "p"}]}, "already used"),
        ({"n_x": 1, "states": [{"a": -1}], "sim": {"h": -1}}, "sim.h"),
    ],
)
def test_other_diagnostics(doc, fragment):
    diags = diagnostics(json.dumps(doc))
    assert any(fragment in d.message for d in diags), diags


def test_all_problems_are_reported_together():
    doc = {"n_x": 2, "states": [{"a": True}, {"a": -1, "terms": [{"coeff": 1, "exponents": [1, 0, 0]}]}], "sim": {"T": "x"}}
    assert len(diagnostics(json.dumps(doc))) == 3


def test_expression_column_points_inside_string():
    text = '{"n_x": 1, "states": [{"a": -1}], "input": {"g": [["x1 + y"]]}}'
    (d,) = diagnostics(text)
    assert text[d.col - 1] == "y"


def test_round_trip_corpus(example, example_input):
    import numpy as np

    corpus = [example, example_input, make_system(1, {}, -0.5), make_system(2, {2: [((0, 0), 1.0)]}, None)]
    rng = np.random.default_rng(11)
    corpus += [random_triangular_system(rng) for _ in range(25)]
    named = parse_spec(json.dumps({"n_x": 2, "states": [{"a": {"name": "k"}}, {"a": 0.25, "terms": [{"coeff": {"name": "b", "value": 1e-300}, "exponents": [3, 0]}]}], "input": {"g": [["x1 - 2*x2^2", "cos(x1)"], ["-(x1 + 1)", "0.1"]]}}))
    corpus.append(named)
    for spec in corpus:
        again = parse_spec(render_document(spec))
        assert again == spec
        assert render_document(again) == render_document(spec)


def test_render_refuses_unrepresentable_coefficients(example):
    from polykoop.lifting import SystemSpec

    doubled = SystemSpec(4, example.linear, (example.nonlinear[0], -example.nonlinear[1]) + example.nonlinear[2:])
    with pytest.raises(ValueError):
        render_document(doubled)


def test_fourth_order_example_default_values():
    spec = fourth_order_example()
    assert sorted(spec.params.values()) == [-0.5] * 4 + [-0.2] * 4
    assert len(spec.params) == 8
