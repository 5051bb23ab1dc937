import re
from pathlib import Path

import numpy as np
import pytest

from polykoop.model import build_model, reorder
from polykoop.poly_core import Monomial, ParamId, ParamLinForm
from polykoop.systems import REFERENCE_ORDER, fourth_order_example

DATA = Path(__file__).parent / "data"
ROOT = Path(__file__).parent.parent

# result lines recorded by the acceptance module, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2])):
            terminalreporter.write_line(line)


def _rows(name):
    lines = (DATA / name).read_text().splitlines()
    return [line.split(";") for line in lines if line and not line.startswith("#")]


_PARAM = re.compile(r"(\d*)(a_(\d)|alpha(\d)_(\d+))")


def parse_reference_entry(text: str) -> ParamLinForm:
    """'3a_1', 'a_1+a_2', '2alpha2_3' -> ParamLinForm (independent of the package renderer)."""
    if text == "0":
        return ParamLinForm()
    terms = {}
    for chunk in text.split("+"):
        m = _PARAM.fullmatch(chunk)
        assert m, chunk
        coeff = int(m.group(1) or 1)
        if m.group(3):
            p = ParamId.linear(int(m.group(3)))
        else:
            state = int(m.group(4))
            p = ParamId.poly(state, tuple(int(c) for c in m.group(5)))
        terms[p] = terms.get(p, 0) + coeff
    return ParamLinForm(terms)


_FACTOR = re.compile(r"x(\d)(?:\^(\d+))?")


def parse_reference_monomial(text: str, n_x: int = 4):
    """'3x1^2x2' -> (3, exponents); '0' -> (0, None)."""
    if text == "0":
        return 0, None
    m = re.match(r"(\d*)(.*)", text)
    coeff = int(m.group(1)) if m.group(1) else 1
    exps = [0] * n_x
    rest = m.group(2)
    for var, power in _FACTOR.findall(rest):
        exps[int(var) - 1] += int(power or 1)
    assert _FACTOR.sub("", rest) == "", text
    return coeff, tuple(exps)


@pytest.fixture(scope="session")
def reference_A():
    return [[parse_reference_entry(t) for t in row] for row in _rows("reference_A.txt")]


@pytest.fixture(scope="session")
def reference_jacobian():
    """Rows per observable, columns per state (the stored file is the transpose)."""
    jt = [[parse_reference_monomial(t) for t in row] for row in _rows("reference_jacobian_T.txt")]
    return [list(col) for col in zip(*jt)]


@pytest.fixture(scope="session")
def reference_order():
    return [Monomial(e) for e in REFERENCE_ORDER]


@pytest.fixture(scope="session")
def example():
    return fourth_order_example()


@pytest.fixture(scope="session")
def example_input():
    return fourth_order_example(with_input=True)


@pytest.fixture(scope="session")
def example_model(example):
    return build_model(example)


@pytest.fixture(scope="session")
def reference_model(example_input, reference_order):
    return reorder(build_model(example_input), reference_order)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

