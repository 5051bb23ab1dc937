import numpy as np
import pytest

from polykoop.poly_core import Monomial, ParamId, ParamLinForm
from polykoop.render import (
    NUMERIC,
    observable_names,
    plot_script,
    read_trajectory,
    render_matrix,
    write_trajectory,
)
from polykoop.simulator import Trajectory, compare, integrate_nonlinear

from conftest import DATA


def _tokens(path):
    lines = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
    return [l.split(";") for l in lines]


def test_symbolic_A_matches_reference_text(reference_model):
    rendered = [line.split() for line in render_matrix(reference_model.A).splitlines()]
    assert rendered == _tokens(DATA / "reference_A.txt")


def test_symbolic_jacobian_matches_reference_text(reference_model):
    rendered = [line.replace("*", "").split() for line in render_matrix(reference_model.J).splitlines()]
    transposed = [list(col) for col in zip(*_tokens(DATA / "reference_jacobian_T.txt"))]
    assert rendered == transposed


def test_single_entry_and_alignment():
    assert render_matrix([[ParamLinForm.of(ParamId.linear(1))]]) == "a_1"
    text = render_matrix([[ParamLinForm.of(ParamId.linear(1), 3), ParamLinForm()], [ParamLinForm(), ParamLinForm.of(ParamId.poly(2, (3,)), 2)]])
    assert text.splitlines() == ["3a_1          0", "   0  2alpha2_3"]


def test_numeric_csv(example_model):
    from polykoop.model import eval_numeric

    A = eval_numeric(example_model).A
    text = render_matrix(A, NUMERIC)
    lines = text.splitlines()
    assert len(lines) == 19 and text.endswith("\n")
    parsed = np.array([[float(v) for v in l.split(",")] for l in lines])
    assert np.array_equal(parsed, A)
    # x1^3 has d/dt = 3 a_1 x1^3 = -1.5 x1^3
    k = example_model.phi.index(Monomial((3, 0, 0, 0)))
    assert parsed[k, k] == -1.5


def test_numeric_rejects_unknown_format():
    with pytest.raises(ValueError):
        render_matrix([[1.0]], "latex")


def test_observable_names(reference_model):
    names = observable_names(reference_model.phi.observables)
    assert names[:6] == ["x1", "x2", "x3", "x4", "x1^3", "x1*x2"]


def test_single_sample_trajectory():
    text = write_trajectory(Trajectory(0.0, 1e-3, np.array([[1.0, 2.0]])), ["x1", "x2"])
    assert text == "t,x1,x2\n0,1,2\n"


def test_trajectory_length_and_round_trip(example):
    traj = integrate_nonlinear(example, np.ones(4), h=1e-3, T=10.0)
    text = write_trajectory(traj, ["x1", "x2", "x3", "x4"])
    lines = text.splitlines()
    assert lines[0] == "t,x1,x2,x3,x4"
    assert len(lines) == 10002
    back, names = read_trajectory(text)
    assert names == ["x1", "x2", "x3", "x4"]
    assert np.array_equal(back.samples, traj.samples)
    assert np.allclose(back.times, traj.times, rtol=0, atol=1e-12)
    assert float(lines[-1].split(",")[0]) == pytest.approx(10.0, abs=1e-12)


def test_error_series_shape(example):
    a = integrate_nonlinear(example, np.ones(4), h=1e-2, T=1.0)
    rep = compare(a, a)
    text = write_trajectory(rep.series, ["e1", "e2", "e3", "e4"])
    assert len(text.splitlines()) == 102
    assert rep.sup == 0.0


def test_write_trajectory_checks_names():
    with pytest.raises(ValueError):
        write_trajectory(Trajectory(0.0, 1.0, np.zeros((2, 3))), ["a"])


@pytest.mark.parametrize("text", ["", "x,y\n1,2\n", "t,x\n"])
def test_read_trajectory_rejects(text):
    with pytest.raises(ValueError):
        read_trajectory(text)


def test_plot_script():
    script = plot_script([("nonlinear.csv", "x", 4), ("lifted.csv", "z", 4)], "error.csv")
    assert "set datafile separator ','" in script
    assert "'nonlinear.csv' using 1:i" in script and "'lifted.csv' using 1:i" in script
    assert "for [i=2:5]" in script
    assert "set logscale y" in script and "'error.csv'" in script
    assert script.endswith("unset output\n")
    assert "error.csv" not in plot_script([("nonlinear.csv", "x", 2)])
