import math

import numpy as np
import pytest
from scipy.linalg import expm as scipy_expm

from polykoop.lifting import compute_lifting
from polykoop.model import build_model, eval_numeric
from polykoop.poly_core import DimensionError
from polykoop.simulator import (
    InputSignal,
    NonFiniteStateError,
    SampledInput,
    StepInput,
    Trajectory,
    ZeroInput,
    compare,
    expm,
    expm_propagate,
    integrate_lifted,
    integrate_nonlinear,
    lift_state,
    project,
)
from polykoop.systems import make_system


@pytest.fixture(scope="module")
def scalar():
    return make_system(1, {}, -0.5)


def test_lift_state_examples(example):
    phi = compute_lifting(example)
    assert np.array_equal(lift_state(phi, np.ones(4)), np.ones(19))
    assert np.array_equal(lift_state(phi, np.zeros(4)), np.zeros(19))
    z = lift_state(phi, [2.0, 0, 0, 0])
    expected = {(1, 0, 0, 0): 2, (3, 0, 0, 0): 8, (4, 0, 0, 0): 16, (6, 0, 0, 0): 64, (8, 0, 0, 0): 256, (10, 0, 0, 0): 1024}
    for k, mon in enumerate(phi):
        assert z[k] == expected.get(mon.exponents, 0.0)


def test_rk4_matches_exponential(scalar):
    traj = integrate_nonlinear(scalar, [1.0], h=1e-3, T=1.0)
    assert abs(traj.samples[-1, 0] - math.exp(-0.5)) <= 1e-12
    num = eval_numeric(build_model(scalar))
    lifted = integrate_lifted(num, [1.0], h=1e-3, T=1.0)
    assert abs(lifted.samples[-1, 0] - math.exp(-0.5)) <= 1e-12


def test_zero_horizon(example):
    traj = integrate_nonlinear(example, np.ones(4), h=1e-3, T=0.0)
    assert len(traj) == 1 and np.array_equal(traj.samples[0], np.ones(4))


def test_sample_count_and_grid(example):
    traj = integrate_nonlinear(example, np.ones(4), h=0.01, T=1.0)
    assert len(traj) == 101
    assert traj.times[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        integrate_nonlinear(example, np.ones(4), h=0.3, T=1.0)
    with pytest.raises(ValueError):
        integrate_nonlinear(example, np.ones(4), h=0.0, T=1.0)


def test_autonomous_decay_and_overlap(example, example_model):
    x = integrate_nonlinear(example, np.ones(4), h=1e-2, T=10.0)
    assert np.all(np.abs(x.samples[-1]) < np.abs(x.samples[0]))
    num = eval_numeric(example_model)
    z = integrate_lifted(num, lift_state(example_model.phi, np.ones(4)), h=1e-2, T=10.0)
    assert compare(x, project(z, num.C)).sup < 1e-9


def test_zero_input_equals_autonomous(example_input):
    num = eval_numeric(build_model(example_input))
    z0 = num.lift(np.ones(4))
    auto = integrate_lifted(num, z0, None, h=1e-2, T=2.0)
    forced = integrate_lifted(num, z0, ZeroInput(1), h=1e-2, T=2.0)
    assert np.array_equal(auto.samples, forced.samples)


def test_non_finite_state_is_reported():
    spec = make_system(2, {2: [((3, 0), 5.0)]}, 10.0)
    with pytest.raises(NonFiniteStateError) as err:
        integrate_nonlinear(spec, [2.0, 2.0], h=0.01, T=100.0)
    assert 0 < err.value.step < 10_000


def test_input_signals():
    step = StepInput((2.0,), onset=1.0)
    assert step(0.999)[0] == 0.0 and step(1.0)[0] == 2.0
    s = SampledInput([0.0, 1.0, 2.0], [[1.0], [3.0], [5.0]])
    assert s(-0.1)[0] == 0.0 and s(0.5)[0] == 1.0 and s(1.0)[0] == 3.0 and s(7.0)[0] == 5.0
    with pytest.raises(ValueError):
        SampledInput([0.0, 0.0], [[1.0], [2.0]])


def test_held_input_uses_one_value_per_step():
    s = SampledInput([0.0, 0.3], [[1.0], [2.0]])
    h = 0.1
    # 3*0.1 rounds above 0.3; the step before the switch must not see it
    assert [v[0] for v in s.stage_values(2 * h, h)] == [1.0, 1.0, 1.0]
    assert [v[0] for v in s.stage_values(3 * h, h)] == [2.0, 2.0, 2.0]


class _Ramp(InputSignal):
    n_u = 1

    def __call__(self, t):
        return np.array([t])


def test_smooth_input_sampled_at_stage_times():
    assert [v[0] for v in _Ramp().stage_values(1.0, 0.5)] == [1.0, 1.25, 1.5]


def test_switching_input_keeps_fourth_order():
    # dx/dt = -x + u with u switching on the grid; exact solution is piecewise exponential
    spec = make_system(1, {}, -1.0, g=[["1"]])
    u = SampledInput([0.0, 0.5, 1.2], [[1.0], [-2.0], [0.5]])

    def exact(t):
        x = 1.0
        for (a, v), b in zip([(0.0, 1.0), (0.5, -2.0), (1.2, 0.5)], [0.5, 1.2, np.inf]):
            if t <= a:
                break
            dt = min(t, b) - a
            x = v + (x - v) * np.exp(-dt)
        return x

    errs = []
    for h in (0.05, 0.025):
        traj = integrate_nonlinear(spec, [1.0], u, h=h, T=2.0)
        errs.append(abs(traj.samples[-1, 0] - exact(2.0)))
    assert errs[0] < 1e-6
    assert 12 <= errs[0] / errs[1] <= 20


def test_step_input_changes_trajectory(example_input):
    free = integrate_nonlinear(example_input, np.ones(4), None, h=1e-2, T=2.0)
    forced = integrate_nonlinear(example_input, np.ones(4), StepInput((1.0,), 0.0), h=1e-2, T=2.0)
    assert compare(free, forced).sup > 0.1


# -- matrix exponential ------------------------------------------------------------

def test_expm_scalar():
    traj = expm_propagate(np.array([[-0.5]]), [1.0], h=0.1, T=1.0)
    assert len(traj) == 11
    assert abs(traj.samples[-1, 0] - math.exp(-0.5)) <= 1e-13


def test_expm_zero_matrix():
    assert np.array_equal(expm(np.zeros((3, 3))), np.eye(3))
    traj = expm_propagate(np.zeros((2, 2)), [1.0, -2.0], h=0.5, T=2.0)
    assert np.array_equal(traj.samples, np.tile([1.0, -2.0], (5, 1)))


def test_expm_triangular_diagonal(reference_model):
    num = eval_numeric(reference_model)
    h = 1e-3
    E = expm(num.A * h)
    assert np.max(np.abs(np.diag(E) - np.exp(h * np.diag(num.A)))) <= 1e-12


@pytest.mark.parametrize("scale", [1e-3, 0.4, 3.0, 40.0])
def test_expm_against_scipy(scale):
    rng = np.random.default_rng(int(scale * 1000))
    M = rng.standard_normal((6, 6)) * scale / 6
    ref = scipy_expm(M)
    assert np.allclose(expm(M), ref, rtol=1e-12, atol=1e-13 * np.abs(ref).max())


def test_expm_rejects_nan():
    with pytest.raises(FloatingPointError):
        expm(np.array([[np.nan]]))


# -- projection and comparison -------------------------------------------------------

def test_project_selects_states(reference_model):
    traj = Trajectory(0.0, 0.1, np.ones((3, 19)))
    out = project(traj, reference_model.C)
    assert out.samples.shape == (3, 4) and np.array_equal(out.samples, np.ones((3, 4)))
    with pytest.raises(DimensionError):
        project(traj, np.eye(4))


def test_compare_self_is_zero(example):
    traj = integrate_nonlinear(example, np.ones(4), h=0.1, T=1.0)
    rep = compare(traj, traj)
    assert rep.sup == 0.0 and not rep.series.samples.any()


def test_compare_rejects_grid_mismatch():
    a = Trajectory(0.0, 0.1, np.zeros((3, 2)))
    with pytest.raises(ValueError):
        compare(a, Trajectory(0.0, 0.2, np.zeros((3, 2))))


def lifted_vs_nonlinear(spec, model, h, T=10.0):
    num = eval_numeric(model)
    x = integrate_nonlinear(spec, np.ones(4), h=h, T=T)
    z = integrate_lifted(num, lift_state(model.phi, np.ones(4)), h=h, T=T)
    return compare(x, project(z, num.C)).sup


def test_fourth_order_convergence(example, example_model):
    # coarse steps keep the error far above rounding noise
    e1 = lifted_vs_nonlinear(example, example_model, 1e-2)
    e2 = lifted_vs_nonlinear(example, example_model, 5e-3)
    assert 12 <= e1 / e2 <= 20


def test_lift_step_commutation(example, example_model):
    """One nonlinear RK4 step lifted vs one lifted RK4 step: difference shrinks like h^5."""
    num = eval_numeric(example_model)
    x0 = np.array([0.9, -0.7, 0.6, 0.4])
    diffs = []
    for h in (0.2, 0.1, 0.05):
        x1 = integrate_nonlinear(example, x0, h=h, T=h).samples[-1]
        z1 = integrate_lifted(num, lift_state(example_model.phi, x0), h=h, T=h).samples[-1]
        diffs.append(np.max(np.abs(lift_state(example_model.phi, x1) - z1)))
    ratios = [diffs[0] / diffs[1], diffs[1] / diffs[2]]
    assert all(24 <= r <= 40 for r in ratios), ratios
