"""Fixed-step simulation of the original system and its lifted linear/LPV form."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import inputexpr as ie
from .lifting import LiftingSet, SystemSpec
from .model import NumericModel, lift, vector_field
from .poly_core import DimensionError, UnboundParameterError

DEFAULT_H = 1e-3
DEFAULT_T = 10.0


class NonFiniteStateError(FloatingPointError):
    def __init__(self, step: int, t: float):
        super().__init__(f"non-finite state after step {step} (t={t:.6g})")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class Trajectory:
    """Samples at ``t0 + k*h``; ``samples`` has shape ``(n_samples, dim)``."""

    t0: float
    h: float
    samples: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.samples, dtype=float))
        if s.shape[0] < 1:
            raise ValueError("a trajectory needs at least one sample")
        object.__setattr__(self, "samples", s)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self))

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def __len__(self) -> int:
        return self.samples.shape[0]


# ---------------------------------------------------------------------------
# input signals

class InputSignal:
    n_u: int
    # piecewise-constant signals hold one value per integration step
    piecewise_constant: bool = False

    def __call__(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def stage_values(self, t: float, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Input at the RK4 stage times ``t``, ``t + h/2`` and ``t + h``.

        A held signal is looked up once at the step midpoint, so a switch
        on a step boundary is never seen by the neighbouring step even when
        ``k*h`` rounds to either side of it.
        """
        if self.piecewise_constant:
            v = self(t + 0.5 * h)
            return v, v, v
        return self(t), self(t + 0.5 * h), self(t + h)


@dataclass(frozen=True)
class ZeroInput(InputSignal):
    n_u: int = 1
    piecewise_constant = True

    def __call__(self, t: float) -> np.ndarray:
        return np.zeros(self.n_u)


@dataclass(frozen=True)
class StepInput(InputSignal):
    amplitude: tuple[float, ...]
    onset: float = 0.0
    piecewise_constant = True

    @property
    def n_u(self) -> int:
        return len(self.amplitude)

    def __call__(self, t: float) -> np.ndarray:
        if t >= self.onset:
            return np.array(self.amplitude, dtype=float)
        return np.zeros(self.n_u)


class SampledInput(InputSignal):
    """Zero-order hold of ``values[k]`` on ``[times[k], times[k+1])``; zero before ``times[0]``.

    During integration each step uses the value held at its midpoint, so
    samples finer than the step are not resolved.
    """

    piecewise_constant = True

    def __init__(self, times: Sequence[float], values):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float).reshape(len(self.times), -1)
        if self.times.ndim != 1 or len(self.times) == 0:
            raise ValueError("sampled input needs a non-empty time grid")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sampled input times must be strictly increasing")
        self.n_u = self.values.shape[1]

    def __call__(self, t: float) -> np.ndarray:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k < 0:
            return np.zeros(self.n_u)
        return self.values[k].copy()


# ---------------------------------------------------------------------------
# integration

def _n_steps(h: float, T: float) -> int:
    if not h > 0:
        raise ValueError(f"step must be positive, got {h}")
    if T < 0:
        raise ValueError(f"horizon must be non-negative, got {T}")
    n = int(round(T / h))
    if abs(n * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon {T} is not a whole number of steps of {h}")
    return n


def rk4(
    rhs: Callable[..., np.ndarray],
    y0,
    h: float,
    n_steps: int,
    t0: float = 0.0,
    u: InputSignal | None = None,
) -> np.ndarray:
    """Classical fixed-step RK4; returns the ``n_steps + 1`` samples.

    Without ``u`` the right-hand side is ``rhs(t, y)``; with it,
    ``rhs(y, u_value)`` with the input taken from ``u.stage_values``.
    """
    y = np.array(y0, dtype=float)
    out = np.empty((n_steps + 1, y.size))
    out[0] = y
    half = 0.5 * h
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            t = t0 + k * h
            if u is None:
                k1 = rhs(t, y)
                k2 = rhs(t + half, y + half * k1)
                k3 = rhs(t + half, y + half * k2)
                k4 = rhs(t + h, y + h * k3)
            else:
                u1, u2, u3 = u.stage_values(t, h)
                k1 = rhs(y, u1)
                k2 = rhs(y + half * k1, u2)
                k3 = rhs(y + half * k2, u2)
                k4 = rhs(y + h * k3, u3)
            y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(y)):
                raise NonFiniteStateError(k + 1, t + h)
            out[k + 1] = y
    return out


def lift_state(phi: LiftingSet, x0) -> np.ndarray:
    return lift(phi, np.asarray(x0, dtype=float).reshape(phi.n_x))


def integrate_nonlinear(
    spec: SystemSpec,
    x0,
    u: InputSignal | None = None,
    h: float = DEFAULT_H,
    T: float = DEFAULT_T,
) -> Trajectory:
    """RK4 on ``dx/dt = f(x) + g(x) u(t)``; ``u=None`` integrates the autonomous part."""
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (spec.n_x,):
        raise DimensionError(f"initial state of length {x0.size}, system has {spec.n_x} states")
    missing = spec.unbound()
    if missing:
        raise UnboundParameterError(missing[0])
    f = vector_field(spec)
    n = _n_steps(h, T)
    if u is None:
        return Trajectory(0.0, h, rk4(lambda t, x: f(x), x0, h, n))
    if not spec.has_input:
        raise ValueError("system has no input map")
    if u.n_u != spec.n_u:
        raise DimensionError(f"input has {u.n_u} channels, system expects {spec.n_u}")
    g = ie.compile_matrix(spec.g)
    return Trajectory(0.0, h, rk4(lambda x, v: f(x) + g(x) @ v, x0, h, n, u=u))


def integrate_lifted(
    model: NumericModel,
    z0,
    u: InputSignal | None = None,
    h: float = DEFAULT_H,
    T: float = DEFAULT_T,
) -> Trajectory:
    """RK4 on ``dz/dt = A z + B_z(z) u(t)``; ``u=None`` drops the input term."""
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (model.n_f,):
        raise DimensionError(f"initial lifted state of length {z0.size}, model has {model.n_f}")
    A = model.A
    n = _n_steps(h, T)
    if u is None:
        return Trajectory(0.0, h, rk4(lambda t, z: A @ z, z0, h, n))
    if not model.has_input:
        raise ValueError("model has no input matrix")
    return Trajectory(0.0, h, rk4(lambda z, v: A @ z + model.B_z(z) @ v, z0, h, n, u=u))


_TAYLOR_TERMS = 18


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a fixed Taylor series.

    The matrix is scaled so its 1-norm is at most 0.5; the 18-term series
    then truncates below ``0.5**19 / 19!``, far under double precision.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError("expm needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise FloatingPointError("matrix has non-finite entries")
    norm = np.linalg.norm(M, 1)
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0 else 0
    X = M / (2.0**s)
    n = M.shape[0]
    E = np.eye(n)
    term = np.eye(n)
    for k in range(1, _TAYLOR_TERMS + 1):
        term = term @ X / k
        E = E + term
    for _ in range(s):
        E = E @ E
    if not np.all(np.isfinite(E)):
        raise FloatingPointError("matrix exponential overflowed")
    return E


def expm_propagate(A, z0, h: float = DEFAULT_H, T: float = DEFAULT_T) -> Trajectory:
    """Exact-in-exact-arithmetic propagation ``z_{k+1} = exp(A h) z_k``."""
    z0 = np.asarray(z0, dtype=float)
    n = _n_steps(h, T)
    E = expm(np.asarray(A, dtype=float) * h)
    out = np.empty((n + 1, z0.size))
    out[0] = z0
    z = z0
    for k in range(n):
        z = E @ z
        if not np.all(np.isfinite(z)):
            raise NonFiniteStateError(k + 1, (k + 1) * h)
        out[k + 1] = z
    return Trajectory(0.0, h, out)


def project(traj: Trajectory, C) -> Trajectory:
    """Output ``x = C z`` per sample; a selection ``[I 0]`` is applied as a slice."""
    C = np.asarray(C, dtype=float)
    if C.ndim != 2 or C.shape[1] != traj.dim:
        raise DimensionError(f"C has shape {C.shape}, trajectory dimension is {traj.dim}")
    n = C.shape[0]
    selection = np.zeros_like(C)
    selection[:, :n] = np.eye(n)
    if np.array_equal(C, selection):
        return Trajectory(traj.t0, traj.h, traj.samples[:, :n].copy())
    return Trajectory(traj.t0, traj.h, traj.samples @ C.T)


@dataclass(frozen=True)
class ErrorReport:
    per_state: np.ndarray
    sup: float
    series: Trajectory


def compare(a: Trajectory, b: Trajectory) -> ErrorReport:
    if len(a) != len(b) or a.h != b.h or a.t0 != b.t0:
        raise ValueError("trajectories are on different time grids")
    if a.dim != b.dim:
        raise DimensionError(f"trajectory dimensions differ: {a.dim} vs {b.dim}")
    err = np.abs(a.samples - b.samples)
    per_state = err.max(axis=0)
    return ErrorReport(per_state, float(per_state.max(initial=0.0)), Trajectory(a.t0, a.h, err))
