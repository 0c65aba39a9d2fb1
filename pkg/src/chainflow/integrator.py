"""Velocity-Verlet time stepping, the independent oracle for the spectral solver."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import ChainParams, ChainState, PairPotential

COLLISION_GAP = 1e-3  # in units of 1/N


class CollisionError(RuntimeError):
    """Positions stopped being strictly increasing during integration."""

    def __init__(self, t, min_gap, trajectory=None):
        super().__init__(f"collision at t={t:.6g}: min gap {min_gap:.3e}")
        self.t = t
        self.min_gap = min_gap
        self.trajectory = trajectory


def forces_quadratic_nn(state: ChainState, params: ChainParams):
    x = np.asarray(state.x if isinstance(state, ChainState) else state, dtype=float)
    out = np.empty_like(x)
    kernels._nn_forces_numpy(x, params.omega ** 2, params.a, out)
    return out


def _accumulate_pairs(x, potential, omega2, out, offsets):
    n = x.shape[0]
    for m in offsets:
        if m >= n:
            break
        d = x[m:] - x[:-m]
        if m > 1 and d.min() >= potential.cutoff:
            break
        s = omega2 * potential.half_slope(d)
        out[:-m] += s
        out[m:] -= s


def forces_general(state: ChainState, potential: PairPotential, omega):
    """-dU/dx_k for U = sum_{k<l} (omega^2 / 2) I(|x_k - x_l|).

    Positions must be sorted. Pairs are swept by index offset and the sweep
    stops at the first offset whose smallest distance is already on the
    plateau, since every larger offset is farther still.
    """
    x = np.asarray(state.x if isinstance(state, ChainState) else state, dtype=float)
    out = np.zeros_like(x)
    _accumulate_pairs(x, potential, omega ** 2, out, range(1, x.shape[0]))
    return out


def forces_general_allpairs(state, potential: PairPotential, omega):
    """All-pairs O(N^2) reference for :func:`forces_general`; no cutoff, no sort assumption."""
    x = np.asarray(state.x if isinstance(state, ChainState) else state, dtype=float)
    diff = x[None, :] - x[:, None]          # diff[k, l] = x_l - x_k
    iu = np.triu_indices(x.shape[0], 1)
    d = np.abs(diff[iu])
    s = omega ** 2 * potential.half_slope(d) * np.sign(diff[iu])
    out = np.zeros_like(x)
    np.add.at(out, iu[0], s)
    np.add.at(out, iu[1], -s)
    return out


def potential_energy_general(state, potential: PairPotential, omega):
    x = np.asarray(state.x if isinstance(state, ChainState) else state, dtype=float)
    iu = np.triu_indices(x.shape[0], 1)
    d = np.abs(x[iu[1]] - x[iu[0]])
    return 0.5 * omega ** 2 * float(potential.value(d).sum())


class QuadraticForce:
    """Nearest-neighbour quadratic force; recognised by the compiled stepper."""

    def __init__(self, params: ChainParams):
        self.omega2 = params.omega ** 2
        self.a = params.a

    def __call__(self, x):
        out = np.empty_like(x)
        kernels._nn_forces_numpy(x, self.omega2, self.a, out)
        return out


class GeneralForce:
    def __init__(self, params: ChainParams, potential: PairPotential | None = None):
        self.potential = potential or PairPotential.for_params(params)
        self.omega = params.omega

    def __call__(self, x):
        return forces_general(x, self.potential, self.omega)


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    x: np.ndarray       # (samples, N)
    vel: np.ndarray     # (samples, N)
    dt: float

    def __len__(self):
        return self.t.shape[0]

    def state(self, i) -> ChainState:
        return ChainState(float(self.t[i]), self.x[i], self.vel[i])

    def states(self):
        return [self.state(i) for i in range(len(self))]


def _step_count(T, dt):
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    nsteps = max(1, int(round(T / dt)))
    return nsteps, T / nsteps


def verlet_integrate(state: ChainState, force_fn, T, dt, save_every=1) -> Trajectory:
    """Velocity Verlet from ``state`` to time T with unit masses.

    The step is adjusted to T / round(T / dt) so that t = T is hit exactly.
    Raises CollisionError if any gap drops below 1e-3 / N.
    """
    n = state.N
    nsteps, h = _step_count(T, dt)
    min_gap = COLLISION_GAP / n
    x0 = np.array(state.x, dtype=float)
    v0 = np.array(state.vel, dtype=float)
    if isinstance(force_fn, QuadraticForce):
        xs, vs, fail = kernels.verlet_nn(x0, v0, force_fn.omega2, force_fn.a, h, nsteps,
                                         save_every, min_gap)
    else:
        xs, vs, fail = _verlet_python(x0, v0, force_fn, h, nsteps, save_every, min_gap)
    steps = np.arange(0, nsteps + 1, save_every)
    if steps[-1] != nsteps:
        steps = np.append(steps, nsteps)
    if fail >= 0:
        steps = np.append(steps[: xs.shape[0] - 1], fail)
    traj = Trajectory(state.t + steps * h, xs, vs, h)
    if fail >= 0:
        raise CollisionError(float(traj.t[-1]), float(np.diff(xs[-1]).min()), traj)
    return traj


def _verlet_python(x, v, force_fn, dt, nsteps, stride, min_gap):
    xs = [x.copy()]
    vs = [v.copy()]
    f = force_fn(x)
    half = 0.5 * dt
    for step in range(nsteps):
        v += half * f
        x += dt * v
        f = force_fn(x)
        v += half * f
        if np.diff(x).min() < min_gap:
            xs.append(x.copy())
            vs.append(v.copy())
            return np.array(xs), np.array(vs), step + 1
        if (step + 1) % stride == 0 or step + 1 == nsteps:
            xs.append(x.copy())
            vs.append(v.copy())
    return np.array(xs), np.array(vs), -1


def default_dt(params: ChainParams, courant=0.05):
    """dt = courant / omega."""
    return courant / params.omega


def convergence_order(errors, factor=2.0):
    """Observed orders log(e_i / e_{i+1}) / log(factor)."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / math.log(factor)
