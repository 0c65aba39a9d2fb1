"""Hot loops: the O(N^2) sine sum and the nearest-neighbour Verlet stepper.

Each kernel exists twice, a numba version and a numpy version with the same
call signature. The public names are bound at import time according to
``CHAINFLOW_BACKEND`` (see :mod:`chainflow._backend`); both implementations
stay importable for cross-checks and benchmarks.
"""
import numpy as np

from ._backend import njit, requested_backend

BACKEND = requested_backend()


# -- sine sum -----------------------------------------------------------------

@njit(cache=True)
def _sine_sum_numba(coef, N):
    n = N - 1
    out = np.empty(n)
    scale = np.sqrt(2.0 / N)
    period = 2 * N
    for k in range(1, N):
        acc = 0.0
        for j in range(1, N):
            # reduce j*k mod 2N so the sine argument stays in [0, 2pi)
            m = (j * k) % period
            acc += coef[j - 1] * np.sin(np.pi * m / N)
        out[k - 1] = scale * acc
    return out


def _sine_sum_numpy(coef, N):
    idx = np.arange(1, N)
    m = np.outer(idx, idx) % (2 * N)
    return np.sqrt(2.0 / N) * (np.sin(np.pi * m / N) @ np.asarray(coef, dtype=float))


# -- nearest-neighbour velocity Verlet ------------------------------------------

@njit(cache=True)
def _nn_forces_numba(x, omega2, a, out):
    out[:] = 0.0
    for k in range(x.shape[0] - 1):
        s = omega2 * ((x[k + 1] - x[k]) - a)
        out[k] += s
        out[k + 1] -= s


@njit(cache=True)
def _verlet_nn_numba(x0, v0, omega2, a, dt, nsteps, stride, min_gap):
    n = x0.shape[0]
    nsave = (nsteps + stride - 1) // stride + 1
    xs = np.empty((nsave, n))
    vs = np.empty((nsave, n))
    x = x0.copy()
    v = v0.copy()
    f = np.empty(n)
    _nn_forces_numba(x, omega2, a, f)
    xs[0] = x
    vs[0] = v
    isave = 1
    half = 0.5 * dt
    for step in range(nsteps):
        for k in range(n):
            v[k] += half * f[k]
            x[k] += dt * v[k]
        _nn_forces_numba(x, omega2, a, f)
        for k in range(n):
            v[k] += half * f[k]
        for k in range(n - 1):
            if x[k + 1] - x[k] < min_gap:
                xs[isave] = x
                vs[isave] = v
                return xs[: isave + 1], vs[: isave + 1], step + 1
        if (step + 1) % stride == 0 or step + 1 == nsteps:
            xs[isave] = x
            vs[isave] = v
            isave += 1
    return xs[:isave], vs[:isave], -1


def _nn_forces_numpy(x, omega2, a, out):
    s = omega2 * (np.diff(x) - a)
    out[:] = 0.0
    out[:-1] += s
    out[1:] -= s


def _verlet_nn_numpy(x0, v0, omega2, a, dt, nsteps, stride, min_gap):
    n = x0.shape[0]
    nsave = (nsteps + stride - 1) // stride + 1
    xs = np.empty((nsave, n))
    vs = np.empty((nsave, n))
    x = x0.copy()
    v = v0.copy()
    f = np.empty(n)
    _nn_forces_numpy(x, omega2, a, f)
    xs[0] = x
    vs[0] = v
    isave = 1
    half = 0.5 * dt
    for step in range(nsteps):
        v += half * f
        x += dt * v
        _nn_forces_numpy(x, omega2, a, f)
        v += half * f
        if np.diff(x).min() < min_gap:
            xs[isave] = x
            vs[isave] = v
            return xs[: isave + 1], vs[: isave + 1], step + 1
        if (step + 1) % stride == 0 or step + 1 == nsteps:
            xs[isave] = x
            vs[isave] = v
            isave += 1
    return xs[:isave], vs[:isave], -1


IMPLEMENTATIONS = {
    "numba": {
        "sine_sum": _sine_sum_numba,
        "verlet_nn": _verlet_nn_numba,
    },
    "numpy": {
        "sine_sum": _sine_sum_numpy,
        "verlet_nn": _verlet_nn_numpy,
    },
}

sine_sum = IMPLEMENTATIONS[BACKEND]["sine_sum"]
verlet_nn = IMPLEMENTATIONS[BACKEND]["verlet_nn"]
