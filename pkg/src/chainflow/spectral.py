"""Exact solution of the nearest-neighbour harmonic chain in its eigenbasis.

The deviations q_k = x_{k+1} - x_k - 1/N evolve independently in the modes
y_j(k) = sqrt(2/N) sin(pi j k / N) with frequencies 2 omega sin(pi j / 2N).
The tridiagonal coupling matrix is never formed: projection and synthesis are
an orthonormal DST-I (fast path) or the explicit O(N^2) sum (naive path).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dst

from . import kernels
from .model import ChainParams, ChainState, build_initial_state

# below this phase the closed-form time kernels switch to Taylor series
SERIES_PHASE = 1e-2


def sine_transform(c, method="fast"):
    """Orthonormal sine transform of length n = N - 1 (its own inverse)."""
    c = np.asarray(c, dtype=float)
    if method == "fast":
        return dst(c, type=1, norm="ortho")
    if method == "naive":
        return kernels.sine_sum(np.ascontiguousarray(c), c.shape[0] + 1)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SpectralBasis:
    N: int
    omega: float

    @property
    def j(self):
        return np.arange(1, self.N)

    @property
    def frequencies(self):
        return 2.0 * self.omega * np.sin(np.pi * self.j / (2 * self.N))

    @property
    def eigenvalues(self):
        return 4.0 * self.omega ** 2 * np.sin(np.pi * self.j / (2 * self.N)) ** 2

    def mode(self, j, k=None):
        """y_j(k); k defaults to 1..N-1. Endpoints k = 0, N give zero."""
        k = np.arange(1, self.N) if k is None else np.asarray(k)
        return np.sqrt(2.0 / self.N) * np.sin(np.pi * j * k / self.N)


@dataclass(frozen=True)
class ModeCoefficients:
    Q: np.ndarray
    P: np.ndarray
    basis: SpectralBasis
    x1_0: float
    v1_0: float

    @property
    def N(self):
        return self.basis.N


def project_initial(state: ChainState, params: ChainParams, method="fast") -> ModeCoefficients:
    if state.N != params.N:
        raise ValueError(f"state has {state.N} particles, params expect {params.N}")
    q0 = np.diff(state.x) - params.a
    qdot0 = np.diff(state.vel)
    basis = SpectralBasis(params.N, params.omega)
    return ModeCoefficients(sine_transform(q0, method), sine_transform(qdot0, method),
                            basis, float(state.x[0]), float(state.vel[0]))


def _one_minus_cos(theta):
    return 2.0 * np.sin(0.5 * theta) ** 2


def _theta_minus_sin(theta):
    """theta - sin(theta) without cancellation at small theta."""
    theta = np.asarray(theta, dtype=float)
    out = theta - np.sin(theta)
    small = np.abs(theta) < SERIES_PHASE
    if np.any(small):
        s = theta[small]
        s2 = s * s
        out[small] = s * s2 / 6.0 * (1.0 - s2 / 20.0 * (1.0 - s2 / 42.0 * (1.0 - s2 / 72.0)))
    return out


def mode_amplitudes(coeffs: ModeCoefficients, t):
    """Q_j(t) and dQ_j/dt."""
    w = coeffs.basis.frequencies
    c, s = np.cos(w * t), np.sin(w * t)
    amp = coeffs.Q * c + coeffs.P * s / w
    rate = -coeffs.Q * w * s + coeffs.P * c
    return amp, rate


def deviations_at(coeffs: ModeCoefficients, t, method="fast"):
    """(q_k(t), dq_k/dt) for k = 1..N-1."""
    amp, rate = mode_amplitudes(coeffs, t)
    return sine_transform(amp, method), sine_transform(rate, method)


def first_particle_at(coeffs: ModeCoefficients, t):
    """x_1(t), v_1(t) from x1'' = omega^2 q_1 with the time integrals in closed form."""
    basis = coeffs.basis
    w = basis.frequencies
    y1 = basis.mode(basis.j, 1)
    wt = w * t
    omega2 = basis.omega ** 2
    # int_0^t (t-s) cos(w s) ds = (1 - cos wt)/w^2 ; int_0^t (t-s) sin(w s)/w ds = (wt - sin wt)/w^3
    disp = coeffs.Q * _one_minus_cos(wt) / w ** 2 + coeffs.P * _theta_minus_sin(wt) / w ** 3
    # int_0^t cos(w s) ds = sin(wt)/w ; int_0^t sin(w s)/w ds = (1 - cos wt)/w^2
    vel = coeffs.Q * np.sin(wt) / w + coeffs.P * _one_minus_cos(wt) / w ** 2
    x1 = coeffs.x1_0 + coeffs.v1_0 * t + omega2 * float(np.dot(y1, disp))
    v1 = coeffs.v1_0 + omega2 * float(np.dot(y1, vel))
    return x1, v1


def positions_at(coeffs: ModeCoefficients, t, method="fast") -> ChainState:
    q, qdot = deviations_at(coeffs, t, method)
    x1, v1 = first_particle_at(coeffs, t)
    N = coeffs.N
    x = np.empty(N)
    vel = np.empty(N)
    x[0], vel[0] = x1, v1
    x[1:] = x1 + np.arange(1, N) / N + np.cumsum(q)
    vel[1:] = v1 + np.cumsum(qdot)
    return ChainState(float(t), x, vel)


def gaps_at(coeffs: ModeCoefficients, t, method="fast"):
    """Nearest-neighbour gaps x_{k+1} - x_k, straight from the deviations."""
    q, _ = deviations_at(coeffs, t, method)
    return 1.0 / coeffs.N + q


def total_energy(state: ChainState, params: ChainParams):
    """H = sum v^2 / 2 + (omega^2 / 2) sum (gap - 1/N)^2."""
    q = np.diff(state.x) - params.a
    return 0.5 * float(np.dot(state.vel, state.vel)) + 0.5 * params.omega ** 2 * float(np.dot(q, q))


def solve(params: ChainParams, profile, method="fast") -> ModeCoefficients:
    """Shortcut: initial state from the profile, projected onto the modes."""
    return project_initial(build_initial_state(params, profile), params, method)
