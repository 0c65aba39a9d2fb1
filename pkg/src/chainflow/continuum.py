"""Continuum limit: wave-equation solution, Lagrangian map, Eulerian fields.

Everything that has a closed form is evaluated termwise from the sine series
of q(t, x); only the inversions x -> z and y -> z are iterative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ALPHA_PANELS, Profile, SineProfile, _simpson
from .spectral import _one_minus_cos, _theta_minus_sin

TRUNCATION_TOL = 1e-12
MAX_MODES = 1024
ROOT_TOL = 1e-12
ROOT_MAXITER = 200


class DomainError(ValueError):
    """A point lies outside the domain where the map or field is defined."""


@dataclass(frozen=True)
class WaveSolution:
    """q(t, x) = sum_m T_m(t) sin(m pi x) solving q_tt = omega'^2 q_xx, q = 0 at x = 0, 1.

    T_m(t) = a_m cos(k_m t) + b_m sin(k_m t) / k_m with k_m = m pi omega'.
    """

    omega_prime: float
    a: np.ndarray
    b: np.ndarray

    @property
    def M(self):
        return self.a.shape[0]

    @property
    def m(self):
        return np.arange(1, self.M + 1, dtype=float)

    @property
    def kappa(self):
        return np.pi * self.omega_prime * self.m

    def time_factors(self, t, deriv=0):
        """T_m(t) or its first or second derivative."""
        k = self.kappa
        c, s = np.cos(k * t), np.sin(k * t)
        if deriv == 0:
            return self.a * c + self.b * s / k
        if deriv == 1:
            return -self.a * k * s + self.b * c
        if deriv == 2:
            return -k ** 2 * (self.a * c + self.b * s / k)
        raise ValueError("deriv must be 0, 1 or 2")

    def _space(self, x, deriv):
        x = np.asarray(x, dtype=float)
        k = np.pi * self.m
        phase = np.multiply.outer(x, k)
        r = deriv % 4
        base = np.sin(phase) if r % 2 == 0 else np.cos(phase)
        return (-1.0 if r >= 2 else 1.0) * base * k ** deriv

    def q(self, t, x, dx=0, dt=0):
        """Derivative d^dt/dt^dt d^dx/dx^dx of q at time t and points x."""
        if self.M == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return self._space(x, dx) @ self.time_factors(t, dt)


def build_wave_solution(profile: Profile, omega_prime, M=None) -> WaveSolution:
    """Sine coefficients of q(0, .) = X - 1 and q_t(0, .) = V.

    Sine profiles are read off exactly. Otherwise a_m = 2 int (X - 1) sin(m pi x)
    and b_m = 2 int V sin(m pi x) by Simpson quadrature; without an explicit M
    the series is cut after the last mode whose |a_m| + |b_m| / (m pi omega')
    reaches 1e-12, up to MAX_MODES.
    """
    if isinstance(profile, SineProfile):
        xm, xa = profile.x_modes
        vm, va = profile.v_modes
        top = int(max([0, *xm.tolist(), *vm.tolist()]))
        size = top if M is None else M
        if M is not None and M < 1:
            raise ValueError("M must be >= 1")
        a = np.zeros(size)
        b = np.zeros(size)
        for m, c in zip(xm.astype(int), xa):
            if m <= size:
                a[m - 1] = c
        for m, c in zip(vm.astype(int), va):
            if m <= size:
                b[m - 1] = c
        return WaveSolution(float(omega_prime), a, b)
    size = MAX_MODES if M is None else M
    if size < 1:
        raise ValueError("M must be >= 1")
    m = np.arange(1, size + 1, dtype=float)
    panels = ALPHA_PANELS * 4

    def coeff(fun):
        return 2.0 * _simpson(lambda x: fun(x)[:, None] * np.sin(np.pi * np.outer(x, m)), 0.0, 1.0, panels)

    a = coeff(lambda x: profile.X(x) - 1.0)
    b = coeff(lambda x: profile.V(x))
    if M is None:
        weight = np.abs(a) + np.abs(b) / (np.pi * omega_prime * m)
        big = np.nonzero(weight >= TRUNCATION_TOL)[0]
        top = int(big[-1]) + 1 if big.size else 1
        a, b = a[:top], b[:top]
    return WaveSolution(float(omega_prime), a, b)


def _solve_monotone(fun, slope, target, lo=0.0, hi=1.0, tol=ROOT_TOL, maxiter=ROOT_MAXITER):
    """Vectorised safeguarded Newton for increasing ``fun`` on [lo, hi]."""
    target = np.asarray(target, dtype=float)
    lo = np.full(target.shape, lo, dtype=float)
    hi = np.full(target.shape, hi, dtype=float)
    z = lo + (hi - lo) * 0.5
    done = np.zeros(target.shape, dtype=bool)
    for _ in range(maxiter):
        r = fun(z) - target
        lo = np.where(r < 0.0, z, lo)
        hi = np.where(r > 0.0, z, hi)
        step = r / slope(z)
        znew = z - step
        outside = (znew <= lo) | (znew >= hi) | ~np.isfinite(znew)
        znew = np.where(outside, 0.5 * (lo + hi), znew)
        znew = np.where(r == 0.0, z, znew)
        done = np.abs(znew - z) <= 4.0 * np.finfo(float).eps * np.maximum(1.0, np.abs(z))
        z = znew
        if done.all():
            break
    resid = np.abs(fun(z) - target)
    if np.any(resid > tol):
        raise RuntimeError(f"root finder failed: residual {resid.max():.3e}")
    return z


@dataclass(frozen=True)
class Fields:
    rho: np.ndarray
    u: np.ndarray
    p: np.ndarray
    R: np.ndarray
    U: np.ndarray
    T: np.ndarray
    F: np.ndarray


class ContinuumMap:
    """Lagrangian map G(t, z), label map z(x) and the Eulerian fields."""

    def __init__(self, wave: WaveSolution, profile: Profile, v=0.0):
        self.wave = wave
        self.profile = profile
        self.v = float(v)
        self.L0 = profile.length

    @classmethod
    def from_profile(cls, profile: Profile, omega_prime, v=0.0, M=None):
        return cls(build_wave_solution(profile, omega_prime, M), profile, v)

    @property
    def omega_prime(self):
        return self.wave.omega_prime

    # -- label coordinate -------------------------------------------------------------

    def f(self, z):
        return self.profile.X_integral(z)

    def z_of_x(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > self.L0 * (1 + 1e-15)):
            raise DomainError(f"x must lie in [0, L0={self.L0!r}]")
        return _solve_monotone(self.f, self.profile.X, np.minimum(x, self.L0))

    # -- Lagrangian map ------------------------------------------------------------------

    def _origin_terms(self, t):
        w = self.wave
        k = w.kappa
        m_pi = np.pi * w.m
        kt = k * t
        g = (w.a * _one_minus_cos(kt) + w.b * _theta_minus_sin(kt) / k) / m_pi
        g_t = (w.a * k * np.sin(kt) + w.b * _one_minus_cos(kt)) / m_pi
        return g, g_t

    def G(self, t, z, deriv="G"):
        """G and its partials; ``deriv`` in {"G", "G_t", "G_z", "G_zz", "G_tt"}."""
        z = np.asarray(z, dtype=float)
        w = self.wave
        if deriv == "G_z":
            return 1.0 + w.q(t, z)
        if deriv == "G_zz":
            return w.q(t, z, dx=1)
        if deriv == "G_tt":
            return self.omega_prime ** 2 * w.q(t, z, dx=1)
        m_pi = np.pi * w.m
        shape = 2.0 * np.sin(0.5 * np.multiply.outer(z, m_pi)) ** 2 / m_pi
        if deriv == "G":
            g0, _ = self._origin_terms(t)
            origin = self.v * t + g0.sum() if w.M else self.v * t
            return origin + z + (shape @ w.time_factors(t) if w.M else 0.0)
        if deriv == "G_t":
            _, g0t = self._origin_terms(t)
            origin = self.v + g0t.sum() if w.M else self.v
            return origin + (shape @ w.time_factors(t, 1) if w.M else 0.0 * z)
        raise ValueError(f"unknown derivative {deriv!r}")

    def chain_length(self, t):
        w = self.wave
        m_pi = np.pi * w.m
        odd = (w.m % 2 == 1)
        return 1.0 + float(np.sum(w.time_factors(t)[odd] * 2.0 / m_pi[odd]))

    def Y0(self, t):
        return float(self.G(t, np.array([0.0]))[0])

    def YL(self, t):
        return float(self.G(t, np.array([1.0]))[0])

    def z_of_ty(self, t, y):
        """Label z with G(t, z) = y."""
        y = np.asarray(y, dtype=float)
        y0, yl = self.Y0(t), self.YL(t)
        span = yl - y0
        slack = 1e-14 * max(1.0, abs(y0), abs(yl))
        if np.any(y < y0 - slack) or np.any(y > yl + slack):
            raise DomainError(f"y outside [Y0, YL] = [{y0!r}, {yl!r}] at t={t!r}")
        yc = np.clip(y, y0, yl)
        if span <= 0:
            raise DomainError("degenerate domain")
        return _solve_monotone(lambda z: self.G(t, z), lambda z: self.G(t, z, "G_z"), yc)

    def x_of_ty(self, t, y):
        return self.f(self.z_of_ty(t, y))

    # -- Eulerian fields --------------------------------------------------------------------

    def fields(self, t, y) -> Fields:
        z = self.z_of_ty(t, y)
        w = self.wave
        c2 = self.omega_prime ** 2
        q = w.q(t, z)
        rho = 1.0 / (1.0 + q)
        u = self.G(t, z, "G_t")
        return Fields(
            rho=rho,
            u=u,
            p=-c2 * q,
            R=c2 * w.q(t, z, dx=1),
            U=0.5 * c2 * q ** 2,
            T=0.5 * u ** 2,
            F=z,
        )


def check_noncollision(cmap: ContinuumMap, gamma, t_grid, z_grid, tol=1e-12):
    """Extreme difference quotients of G over all sampled pairs z1 < z2 (``tol`` absorbs roundoff)."""
    z = np.asarray(z_grid, dtype=float)
    i, j = np.triu_indices(z.shape[0], 1)
    lo, hi = np.inf, -np.inf
    for t in t_grid:
        g = cmap.G(t, z)
        slope = (g[j] - g[i]) / (z[j] - z[i])
        lo, hi = min(lo, slope.min()), max(hi, slope.max())
    return {"min_slope": lo, "max_slope": hi, "lower": 1.0 - gamma, "upper": 1.0 + gamma,
            "passed": bool(lo >= 1.0 - gamma - tol and hi <= 1.0 + gamma + tol)}

