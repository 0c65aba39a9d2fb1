"""Physical setup of the chain: profiles, parameters, states, pair potential."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping

import numpy as np
from scipy.optimize import brentq

ALPHA_PANELS = 2 ** 14
POSITIVITY_GRID = 10_001
BOUNDARY_TOL = 1e-12
DEFAULT_R = 1.0 / 3.0
RANDOM_MODES = range(4, 101)
PRNG_ID = "numpy.PCG64"


class InvariantError(ValueError):
    """A constructor or builder was given data violating a model invariant."""

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


# -- variation integrals ---------------------------------------------------------

def _simpson(fun, lo, hi, panels):
    panels = max(2, panels + panels % 2)
    x = np.linspace(lo, hi, panels + 1)
    y = fun(x)
    h = (hi - lo) / panels
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum(axis=0) + 2.0 * y[2:-1:2].sum(axis=0))


def abs_integral(fun, panels=ALPHA_PANELS):
    """Integral of |fun| over [0, 1].

    Sign changes of ``fun`` on the panel grid are located by bisection and
    every sign-definite piece is integrated with composite Simpson, so the
    kink of the absolute value never sits inside a panel.
    """
    grid = np.linspace(0.0, 1.0, panels + 1)
    vals = fun(grid)
    if not np.any(vals):
        return 0.0
    breaks = [0.0]
    for i in range(panels):
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0.0 and 0 < i:
            breaks.append(grid[i])
        elif f0 * f1 < 0.0:
            breaks.append(brentq(lambda s: float(fun(np.array([s]))[0]),
                                 grid[i], grid[i + 1], xtol=1e-16))
    breaks.append(1.0)
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        n = int(math.ceil((hi - lo) * panels))
        total += abs(_simpson(fun, lo, hi, n))
    return total


# -- profiles ----------------------------------------------------------------------

def _sine_eval(modes, amps, x, deriv):
    """d^deriv/dx^deriv of sum_m amps_m sin(pi m x)."""
    x = np.asarray(x, dtype=float)
    if modes.size == 0:
        return np.zeros_like(x)
    k = np.pi * modes
    phase = np.multiply.outer(x, k)
    # derivative cycle of sin: sin, cos, -sin, -cos
    r = deriv % 4
    base = np.sin(phase) if r % 2 == 0 else np.cos(phase)
    sign = -1.0 if r >= 2 else 1.0
    return sign * (base @ (amps * k ** deriv))


@dataclass(frozen=True)
class Profile:
    """Initial gap profile X and velocity-difference profile V on [0, 1]."""

    alpha: float
    beta: float

    kind = "abstract"

    def X(self, x, deriv=0):
        raise NotImplementedError

    def V(self, x, deriv=0):
        raise NotImplementedError

    def X_integral(self, z):
        """f(z) = integral of X over [0, z]."""
        raise NotImplementedError

    @property
    def length(self):
        return float(self.X_integral(np.array([1.0]))[0])


@dataclass(frozen=True)
class SineProfile(Profile):
    """X = 1 + eps * sum c_m sin(pi m x), V = sum d_m sin(pi m x)."""

    coeffs: Mapping[int, float] = field(default_factory=dict)
    epsilon: float = 0.0
    velocity_coeffs: Mapping[int, float] = field(default_factory=dict)
    seed: int | None = None
    theta: float | None = None

    kind = "finite-sine-series"

    @cached_property
    def x_modes(self):
        m = np.array(sorted(self.coeffs), dtype=float)
        a = np.array([self.epsilon * self.coeffs[int(k)] for k in m], dtype=float)
        return m, a

    @cached_property
    def v_modes(self):
        m = np.array(sorted(self.velocity_coeffs), dtype=float)
        a = np.array([self.velocity_coeffs[int(k)] for k in m], dtype=float)
        return m, a

    def X(self, x, deriv=0):
        out = _sine_eval(*self.x_modes, x, deriv)
        return out + 1.0 if deriv == 0 else out

    def V(self, x, deriv=0):
        return _sine_eval(*self.v_modes, x, deriv)

    def X_integral(self, z):
        z = np.asarray(z, dtype=float)
        m, amp = self.x_modes
        if m.size == 0:
            return z.copy()
        k = np.pi * m
        # 1 - cos(k z) written as 2 sin^2(k z / 2) to keep small-z accuracy
        return z + (2.0 * np.sin(0.5 * np.multiply.outer(z, k)) ** 2) @ (amp / k)


@dataclass(frozen=True)
class ClosedFormProfile(Profile):
    """Profile given by callables; derivatives must be supplied, not derived."""

    x_derivs: tuple = ()
    v_derivs: tuple = ()
    _cheb: object = None

    kind = "closed-form"

    def X(self, x, deriv=0):
        fn = self.x_derivs[deriv] if deriv < len(self.x_derivs) else None
        if fn is None:
            raise ValueError(f"X derivative of order {deriv} was not supplied")
        return np.asarray(fn(np.asarray(x, dtype=float)), dtype=float)

    def V(self, x, deriv=0):
        if not self.v_derivs:
            return np.zeros_like(np.asarray(x, dtype=float))
        if deriv >= len(self.v_derivs):
            raise ValueError(f"V derivative of order {deriv} was not supplied")
        return np.asarray(self.v_derivs[deriv](np.asarray(x, dtype=float)), dtype=float)

    def X_integral(self, z):
        return self._cheb(np.asarray(z, dtype=float))


def _validate_profile(p: Profile):
    grid = np.linspace(0.0, 1.0, POSITIVITY_GRID)
    xv = p.X(grid)
    if np.any(xv <= 0.0):
        raise InvariantError("X > 0", f"min X on grid is {xv.min():.6g}")
    ends = p.X(np.array([0.0, 1.0]))
    vends = p.V(np.array([0.0, 1.0]))
    if np.max(np.abs(ends - 1.0)) > BOUNDARY_TOL:
        raise InvariantError("X(0)=X(1)=1", f"got X(0)={ends[0]!r}, X(1)={ends[1]!r}")
    if np.max(np.abs(vends)) > BOUNDARY_TOL:
        raise InvariantError("V(0)=V(1)=0", f"got V(0)={vends[0]!r}, V(1)={vends[1]!r}")


def compute_alpha_beta(profile: Profile):
    """Total variations alpha = int |X''| and beta = int |V''| over [0, 1]."""
    alpha = abs_integral(lambda x: profile.X(x, 2))
    beta = abs_integral(lambda x: profile.V(x, 2))
    return float(alpha), float(beta)


def build_profile_sine(coeffs, epsilon, velocity_coeffs=None, *, seed=None, theta=None):
    """Sine-series profile X = 1 + eps * sum c_m sin(pi m x).

    ``velocity_coeffs`` (unscaled) gives V = sum d_m sin(pi m x); V = 0 when
    omitted.
    """
    if epsilon < 0:
        raise InvariantError("epsilon >= 0", f"got {epsilon}")
    coeffs = {int(m): float(c) for m, c in dict(coeffs).items() if c != 0.0}
    vcoeffs = {int(m): float(c) for m, c in dict(velocity_coeffs or {}).items() if c != 0.0}
    for m in (*coeffs, *vcoeffs):
        if m < 1:
            raise InvariantError("mode index >= 1", f"got mode {m}")
    if epsilon == 0.0:
        coeffs = {}
    probe = SineProfile(0.0, 0.0, coeffs, float(epsilon), vcoeffs, seed, theta)
    _validate_profile(probe)
    alpha, beta = compute_alpha_beta(probe)
    return SineProfile(alpha, beta, coeffs, float(epsilon), vcoeffs, seed, theta)


def build_profile_closed_form(X, dX, d2X, V=None, dV=None, d2V=None, d4X=None):
    """Profile from user callables. X, X', X'' are required; V defaults to 0.

    The antiderivative of X is taken from a Chebyshev interpolant.
    """
    x_derivs = (X, dX, d2X) if d4X is None else (X, dX, d2X, None, d4X)
    v_derivs = () if V is None else (V, dV, d2V)
    if v_derivs and None in v_derivs:
        raise ValueError("V needs V' and V'' callables as well")
    cheb = np.polynomial.Chebyshev.interpolate(
        lambda s: np.asarray(X(np.asarray(s, dtype=float)), dtype=float), 256, domain=[0.0, 1.0])
    anti = cheb.integ(lbnd=0.0)
    probe = ClosedFormProfile(0.0, 0.0, x_derivs, v_derivs, anti)
    _validate_profile(probe)
    alpha, beta = compute_alpha_beta(probe)
    return ClosedFormProfile(alpha, beta, x_derivs, v_derivs, anti)


def equilibrium_profile():
    return build_profile_sine({}, 0.0)


def single_mode_profile(epsilon=0.01, mode=1):
    return build_profile_sine({mode: 1.0}, epsilon)


def random_fourier_amplitudes(seed):
    """Random s_k in [0, 1] for k = 4..100 from a seeded PCG64 stream."""
    rng = np.random.Generator(np.random.PCG64(seed))
    s = rng.uniform(0.0, 1.0, len(RANDOM_MODES))
    return dict(zip(RANDOM_MODES, s.tolist()))


def random_fourier_profile(seed=42, theta=0.5):
    """X = 1 + eps * sum_{k=4}^{100} s_k / k^2 sin(pi k x), V = 0.

    eps = theta / (2 s) with s = int |S''|, so theta in (0, 1) keeps eps below
    the collision-free threshold 1 / (2 s). ``theta = 0`` gives X = 1.
    """
    if not 0.0 <= theta < 1.0:
        raise InvariantError("0 <= theta < 1", f"got {theta}")
    s_k = random_fourier_amplitudes(seed)
    coeffs = {k: s / k ** 2 for k, s in s_k.items()}
    unit = SineProfile(0.0, 0.0, coeffs, 1.0)
    s = abs_integral(lambda x: unit.X(x, 2))
    return build_profile_sine(coeffs, theta / (2.0 * s), seed=seed, theta=theta)


def profile_bounds_check(profile: Profile, points=POSITIVITY_GRID):
    """Sampled check of sup |X - 1| <= alpha."""
    grid = np.linspace(0.0, 1.0, points)
    dev = float(np.max(np.abs(profile.X(grid) - 1.0)))
    return {"sup_dev": dev, "alpha": profile.alpha, "violated": dev > profile.alpha + 1e-9}


# -- profile text form -----------------------------------------------------------

def profile_to_text(profile: SineProfile) -> str:
    lines = [f"profile_kind = {profile.kind}", f"epsilon = {profile.epsilon!r}"]
    if profile.seed is not None:
        lines.append(f"seed = {profile.seed}")
        lines.append(f"prng = {PRNG_ID}")
    if profile.theta is not None:
        lines.append(f"theta = {profile.theta!r}")
    lines += [f"mode {m} = {c!r}" for m, c in sorted(profile.coeffs.items())]
    lines += [f"vmode {m} = {c!r}" for m, c in sorted(profile.velocity_coeffs.items())]
    return "\n".join(lines) + "\n"


def parse_profile_entries(entries: Mapping[str, str]) -> SineProfile | None:
    """Build a sine profile from parsed ``key = value`` entries.

    Returns None when the entries describe no explicit modes.
    """
    coeffs, vcoeffs = {}, {}
    for key, value in entries.items():
        parts = key.split()
        if len(parts) == 2 and parts[0] in ("mode", "vmode"):
            (coeffs if parts[0] == "mode" else vcoeffs)[int(parts[1])] = float(value)
    if not coeffs and not vcoeffs:
        return None
    seed = int(entries["seed"]) if "seed" in entries else None
    theta = float(entries["theta"]) if "theta" in entries else None
    return build_profile_sine(coeffs, float(entries.get("epsilon", 1.0)), vcoeffs,
                              seed=seed, theta=theta)


def profile_from_text(text: str) -> SineProfile:
    entries = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    profile = parse_profile_entries(entries)
    if profile is None:
        return build_profile_sine({}, float(entries.get("epsilon", 0.0)))
    return profile


# -- parameters and states ---------------------------------------------------------

@dataclass(frozen=True)
class ChainParams:
    """Chain size and scaling.

    ``gamma = 2 alpha + beta / omega'``. With ``strict`` (the default) the
    reduction condition gamma < min(r, (1 - r) / 2) is enforced; with
    ``strict=False`` only gamma < 1 is required, which is all the
    nearest-neighbour quadratic chain needs. ``scale_omega=False`` sets
    omega = omega' instead of omega' N and exists for negative controls.
    """

    N: int
    omega_prime: float
    v: float = 0.0
    r: float = DEFAULT_R
    alpha: float = 0.0
    beta: float = 0.0
    strict: bool = True
    scale_omega: bool = True

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise InvariantError("N >= 2", f"got N={self.N}")
        if not self.omega_prime > 0:
            raise InvariantError("omega_prime > 0", f"got {self.omega_prime}")
        if not 0.0 < self.r < 1.0:
            raise InvariantError("0 < r < 1", f"got r={self.r}")
        limit = self.gamma_limit
        if not self.gamma < limit:
            name = "gamma < min(r, (1-r)/2)" if self.strict else "gamma < 1"
            raise InvariantError(name, f"gamma={self.gamma:.6g} >= {limit:.6g}")

    @classmethod
    def from_profile(cls, profile, N, omega_prime, v=0.0, r=DEFAULT_R, **kw):
        return cls(N, omega_prime, v, r, profile.alpha, profile.beta, **kw)

    @property
    def gamma_limit(self):
        return min(self.r, (1.0 - self.r) / 2.0) if self.strict else 1.0

    @property
    def omega(self):
        return self.omega_prime * self.N if self.scale_omega else self.omega_prime

    @property
    def a(self):
        return 1.0 / self.N

    @property
    def a1(self):
        return self.r / self.N

    @property
    def gamma(self):
        return 2.0 * self.alpha + self.beta / self.omega_prime


@dataclass(frozen=True)
class ChainState:
    t: float
    x: np.ndarray
    vel: np.ndarray

    def __post_init__(self):
        if len(self.x) != len(self.vel):
            raise ValueError("x and vel must have equal length")

    @property
    def N(self):
        return len(self.x)

    @property
    def gaps(self):
        return np.diff(self.x)


def build_initial_state(params: ChainParams, profile: Profile) -> ChainState:
    N = params.N
    nodes = np.arange(1, N) / N
    gaps = profile.X(nodes) / N
    dvel = profile.V(nodes) / N
    lo, hi = (1.0 - params.gamma) / N, (1.0 + params.gamma) / N
    if gaps.min() < lo or gaps.max() > hi:
        raise InvariantError("initial state in Omega_N(gamma)",
                             f"gaps span [{gaps.min():.6g}, {gaps.max():.6g}], allowed [{lo:.6g}, {hi:.6g}]")
    x = np.concatenate(([0.0], np.cumsum(gaps)))
    vel = params.v + np.concatenate(([0.0], np.cumsum(dvel)))
    return ChainState(0.0, x, vel)


# -- pair potential ------------------------------------------------------------------

QUADRATIC_CORE = "quadratic"


@dataclass(frozen=True)
class PairPotential:
    """Member of the class I(a, a1).

    Quadratic well (x - a)^2 on (a - a1, a + a1), constant a1^2 beyond
    a + a1. ``core`` is either ``"quadratic"`` (continue the well inward), a
    pair ``(I, dI)`` of callables for 0 < x <= a - a1, or None, in which case
    entering the core is an error.
    """

    a: float
    a1: float
    core: object = QUADRATIC_CORE

    def __post_init__(self):
        if not 0.0 < self.a1 < self.a:
            raise InvariantError("0 < a1 < a", f"got a={self.a}, a1={self.a1}")
        if self.core not in (None, QUADRATIC_CORE):
            value, _ = self.core
            edge = self.a - self.a1
            got = float(np.asarray(value(np.array([edge])))[0])
            if abs(got - self.a1 ** 2) > 1e-12 * max(1.0, self.a1 ** 2):
                raise InvariantError("core value-matched at a - a1",
                                     f"I(a-a1)={got!r}, expected {self.a1 ** 2!r}")

    @classmethod
    def for_params(cls, params: ChainParams, core=QUADRATIC_CORE):
        return cls(params.a, params.a1, core)

    @property
    def cutoff(self):
        return self.a + self.a1

    def _core_mask(self, d):
        mask = d <= self.a - self.a1
        if np.any(mask) and self.core is None:
            raise InvariantError("distance outside core region",
                                 f"min distance {d.min():.6g} <= a - a1 = {self.a - self.a1:.6g}")
        return mask

    def value(self, d):
        d = np.asarray(d, dtype=float)
        out = np.where(d >= self.cutoff, self.a1 ** 2, (d - self.a) ** 2)
        mask = self._core_mask(d)
        if np.any(mask) and self.core != QUADRATIC_CORE:
            out[mask] = self.core[0](d[mask])
        return out

    def half_slope(self, d):
        """I'(d) / 2; the pair force magnitude is omega^2 times this."""
        d = np.asarray(d, dtype=float)
        out = np.where(d >= self.cutoff, 0.0, d - self.a)
        mask = self._core_mask(d)
        if np.any(mask) and self.core != QUADRATIC_CORE:
            out[mask] = 0.5 * self.core[1](d[mask])
        return out
