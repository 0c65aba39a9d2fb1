import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainflow import integrator, spectral
from chainflow.integrator import (CollisionError, GeneralForce, QuadraticForce, forces_general,
                                  forces_general_allpairs, forces_quadratic_nn, verlet_integrate)
from chainflow.model import (ChainParams, ChainState, PairPotential, build_initial_state,
                             equilibrium_profile, random_fourier_profile, single_mode_profile)


def test_equilibrium_forces_vanish():
    params = ChainParams(9, 1.0)
    s = build_initial_state(params, equilibrium_profile())
    np.testing.assert_allclose(forces_quadratic_nn(s, params), 0.0, atol=1e-12)


def test_single_spring():
    # N = 2 with omega' = 1/2 gives omega = 1
    params = ChainParams(2, 0.5)
    d = 0.01
    f = forces_quadratic_nn(ChainState(0.0, np.array([0.0, 0.5 + d]), np.zeros(2)), params)
    np.testing.assert_allclose(f, [d, -d], rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 80), st.integers(0, 2 ** 32 - 1), st.floats(0.0, 0.3))
def test_forces_sum_to_zero(N, seed, spread):
    rng = np.random.default_rng(seed)
    x = np.cumsum((1 + spread * rng.uniform(-1, 1, N)) / N)
    params = ChainParams(N, 1.0)
    f = forces_quadratic_nn(x, params)
    assert abs(f.sum()) <= 1e-12 * max(np.abs(f).max(), 1e-300)


def test_plateau_and_well_minimum_give_no_force():
    pot = PairPotential(0.1, 0.03)
    for dist in (0.13, 0.2, 5.0, 0.1):
        f = forces_general(np.array([0.0, dist]), pot, 3.0)
        np.testing.assert_array_equal(f, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 64), st.integers(0, 2 ** 32 - 1), st.floats(0.0, 0.9))
def test_cutoff_sweep_matches_all_pairs(N, seed, spread):
    rng = np.random.default_rng(seed)
    x = np.cumsum((1 + spread * rng.uniform(-1, 1, N)) / N)
    pot = PairPotential(1.0 / N, 0.3 / N)
    np.testing.assert_allclose(forces_general(x, pot, N), forces_general_allpairs(x, pot, N),
                               rtol=0, atol=1e-12 * N)


def test_general_force_reduces_to_nearest_neighbour():
    p = random_fourier_profile(42, 0.3)
    params = ChainParams.from_profile(p, 64, 1.0)
    s = build_initial_state(params, p)
    g = GeneralForce(params)(s.x)
    np.testing.assert_allclose(g, forces_quadratic_nn(s, params), rtol=0, atol=1e-12)


def test_equilibrium_run_is_stationary():
    params = ChainParams(16, 1.0)
    s = build_initial_state(params, equilibrium_profile())
    traj = verlet_integrate(s, QuadraticForce(params), 1.0, 1e-3, save_every=100)
    for i in range(len(traj)):
        np.testing.assert_allclose(traj.x[i], s.x, atol=1e-15)
        np.testing.assert_array_equal(traj.vel[i], 0.0)


def test_step_adjusts_to_hit_final_time():
    params = ChainParams(4, 1.0)
    s = build_initial_state(params, equilibrium_profile())
    traj = verlet_integrate(s, QuadraticForce(params), 1.0, 0.3)
    assert traj.dt == pytest.approx(1.0 / 3) and traj.t[-1] == pytest.approx(1.0)
    traj = verlet_integrate(s, QuadraticForce(params), 1.0, 0.1, save_every=3)
    np.testing.assert_allclose(traj.t, [0.0, 0.3, 0.6, 0.9, 1.0])
    with pytest.raises(ValueError):
        verlet_integrate(s, QuadraticForce(params), 1.0, 0.0)


def test_python_and_compiled_steppers_agree():
    p = single_mode_profile(0.02)
    params = ChainParams.from_profile(p, 24, 1.0)
    s = build_initial_state(params, p)
    a = verlet_integrate(s, QuadraticForce(params), 0.5, 1e-3, save_every=50)
    b = verlet_integrate(s, lambda x: forces_quadratic_nn(x, params), 0.5, 1e-3, save_every=50)
    np.testing.assert_allclose(a.x, b.x, rtol=0, atol=1e-14)
    np.testing.assert_allclose(a.t, b.t)


@pytest.mark.parametrize("force", ["compiled", "python"])
def test_collision_aborts(force):
    N = 4
    params = ChainParams(N, 1.0)
    x = np.arange(N) / N
    vel = np.array([0.0, 0.0, 30.0, -30.0])
    fn = QuadraticForce(params) if force == "compiled" else (lambda y: forces_quadratic_nn(y, params))
    with pytest.raises(CollisionError) as err:
        verlet_integrate(ChainState(0.0, x, vel), fn, 1.0, 1e-4)
    assert err.value.min_gap < integrator.COLLISION_GAP / N
    assert err.value.trajectory is not None and err.value.t < 0.01


def test_oracle_agreement_is_second_order():
    p = single_mode_profile(0.01)
    params = ChainParams.from_profile(p, 32, 1.0)
    s = build_initial_state(params, p)
    c = spectral.project_initial(s, params)
    errs = []
    for dt in (1e-4, 5e-5):
        traj = verlet_integrate(s, QuadraticForce(params), 1.0, dt, save_every=500)
        errs.append(max(np.abs(traj.x[i] - spectral.positions_at(c, t).x).max()
                        for i, t in enumerate(traj.t)))
    assert errs[0] < 1e-8
    assert 3.0 <= errs[0] / errs[1] <= 5.0
    order = integrator.convergence_order(errs)
    assert order[0] == pytest.approx(2.0, abs=0.3)


def test_verlet_matches_spectral_at_larger_N():
    p = single_mode_profile(0.01)
    params = ChainParams.from_profile(p, 128, 1.0)
    s = build_initial_state(params, p)
    traj = verlet_integrate(s, QuadraticForce(params), 5.0, 1e-5, save_every=100000)
    ref = spectral.positions_at(spectral.project_initial(s, params), 5.0)
    assert np.abs(traj.x[-1] - ref.x).max() < 1e-8


def test_default_dt():
    assert integrator.default_dt(ChainParams(10, 2.0)) == pytest.approx(0.05 / 20)
