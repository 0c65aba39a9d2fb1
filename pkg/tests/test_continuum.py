import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chainflow.continuum import (ContinuumMap, DomainError, build_wave_solution, check_noncollision)
from chainflow.model import (build_profile_closed_form, build_profile_sine, equilibrium_profile,
                             random_fourier_profile, single_mode_profile)

EPS = 0.01
_ROUGH = ContinuumMap.from_profile(random_fourier_profile(42, 0.5), 1.0, v=0.3)


@pytest.fixture(scope="module")
def single():
    return ContinuumMap.from_profile(single_mode_profile(EPS), 1.3)


@pytest.fixture(scope="module")
def rough():
    return ContinuumMap.from_profile(random_fourier_profile(42, 0.5), 1.0)


def test_single_mode_wave_solution():
    w = build_wave_solution(single_mode_profile(EPS), 1.3)
    assert w.M == 1 and w.a[0] == EPS and w.b[0] == 0.0
    x = np.linspace(0, 1, 7)
    for t in (0.0, 0.4, 2.0):
        np.testing.assert_allclose(w.q(t, x), EPS * np.sin(np.pi * x) * np.cos(np.pi * 1.3 * t), atol=1e-17)


def test_equilibrium_wave_is_zero():
    cmap = ContinuumMap.from_profile(equilibrium_profile(), 1.0, v=0.5)
    assert cmap.wave.M == 0
    np.testing.assert_array_equal(cmap.wave.q(1.0, np.linspace(0, 1, 5)), 0.0)
    z = np.linspace(0, 1, 5)
    np.testing.assert_allclose(cmap.G(2.0, z), 1.0 + z)
    assert cmap.chain_length(3.0) == 1.0


def test_random_fourier_coefficients_read_off_exactly():
    p = random_fourier_profile(42, 0.5)
    w = build_wave_solution(p, 1.0)
    assert w.M == 100
    np.testing.assert_array_equal(w.a[:3], 0.0)
    for k in (4, 50, 100):
        assert w.a[k - 1] == p.epsilon * p.coeffs[k]
    np.testing.assert_array_equal(w.b, 0.0)


def test_truncated_and_padded_sizes():
    p = single_mode_profile(EPS)
    assert build_wave_solution(p, 1.0, M=4).a.tolist() == [EPS, 0, 0, 0]
    with pytest.raises(ValueError):
        build_wave_solution(p, 1.0, M=0)


def test_quadrature_coefficients_for_closed_form_profile():
    eps = 0.02
    p = build_profile_closed_form(
        lambda x: 1 + eps * np.sin(np.pi * x) + eps / 2 * np.sin(3 * np.pi * x),
        lambda x: eps * np.pi * (np.cos(np.pi * x) + 1.5 * np.cos(3 * np.pi * x)),
        lambda x: -eps * np.pi ** 2 * (np.sin(np.pi * x) + 4.5 * np.sin(3 * np.pi * x)),
        V=lambda x: 0.003 * np.sin(2 * np.pi * x),
        dV=lambda x: 0.006 * np.pi * np.cos(2 * np.pi * x),
        d2V=lambda x: -0.012 * np.pi ** 2 * np.sin(2 * np.pi * x))
    w = build_wave_solution(p, 1.0)
    assert w.M == 3
    np.testing.assert_allclose(w.a, [eps, 0, eps / 2], atol=1e-13)
    np.testing.assert_allclose(w.b, [0, 0.003, 0], atol=1e-13)


def test_boundary_and_initial_data(rough):
    p = rough.profile
    x = np.linspace(0, 1, 501)
    for t in (0.0, 0.37, 4.0):
        np.testing.assert_allclose(rough.wave.q(t, np.array([0.0, 1.0])), 0.0, atol=1e-15)
    np.testing.assert_allclose(rough.wave.q(0.0, x), p.X(x) - 1, atol=1e-15)
    np.testing.assert_allclose(rough.wave.q(0.0, x, dt=1), p.V(x), atol=1e-15)


def test_wave_equation_residual_by_differences(single, rough):
    h = 1e-3
    x = np.linspace(0.1, 0.9, 9)
    for cmap in (single, rough):
        w = cmap.wave
        for t in (0.3, 1.7):
            qtt = (w.q(t + h, x) - 2 * w.q(t, x) + w.q(t - h, x)) / h ** 2
            qxx = (w.q(t, x + h) - 2 * w.q(t, x) + w.q(t, x - h)) / h ** 2
            scale = np.abs(w.q(t, x, dx=4)).max() + 1e-30
            assert np.abs(qtt - w.omega_prime ** 2 * qxx).max() <= scale * h ** 2
            np.testing.assert_allclose(w.q(t, x, dt=2), w.omega_prime ** 2 * w.q(t, x, dx=2),
                                       rtol=1e-12, atol=1e-15)


def test_label_map_examples(single):
    f_half = 0.5 + EPS / math.pi
    assert single.f(np.array([0.5]))[0] == pytest.approx(f_half, abs=1e-15)
    assert single.f(np.array([0.5]))[0] == pytest.approx(0.5031831, abs=1e-7)
    assert single.z_of_x(np.array([f_half]))[0] == pytest.approx(0.5, abs=1e-12)
    np.testing.assert_allclose(single.z_of_x(np.array([0.0, single.L0])), [0.0, 1.0], atol=1e-12)
    eq = ContinuumMap.from_profile(equilibrium_profile(), 1.0)
    x = np.linspace(0, 1, 11)
    np.testing.assert_allclose(eq.z_of_x(x), x, atol=1e-15)
    with pytest.raises(DomainError):
        single.z_of_x(np.array([-0.1]))


def test_G_initial_value_is_label_integral(rough):
    z = np.linspace(0, 1, 101)
    np.testing.assert_allclose(rough.G(0.0, z), rough.f(z), atol=1e-15)


def test_single_mode_G_closed_form(single):
    w = single.omega_prime
    z = np.linspace(0, 1, 21)
    for t in (0.0, 0.2, 1.1, 5.0):
        c = math.cos(math.pi * w * t)
        origin = EPS * (1 - c) / math.pi
        expect = origin + z + EPS * (1 - np.cos(np.pi * z)) * c / math.pi
        np.testing.assert_allclose(single.G(t, z), expect, atol=1e-15)
        assert single.chain_length(t) == pytest.approx(1 + 2 * EPS * c / math.pi, abs=1e-15)


def test_G_derivatives_by_differences(rough):
    h = 1e-4
    z = np.linspace(0.05, 0.95, 19)
    t = 0.8
    G = rough.G
    np.testing.assert_allclose(G(t, z, "G_t"), (G(t + h, z) - G(t - h, z)) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(G(t, z, "G_z"), (G(t, z + h) - G(t, z - h)) / (2 * h), atol=1e-7)
    np.testing.assert_allclose(G(t, z, "G_zz"), (G(t, z + h, "G_z") - G(t, z - h, "G_z")) / (2 * h), atol=1e-6)
    np.testing.assert_allclose(G(t, z, "G_tt"), (G(t + h, z, "G_t") - G(t - h, z, "G_t")) / (2 * h), atol=1e-6)
    with pytest.raises(ValueError):
        G(t, z, "G_ttt")


def test_G_wave_residual_single_mode(single):
    h = 5e-4
    z = np.linspace(0.1, 0.9, 9)
    for t in (0.5, 2.2):
        gtt = (single.G(t + h, z) - 2 * single.G(t, z) + single.G(t - h, z)) / h ** 2
        gzz = (single.G(t, z + h) - 2 * single.G(t, z) + single.G(t, z - h)) / h ** 2
        assert np.abs(gtt - single.omega_prime ** 2 * gzz).max() < 1e-8


def test_even_modes_keep_length():
    cmap = ContinuumMap.from_profile(build_profile_sine({2: 1.0, 6: 0.3}, 0.005), 1.0)
    for t in np.linspace(0, 3, 7):
        assert cmap.chain_length(t) == pytest.approx(1.0, abs=1e-15)


def test_noncollision_slopes(rough):
    gamma = 2 * rough.profile.alpha
    rep = check_noncollision(rough, gamma, np.linspace(0, 10, 21), np.linspace(0, 1, 101))
    assert rep["passed"]
    z = np.linspace(0, 1, 201)
    for t in (0.0, 3.3):
        gz = rough.G(t, z, "G_z")
        assert gz.min() >= 1 - gamma and gz.max() <= 1 + gamma


def test_equilibrium_inverse_and_fields():
    cmap = ContinuumMap.from_profile(equilibrium_profile(), 1.0, v=0.6)
    t = 2.0
    y = np.linspace(cmap.Y0(t), cmap.YL(t), 9)
    np.testing.assert_allclose(cmap.x_of_ty(t, y), y - 0.6 * t, atol=1e-14)
    f = cmap.fields(t, y)
    np.testing.assert_allclose(f.rho, 1.0)
    np.testing.assert_allclose(f.u, 0.6)
    np.testing.assert_allclose(f.T, 0.18)
    np.testing.assert_allclose(f.F, y - 0.6 * t, atol=1e-14)
    for arr in (f.p, f.R, f.U):
        np.testing.assert_array_equal(arr, 0.0)
    with pytest.raises(DomainError):
        cmap.z_of_ty(t, np.array([cmap.YL(t) + 0.1]))


def test_boundary_labels(rough):
    t = 1.4
    ends = rough.x_of_ty(t, np.array([rough.Y0(t), rough.YL(t)]))
    np.testing.assert_allclose(ends, [0.0, rough.L0], atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(0.0, 1.0))
def test_round_trip_through_label(t, s):
    cmap = _ROUGH
    x = np.array([s * cmap.L0])
    y = cmap.G(t, cmap.z_of_x(x))
    assert abs(cmap.x_of_ty(t, y)[0] - x[0]) <= 1e-10


def test_single_mode_fields_at_midpoint():
    wp = 1.3
    cmap = ContinuumMap.from_profile(single_mode_profile(EPS), wp)
    y = cmap.f(np.array([0.5]))
    f = cmap.fields(0.0, y)
    assert f.rho[0] == pytest.approx(1 / (1 + EPS), rel=1e-13)
    assert f.p[0] == pytest.approx(-wp ** 2 * EPS, rel=1e-13)
    assert f.U[0] == pytest.approx(0.5 * wp ** 2 * EPS ** 2, rel=1e-12)


def test_field_identities_pointwise(rough):
    c2 = rough.omega_prime ** 2
    for t in (0.0, 0.9, 6.0):
        y = np.linspace(rough.Y0(t), rough.YL(t), 301)
        f = rough.fields(t, y)
        np.testing.assert_allclose(f.p, c2 * (1 - 1 / f.rho), rtol=0, atol=1e-12)
        np.testing.assert_allclose(f.U, f.p ** 2 / (2 * c2), rtol=0, atol=1e-12)


@pytest.mark.parametrize("which", ["single", "rough"])
def test_density_is_label_derivative(which, single, rough):
    cmap = single if which == "single" else rough
    t = 0.7
    y0, yl = cmap.Y0(t), cmap.YL(t)
    y = np.linspace(y0 + 0.05, yl - 0.05, 41)
    errs = []
    for h in (1e-3, 5e-4):
        dF = (cmap.fields(t, y + h).F - cmap.fields(t, y - h).F) / (2 * h)
        errs.append(np.abs(dF - cmap.fields(t, y).rho).max())
    assert errs[1] < errs[0] / 3 or errs[0] < 1e-9


@pytest.mark.parametrize("which", ["single", "rough"])
def test_force_density_is_pressure_gradient(which, single, rough):
    cmap = single if which == "single" else rough
    t = 1.9
    y = np.linspace(cmap.Y0(t) + 0.05, cmap.YL(t) - 0.05, 41)
    f = cmap.fields(t, y)
    errs = []
    for h in (1e-3, 5e-4):
        dp = (cmap.fields(t, y + h).p - cmap.fields(t, y - h).p) / (2 * h)
        errs.append(np.abs(f.R + dp / f.rho).max())
    assert errs[1] < errs[0] / 3 or errs[0] < 1e-9
