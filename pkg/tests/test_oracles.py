import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from quasicharge.gauge import gauge_closed_form
from quasicharge.grid import TransverseGrid, centroid, gaussian_beam, second_moments
from quasicharge.oracles import (BesselModeParams, MagneticGaussianParams, OracleParameterError, annulus, bessel_mode,
                                 bessel_order, classical_spiral, electric_centroid, free_gaussian, free_width,
                                 magnetic_gaussian, magnetic_width, radial_taper, smooth_annulus_window,
                                 windowed_overlap)
from quasicharge.propagator import Propagator, apply_hamiltonian
from quasicharge.gauge import GaugeFields
from quasicharge.scenarios import make_aharonov_bohm


def test_free_width_examples():
    assert free_width(0.0) == 1.0
    assert free_width(0.5) == pytest.approx(2.0)
    assert free_width(1.0, waist=2.0) == pytest.approx(4.0 * (1 + 4 / 16))


def test_free_gaussian_matches_launch_and_propagation():
    grid = TransverseGrid(64, 64, 16.0, 16.0)
    psi0 = gaussian_beam(grid, 1.0)
    assert np.abs(free_gaussian(grid, 0.0) - psi0).max() < 1e-14
    out = Propagator(grid, GaugeFields.zero(grid), dzeta=0.05).run(psi0, 0.5).final.psi
    assert np.abs(out - free_gaussian(grid, 0.5)).max() < 1e-10
    assert 4 * second_moments(grid, free_gaussian(grid, 0.5))[0] / 4 == pytest.approx(2.0, rel=1e-3)
    with pytest.raises(OracleParameterError):
        free_gaussian(grid, -1.0)


def test_electric_centroid_examples():
    assert electric_centroid(0.2, 1.0) == pytest.approx(0.1)
    assert electric_centroid(0.0, 3.0) == 0.0
    with pytest.raises(OracleParameterError):
        electric_centroid(-0.1, 1.0)


# magnetic


def test_spiral_at_rest_and_circle():
    p = MagneticGaussianParams(B=2.0, x0=0.3, y0=-0.2)
    (xc, yc), _, _ = classical_spiral(p, np.linspace(0, 5, 11))
    assert np.all(xc == 0.3) and np.all(yc == -0.2)
    v, B = 0.8, 2.0
    p = MagneticGaussianParams(B=B, vx0=v)
    (xc, yc), _, _ = classical_spiral(p, np.linspace(0, 2 * math.pi / B, 50))
    assert np.allclose(np.hypot(xc, yc + v / B), v / B, atol=1e-14)


@pytest.mark.property
@given(B=st.floats(0.2, 3.0), vx=st.floats(-2, 2), vy=st.floats(-2, 2), x0=st.floats(-1, 1), y0=st.floats(-1, 1))
def test_spiral_solves_hamilton_equations(B, vx, vy, x0, y0):
    # H = ((px + B y)^2 + py^2) / 2 for A = -B y e_x
    def rhs(_, s):
        x, y, px, py = s
        return [px + B * y, py, 0.0, -B * (px + B * y)]

    p = MagneticGaussianParams(B=B, x0=x0, y0=y0, vx0=vx, vy0=vy)
    px0, py0 = p.launch_momentum()
    z = np.linspace(0, 2 * math.pi / B, 7)
    sol = solve_ivp(rhs, (0, z[-1]), [x0, y0, px0, py0], t_eval=z, method="DOP853", rtol=1e-12, atol=1e-13)
    (xc, yc), _, (pcx, pcy) = classical_spiral(p, z)
    assert np.abs(sol.y[0] - xc).max() < 1e-8 and np.abs(sol.y[1] - yc).max() < 1e-8
    assert np.abs(sol.y[2] - pcx).max() < 1e-8 and np.abs(sol.y[3] - pcy).max() < 1e-8


def test_magnetic_width_examples():
    assert magnetic_width(0.3, 1.0, 0.0, waist_sq=2.0) == pytest.approx(2.0)
    assert np.allclose(magnetic_width(0.5, 2.0, np.linspace(0, 4, 9), waist_sq=2.0), 2.0)
    eta, B = 0.25, 1.0
    assert magnetic_width(eta, B, math.pi / B) == pytest.approx(1 / (4 * eta**2))
    with pytest.raises(OracleParameterError):
        magnetic_width(0.0, 1.0, 0.0)


def test_eta_and_launch_conventions():
    p = MagneticGaussianParams.from_eta(2.0, 0.5)
    assert p.waist == pytest.approx(math.sqrt(2.0)) and p.eta == pytest.approx(0.5)
    assert MagneticGaussianParams(B=1.0, y0=0.5, vx0=1.0).launch_momentum() == (0.5, 0.0)
    with pytest.raises(OracleParameterError):
        MagneticGaussianParams(B=0.0)
    with pytest.raises(OracleParameterError):
        MagneticGaussianParams(B=1.0, waist=-1.0)


@pytest.fixture(scope="module")
def wide_grid():
    return TransverseGrid(128, 128, 24.0, 24.0)


def test_magnetic_gaussian_starts_as_launch_beam(wide_grid):
    p = MagneticGaussianParams.from_eta(1.0, 0.25, x0=0.5, vx0=0.3)
    psi = magnetic_gaussian(wide_grid, p, 0.0)
    kx, ky = p.launch_momentum()
    X, Y = wide_grid.mesh
    # the closed form carries the extra phase -B dx dy / 2 on top of the tilted beam
    ref = gaussian_beam(wide_grid, p.waist, x0=0.5, kx0=kx, ky0=ky) * np.exp(-0.5j * p.B * (X - 0.5) * Y)
    assert windowed_overlap(wide_grid, psi, ref) > 1 - 1e-12


@pytest.mark.parametrize("eta", [0.25, 0.4, 0.5])
def test_magnetic_width_matches_gaussian_moments(wide_grid, eta):
    B = 1.0
    p = MagneticGaussianParams.from_eta(B, eta, vx0=0.4, vy0=-0.2)
    for z in np.linspace(0, 2 * math.pi / B, 9):
        psi = magnetic_gaussian(wide_grid, p, z)
        w2x, w2y = second_moments(wide_grid, psi)
        expect = magnetic_width(eta, B, z, p.waist**2)
        assert w2x == pytest.approx(expect, rel=1e-6) and w2y == pytest.approx(expect, rel=1e-6)
        (xc, yc), _, _ = classical_spiral(p, z)
        assert centroid(wide_grid, psi) == pytest.approx((xc, yc), abs=1e-9)


def test_magnetic_gaussian_rejects_wide_eta(wide_grid):
    with pytest.raises(OracleParameterError, match="eta"):
        magnetic_gaussian(wide_grid, MagneticGaussianParams.from_eta(1.0, 0.6), 0.1)


# Aharonov-Bohm


def test_bessel_order_examples():
    assert bessel_order(1, 0.5) == pytest.approx(2.0)
    assert bessel_order(0, 0.37) == 1.0
    for m in (-3, -1, 2, 4):
        assert bessel_order(m, 0.5) == pytest.approx(abs(m + 1))
        assert bessel_order(m, -0.5) == pytest.approx(abs(m - 1))
    assert bessel_order(2, 0.0, D=1.0) == 2.0
    with pytest.raises(OracleParameterError):
        bessel_order(0, 0.0, D=2.0)
    with pytest.raises(OracleParameterError):
        BesselModeParams(1, 0.5, kappa=0.0)


@pytest.mark.parametrize("m,R,D", [(1, 0.5, 0.0), (2, -0.3, 0.0), (1, 0.2, 0.8)])
def test_bessel_mode_is_eigenfunction(m, R, D):
    grid = TransverseGrid(256, 256, 40.0, 40.0)
    cfg, U = make_aharonov_bohm(grid, R, D)
    gauge = gauge_closed_form(cfg)
    params = BesselModeParams(m, R, kappa=1.5, D=D)
    # a smooth cut-out of the r^nu core keeps the spectral derivatives free of ringing
    psi = bessel_mode(grid, params) * smooth_annulus_window(grid, (1.0, 5.0), (12.0, 19.5))
    window = annulus(grid, 5.0, 12.0)
    res = apply_hamiltonian(grid, psi, gauge, U) - params.eigenvalue * psi
    assert np.abs(res[window]).max() / np.abs(params.eigenvalue * psi[window]).max() < 1e-3


def test_bessel_mode_phase_and_norm():
    grid = TransverseGrid(64, 64, 20.0, 20.0)
    p = BesselModeParams(1, 0.5, kappa=1.0)
    w = annulus(grid, 1.0)
    a = bessel_mode(grid, p, 0.0, window=w)
    b = bessel_mode(grid, p, 2.0, window=w)
    assert float((np.abs(a[w]) ** 2).sum() * grid.cell_area) == pytest.approx(1.0)
    assert np.allclose(b, a * np.exp(-1j * 1.0))
    assert windowed_overlap(grid, a, b, w) == pytest.approx(1.0)


def test_windows():
    grid = TransverseGrid(64, 64, 20.0, 20.0)
    r, _ = grid.polar
    w = annulus(grid, 2.0)
    assert r[w].min() >= 2.0 and r[w].max() <= 8.0
    t = radial_taper(grid, 5.0, 9.0)
    assert np.all(t[r <= 5.0] == 1.0) and np.abs(t[r >= 9.0]).max() < 1e-30
    assert np.all((t >= 0) & (t <= 1))
    s = smooth_annulus_window(grid, (1.0, 2.0), (6.0, 8.0))
    assert np.all(s[(r >= 2) & (r <= 6)] == 1.0) and np.all(s[(r <= 1) | (r >= 8)] == 0.0)
    with pytest.raises(OracleParameterError):
        smooth_annulus_window(grid, (2.0, 1.0), (6.0, 8.0))
