import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quasicharge.gauge import ConfigurationError, cross_validate, curl, gauge_closed_form, loop_integral
from quasicharge.grid import TransverseGrid
from quasicharge.scenarios import (BeamSpec, PhysicalParams, ScenarioSpec, ab_imbalance, adiabaticity_bound,
                                   electric_theta, ideal_landau, laguerre_gauss_controls, make_aharonov_bohm,
                                   make_electric, make_magnetic, periodic_magnetic, prepare, validate_feasibility)


def _at(grid, field, x, y):
    return field[np.argmin(np.abs(grid.y - y)), np.argmin(np.abs(grid.x - x))]


# electric


def test_electric_phi_example():
    g = TransverseGrid(64, 64, 8.0, 8.0, x_offset=-4.0)
    gf = gauge_closed_form(make_electric(g, 0.2))
    x = g.x[np.argmin(np.abs(g.x + 1))]
    assert _at(g, gf.phi, x, 0.0) == pytest.approx(0.4 * abs(x), rel=1e-12)
    assert np.abs(gf.ax).max() == 0 and np.abs(gf.ay).max() == 0
    assert np.abs(curl(g, gf.ax, gf.ay)).max() == 0


@pytest.mark.property
@given(F=st.floats(0.01, 5.0), x=st.floats(-10.0, -1e-3))
def test_electric_phase_slope_gives_linear_potential(F, x):
    _, dtheta = electric_theta(np.array([x]), F)
    assert dtheta[0] ** 2 == pytest.approx(2 * F * abs(x), rel=1e-12)


def test_electric_phase_matches_numeric_derivative():
    x = np.linspace(-4, -0.5, 2001)
    theta, dtheta = electric_theta(x, 0.3)
    assert np.abs(np.gradient(theta, x)[1:-1] - dtheta[1:-1]).max() < 1e-5


def test_electric_warns_without_negative_x():
    g = TransverseGrid(16, 16, 4.0, 4.0, x_offset=3.0)
    with pytest.warns(UserWarning, match="x < 0"):
        make_electric(g, 0.2)


def test_electric_rejects_nonpositive_field(grid64):
    with pytest.raises(ConfigurationError):
        make_electric(grid64, 0.0)


# magnetic


def test_magnetic_examples():
    g = TransverseGrid(64, 64, 10.0, 0.9)
    gf = gauge_closed_form(make_magnetic(g, 2.0))
    _, Y = g.mesh
    assert np.abs(gf.ax + 2.0 * Y).max() < 1e-14 and np.abs(gf.ay).max() == 0
    iy = np.argmin(np.abs(g.y))
    assert gf.phi[iy, 0] == pytest.approx(2.0 + 2 * 8 * g.y[iy] ** 4, rel=1e-6)


def test_magnetic_landau_value_at_point():
    g = TransverseGrid(16, 16, 4.0, 0.64)  # dy = 0.04, so y = 0.1 is a node
    gf = gauge_closed_form(make_magnetic(g, 2.0))
    iy = int(np.argmin(np.abs(g.y - 0.1)))
    assert g.y[iy] == pytest.approx(0.1)
    assert gf.ax[iy, 3] == pytest.approx(-0.2, rel=1e-12) and gf.ay[iy, 3] == 0


def test_magnetic_phi_leading_term():
    g = TransverseGrid(16, 16, 4.0, 0.8, y_offset=0.025)  # node at y = 0
    phi = gauge_closed_form(make_magnetic(g, 2.0)).phi
    assert phi[np.argmin(np.abs(g.y)), 0] == pytest.approx(2.0, rel=1e-14)


def test_magnetic_spectral_curl_is_uniform():
    B = 1.0
    g = TransverseGrid(64, 64, 8.0, 1.2)
    gf = ideal_landau(g, B)
    # the Landau A is not periodic in y; differentiate the x-derivative of A_y and the exact d/dy of A_x
    c = curl(g, gf.ax, gf.ay, spectral=False)
    assert np.abs(c - B).max() / B < 1e-8
    cfg = periodic_magnetic(TransverseGrid(64, 64, 16.0, 7.0), B, n_theta=3)
    pg = gauge_closed_form(cfg)
    pc = curl(cfg.grid, pg.ax, pg.ay)
    iy = np.argmin(np.abs(cfg.grid.y))
    assert abs(pc[iy, 0] - B * math.cos(2 * math.pi * cfg.grid.y[iy] / 7.0)) < 1e-8


def test_magnetic_phi_quartic_law_slope():
    B = 1.5
    ys = np.geomspace(0.02, 0.12, 8)
    g = TransverseGrid(16, 16, 1.0, 1.0)
    s = math.sqrt(B / 2)
    resid = []
    for y in ys:
        R = s * y
        phi = (B / 2) / (1 - 4 * R**2) + (B / 2) * (1 - 4 * R**2)
        resid.append(abs(phi - B - 2 * B**3 * y**4))
    slope = np.polyfit(np.log(ys), np.log(resid), 1)[0]
    assert slope >= 5.5
    # and the constructed fields reproduce the same expression
    cfg = make_magnetic(g, B)
    exact = (B / 2) / (1 - 4 * cfg.R**2) + (B / 2) * (1 - 4 * cfg.R**2)
    assert np.allclose(gauge_closed_form(cfg).phi, exact, rtol=1e-13)


def test_magnetic_rejects_tall_grid():
    g = TransverseGrid(16, 16, 10.0, 10.0)
    with pytest.raises(ConfigurationError, match="ideal"):
        make_magnetic(g, 2.0)


def test_magnetic_config_cross_validates():
    # non-periodic fields use 4th-order differences; keep |R| <= 1/4 and |theta| <= 2 so W is well conditioned
    devs = []
    for n in (64, 128):
        rep = cross_validate(make_magnetic(TransverseGrid(n, n, 4.0, 0.5), 2.0), tol=1e-4)
        devs.append(rep.phi_deviation)
    assert rep.passed, rep.lines()
    assert devs[0] / devs[1] > 2**3.5


def test_periodic_realization_is_regular_and_hits_field():
    g = TransverseGrid(64, 64, 16.0, 7.0)
    cfg = periodic_magnetic(g, 1.0, n_theta=3)
    assert np.abs(cfg.R).max() < 0.5
    rep = cross_validate(cfg, tol=1e-6)
    assert rep.passed, rep.lines()


def test_periodic_realization_too_strong():
    g = TransverseGrid(32, 32, 4.0, 4.0)
    with pytest.raises(ConfigurationError):
        periodic_magnetic(g, 50.0, n_theta=1)


# Aharonov-Bohm


def _ab_grid(n=128, L=20.0):
    return TransverseGrid(n, n, L, L, x_offset=0.0, y_offset=0.0)


def test_ab_balanced_and_unbalanced_limits():
    g = _ab_grid()
    r, _ = g.polar
    X, Y = g.mesh
    half = gauge_closed_form(make_aharonov_bohm(g, 0.5)[0])
    assert np.abs(half.phi).max() < 1e-14
    assert np.allclose(half.ax, Y / r**2, atol=1e-12) and np.allclose(half.ay, -X / r**2, atol=1e-12)
    zero = gauge_closed_form(make_aharonov_bohm(g, 0.0)[0])
    assert np.abs(zero.ax).max() == 0 and np.abs(zero.ay).max() == 0
    assert np.allclose(zero.phi, 1 / r**2, rtol=1e-12)


def test_ab_imbalance_examples():
    assert ab_imbalance(1, 0) == 0.5
    assert ab_imbalance(0, 2j) == -0.5
    assert ab_imbalance(1, 1) == 0.0
    with pytest.raises(ConfigurationError):
        ab_imbalance(0, 0)


def test_ab_rejects_node_at_origin():
    g = TransverseGrid(16, 16, 16.0, 16.0, x_offset=0.5, y_offset=0.5)
    with pytest.raises(ConfigurationError, match="offset"):
        make_aharonov_bohm(g, 0.2)


def test_ab_detuning_term():
    g = _ab_grid(32, 8.0)
    r, _ = g.polar
    _, U = make_aharonov_bohm(g, 0.1, D=0.6)
    assert np.allclose(U, 0.3 / r**2)


def test_laguerre_gauss_controls_reproduce_parametric_potentials():
    g = TransverseGrid(256, 256, 20.0, 20.0)
    s1, s2 = 1.0, 0.6j
    R = ab_imbalance(s1, s2)
    sampled = gauge_closed_form(laguerre_gauss_controls(g, s1, s2))
    exact = gauge_closed_form(make_aharonov_bohm(g, R)[0])
    r, _ = g.polar
    X, Y = g.mesh
    far = (r > 2) & (np.abs(X) < 8) & (np.abs(Y) < 8)
    assert np.abs(sampled.ax - exact.ax)[far].max() < 1e-4
    assert np.abs(sampled.phi - exact.phi)[far].max() / exact.phi[far].max() < 1e-4


@pytest.mark.parametrize("R", [0.5, 0.25, -0.3])
def test_ab_flux_is_topological(R):
    g = _ab_grid(128, 20.0)
    gf = gauge_closed_form(make_aharonov_bohm(g, R)[0])
    c = g.nx // 2
    for half in (5, 20, 40):
        assert loop_integral(gf, c - half, c + half - 1, c - half, c + half - 1) == pytest.approx(
            -4 * math.pi * R, rel=1e-2)
    assert abs(loop_integral(gf, c + 5, c + 30, c - 10, c + 20)) < 1e-2 * 4 * math.pi * max(abs(R), 0.1)


# prepare


def test_prepare_periodic_magnetic_rephases_beam():
    g = TransverseGrid(32, 32, 16.0, 7.0)
    spec = ScenarioSpec(kind="magnetic", B=1.0, realization="periodic", n_theta=3)
    p = prepare(spec, g)
    from quasicharge.grid import gaussian_beam
    assert np.allclose(p.psi0 * np.exp(1j * p.control.phi), gaussian_beam(g, 1.0))


def test_prepare_ideal_magnetic_and_free():
    g = TransverseGrid(32, 32, 8.0, 8.0)
    p = prepare(ScenarioSpec(kind="magnetic", B=2.0, realization="ideal"), g)
    assert p.control is None and p.U is None
    assert np.allclose(p.gauge.ax, -2.0 * g.mesh[1])
    f = prepare(ScenarioSpec(beam=BeamSpec(m=1)), g)
    assert not f.gauge.has_vector_potential


@pytest.mark.parametrize("kwargs", [dict(R=0.6), dict(zeta_max=0), dict(kind="electric"), dict(kind="magnetic"),
                                    dict(dzeta=-1.0), dict(kind="bogus"), dict(kind="custom"), dict(rho=0.5)])
def test_scenario_spec_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ScenarioSpec(**kwargs)


# feasibility


def test_adiabaticity_example():
    bound = adiabaticity_bound(100.0, 0.01)
    assert bound == pytest.approx(471.2, rel=1e-3)
    spec = ScenarioSpec(kind="magnetic", B=2.0, realization="ideal", beam=BeamSpec(waist=math.sqrt(2)))
    rep = validate_feasibility(spec, PhysicalParams(0.795e-6, 1e-2, 0.01, 100.0))
    assert rep["adiabaticity"].value == pytest.approx(0.5)
    assert rep["adiabaticity"].ratio == pytest.approx(1.06e-3, rel=1e-2)
    assert rep["adiabaticity"].status == "ok"


def test_fresnel_boundary_is_violation():
    phys = PhysicalParams(0.795e-6, 1e-2, 0.01, 1000.0)
    F_phys = phys.wavelength**-0.5 * phys.cell_length**-1.5
    spec = ScenarioSpec(kind="electric", F=F_phys * phys.k * phys.waist**3)
    rep = validate_feasibility(spec, phys)
    assert rep["fresnel_F"].ratio == pytest.approx(1.0, rel=1e-12)
    assert rep["fresnel_F"].status == "violation"
    assert not rep.fresnel_bound_ok


def test_displacement_bound_value():
    phys = PhysicalParams(0.795e-6, 1e-2, 0.01, 1000.0)
    rep = validate_feasibility(ScenarioSpec(kind="electric", F=1e-3), phys)
    assert rep["displacement"].bound == pytest.approx(112.2, rel=1e-3)
    assert any("displacement" in line for line in rep.lines())


def test_warning_band():
    phys = PhysicalParams(1.0, 1.0, 1.0, 1.0)
    F = 0.5 * phys.k * phys.waist**3  # F_phys = 0.5 of the bound
    assert validate_feasibility(ScenarioSpec(kind="electric", F=F), phys)["fresnel_F"].status == "warning"
    with pytest.raises(ConfigurationError):
        PhysicalParams(0.0, 1.0, 1.0, 1.0)
