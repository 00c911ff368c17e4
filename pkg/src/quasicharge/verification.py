"""Oracle checks grouped into suites.

Each check function runs one numerical experiment and returns a list of
:class:`CheckRow` records (measured value, reference, tolerance, verdict).
The CLI ``verify`` command prints them as a table; the acceptance tests
assert on them.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import curve_fit

from . import oracles
from .gauge import (GaugeFields, ParametricControl, SampledControl, build_W, cross_validate, gauge_closed_form,
                    gauge_numeric, loop_integral, normalize_ratios)
from .grid import TransverseGrid, gaussian_beam, oam_expectation
from .multimode import adiabaticity_check, gauge_coupling_scale, propagate_multimode, rank_correlation
from .propagator import Propagator
from .scenarios import adiabaticity_bound, ideal_landau, make_aharonov_bohm, make_electric, periodic_magnetic


@dataclass
class CheckRow:
    suite: str
    name: str
    measured: float
    reference: float
    tolerance: float
    passed: bool
    note: str = ""

    def format(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.suite:<10s} {self.name:<34s} {self.measured:>13.6g} {self.reference:>13.6g} "
                f"{self.tolerance:>10.3g}  {status}  {self.note}").rstrip()


HEADER = f"{'suite':<10s} {'check':<34s} {'measured':>13s} {'reference':>13s} {'tolerance':>10s}  status"


def _below(suite, name, value, tol, reference=0.0, note=""):
    return CheckRow(suite, name, float(value), float(reference), float(tol), bool(value < tol), note)


def _above(suite, name, value, bound, note=""):
    return CheckRow(suite, name, float(value), float(bound), float(bound), bool(value >= bound), note)


def _runtime(suite, name, t0, budget):
    return _below(suite, f"{name} runtime [s]", time.perf_counter() - t0, budget)


# random configurations -------------------------------------------------------------


def smooth_periodic(grid: TransverseGrid, rng: np.random.Generator, modes: int = 2) -> np.ndarray:
    """Random real trigonometric polynomial with unit peak magnitude."""
    X, Y = grid.mesh
    f = np.zeros(grid.shape)
    for kx in range(-modes, modes + 1):
        for ky in range(0, modes + 1):
            c = rng.normal() + 1j * rng.normal()
            f += (c * np.exp(2j * np.pi * (kx * X / grid.lx + ky * Y / grid.ly))).real / (1 + kx * kx + ky * ky)
    return f / np.abs(f).max()


def random_parametric(grid: TransverseGrid, seed: int, r_max: float = 0.45) -> ParametricControl:
    """Smooth periodic two-leg control with ``|R| <= r_max`` and O(1) phases."""
    rng = np.random.default_rng(seed)
    R = r_max * np.sin(1.5 * smooth_periodic(grid, rng))
    theta = 2.0 * smooth_periodic(grid, rng)
    phi = 2.0 * smooth_periodic(grid, rng)
    return ParametricControl(grid, R, theta, phi, periodic=True)


def random_sampled(grid: TransverseGrid, seed: int, Q: int = 3) -> SampledControl:
    """Smooth periodic Q-leg control whose last leg never vanishes."""
    rng = np.random.default_rng(seed)
    legs = [smooth_periodic(grid, rng) + 1j * smooth_periodic(grid, rng) for _ in range(Q - 1)]
    legs.append(2.0 + 0.5 * smooth_periodic(grid, rng) + 0.5j * smooth_periodic(grid, rng))
    return SampledControl(grid, np.stack(legs), periodic=True)


# gauge ------------------------------------------------------------------------------


def gauge_cross_validation(n: int = 256, length: float = 10.0, seeds=(0, 1, 2), budget: float = 10.0):
    """W-frame numerics versus the closed-form potentials on random configurations."""
    t0 = time.perf_counter()
    grid = TransverseGrid(n, n, length, length)
    rows = []
    worst_a = worst_phi = worst_id = 0.0
    for seed in seeds:
        rep = cross_validate(random_parametric(grid, seed))
        closed = gauge_closed_form(random_parametric(grid, seed))
        worst_a = max(worst_a, rep.a_deviation)
        worst_phi = max(worst_phi, rep.phi_deviation)
        worst_id = max(worst_id, closed.identity_residual / float(closed.phi.max()))
    rows.append(_below("gauge", "A_QQ numeric vs closed form", worst_a, 1e-6))
    rows.append(_below("gauge", "Phi numeric vs closed form", worst_phi, 1e-6))
    rows.append(_below("gauge", "Phi defining sum vs identity", worst_id, 1e-8))
    rows.append(_runtime("gauge", "cross-validation", t0, budget))
    return rows


def gauge_structure(n: int = 64, length: float = 10.0, seed: int = 7):
    """Unitarity of W, its last column, hermiticity of A and gauge covariance."""
    grid = TransverseGrid(n, n, length, length)
    cfg = random_sampled(grid, seed)
    R = normalize_ratios(cfg)
    W = build_W(R)
    WdW = np.einsum("pq...,pr...->qr...", np.conj(W), W)
    unitarity = float(np.abs(WdW - np.eye(cfg.Q)[:, :, None, None]).max())
    column = float(np.abs(W[:, -1] - R).max())
    herm = gauge_numeric(cfg).hermiticity_residual()
    base = gauge_closed_form(cfg)
    f = 1.3 * smooth_periodic(grid, np.random.default_rng(seed + 1))
    fx, fy = grid.gradient(f)
    shifted = gauge_closed_form(SampledControl(grid, cfg.fields * np.exp(1j * f), periodic=True))
    cov_a = float(np.hypot(shifted.ax - (base.ax - fx.real), shifted.ay - (base.ay - fy.real)).max())
    cov_phi = float(np.abs(shifted.phi - base.phi).max() / base.phi.max())
    return [
        _below("gauge", "W unitarity residual", unitarity, 1e-10),
        _below("gauge", "W last column minus R", column, 1e-12),
        _below("gauge", "A_i hermiticity residual", herm, 1e-8),
        _below("gauge", "A_QQ covariance residual", cov_a, 1e-8),
        _below("gauge", "Phi covariance residual", cov_phi, 1e-8),
    ]


# free and electric --------------------------------------------------------------------


def free_diffraction(n: int = 512, length: float = 20.0, zeta_max: float = 1.0, dzeta: float = 1e-3,
                     budget: float = 60.0):
    t0 = time.perf_counter()
    grid = TransverseGrid(n, n, length, length)
    prop = Propagator(grid, GaugeFields.zero(grid), kind="strang_split", dzeta=dzeta)
    traj = prop.run(gaussian_beam(grid), zeta_max, every=20)
    z = traj.column("zeta")
    law = oracles.free_width(z)
    err = max(np.abs(traj.column("w2_x") / law - 1).max(), np.abs(traj.column("w2_y") / law - 1).max())
    drift = float(np.hypot(traj.column("x_c"), traj.column("y_c")).max())
    return [
        _below("electric", "free width vs 1+4 zeta^2 (rel)", err, 1e-3),
        _below("electric", "free centroid drift", drift, 1e-8),
        _runtime("electric", "free diffraction", t0, budget),
    ]


def electric_drift(F: float = 0.2, n: int = 256, length: float = 24.0, x0: float = -6.0, zeta_max: float = 1.0,
                   dzeta: float = 1e-3, budget: float = 120.0):
    """Centroid against ``F zeta^2 / 2`` and width against the free law.

    The beam is launched at ``x0 < 0`` on a grid centred there, so it stays
    inside the region where the cubic phase profile produces ``Phi = 2F|x|``.
    """
    t0 = time.perf_counter()
    grid = TransverseGrid(n, n, length, length, x_offset=x0)
    gauge = gauge_closed_form(make_electric(grid, F))
    prop = Propagator(grid, gauge, kind="auto", dzeta=dzeta)
    traj = prop.run(gaussian_beam(grid, x0=x0), zeta_max, every=20)
    z = traj.column("zeta")
    shift = traj.column("x_c") - x0
    dev = float(np.abs(shift - oracles.electric_centroid(F, z)).max())
    law = oracles.free_width(z)
    werr = float(max(np.abs(traj.column("w2_x") / law - 1).max(), np.abs(traj.column("w2_y") / law - 1).max()))
    return [
        _below("electric", "centroid vs F zeta^2/2 [w0]", dev, 0.01, note=f"integrator={prop.kind}"),
        _below("electric", "width vs free law (rel)", werr, 0.01),
        _runtime("electric", "electric drift", t0, budget),
    ]


# magnetic -------------------------------------------------------------------------------


def _sinusoid(z, a, b, T, c):
    return a + b * np.cos(2 * np.pi * z / T + c)


def extract_period(z, w2, guess: float) -> float:
    """Period of a breathing trace from a least-squares sinusoid fit."""
    a0 = float(np.mean(w2))
    b0 = float(np.ptp(w2) / 2) or 1e-3
    popt, _ = curve_fit(_sinusoid, z, w2, p0=(a0, -b0, guess, 0.0), maxfev=20000)
    return float(abs(popt[2]))


def _magnetic_run(grid, params, dzeta, samples):
    gauge = ideal_landau(grid, params.B)
    prop = Propagator(grid, gauge, kind="mixed_rep_split", dzeta=dzeta)
    period = 2 * math.pi / abs(params.B)
    steps = round(period / dzeta)
    every = max(1, steps // 100)
    snaps = list(np.linspace(0, period, samples))
    traj = prop.run(oracles.magnetic_gaussian(grid, params, 0.0), period, every=every, snapshot_at=snaps)
    return traj, period


def magnetic_breathing(n: int = 128, length: float = 24.0, dzeta: float = 1e-3, budget: float = 120.0):
    """Width law for a stationary packet and a breathing one, plus the closed-form packet."""
    rows = []
    grid = TransverseGrid(n, n, length, length)

    t0 = time.perf_counter()
    flat = oracles.MagneticGaussianParams.from_eta(2.0, 0.5)
    traj, _ = _magnetic_run(grid, flat, dzeta, 5)
    w2 = traj.column("w2_x")
    rows.append(_below("magnetic", "B=2 eta=1/2 width variation", float(np.ptp(w2) / w2[0]), 5e-3))
    rows.append(_runtime("magnetic", "B=2 breathing", t0, budget))

    t0 = time.perf_counter()
    p = oracles.MagneticGaussianParams.from_eta(1.0, 0.25)
    traj, period = _magnetic_run(grid, p, dzeta, 9)
    z = traj.column("zeta")
    law = oracles.magnetic_width(p.eta, p.B, z, p.waist**2)
    w2 = traj.column("w2_x")
    rows.append(_below("magnetic", "B=1 eta=1/4 width vs law (rel)", float(np.abs(w2 / law - 1).max()), 0.01))
    T = extract_period(z, w2, period)
    rows.append(_below("magnetic", "breathing period vs 2pi/B (rel)", abs(T / period - 1), 0.01,
                       note=f"T={T:.6g}"))
    worst = 1.0
    for zs, psi in traj.snapshots:
        ex = oracles.magnetic_gaussian(grid, p, zs)
        worst = min(worst, abs(grid.inner(ex, psi)))
    rows.append(_above("magnetic", "overlap with closed-form packet", worst, 0.999))
    rows.append(_runtime("magnetic", "B=1 breathing", t0, budget))
    return rows


def magnetic_spiral(B: float = 1.0, velocity=(1.0, 0.5), start=(0.5, -0.3), n: int = 128, length: float = 24.0,
                    dzeta: float = 1e-3, budget: float = 120.0):
    """Tilted packet: centroid along the classical orbit, canonical p_x fixed."""
    t0 = time.perf_counter()
    grid = TransverseGrid(n, n, length, length)
    p = oracles.MagneticGaussianParams.from_eta(B, 0.25, x0=start[0], y0=start[1], vx0=velocity[0],
                                                vy0=velocity[1])
    traj, _ = _magnetic_run(grid, p, dzeta, 2)
    z = traj.column("zeta")
    (xc, yc), _, (pcx, _) = oracles.classical_spiral(p, z)
    err = float(np.hypot(traj.column("x_c") - xc, traj.column("y_c") - yc).max())
    px = traj.column("px")
    return [
        _below("magnetic", "centroid vs classical orbit [w0]", err, 0.01),
        _below("magnetic", "canonical p_x drift", float(np.ptp(px)), 1e-6, reference=float(np.ravel(pcx)[0])),
        _below("magnetic", "canonical p_x vs v_x - B y_c", float(np.abs(px - pcx).max()), 1e-6),
        _runtime("magnetic", "spiral", t0, budget),
    ]


# Aharonov-Bohm -------------------------------------------------------------------------


def aharonov_bohm_mode(m: int = 1, R: float = 0.5, D: float = 0.0, kappa: float = 1.5, n: int = 256,
                       length: float = 40.0, zeta_max: float = 0.5, r_min: float = 1.0, budget: float = 120.0):
    """Regular Bessel mode propagated with RK4, compared on an annulus.

    The launch is the analytic mode rolled off to zero near the grid edge
    so that it is periodic; the comparison window stays inside the roll-off.
    """
    t0 = time.perf_counter()
    grid = TransverseGrid(n, n, length, length)
    cfg, U = make_aharonov_bohm(grid, R, D)
    gauge = gauge_closed_form(cfg)
    params = oracles.BesselModeParams(m, R, kappa, D)
    half = min(grid.lx, grid.ly) / 2
    taper = oracles.radial_taper(grid, 0.85 * half, half)
    psi0 = oracles.bessel_mode(grid, params) * taper
    prop = Propagator(grid, gauge, U, kind="rk4_spectral")
    traj = prop.run(psi0, zeta_max)
    window = oracles.annulus(grid, r_min)
    exact = oracles.bessel_mode(grid, params, zeta_max)
    ov = oracles.windowed_overlap(grid, exact, traj.final.psi, window)
    lz0 = oam_expectation(grid, psi0)
    lz1 = oam_expectation(grid, traj.final.psi)
    return [
        _above("ab", f"Bessel overlap (nu={params.nu:g})", ov, 0.999),
        _below("ab", "<L_z> drift", abs(lz1 - lz0), 1e-3, reference=float(m), note=f"<L_z>={lz1:.6f}"),
        _runtime("ab", "Bessel propagation", t0, budget),
    ]


def aharonov_bohm_flux(R: float = 0.5, n: int = 256, length: float = 40.0):
    """Circulation of A around three loops enclosing the origin and one that does not."""
    grid = TransverseGrid(n, n, length, length)
    cfg, _ = make_aharonov_bohm(grid, R)
    gauge = gauge_closed_form(cfg)
    c = n // 2
    expected = -4 * math.pi * R
    rows = []
    for k, (ix0, ix1, iy0, iy1) in enumerate([(c - 10, c + 9, c - 10, c + 9), (c - 60, c + 25, c - 7, c + 80),
                                               (20, n - 30, 40, n - 5)]):
        val = loop_integral(gauge, ix0, ix1, iy0, iy1)
        rows.append(_below("ab", f"flux loop {k + 1} (rel to -4 pi R)", abs(val / expected - 1), 0.01,
                           note=f"value={val:.6g}"))
    val = loop_integral(gauge, c + 10, c + 60, c - 30, c + 40)
    rows.append(_below("ab", "non-enclosing loop", abs(val), 1e-3, note=f"value={val:.3g}"))
    return rows


# multimode ------------------------------------------------------------------------------


def multimode_setup(B: float = 1.0, n: int = 64, lx: float = 16.0, ly: float = 7.0, n_theta: int = 3):
    """Periodic magnetic control, its potentials and the phase-matched launch beam."""
    grid = TransverseGrid(n, n, lx, ly)
    cfg = periodic_magnetic(grid, B, n_theta=n_theta)
    closed = gauge_closed_form(cfg, with_full=True)
    psi0 = gaussian_beam(grid, math.sqrt(2.0)) * np.exp(-1j * cfg.phi)
    return grid, closed, psi0


def adiabatic_elimination(gammas=(1e3, 1e2, 1e1), B: float = 1.0, samples: int = 16, budget: float = 300.0):
    """Multimode run against the truncated single-mode model over one period."""
    t0 = time.perf_counter()
    grid, closed, psi0 = multimode_setup(B)
    period = 2 * math.pi / B
    overlaps, leaks, ratios = [], [], []
    coupling = gauge_coupling_scale(closed.full)
    for g in gammas:
        tr = propagate_multimode(closed.full, closed, g, psi0, period, samples=samples)
        overlaps.append(min(tr.overlap))
        leaks.append(max(tr.leakage))
        ratios.append(coupling / g)
    rows = [_above("multimode", f"overlap at Gamma={gammas[0]:g}", overlaps[0], 0.99)]
    mono = all(a > b for a, b in zip(overlaps, overlaps[1:]))
    rows.append(CheckRow("multimode", "overlap decreasing in Gamma", float(mono), 1.0, 0.0, mono,
                         " ".join(f"{o:.5f}" for o in overlaps)))
    leak_mono = all(a < b for a, b in zip(leaks, leaks[1:]))
    rows.append(CheckRow("multimode", "leakage increasing as Gamma drops", float(leak_mono), 1.0, 0.0, leak_mono,
                         " ".join(f"{v:.3g}" for v in leaks)))
    rho = rank_correlation(ratios, [1 - o for o in overlaps])
    rows.append(_above("multimode", "rank corr(ratio, 1-overlap)", rho, 0.9))
    rep = adiabaticity_check(coupling=1.0, gap=1.0, kw=100.0, n=0.01, eta=0.5)
    rows.append(CheckRow("multimode", "eta/(kw^2 n 3pi/2) for eta=0.5", rep.eta_ratio, 1.1e-3, 0.05,
                         abs(rep.eta_ratio / 1.1e-3 - 1) < 0.05, f"bound={adiabaticity_bound(100.0, 0.01):.4g}"))
    rows.append(_runtime("multimode", "Gamma sweep", t0, budget))
    return rows


SUITES: dict[str, list[Callable[[], list[CheckRow]]]] = {
    "gauge": [gauge_cross_validation, gauge_structure],
    "electric": [free_diffraction, electric_drift],
    "magnetic": [magnetic_breathing, magnetic_spiral],
    "ab": [aharonov_bohm_mode, aharonov_bohm_flux],
    "multimode": [adiabatic_elimination],
}


def run_suites(names=None) -> list[CheckRow]:
    names = list(SUITES) if names is None else list(names)
    rows = []
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
        for check in SUITES[name]:
            rows.extend(check())
    return rows
