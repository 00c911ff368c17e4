"""Control-field configurations for the electric, magnetic and Aharonov-Bohm setups.

All parameters are scaled: ``F = F_phys k w0^3``, ``B = B_phys w0^2`` and
lengths in units of ``w0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .gauge import ConfigurationError, GaugeFields, ParametricControl, SampledControl, gauge_closed_form
from .grid import TransverseGrid, gaussian_beam

KINDS = ("free", "electric", "magnetic", "aharonov_bohm", "custom")
MAGNETIC_REALIZATIONS = ("control", "ideal", "periodic")


@dataclass(frozen=True)
class BeamSpec:
    """Launch beam ``exp(-r^2/waist^2)`` with centroid, tilt and OAM winding."""

    waist: float = 1.0
    x0: float = 0.0
    y0: float = 0.0
    kx0: float = 0.0
    ky0: float = 0.0
    m: int = 0


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "free"
    F: float = 0.0
    B: float = 0.0
    R: float = 0.0
    D: float = 0.0
    realization: str = "control"
    rho: float = 0.3
    n_theta: Optional[int] = None
    beam: BeamSpec = field(default_factory=BeamSpec)
    zeta_max: float = 1.0
    dzeta: Optional[float] = None
    control_files: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"scenario kind {self.kind!r} not in {KINDS}")
        for name in ("F", "B", "R", "D"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if abs(self.R) > 0.5:
            raise ConfigurationError(f"R={self.R}: |R| <= 1/2 is required")
        if self.realization not in MAGNETIC_REALIZATIONS:
            raise ConfigurationError(f"realization must be one of {MAGNETIC_REALIZATIONS}")
        if not 0 < self.rho < 0.5:
            raise ConfigurationError(f"rho={self.rho}: need 0 < rho < 1/2")
        if self.n_theta is not None and self.n_theta < 1:
            raise ConfigurationError("n_theta must be a positive integer")
        if not self.beam.waist > 0:
            raise ConfigurationError("beam waist must be positive")
        if not self.zeta_max > 0:
            raise ConfigurationError("zeta_max must be positive")
        if self.dzeta is not None and not self.dzeta > 0:
            raise ConfigurationError("dzeta must be positive")
        if self.kind == "electric" and not self.F > 0:
            raise ConfigurationError("electric scenario needs F > 0")
        if self.kind == "magnetic" and not self.B > 0:
            raise ConfigurationError("magnetic scenario needs B > 0")
        if self.kind == "custom" and len(self.control_files) < 2:
            raise ConfigurationError("custom scenario needs one control snapshot file per leg (at least two)")


# electric ---------------------------------------------------------------------


def electric_theta(x, F: float):
    """Relative phase giving the scalar potential ``Phi = 2 F |x|``.

    ``theta(x) = int_0^x sqrt(2 V)`` with ``V = -F x`` for ``x < 0``, i.e.
    ``theta = -(2/3) sqrt(2F) |x|^{3/2}``; returns ``(theta, dtheta/dx)``.
    """
    ax = np.abs(x)
    theta = -(2.0 / 3.0) * np.sqrt(2 * F) * ax**1.5
    dtheta = np.sqrt(2 * F * ax) * np.where(x < 0, 1.0, -1.0)
    return theta, dtheta


def make_electric(grid: TransverseGrid, F: float) -> ParametricControl:
    """``R = 0, phi = 0`` and the cubic-root phase profile; valid for ``x < 0``."""
    if not F > 0:
        raise ConfigurationError("electric field strength F must be positive")
    if grid.x.min() >= 0:
        warnings.warn("grid does not cover x < 0, where the electric phase profile is valid", stacklevel=2)
    X, _ = grid.mesh
    theta, dtheta = electric_theta(X, F)
    zero = np.zeros(grid.shape)
    return ParametricControl(grid, zero, theta, zero, grad_R=(zero, zero), grad_theta=(dtheta, zero),
                             grad_phi=(zero, zero))


# magnetic ---------------------------------------------------------------------


def make_magnetic(grid: TransverseGrid, B: float) -> ParametricControl:
    """``theta = sqrt(B/2) x`` and ``R = sqrt(B/2) y`` (Landau gauge ``A = -B y e_x``)."""
    if not B > 0:
        raise ConfigurationError("magnetic field strength B must be positive")
    X, Y = grid.mesh
    s = math.sqrt(B / 2)
    ymax = float(np.abs(grid.y).max())
    if s * ymax > 0.5:
        raise ConfigurationError(
            f"|R| <= 1/2 violated on the grid: sqrt(B/2)*max|y| = {s * ymax:.4g} > 1/2; "
            f"reduce B or ly (need max|y| <= {0.5 / s:.4g}), or use the ideal Landau realization")
    zero = np.zeros(grid.shape)
    one = np.ones(grid.shape)
    return ParametricControl(grid, s * Y, s * X, zero, grad_R=(zero, s * one), grad_theta=(s * one, zero),
                             grad_phi=(zero, zero))


def ideal_landau(grid: TransverseGrid, B: float, phi: str = "neglect") -> GaugeFields:
    """Uniform field ``A = -B y e_x`` with the scalar potential dropped.

    ``phi="leading"`` keeps the constant leading term ``B`` of the scalar
    potential instead (a global phase only).
    """
    _, Y = grid.mesh
    if phi == "neglect":
        p = np.zeros(grid.shape)
    elif phi == "leading":
        p = np.full(grid.shape, float(B))
    else:
        raise ValueError("phi must be 'neglect' or 'leading'")
    return GaugeFields(grid, -B * Y, np.zeros(grid.shape), p)


def periodic_magnetic(grid: TransverseGrid, B: float, rho: float = 0.3, n_theta: Optional[int] = None,
                      regular: bool = True) -> ParametricControl:
    """Grid-periodic control with field ``~B`` near ``y = 0``.

    ``R = rho sin(2 pi y / ly)`` and ``theta = a x`` with ``a`` an integer
    multiple of ``2 pi / lx``; ``rho`` is then adjusted so that
    ``2 a rho (2 pi / ly) = B`` exactly.  Everything is smooth and periodic
    and ``|R| < 1/2`` on the whole grid, so the full W-frame gauge matrix
    exists everywhere.

    With ``regular=True`` the common phase is set to ``phi = theta``, which
    keeps ``R_2`` real and ``1 + R_2 >= 1``.  That only re-gauges the EIT
    mode: a beam launched as ``psi * exp(-i phi)`` is physically the beam
    ``psi`` of the ``phi = 0`` choice.
    """
    if not 0 < rho < 0.5:
        raise ConfigurationError("rho must lie in (0, 1/2)")
    q = 2 * math.pi / grid.ly
    if n_theta is None:
        n_theta = max(1, round(B / (2 * rho * q) * grid.lx / (2 * math.pi)))
    a = 2 * math.pi * n_theta / grid.lx
    rho = B / (2 * a * q)
    if not rho < 0.5:
        raise ConfigurationError("field too strong for a periodic realization on this grid")
    X, Y = grid.mesh
    Yc = Y - grid.y_offset
    theta = a * (X - grid.x_offset)
    zero = np.zeros(grid.shape)
    grad_theta = (np.full(grid.shape, a), zero)
    return ParametricControl(grid, rho * np.sin(q * Yc), theta, theta if regular else zero,
                             grad_R=(zero, rho * q * np.cos(q * Yc)), grad_theta=grad_theta,
                             grad_phi=grad_theta if regular else (zero, zero), periodic=True)


# Aharonov-Bohm ----------------------------------------------------------------


def ab_imbalance(s1: complex, s2: complex) -> float:
    """``R = (|s1|^2 - |s2|^2) / (2 (|s1|^2 + |s2|^2))``."""
    a, b = abs(s1) ** 2, abs(s2) ** 2
    if a + b == 0:
        raise ConfigurationError("at least one control amplitude must be nonzero")
    return 0.5 * (a - b) / (a + b)


def _check_origin(grid):
    r, _ = grid.polar
    if r.min() < 1e-9 * min(grid.dx, grid.dy):
        raise ConfigurationError("a grid node sits on r = 0; set a grid offset for the Aharonov-Bohm scenario")
    return grid.polar


def laguerre_gauss_controls(grid: TransverseGrid, s1: complex, s2: complex) -> SampledControl:
    """Counter-rotating ``Omega_1/g_1 = s1 r e^{i phi}``, ``Omega_2/g_2 = s2 r e^{-i phi}``."""
    _check_origin(grid)
    X, Y = grid.mesh
    return SampledControl(grid, np.stack([s1 * (X + 1j * Y), s2 * (X - 1j * Y)]))


def make_aharonov_bohm(grid: TransverseGrid, R: float, D: float = 0.0):
    """Vortex controls with imbalance ``R`` and detuning term ``U = D / (2 r^2)``.

    Returns ``(config, U)``.  The potentials are ``A = -(2R/r) e_phi`` and
    ``Phi = (1 - 4R^2)/r^2``; together with ``U`` the radial equation carries
    ``(1 + m^2 + 4Rm - D)/r^2``.
    """
    if abs(R) > 0.5:
        raise ConfigurationError(f"R={R}: |R| <= 1/2 is required")
    if not math.isfinite(D):
        raise ConfigurationError("D must be finite")
    r, azimuth = _check_origin(grid)
    X, Y = grid.mesh
    zero = np.zeros(grid.shape)
    r2 = r**2
    cfg = ParametricControl(grid, np.full(grid.shape, float(R)), azimuth, zero, grad_R=(zero, zero),
                            grad_theta=(-Y / r2, X / r2), grad_phi=(zero, zero))
    return cfg, D / (2 * r2)


# dispatch -----------------------------------------------------------------------


@dataclass
class Prepared:
    """Everything a propagation needs: potentials, detuning term and launch field."""

    gauge: GaugeFields
    U: Optional[np.ndarray]
    psi0: np.ndarray
    control: object = None


def build_control(spec: ScenarioSpec, grid: TransverseGrid, controls: Optional[SampledControl] = None):
    """Control configuration for a scenario, or ``None`` where there is none."""
    if spec.kind == "electric":
        return make_electric(grid, spec.F)
    if spec.kind == "magnetic":
        if spec.realization == "control":
            return make_magnetic(grid, spec.B)
        if spec.realization == "periodic":
            return periodic_magnetic(grid, spec.B, spec.rho, spec.n_theta)
        return None
    if spec.kind == "aharonov_bohm":
        return make_aharonov_bohm(grid, spec.R, spec.D)[0]
    if spec.kind == "custom":
        if controls is None:
            raise ConfigurationError("custom scenario requires sampled control fields")
        return controls
    return None


def prepare(spec: ScenarioSpec, grid: TransverseGrid, controls: Optional[SampledControl] = None,
            with_full: bool = False) -> Prepared:
    """Potentials and launch beam for a scenario.

    For the periodic magnetic realization the beam is multiplied by
    ``exp(-i phi)`` so that it is the same physical beam as in the
    ``phi = 0`` choice of the common phase.
    """
    b = spec.beam
    psi0 = gaussian_beam(grid, b.waist, b.x0, b.y0, b.kx0, b.ky0, b.m)
    U = None
    control = build_control(spec, grid, controls)
    if spec.kind == "magnetic" and spec.realization == "ideal":
        gauge = ideal_landau(grid, spec.B)
    elif control is None:
        gauge = GaugeFields.zero(grid)
    else:
        gauge = gauge_closed_form(control, with_full=with_full)
    if spec.kind == "aharonov_bohm":
        U = make_aharonov_bohm(grid, spec.R, spec.D)[1]
    if isinstance(control, ParametricControl) and spec.realization == "periodic" and spec.kind == "magnetic":
        psi0 = psi0 * np.exp(-1j * control.phi)
    return Prepared(gauge, U, psi0, control)


def build_potentials(spec: ScenarioSpec, grid: TransverseGrid, controls: Optional[SampledControl] = None):
    """Gauge fields and detuning term ``(GaugeFields, U or None)`` for a scenario."""
    p = prepare(spec, grid, controls)
    return p.gauge, p.U


# feasibility ---------------------------------------------------------------------


@dataclass(frozen=True)
class PhysicalParams:
    """Laboratory numbers: wavelength and cell length (same length unit),
    atoms per ``k^-3`` volume, and ``k w0``."""

    wavelength: float
    cell_length: float
    atom_density: float
    kw: float

    def __post_init__(self):
        for name in ("wavelength", "cell_length", "atom_density", "kw"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"physical parameter {name} must be positive")

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def waist(self) -> float:
        return self.kw / self.k


@dataclass
class Check:
    name: str
    value: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.value / self.bound

    @property
    def status(self) -> str:
        r = self.ratio
        if r >= 1 - 1e-12:
            return "violation"
        if r > 0.1:
            return "warning"
        return "ok"


@dataclass
class FeasibilityReport:
    checks: list

    def __getitem__(self, name) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def fresnel_bound_ok(self) -> bool:
        try:
            return self["fresnel_F"].status != "violation"
        except KeyError:
            return True

    def lines(self) -> list[str]:
        return [f"{c.name:<22s} value={c.value:.6g} bound={c.bound:.6g} ratio={c.ratio:.3g} [{c.status}]"
                for c in self.checks]


def adiabaticity_bound(kw: float, n: float) -> float:
    """Right-hand side ``(k w)^2 n 3 pi / 2`` of the resonant adiabaticity condition."""
    return kw**2 * n * 3 * math.pi / 2


def validate_feasibility(spec: ScenarioSpec, physical: PhysicalParams) -> FeasibilityReport:
    """Advisory checks of the control-field Fresnel bound and adiabaticity.

    ``fresnel_F`` compares the physical field with ``lambda^-1/2 L^-3/2``;
    ``displacement`` compares ``k x_ctr`` (centroid shift over the cell in
    units of ``1/k``) with ``sqrt(L/lambda)``; ``adiabaticity`` compares
    ``eta`` with ``(k w)^2 n 3 pi/2``.
    """
    p = physical
    checks = []
    if spec.kind == "electric":
        F_phys = spec.F / (p.k * p.waist**3)
        checks.append(Check("fresnel_F", F_phys, p.wavelength**-0.5 * p.cell_length**-1.5))
        x_ctr = F_phys * p.cell_length**2 / (2 * p.k)
        checks.append(Check("displacement", p.k * x_ctr, math.sqrt(p.cell_length / p.wavelength)))
    if spec.kind == "magnetic":
        eta = spec.B * spec.beam.waist**2 / 8
        checks.append(Check("adiabaticity", eta, adiabaticity_bound(p.kw, p.atom_density)))
    return FeasibilityReport(checks)
