"""Closed-form reference solutions used to check the propagator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .grid import TransverseGrid, norm


class OracleParameterError(ValueError):
    pass


# free and electric ------------------------------------------------------------


def free_width(zeta, waist: float = 1.0):
    """Squared waist of a free Gaussian, ``w^2 (1 + 4 zeta^2 / w^4)``."""
    return waist**2 * (1 + 4 * np.asarray(zeta) ** 2 / waist**4)


def free_gaussian(grid: TransverseGrid, zeta: float, waist: float = 1.0, x0: float = 0.0, y0: float = 0.0) -> np.ndarray:
    """Exact free-space evolution of ``exp(-r^2/w^2)``, unit norm."""
    if zeta < 0:
        raise OracleParameterError("zeta must be non-negative")
    X, Y = grid.mesh
    q = waist**2 + 2j * zeta
    psi = (waist**2 / q) * np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / q)
    n0 = norm(grid, np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / waist**2))
    return psi / math.sqrt(n0)


def electric_centroid(F: float, zeta):
    """Centroid displacement ``F zeta^2 / 2`` along +x."""
    if F < 0:
        raise OracleParameterError("F must be non-negative")
    return F * np.asarray(zeta) ** 2 / 2


# magnetic -----------------------------------------------------------------------


@dataclass(frozen=True)
class MagneticGaussianParams:
    """Gaussian wave packet in the Landau-gauge field ``A = -B y e_x``.

    ``waist`` is the amplitude waist of ``exp(-r^2/waist^2)`` used throughout
    the package.  The breathing parameter is ``eta = B waist^2 / 8``, which is
    ``B w^2 / 4`` for the width ``w`` of ``exp(-r^2 / (2 w^2))``.  Velocities
    are ``d/d zeta``.
    """

    B: float
    waist: float = math.sqrt(2.0)
    x0: float = 0.0
    y0: float = 0.0
    vx0: float = 0.0
    vy0: float = 0.0

    def __post_init__(self):
        if self.B == 0:
            raise OracleParameterError("B must be nonzero")
        if not self.waist > 0:
            raise OracleParameterError("waist must be positive")

    @classmethod
    def from_eta(cls, B: float, eta: float, **kw) -> "MagneticGaussianParams":
        return cls(B, math.sqrt(8 * eta / B), **kw)

    @property
    def eta(self) -> float:
        return self.B * self.waist**2 / 8

    def launch_momentum(self) -> tuple[float, float]:
        """Canonical transverse wavevector of the launch tilt, ``v + A(x0)``."""
        return self.vx0 - self.B * self.y0, self.vy0


def classical_spiral(params: MagneticGaussianParams, zeta):
    """Classical trajectory, velocity and canonical momentum at ``zeta``.

    ``x_c = x0 + (x0' sin(B zeta) + y0' (1 - cos(B zeta))) / B`` and
    ``y_c = y0 + (y0' sin(B zeta) - x0' (1 - cos(B zeta))) / B``.
    """
    p = params
    z = np.asarray(zeta, dtype=float)
    s, c = np.sin(p.B * z), np.cos(p.B * z)
    xc = p.x0 + (p.vx0 * s + p.vy0 * (1 - c)) / p.B
    yc = p.y0 + (p.vy0 * s - p.vx0 * (1 - c)) / p.B
    vx = p.vx0 * c + p.vy0 * s
    vy = p.vy0 * c - p.vx0 * s
    return (xc, yc), (vx, vy), (vx - p.B * yc, vy)


def magnetic_width(eta: float, B: float, zeta, waist_sq: float = 1.0):
    """Breathing squared width ``(w^2/8 eta^2)(1 + 4 eta^2 - (1 - 4 eta^2) cos(B zeta))``."""
    if not eta > 0:
        raise OracleParameterError("eta must be positive")
    z = np.asarray(zeta, dtype=float)
    return waist_sq / (8 * eta**2) * (1 + 4 * eta**2 - (1 - 4 * eta**2) * np.cos(B * z))


def _magnetic_unnormalized(grid, p: MagneticGaussianParams, zeta: float):
    B, eta = p.B, p.eta
    (xc, yc), _, (pcx, pcy) = classical_spiral(p, zeta)
    X, Y = grid.mesh
    dx, dy = X - xc, Y - yc
    a = B * zeta / 2
    if math.isclose(2 * eta, 1.0, rel_tol=0, abs_tol=1e-12):
        # limit artanh(2 eta) -> infinity: cot u -> i, csc u -> e^{-i a} up to a constant
        cot_u = 1j
        pref = np.exp(-1j * a)
    elif 2 * eta < 1:
        u = a - 1j * math.atanh(2 * eta)
        cot_u = np.cos(u) / np.sin(u)
        pref = 1 / np.sin(u)
    else:
        raise OracleParameterError(f"eta={eta:g}: need 2*eta <= 1 for the real artanh branch")
    phase = (B / 4 * cot_u * (dx**2 + dy**2) + dx * pcx + dy * pcy - B / 2 * dx * dy
             - pcx * pcy / (2 * B) + yc * pcy / 2)
    return pref * np.exp(1j * phase)


def magnetic_gaussian(grid: TransverseGrid, params: MagneticGaussianParams, zeta: float) -> np.ndarray:
    """Closed-form breathing, spiralling Gaussian (scalar potential neglected).

    The free normalisation constant is fixed by unit grid norm at zeta=0 and
    then held fixed.
    """
    n0 = norm(grid, _magnetic_unnormalized(grid, params, 0.0))
    return _magnetic_unnormalized(grid, params, zeta) / math.sqrt(n0)


# Aharonov-Bohm ------------------------------------------------------------------


def bessel_order(m: int, R: float, D: float = 0.0) -> float:
    """``nu = sqrt(1 + m^2 + 4 R m - D)``."""
    nu2 = 1 + m * m + 4 * R * m - D
    if nu2 < 0:
        raise OracleParameterError(f"nu^2 = {nu2:g} < 0: no real Bessel order")
    return math.sqrt(nu2)


@dataclass(frozen=True)
class BesselModeParams:
    m: int
    R: float
    kappa: float
    D: float = 0.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise OracleParameterError("kappa must be positive")

    @property
    def nu(self) -> float:
        return bessel_order(self.m, self.R, self.D)

    @property
    def eigenvalue(self) -> float:
        return self.kappa**2 / 2


def bessel_mode(grid: TransverseGrid, params: BesselModeParams, zeta: float = 0.0, window=None) -> np.ndarray:
    """Regular mode ``J_nu(kappa r) e^{i m phi} e^{-i kappa^2 zeta / 2}``.

    The radial factor ``r^{-1/2} sqrt(kappa r)`` is a constant and is
    absorbed in the normalisation, which is unity over ``window`` (a
    boolean mask; whole grid if omitted).
    """
    r, az = grid.polar
    f = jv(params.nu, params.kappa * r) * np.exp(1j * params.m * az)
    w = np.ones(grid.shape, bool) if window is None else window
    f = f / math.sqrt(float((np.abs(f[w]) ** 2).sum() * grid.cell_area))
    return f * np.exp(-0.5j * params.kappa**2 * zeta)


def annulus(grid: TransverseGrid, r_min: float, r_max=None) -> np.ndarray:
    """Boolean window ``r_min <= r <= r_max`` (default ``0.8 min(lx, ly)/2``)."""
    r, _ = grid.polar
    if r_max is None:
        r_max = 0.8 * min(grid.lx, grid.ly) / 2
    return (r >= r_min) & (r <= r_max)


def radial_taper(grid: TransverseGrid, r_start: float, r_end: float) -> np.ndarray:
    """``cos^2`` roll-off from 1 at ``r_start`` to 0 at ``r_end``."""
    r, _ = grid.polar
    s = np.clip((r - r_start) / (r_end - r_start), 0, 1)
    return np.cos(0.5 * np.pi * s) ** 2


def _smooth_step(t):
    """C-infinity step from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(t, 0.0, 1.0)
    f = lambda u: np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
    return f(t) / (f(t) + f(1 - t))


def smooth_annulus_window(grid: TransverseGrid, r_in: tuple, r_out: tuple) -> np.ndarray:
    """Smooth window rising over ``r_in = (a, b)`` and falling over ``r_out = (c, d)``.

    Unlike :func:`radial_taper` every derivative is continuous, so a
    windowed Bessel mode stays spectrally resolved and the origin
    singularity of the mode is cut out entirely.
    """
    (a, b), (c, d) = r_in, r_out
    if not 0 <= a < b <= c < d:
        raise OracleParameterError("need 0 <= a < b <= c < d for the window radii")
    r, _ = grid.polar
    return _smooth_step((r - a) / (b - a)) * (1 - _smooth_step((r - c) / (d - c)))


def windowed_overlap(grid: TransverseGrid, a: np.ndarray, b: np.ndarray, window=None) -> float:
    """``|<a|b>| / (|a| |b|)`` restricted to ``window``."""
    if window is not None:
        a, b = a[window], b[window]
    num = abs(np.vdot(a, b))
    den = math.sqrt(float(np.vdot(a, a).real) * float(np.vdot(b, b).real))
    return float(num / den)
