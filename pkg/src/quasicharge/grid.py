"""Transverse grid, spectral differentiation and beam diagnostics.

Fields are plain complex ``numpy`` arrays of shape ``(ny, nx)`` so that the
x index runs fastest in memory.  All lengths are in units of the initial
beam waist; the grid is periodic with cell-centred nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft


class GridError(ValueError):
    """Raised for invalid grids or fields that do not match a grid."""


class DiagnosticError(ValueError):
    """Raised when a diagnostic is requested for a zero-norm field."""


@dataclass(frozen=True)
class TransverseGrid:
    """Uniform periodic sampling of the transverse plane.

    Node ``i`` sits at ``x_i = -lx/2 + (i + 1/2) dx + x_offset``; with even
    ``nx`` and zero offset the origin is never a node.
    """

    nx: int
    ny: int
    lx: float
    ly: float
    x_offset: float = 0.0
    y_offset: float = 0.0

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 16 or n % 2:
                raise GridError(f"{name}={n}: grid sizes must be even integers >= 16")
        for name in ("lx", "ly"):
            if not np.isfinite(getattr(self, name)) or getattr(self, name) <= 0:
                raise GridError(f"{name} must be a positive finite extent")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @cached_property
    def x(self) -> np.ndarray:
        return -self.lx / 2 + (np.arange(self.nx) + 0.5) * self.dx + self.x_offset

    @cached_property
    def y(self) -> np.ndarray:
        return -self.ly / 2 + (np.arange(self.ny) + 0.5) * self.dy + self.y_offset

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinate arrays ``(X, Y)`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y)

    @cached_property
    def polar(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = self.mesh
        return np.hypot(X, Y), np.arctan2(Y, X)

    @cached_property
    def kx(self) -> np.ndarray:
        return 2 * np.pi * fft.fftfreq(self.nx, d=self.dx)

    @cached_property
    def ky(self) -> np.ndarray:
        return 2 * np.pi * fft.fftfreq(self.ny, d=self.dy)

    @cached_property
    def k_squared(self) -> np.ndarray:
        return self.kx[None, :] ** 2 + self.ky[:, None] ** 2

    @cached_property
    def _ikx(self) -> np.ndarray:
        # Nyquist multiplier zeroed: keeps derivatives of real fields real.
        k = 1j * self.kx.copy()
        k[self.nx // 2] = 0
        return k

    @cached_property
    def _iky(self) -> np.ndarray:
        k = 1j * self.ky.copy()
        k[self.ny // 2] = 0
        return k

    @property
    def k_max(self) -> float:
        """Largest transverse wavenumber magnitude on the grid."""
        return float(np.hypot(np.pi / self.dx, np.pi / self.dy))

    def check(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f)
        if f.shape[-2:] != self.shape:
            raise GridError(f"field shape {f.shape} does not match grid {self.shape}")
        return f

    # spectral calculus -------------------------------------------------

    def d_dx(self, f: np.ndarray) -> np.ndarray:
        f = self.check(f)
        return fft.ifft(self._ikx * fft.fft(f, axis=-1), axis=-1)

    def d_dy(self, f: np.ndarray) -> np.ndarray:
        f = self.check(f)
        return fft.ifft(self._iky[:, None] * fft.fft(f, axis=-2), axis=-2)

    def gradient(self, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.d_dx(f), self.d_dy(f)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        f = self.check(f)
        return fft.ifft2(-self.k_squared * fft.fft2(f))

    # integrals -----------------------------------------------------------

    def integrate(self, f: np.ndarray):
        return self.check(f).sum(axis=(-2, -1)) * self.cell_area

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Grid inner product <f|g>."""
        return complex(np.vdot(self.check(f), self.check(g)) * self.cell_area)


def finite_difference_gradient(grid: TransverseGrid, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fourth-order centred differences with one-sided closure at the edges.

    Used for control fields that are not periodic on the grid.
    """
    f = grid.check(f)
    return _fd4(f, grid.dx, axis=-1), _fd4(f, grid.dy, axis=-2)


def _fd4(f, h, axis):
    f = np.moveaxis(f, axis, -1)
    out = np.empty_like(f)
    out[..., 2:-2] = (f[..., :-4] - 8 * f[..., 1:-3] + 8 * f[..., 3:-1] - f[..., 4:]) / (12 * h)
    # fourth-order one-sided stencils
    c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    out[..., 0] = f[..., :5] @ c
    out[..., 1] = (-3 * f[..., 0] - 10 * f[..., 1] + 18 * f[..., 2] - 6 * f[..., 3] + f[..., 4]) / (12 * h)
    out[..., -1] = -(f[..., :-6:-1] @ c)
    out[..., -2] = (3 * f[..., -1] + 10 * f[..., -2] - 18 * f[..., -3] + 6 * f[..., -4] - f[..., -5]) / (12 * h)
    return np.moveaxis(out, -1, axis)


# diagnostics ---------------------------------------------------------------


def norm(grid: TransverseGrid, f: np.ndarray) -> float:
    return float(grid.integrate(np.abs(f) ** 2))


def _density(grid, f):
    rho = np.abs(grid.check(f)) ** 2
    total = rho.sum()
    if not total > 0:
        raise DiagnosticError("diagnostic requested for a zero-norm field")
    return rho / total


def centroid(grid: TransverseGrid, f: np.ndarray) -> tuple[float, float]:
    rho = _density(grid, f)
    X, Y = grid.mesh
    return float((X * rho).sum()), float((Y * rho).sum())


def second_moments(grid: TransverseGrid, f: np.ndarray) -> tuple[float, float]:
    """Squared beam widths ``(w_x^2, w_y^2)`` from intensity variances.

    Normalised so that the amplitude profile ``exp(-r^2/w^2)`` reports ``w^2``
    on both axes, i.e. ``w_x^2 = 4 (<x^2> - <x>^2)``.
    """
    rho = _density(grid, f)
    X, Y = grid.mesh
    xc = (X * rho).sum()
    yc = (Y * rho).sum()
    return float(4 * ((X - xc) ** 2 * rho).sum()), float(4 * ((Y - yc) ** 2 * rho).sum())


def oam_expectation(grid: TransverseGrid, f: np.ndarray) -> float:
    """Canonical orbital angular momentum <-i d/dphi> about the origin."""
    f = grid.check(f)
    total = np.sum(np.abs(f) ** 2)
    if not total > 0:
        raise DiagnosticError("diagnostic requested for a zero-norm field")
    X, Y = grid.mesh
    fx, fy = grid.gradient(f)
    lz = np.vdot(f, -1j * (X * fy - Y * fx))
    return float(lz.real / total)


def canonical_momentum(grid: TransverseGrid, f: np.ndarray) -> tuple[float, float]:
    """Expectation values of ``-i d/dx`` and ``-i d/dy``."""
    f = grid.check(f)
    total = np.sum(np.abs(f) ** 2)
    if not total > 0:
        raise DiagnosticError("diagnostic requested for a zero-norm field")
    fx, fy = grid.gradient(f)
    return float((np.vdot(f, -1j * fx) / total).real), float((np.vdot(f, -1j * fy) / total).real)


def gaussian_beam(grid: TransverseGrid, waist: float = 1.0, x0: float = 0.0, y0: float = 0.0,
                  kx0: float = 0.0, ky0: float = 0.0, m: int = 0) -> np.ndarray:
    """Unit-norm beam ``exp(-r^2/waist^2)`` displaced, tilted, with winding ``m``."""
    X, Y = grid.mesh
    dx, dy = X - x0, Y - y0
    psi = np.exp(-(dx**2 + dy**2) / waist**2 + 1j * (kx0 * X + ky0 * Y)).astype(complex)
    if m:
        psi = psi * (dx + 1j * np.sign(m) * dy) ** abs(m)
    return psi / np.sqrt(norm(grid, psi))


def absorbing_mask(grid: TransverseGrid, width: float, strength: float = 1.0, order: int = 8) -> np.ndarray:
    """Real per-step damping factor, equal to 1 away from the edges.

    Within ``width`` of each edge the factor is ``exp(-strength * s**order)``
    where ``s`` rises from 0 to 1 towards the boundary.
    """
    if width <= 0:
        raise GridError("mask width must be positive")
    X, Y = grid.mesh
    xc = grid.x_offset
    yc = grid.y_offset
    sx = np.clip((np.abs(X - xc) - (grid.lx / 2 - width)) / width, 0, 1)
    sy = np.clip((np.abs(Y - yc) - (grid.ly / 2 - width)) / width, 0, 1)
    return np.exp(-strength * (sx**order + sy**order))
