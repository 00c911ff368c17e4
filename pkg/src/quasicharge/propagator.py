"""Propagation of the EIT-mode envelope in the scaled coordinate zeta.

The envelope obeys ``i d psi/d zeta = H psi`` with

    H = 1/2 (-i grad - A)^2 + Phi/2 - U

on the periodic transverse grid.  Three integrators are provided: a Strang
split for scalar potentials, a mixed-representation split for Landau-type
vector potentials, and an explicit RK4 with spectral derivatives for a
general vector potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import fft

from .gauge import GaugeFields
from .grid import TransverseGrid, canonical_momentum, centroid, norm, oam_expectation, second_moments

KINDS = ("strang_split", "mixed_rep_split", "rk4_spectral")
SPLIT_DEFAULT_DZETA = 1e-3
NORM_GROWTH_LIMIT = 1e-3


class IntegratorMismatchError(ValueError):
    """The chosen integrator cannot represent the given vector potential."""


class InstabilityError(RuntimeError):
    """The explicit integrator is unstable at the chosen step."""


def scalar_potential(gauge: GaugeFields, U=None) -> np.ndarray:
    V = 0.5 * np.asarray(gauge.phi, dtype=float)
    if U is not None:
        V = V - U
    return np.broadcast_to(V, gauge.grid.shape)


def covariant_derivative(grid: TransverseGrid, psi: np.ndarray, a: np.ndarray, axis: str) -> np.ndarray:
    """``(-i d_axis - a) psi``."""
    d = grid.d_dx(psi) if axis == "x" else grid.d_dy(psi)
    return -1j * d - a * psi


def apply_hamiltonian(grid: TransverseGrid, psi: np.ndarray, gauge: GaugeFields, U=None) -> np.ndarray:
    """``H psi`` with the kinetic term composed as ``sum_j D_j D_j / 2``.

    Each ``D_j = -i d_j - A_j`` is Hermitian on the grid, so H is Hermitian
    to roundoff.  This is algebraically the expansion
    ``-Lap psi + i div(A) psi + 2i A.grad psi + A^2 psi`` (over two).
    """
    if gauge.grid != grid:
        raise ValueError("gauge fields and field live on different grids")
    psi = grid.check(psi)
    V = scalar_potential(gauge, U)
    if gauge.has_vector_potential:
        Dx = covariant_derivative(grid, psi, gauge.ax, "x")
        Dy = covariant_derivative(grid, psi, gauge.ay, "y")
        kinetic = 0.5 * (covariant_derivative(grid, Dx, gauge.ax, "x") + covariant_derivative(grid, Dy, gauge.ay, "y"))
    else:
        kinetic = -0.5 * grid.laplacian(psi)
    return kinetic + V * psi


def spectral_radius_estimate(grid: TransverseGrid, gauge: GaugeFields, U=None) -> float:
    V = scalar_potential(gauge, U)
    kmax = grid.k_max
    amax = float(np.hypot(gauge.ax, gauge.ay).max())
    return 0.5 * kmax**2 + float(np.abs(V).max()) + amax * kmax + 0.5 * amax**2


def rk4_step_bound(grid: TransverseGrid, gauge: GaugeFields, U=None, safety: float = 0.5) -> float:
    return safety * 2.0 / spectral_radius_estimate(grid, gauge, U)


def is_landau_separable(gauge: GaugeFields, tol: float = 1e-12) -> bool:
    """True if ``A_x`` depends only on y and ``A_y`` only on x."""
    ax, ay = np.asarray(gauge.ax), np.asarray(gauge.ay)
    scale = max(float(np.abs(ax).max()), float(np.abs(ay).max()), 1.0)
    return bool(np.ptp(ax, axis=1).max() <= tol * scale and np.ptp(ay, axis=0).max() <= tol * scale)


@dataclass
class PropagationState:
    psi: np.ndarray
    zeta: float = 0.0
    step_count: int = 0


@dataclass
class Diagnostics:
    zeta: float
    norm: float
    x_c: float
    y_c: float
    w2_x: float
    w2_y: float
    lz: float
    px: float = float("nan")

    FIELDS = ("zeta", "norm", "x_c", "y_c", "w2_x", "w2_y", "lz")

    def row(self):
        return [getattr(self, f) for f in self.FIELDS]


def measure(grid: TransverseGrid, psi: np.ndarray, zeta: float) -> Diagnostics:
    xc, yc = centroid(grid, psi)
    w2x, w2y = second_moments(grid, psi)
    px, _ = canonical_momentum(grid, psi)
    return Diagnostics(zeta, norm(grid, psi), xc, yc, w2x, w2y, oam_expectation(grid, psi), px)


class Propagator:
    """Advance a field under fixed gauge fields and detuning term.

    ``kind="auto"`` picks the Strang split when there is no vector
    potential, the mixed-representation split for Landau-separable
    potentials and RK4 otherwise.  ``mask`` is a real factor applied after
    every full step.
    """

    def __init__(self, grid: TransverseGrid, gauge: GaugeFields, U=None, kind: str = "auto",
                 dzeta: Optional[float] = None, safety: float = 0.5, mask: Optional[np.ndarray] = None):
        if gauge.grid != grid:
            raise ValueError("gauge fields and propagator use different grids")
        self.grid = grid
        self.gauge = gauge
        self.U = None if U is None else np.broadcast_to(np.asarray(U, dtype=float), grid.shape)
        self.V = scalar_potential(gauge, self.U)
        self.mask = None if mask is None else grid.check(np.asarray(mask, dtype=float))
        self.safety = safety
        has_a = gauge.has_vector_potential
        if kind == "auto":
            kind = "strang_split" if not has_a else ("mixed_rep_split" if is_landau_separable(gauge) else "rk4_spectral")
        if kind not in KINDS:
            raise ValueError(f"unknown integrator {kind!r}; expected one of {KINDS}")
        if kind == "strang_split" and has_a:
            raise IntegratorMismatchError("strang_split requires a vanishing vector potential")
        if kind == "mixed_rep_split" and not is_landau_separable(gauge):
            raise IntegratorMismatchError("mixed_rep_split requires A_x = A_x(y) and A_y = A_y(x)")
        self.kind = kind
        self.max_stable_dzeta = rk4_step_bound(grid, gauge, self.U, safety)
        if dzeta is None:
            dzeta = self.max_stable_dzeta if kind == "rk4_spectral" else SPLIT_DEFAULT_DZETA
        if not dzeta > 0:
            raise ValueError("dzeta must be positive")
        if kind == "rk4_spectral" and dzeta > self.max_stable_dzeta * (1 + 1e-12):
            raise InstabilityError(
                f"dzeta={dzeta:g} exceeds the RK4 stability bound {self.max_stable_dzeta:.4g}; use a smaller step")
        self.dzeta = float(dzeta)
        self._prepare(self.dzeta)

    def _prepare(self, dz):
        g = self.grid
        self._dz = dz
        self._half_v = np.exp(-0.5j * dz * self.V)
        if self.kind == "strang_split":
            self._kin = np.exp(-0.5j * dz * g.k_squared)
        elif self.kind == "mixed_rep_split":
            ax_y = np.asarray(self.gauge.ax)[:, 0]  # function of y only
            ay_x = np.asarray(self.gauge.ay)[0, :]  # function of x only
            self._kin_x = np.exp(-0.25j * dz * (g.kx[None, :] - ax_y[:, None]) ** 2)
            self._kin_y = np.exp(-0.5j * dz * (g.ky[:, None] - ay_x[None, :]) ** 2)

    def hamiltonian(self, psi: np.ndarray) -> np.ndarray:
        return apply_hamiltonian(self.grid, psi, self.gauge, self.U)

    def _advance(self, psi: np.ndarray, dz: float) -> np.ndarray:
        if dz != self._dz:
            self._prepare(dz)
        if self.kind == "strang_split":
            psi = self._half_v * psi
            psi = fft.ifft2(self._kin * fft.fft2(psi))
            return self._half_v * psi
        if self.kind == "mixed_rep_split":
            psi = self._half_v * psi
            psi = fft.ifft(self._kin_x * fft.fft(psi, axis=1), axis=1)
            psi = fft.ifft(self._kin_y * fft.fft(psi, axis=0), axis=0)
            psi = fft.ifft(self._kin_x * fft.fft(psi, axis=1), axis=1)
            return self._half_v * psi
        H = self.hamiltonian
        k1 = -1j * H(psi)
        k2 = -1j * H(psi + 0.5 * dz * k1)
        k3 = -1j * H(psi + 0.5 * dz * k2)
        k4 = -1j * H(psi + dz * k3)
        return psi + dz / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    def step(self, state: PropagationState, dz: Optional[float] = None) -> PropagationState:
        dz = self.dzeta if dz is None else dz
        psi = self._advance(state.psi, dz)
        if self.mask is not None:
            psi = self.mask * psi
        return PropagationState(psi, state.zeta + dz, state.step_count + 1)

    def run(self, psi0: np.ndarray, zeta_max: float, every: int = 0,
            callback: Optional[Callable[[PropagationState], None]] = None,
            snapshot_at=()) -> "Trajectory":
        """Propagate from zeta=0 to ``zeta_max`` in equal steps.

        The step is shrunk slightly if needed so that an integer number of
        steps lands on ``zeta_max``.  Diagnostics are recorded every
        ``every`` steps (and at both ends); snapshots at the first step at or
        beyond each requested zeta.
        """
        n = max(1, math.ceil(zeta_max / self.dzeta - 1e-9))
        dz = zeta_max / n
        state = PropagationState(np.array(psi0, dtype=complex), 0.0, 0)
        n0 = norm(self.grid, state.psi)
        traj = Trajectory()
        traj.diagnostics.append(measure(self.grid, state.psi, 0.0))
        pending = sorted(float(z) for z in snapshot_at)
        while pending and pending[0] <= 0:
            traj.snapshots.append((0.0, state.psi.copy()))
            pending.pop(0)
        prev_norm = n0
        # with V = 0 and no mask the split is a pure k-space phase; stay there
        # between outputs
        free = self.kind == "strang_split" and self.mask is None and not np.any(self.V)
        if free:
            if dz != self._dz:
                self._prepare(dz)
            phat = fft.fft2(state.psi)
        for i in range(1, n + 1):
            if free:
                phat *= self._kin
                wanted = (callback is not None or i == n or (every and i % every == 0)
                          or (pending and i * dz >= pending[0] - 1e-12))
                state = PropagationState(fft.ifft2(phat) if wanted else None, i * dz, state.step_count + 1)
                if not wanted:
                    continue
            else:
                state = self.step(state, dz)
            state.zeta = i * dz
            if self.kind == "rk4_spectral" or self.mask is not None:
                cur = norm(self.grid, state.psi)
                if not np.isfinite(cur) or cur > n0 * (1 + NORM_GROWTH_LIMIT):
                    raise InstabilityError(
                        f"norm grew to {cur:.6g} (from {n0:.6g}) at zeta={state.zeta:.4g}; reduce dzeta")
                if self.mask is not None and self.kind != "rk4_spectral":
                    assert cur <= prev_norm * (1 + 1e-12), "absorbing mask increased the norm"
                prev_norm = cur
            if (every and i % every == 0) or i == n:
                traj.diagnostics.append(measure(self.grid, state.psi, state.zeta))
            while pending and state.zeta >= pending[0] - 1e-12:
                traj.snapshots.append((state.zeta, state.psi.copy()))
                pending.pop(0)
            if callback is not None:
                callback(state)
        traj.final = state
        return traj


@dataclass
class Trajectory:
    diagnostics: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: Optional[PropagationState] = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(d, name) for d in self.diagnostics])
