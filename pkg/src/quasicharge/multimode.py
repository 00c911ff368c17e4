"""Full Q-mode propagation before the single-mode truncation.

The b-mode vector evolves under ``1/2 (-i grad - A)^2`` with the full
matrix-valued gauge field plus a diagonal term per mode: ``-U`` for the EIT
mode and a complex susceptibility ``chi_q`` (real dispersion, imaginary
absorption) for the others.  The diagonal part is integrated exactly
(integrating-factor RK4), so strong absorption does not restrict the step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .gauge import FullGauge, GaugeFields
from .grid import TransverseGrid
from .propagator import NORM_GROWTH_LIMIT, InstabilityError, PropagationState, Propagator, rk4_step_bound


@dataclass(frozen=True)
class AbsorptionModel:
    """Diagonal terms for the non-EIT modes and the EIT mode.

    ``gamma[q]`` is the scaled amplitude decay rate of mode ``q`` (``q < Q-1``)
    and ``dispersion[q]`` its real index shift.  ``U`` is the EIT-mode
    detuning term (``k w0^2 delta / v_EIT``), scalar or per grid point.
    """

    gamma: tuple
    dispersion: tuple = ()
    U: object = 0.0

    def __post_init__(self):
        g = tuple(float(x) for x in np.atleast_1d(self.gamma))
        if any(x < 0 for x in g):
            raise ValueError("absorption rates must be non-negative")
        d = tuple(float(x) for x in np.atleast_1d(self.dispersion)) if len(np.atleast_1d(self.dispersion)) else (0.0,) * len(g)
        if len(d) != len(g):
            raise ValueError("dispersion and gamma must have one entry per non-EIT mode")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "dispersion", d)

    @classmethod
    def uniform(cls, Q: int, gamma: float, U=0.0) -> "AbsorptionModel":
        return cls((gamma,) * (Q - 1), (0.0,) * (Q - 1), U)

    @classmethod
    def from_two_level(cls, Q: int, density: float, g: float, decay: float, delta: float, c: float,
                       k: float, waist: float, U=0.0) -> "AbsorptionModel":
        """Two-level susceptibility ``chi = -4 N g^2 (delta - i decay/2) / (c decay^2)``.

        The propagation term is ``-chi`` scaled by ``k w0^2``; its imaginary
        part gives the amplitude decay rate.
        """
        term = -(-4 * density * g**2 * (delta - 0.5j * decay) / (c * decay**2)) * k * waist**2
        return cls((-term.imag,) * (Q - 1), (term.real,) * (Q - 1), U)

    def diagonal(self, grid: TransverseGrid, Q: int) -> np.ndarray:
        """Per-mode diagonal Hamiltonian terms, shape ``(Q, ny, nx)``."""
        if len(self.gamma) != Q - 1:
            raise ValueError(f"absorption model has {len(self.gamma)} rates, expected {Q - 1}")
        out = np.zeros((Q,) + grid.shape, complex)
        for q in range(Q - 1):
            out[q] = self.dispersion[q] - 1j * self.gamma[q]
        out[Q - 1] = -np.broadcast_to(np.asarray(self.U, dtype=float), grid.shape)
        return out


def _matvec(a, b):
    return np.einsum("qp...,p...->q...", a, b)


def apply_multimode_hamiltonian(b: np.ndarray, gauge: FullGauge, absorption: Optional[AbsorptionModel] = None,
                                diagonal: Optional[np.ndarray] = None) -> np.ndarray:
    """``1/2 sum_j D_j D_j b + diag b`` with ``D_j = -i d_j - A_j`` (matrix)."""
    grid = gauge.grid
    b = np.asarray(b)
    if b.shape != (gauge.Q,) + grid.shape:
        raise ValueError(f"multifield shape {b.shape} does not match a {gauge.Q}-mode field on the grid")
    if diagonal is None and absorption is not None:
        diagonal = absorption.diagonal(grid, gauge.Q)

    def D(f, a, axis):
        d = grid.d_dx(f) if axis == "x" else grid.d_dy(f)
        return -1j * d - _matvec(a, f)

    out = 0.5 * (D(D(b, gauge.ax, "x"), gauge.ax, "x") + D(D(b, gauge.ay, "y"), gauge.ay, "y"))
    if diagonal is not None:
        out = out + diagonal * b
    return out


def zero_off_diagonal(gauge: FullGauge) -> FullGauge:
    eye = np.eye(gauge.Q)[:, :, None, None]
    return FullGauge(gauge.grid, gauge.ax * eye, gauge.ay * eye)


def multimode_step_bound(gauge: FullGauge, safety: float = 0.5) -> float:
    grid = gauge.grid
    amax = float(np.sqrt((np.abs(gauge.ax) ** 2 + np.abs(gauge.ay) ** 2).sum(axis=(0, 1))).max())
    kmax = grid.k_max
    return safety * 2.0 / (0.5 * kmax**2 + amax * kmax + 0.5 * amax**2)


@dataclass
class MultimodeTrace:
    zeta: list = field(default_factory=list)
    overlap: list = field(default_factory=list)
    leakage: list = field(default_factory=list)
    total_norm: list = field(default_factory=list)
    final: Optional[np.ndarray] = None
    single_final: Optional[np.ndarray] = None

    COLUMNS = ("zeta", "overlap", "leakage", "total_norm")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.COLUMNS)
            for row in zip(self.zeta, self.overlap, self.leakage, self.total_norm):
                w.writerow([f"{v:.17g}" for v in row])


class MultimodePropagator:
    """Integrating-factor RK4 for the full b-mode vector."""

    def __init__(self, gauge: FullGauge, absorption: AbsorptionModel, dzeta: Optional[float] = None,
                 safety: float = 0.5):
        self.gauge = gauge.hermitian()
        self.grid = gauge.grid
        self.Q = gauge.Q
        self.diag = absorption.diagonal(self.grid, self.Q)
        self.max_stable_dzeta = multimode_step_bound(self.gauge, safety)
        if dzeta is None:
            dzeta = self.max_stable_dzeta
        if dzeta > self.max_stable_dzeta * (1 + 1e-12):
            raise InstabilityError(f"dzeta={dzeta:g} exceeds the stability bound {self.max_stable_dzeta:.4g}")
        self.dzeta = float(dzeta)
        self._set_step(self.dzeta)

    def _set_step(self, dz):
        self._dz = dz
        self._half = np.exp(-0.5j * dz * self.diag)

    def _rhs(self, b):
        return -1j * apply_multimode_hamiltonian(b, self.gauge)

    def step(self, b: np.ndarray, dz: Optional[float] = None) -> np.ndarray:
        dz = self.dzeta if dz is None else dz
        if dz != self._dz:
            self._set_step(dz)
        E = self._half
        k1 = self._rhs(b)
        k2 = self._rhs(E * (b + 0.5 * dz * k1))
        k3 = self._rhs(E * b + 0.5 * dz * k2)
        k4 = self._rhs(E * E * b + dz * E * k3)
        return E * E * b + dz / 6 * (E * E * k1 + 2 * E * (k2 + k3) + k4)

    def run(self, b0: np.ndarray, zeta_max: float, samples: int = 20,
            reference: Optional[Propagator] = None, psi_single0: Optional[np.ndarray] = None) -> MultimodeTrace:
        """Propagate to ``zeta_max`` recording ``samples`` evenly spaced rows.

        With a single-mode ``reference`` propagator the overlap column is
        ``|<b_Q^single | b_Q^multi>|`` for unit-norm launches (loss into the
        absorbed modes lowers it); otherwise it is NaN.  The reference is
        stepped with the same step size.
        """
        grid = self.grid
        n = max(1, math.ceil(zeta_max / self.dzeta - 1e-9))
        n = samples * max(1, math.ceil(n / samples))
        dz = zeta_max / n
        per = n // samples
        b = np.array(b0, dtype=complex)
        single = None
        if reference is not None:
            single = np.array(b0[-1] if psi_single0 is None else psi_single0, dtype=complex)
            sstate = PropagationState(single)
        n0 = float((np.abs(b) ** 2).sum()) * grid.cell_area
        trace = MultimodeTrace()

        def record(z):
            pops = (np.abs(b) ** 2).sum(axis=(1, 2)) * grid.cell_area
            trace.zeta.append(z)
            trace.leakage.append(float(pops[:-1].sum()))
            trace.total_norm.append(float(pops.sum()))
            trace.overlap.append(abs(grid.inner(sstate.psi, b[-1])) if single is not None else float("nan"))

        record(0.0)
        for i in range(1, n + 1):
            b = self.step(b, dz)
            if single is not None:
                sstate = reference.step(sstate, dz)
            if i % per == 0:
                tot = float((np.abs(b) ** 2).sum()) * grid.cell_area
                if not np.isfinite(tot) or tot > n0 * (1 + NORM_GROWTH_LIMIT):
                    raise InstabilityError(f"multimode norm grew to {tot:.6g}; reduce dzeta")
                record(i * dz)
        trace.final = b
        trace.single_final = sstate.psi if single is not None else None
        return trace


def launch(psi0: np.ndarray, Q: int) -> np.ndarray:
    """Multifield with ``psi0`` in the EIT mode and empty absorbed modes."""
    b = np.zeros((Q,) + psi0.shape, complex)
    b[-1] = psi0
    return b


def propagate_multimode(full: FullGauge, closed: GaugeFields, gamma: float, psi0: np.ndarray, zeta_max: float,
                        samples: int = 20, dzeta: Optional[float] = None, U=0.0,
                        reference_kind: str = "auto") -> MultimodeTrace:
    """Run the multimode bench and the truncated single-mode model side by side.

    Both share one step size: the smaller of the two stability bounds unless
    ``dzeta`` is given.
    """
    grid = full.grid
    absorption = AbsorptionModel.uniform(full.Q, gamma, U)
    Uarr = None if np.all(np.asarray(U) == 0) else np.broadcast_to(np.asarray(U, dtype=float), grid.shape)
    if dzeta is None:
        dzeta = min(multimode_step_bound(full.hermitian()), rk4_step_bound(grid, closed, Uarr))
    mm = MultimodePropagator(full, absorption, dzeta)
    ref = Propagator(grid, closed, Uarr, kind=reference_kind, dzeta=dzeta)
    return mm.run(launch(psi0, full.Q), zeta_max, samples, reference=ref)


# adiabaticity -----------------------------------------------------------------------


def gauge_coupling_scale(full: FullGauge) -> float:
    """Kinetic size of the off-diagonal coupling, ``max(sum_q |A_Qq|^2) / 2``."""
    return float(full.defining_phi().max()) / 2


@dataclass
class AdiabaticityReport:
    coupling: float
    gap: float
    eta: float
    eta_bound: float

    @property
    def ratio(self) -> float:
        return self.coupling / self.gap

    @property
    def eta_ratio(self) -> float:
        return self.eta / self.eta_bound

    @property
    def passed(self) -> bool:
        return self.ratio < 1 - 1e-12 and self.eta_ratio < 1 - 1e-12

    def lines(self) -> list[str]:
        return [
            f"coupling/gap  {self.coupling:.4g}/{self.gap:.4g} = {self.ratio:.3e}",
            f"eta/bound     {self.eta:.4g}/{self.eta_bound:.4g} = {self.eta_ratio:.3e}",
            "PASS" if self.passed else "FAIL",
        ]


def adiabaticity_check(coupling: float, gap: float, kw: float, n: float, eta: float) -> AdiabaticityReport:
    """Coupling-to-gap ratio and ``eta`` against ``(k w)^2 n 3 pi / 2``."""
    for name, v in (("coupling", coupling), ("gap", gap), ("kw", kw), ("n", n), ("eta", eta)):
        if not v > 0:
            raise ValueError(f"{name} must be positive")
    return AdiabaticityReport(coupling, gap, eta, kw**2 * n * 3 * math.pi / 2)


def susceptibility_gap(absorption: AbsorptionModel) -> float:
    """Smallest ``|chi_EIT - chi_q|`` over the absorbed modes (EIT term taken at its mean)."""
    u = float(np.mean(absorption.U))
    return min(abs((d - 1j * g) + u) for g, d in zip(absorption.gamma, absorption.dispersion))


def rank_correlation(a: Sequence[float], b: Sequence[float]) -> float:
    from scipy.stats import spearmanr

    return float(spearmanr(a, b)[0])
