"""Control-field ratios, the mode transform W and the induced gauge potentials.

The EIT mode sees the (QQ) element of ``A_i = i W^dagger d_i W`` as a vector
potential and the off-diagonal weight ``sum_q |A_Qq|^2`` as a scalar
potential.  Everything here is evaluated on the scaled transverse grid, so
the returned potentials are already in units of the beam waist.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .grid import TransverseGrid, finite_difference_gradient

EPS_GAMMA = 1e-6
PHI_ROUNDOFF = 1e-10


class ConfigurationError(ValueError):
    """Invalid control-field configuration."""


class SingularGaugeError(ConfigurationError):
    """The explicit W is undefined because ``R_Q + 1`` vanishes."""


def _where(grid, mask):
    iy, ix = np.argwhere(mask)[0]
    return f"(x={grid.x[ix]:.6g}, y={grid.y[iy]:.6g})"


@dataclass(frozen=True)
class SampledControl:
    """General-Q control: the sampled ratios ``Omega_q / g_q``, shape ``(Q, ny, nx)``."""

    grid: TransverseGrid
    fields: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        f = np.asarray(self.fields, dtype=complex)
        if f.ndim != 3 or f.shape[1:] != self.grid.shape:
            raise ConfigurationError(f"control fields must have shape (Q, {self.grid.ny}, {self.grid.nx})")
        if f.shape[0] < 2:
            raise ConfigurationError("at least two control legs are required")
        object.__setattr__(self, "fields", f)

    @property
    def Q(self) -> int:
        return self.fields.shape[0]


@dataclass(frozen=True)
class ParametricControl:
    """Two-leg control ``R_{1,2} = sqrt(1/2 +- R) exp(i(phi +- theta))``.

    Analytic gradients may be supplied as ``(d/dx, d/dy)`` pairs; otherwise
    they are taken numerically.  ``theta`` and ``phi`` are only used through
    their phasors, so branch cuts in the sampled angles are harmless.
    """

    grid: TransverseGrid
    R: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    grad_R: Optional[tuple] = None
    grad_theta: Optional[tuple] = None
    grad_phi: Optional[tuple] = None
    periodic: bool = False

    def __post_init__(self):
        for name in ("R", "theta", "phi"):
            arr = np.broadcast_to(np.asarray(getattr(self, name), dtype=float), self.grid.shape)
            object.__setattr__(self, name, arr)
        bad = np.abs(self.R) > 0.5 + 1e-12
        if bad.any():
            raise ConfigurationError(
                f"|R| <= 1/2 violated at {_where(self.grid, bad)} (max |R| = {np.abs(self.R).max():.6g})")

    Q = 2


ControlConfig = Union[SampledControl, ParametricControl]


@dataclass(frozen=True)
class FullGauge:
    """Matrix-valued gauge field; ``ax[q, p]`` has shape ``(Q, Q, ny, nx)``."""

    grid: TransverseGrid
    ax: np.ndarray
    ay: np.ndarray

    @property
    def Q(self) -> int:
        return self.ax.shape[0]

    def hermiticity_residual(self) -> float:
        res = 0.0
        for a in (self.ax, self.ay):
            res = max(res, float(np.abs(a - np.conj(np.swapaxes(a, 0, 1))).max()))
        return res

    def hermitian(self) -> "FullGauge":
        h = lambda a: 0.5 * (a + np.conj(np.swapaxes(a, 0, 1)))
        return FullGauge(self.grid, h(self.ax), h(self.ay))

    def defining_phi(self) -> np.ndarray:
        """``sum_{q != Q} |A_Qq|^2`` summed over both transverse components."""
        Q = self.Q
        return (np.abs(self.ax[Q - 1, : Q - 1]) ** 2 + np.abs(self.ay[Q - 1, : Q - 1]) ** 2).sum(axis=0)


@dataclass(frozen=True)
class GaugeFields:
    """Scaled quasi-vector potential ``(ax, ay)`` and quasi-scalar potential ``phi``."""

    grid: TransverseGrid
    ax: np.ndarray
    ay: np.ndarray
    phi: np.ndarray
    full: Optional[FullGauge] = field(default=None, compare=False)
    identity_residual: Optional[float] = None

    @classmethod
    def zero(cls, grid: TransverseGrid) -> "GaugeFields":
        z = np.zeros(grid.shape)
        return cls(grid, z, z, z)

    @property
    def has_vector_potential(self) -> bool:
        return bool(np.any(self.ax) or np.any(self.ay))


# ratios and W --------------------------------------------------------------


def normalize_vector(omega_over_g) -> np.ndarray:
    """``R_q = (Omega_q/g_q) / Omega_perp`` for arrays of shape ``(Q, ...)``."""
    f = np.asarray(omega_over_g, dtype=complex)
    omega_perp = np.sqrt((np.abs(f) ** 2).sum(axis=0))
    if np.any(omega_perp <= 0):
        raise ConfigurationError("vanishing Omega_perp: all control fields are zero at some point")
    return f / omega_perp


def normalize_ratios(cfg: ControlConfig) -> np.ndarray:
    """Per-point normalised ratios, shape ``(Q, ny, nx)``."""
    if isinstance(cfg, ParametricControl):
        R1 = np.sqrt(0.5 + cfg.R) * np.exp(1j * (cfg.phi + cfg.theta))
        R2 = np.sqrt(np.maximum(0.5 - cfg.R, 0.0)) * np.exp(1j * (cfg.phi - cfg.theta))
        return np.stack([R1, R2])
    f = cfg.fields
    omega_perp = np.sqrt((np.abs(f) ** 2).sum(axis=0))
    dead = omega_perp <= np.finfo(float).tiny
    if dead.any():
        raise ConfigurationError(f"vanishing Omega_perp at {_where(cfg.grid, dead)}")
    return f / omega_perp


def build_W(R) -> np.ndarray:
    """Mode transform ``W_qp = gamma w_q w_p^* - delta_qp``.

    ``R`` has shape ``(Q,)`` or ``(Q, *points)``; the result has shape
    ``(Q, Q, *points)`` and its last column equals ``R``.
    """
    R = np.asarray(R, dtype=complex)
    Q = R.shape[0]
    gamma = R[-1] + 1
    if np.any(np.abs(gamma) < EPS_GAMMA):
        raise SingularGaugeError(
            f"R_Q = -1 (|1 + R_Q| < {EPS_GAMMA:g}): W is undefined here; relabel which leg is Q")
    w = R / gamma
    w[-1] = w[-1] + 1 / gamma
    eye = np.eye(Q).reshape((Q, Q) + (1,) * (R.ndim - 1))
    return gamma * w[:, None] * np.conj(w)[None, :] - eye


def _derivatives(cfg: ControlConfig, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if cfg.periodic:
        return cfg.grid.gradient(f)
    return finite_difference_gradient(cfg.grid, f)


def gauge_numeric(cfg: ControlConfig) -> FullGauge:
    """``A_i = i W^dagger d_i W`` with numerically differentiated W."""
    W = build_W(normalize_ratios(cfg))
    Wd = np.conj(np.swapaxes(W, 0, 1))
    dWx, dWy = _derivatives(cfg, W)
    ax = 1j * np.einsum("qp...,pr...->qr...", Wd, dWx)
    ay = 1j * np.einsum("qp...,pr...->qr...", Wd, dWy)
    return FullGauge(cfg.grid, ax, ay)


def _phase_gradient(cfg, angle):
    z = np.exp(1j * angle)
    gx, gy = _derivatives(cfg, z)
    return (np.conj(z) * gx).imag, (np.conj(z) * gy).imag


def _clamp_phi(grid, phi):
    low = phi < -PHI_ROUNDOFF
    if low.any():
        raise ConfigurationError(
            f"quasi-scalar potential negative beyond roundoff at {_where(grid, low)} (min {phi.min():.3g})")
    return np.maximum(phi, 0.0)


def identity_phi(cfg: ControlConfig, ratios: Optional[np.ndarray] = None):
    """``(A_QQ, -A_QQ^2 + sum_q |grad R_q|^2)`` from numerically differentiated ratios."""
    R = normalize_ratios(cfg) if ratios is None else ratios
    gx, gy = _derivatives(cfg, R)
    ax = (1j * np.conj(R) * gx).sum(axis=0).real
    ay = (1j * np.conj(R) * gy).sum(axis=0).real
    phi = -(ax**2 + ay**2) + (np.abs(gx) ** 2 + np.abs(gy) ** 2).sum(axis=0)
    return (ax, ay), phi


def gauge_closed_form(cfg: ControlConfig, with_full: bool = False) -> GaugeFields:
    """Quasi-vector and quasi-scalar potentials from the closed-form expressions.

    For the two-leg parametric form this is
    ``A = -grad(phi) - 2 R grad(theta)`` and
    ``Phi = |grad R|^2 / (1 - 4R^2) + |grad theta|^2 (1 - 4R^2)``.
    The identity ``Phi = -A^2 + sum |grad R_q|^2`` is compared against the
    defining sum over off-diagonal W-frame elements; the largest absolute
    discrepancy is stored as ``identity_residual``.
    """
    grid = cfg.grid
    full = gauge_numeric(cfg)
    if isinstance(cfg, ParametricControl):
        gR = cfg.grad_R if cfg.grad_R is not None else _derivatives(cfg, cfg.R)
        gT = cfg.grad_theta if cfg.grad_theta is not None else _phase_gradient(cfg, cfg.theta)
        gP = cfg.grad_phi if cfg.grad_phi is not None else _phase_gradient(cfg, cfg.phi)
        gR, gT, gP = ([np.broadcast_to(np.real(np.asarray(c)).astype(float), grid.shape) for c in g] for g in (gR, gT, gP))
        ax = -gP[0] - 2 * cfg.R * gT[0]
        ay = -gP[1] - 2 * cfg.R * gT[1]
        s = 1 - 4 * cfg.R**2
        gR2 = gR[0] ** 2 + gR[1] ** 2
        singular = (s <= 0) & (gR2 > 0)
        if singular.any():
            raise ConfigurationError(f"|R| = 1/2 with nonzero grad R: Phi diverges at {_where(grid, singular)}")
        with np.errstate(divide="ignore", invalid="ignore"):
            radial = np.where(gR2 > 0, gR2 / np.where(s > 0, s, 1.0), 0.0)
        phi = radial + (gT[0] ** 2 + gT[1] ** 2) * s
        _, phi_identity = identity_phi(cfg)
    else:
        (ax, ay), phi = identity_phi(cfg)
        phi_identity = phi
    residual = float(np.abs(phi_identity - full.defining_phi()).max())
    return GaugeFields(grid, ax, ay, _clamp_phi(grid, phi), full if with_full else None, residual)


@dataclass
class CrossValidationReport:
    a_deviation: float
    phi_deviation: float
    identity_residual: float
    hermiticity_residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.a_deviation, self.phi_deviation) < self.tol

    def lines(self) -> list[str]:
        return [
            f"A_QQ max rel. deviation     {self.a_deviation:.3e}",
            f"Phi max rel. deviation      {self.phi_deviation:.3e}",
            f"Phi identity residual       {self.identity_residual:.3e}",
            f"A_i hermiticity residual    {self.hermiticity_residual:.3e}",
            f"{'PASS' if self.passed else 'FAIL'} (tol {self.tol:g})",
        ]


def _rel_dev(a, b, region):
    scale = np.abs(b[region]).max() if region.any() else 0.0
    diff = np.abs(a - b)[region].max() if region.any() else 0.0
    if scale == 0:
        return float(diff)
    return float(diff / scale)


def cross_validate(cfg: ControlConfig, tol: float = 1e-6, region: Optional[np.ndarray] = None) -> CrossValidationReport:
    """Compare the W-frame numerics with the closed-form potentials.

    Deviations are the largest pointwise difference within ``region``
    divided by the largest closed-form magnitude there.
    """
    region = np.ones(cfg.grid.shape, bool) if region is None else np.asarray(region, bool)
    full = gauge_numeric(cfg)
    closed = gauge_closed_form(cfg)
    Q = full.Q
    a_num = np.hypot(full.ax[Q - 1, Q - 1].real - closed.ax, full.ay[Q - 1, Q - 1].real - closed.ay)
    a_mag = np.hypot(closed.ax, closed.ay)
    scale = a_mag[region].max() if region.any() else 0.0
    a_dev = float(a_num[region].max() / scale) if scale > 0 else float(a_num[region].max(initial=0.0))
    phi_dev = _rel_dev(full.defining_phi(), closed.phi, region)
    return CrossValidationReport(a_dev, phi_dev, closed.identity_residual, full.hermiticity_residual(), tol)


# geometry helpers ------------------------------------------------------------


def curl(grid: TransverseGrid, ax: np.ndarray, ay: np.ndarray, spectral: bool = True) -> np.ndarray:
    if spectral:
        return (grid.d_dx(ay) - grid.d_dy(ax)).real
    return (finite_difference_gradient(grid, ay)[0] - finite_difference_gradient(grid, ax)[1]).real


def loop_integral(gauge: GaugeFields, ix0: int, ix1: int, iy0: int, iy1: int) -> float:
    """Counter-clockwise circulation of A around a grid-aligned rectangle.

    The rectangle's corners are the nodes ``(ix0, iy0)`` and ``(ix1, iy1)``;
    each segment between neighbouring nodes uses the midpoint value
    (average of its end nodes).
    """
    if not (ix0 < ix1 and iy0 < iy1):
        raise ValueError("need ix0 < ix1 and iy0 < iy1")
    g = gauge.grid
    ax, ay = gauge.ax, gauge.ay

    def seg(values, h):
        return float((0.5 * (values[:-1] + values[1:])).sum() * h)

    bottom = seg(ax[iy0, ix0 : ix1 + 1], g.dx)
    right = seg(ay[iy0 : iy1 + 1, ix1], g.dy)
    top = -seg(ax[iy1, ix0 : ix1 + 1], g.dx)
    left = -seg(ay[iy0 : iy1 + 1, ix0], g.dy)
    return bottom + right + top + left
