import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quasicharge.gauge import FullGauge, GaugeFields
from quasicharge.grid import TransverseGrid, gaussian_beam
from quasicharge.multimode import (AbsorptionModel, MultimodePropagator, adiabaticity_check,
                                   apply_multimode_hamiltonian, gauge_coupling_scale, launch, multimode_step_bound,
                                   propagate_multimode, rank_correlation, susceptibility_gap, zero_off_diagonal)
from quasicharge.propagator import InstabilityError, Propagator
from quasicharge.verification import multimode_setup


@pytest.fixture(scope="module")
def bench():
    return multimode_setup(1.0)


def test_full_gauge_is_consistent(bench):
    grid, closed, _ = bench
    full = closed.full
    assert full.Q == 2
    assert np.abs(full.ax[1, 1].real - closed.ax).max() < 1e-10
    assert gauge_coupling_scale(full) == pytest.approx(closed.phi.max() / 2, rel=1e-7)


def test_decoupled_limit_matches_single_mode(bench):
    grid, closed, psi0 = bench
    dec = zero_off_diagonal(closed.full)
    single_gauge = GaugeFields(grid, dec.ax[1, 1].real, dec.ay[1, 1].real, np.zeros(grid.shape))
    mm = MultimodePropagator(dec, AbsorptionModel.uniform(2, 50.0))
    ref = Propagator(grid, single_gauge, kind="rk4_spectral", dzeta=mm.dzeta)
    trace = mm.run(launch(psi0, 2), 0.5, samples=5, reference=ref)
    assert np.abs(trace.final[0]).max() == 0.0
    assert np.abs(trace.final[1] - trace.single_final).max() < 1e-8
    assert min(trace.overlap) > 1 - 1e-8


def test_constant_controls_give_free_evolution():
    grid = TransverseGrid(32, 32, 10.0, 10.0)
    z = np.zeros((2, 2) + grid.shape, complex)
    full = FullGauge(grid, z, z)
    psi0 = gaussian_beam(grid, 1.0, kx0=0.5)
    mm = MultimodePropagator(full, AbsorptionModel.uniform(2, 10.0))
    trace = mm.run(launch(psi0, 2), 0.3, samples=3)
    free = Propagator(grid, GaugeFields.zero(grid), dzeta=0.01).run(psi0, 0.3).final.psi
    # RK4 against the exact free split: cross-integrator tolerance
    assert np.abs(trace.final[1] - free).max() < 1e-6
    assert all(math.isnan(o) for o in trace.overlap)


def test_lossless_bench_conserves_norm(bench):
    grid, closed, psi0 = bench
    trace = propagate_multimode(closed.full, closed, 0.0, psi0, 1.0, samples=10)
    n = np.array(trace.total_norm)
    assert np.abs(n / n[0] - 1).max() < 1e-6
    assert max(trace.leakage) > 1e-6  # coupling does populate the other mode


def test_stiff_decay_keeps_other_modes_small(bench):
    grid, closed, psi0 = bench
    trace = propagate_multimode(closed.full, closed, 1e3, psi0, 1.0, samples=10)
    eit = np.array(trace.total_norm) - np.array(trace.leakage)
    ratio = np.sqrt(np.array(trace.leakage[2:]) / eit[2:])
    assert ratio.max() < 1e-3
    assert np.all(np.diff(trace.total_norm) <= 1e-15)


def test_leakage_and_loss_grow_as_absorption_weakens(bench):
    grid, closed, psi0 = bench
    leaks, losses = [], []
    for gamma in (1e3, 1e2, 1e1):
        tr = propagate_multimode(closed.full, closed, gamma, psi0, 0.5, samples=5)
        leaks.append(max(tr.leakage))
        losses.append(1 - tr.total_norm[-1] / tr.total_norm[0])
    assert leaks[0] < leaks[1] < leaks[2]
    assert rank_correlation([1e3, 1e2, 1e1], leaks) == pytest.approx(-1.0)


def test_one_step_absorption_sign(bench):
    grid, closed, psi0 = bench
    mm = MultimodePropagator(zero_off_diagonal(closed.full), AbsorptionModel.uniform(2, 5.0))
    b = np.stack([psi0, np.zeros_like(psi0)])
    after = mm.step(b)
    assert np.vdot(after[0], after[0]).real < np.vdot(b[0], b[0]).real


@pytest.mark.property
@given(seed=st.integers(0, 1000))
def test_lossless_multimode_hamiltonian_is_hermitian(bench, seed):
    grid, closed, _ = bench
    rng = np.random.default_rng(seed)
    b = rng.normal(size=(2,) + grid.shape) + 1j * rng.normal(size=(2,) + grid.shape)
    full = closed.full.hermitian()
    e = np.vdot(b, apply_multimode_hamiltonian(b, full))
    assert abs(e.imag) <= 1e-10 * abs(e)


def test_absorption_model_helpers():
    m = AbsorptionModel.uniform(3, 7.0, U=0.5)
    grid = TransverseGrid(16, 16, 4.0, 4.0)
    d = m.diagonal(grid, 3)
    assert np.all(d[0] == -7j) and np.all(d[2] == -0.5)
    assert susceptibility_gap(m) == pytest.approx(abs(-7j + 0.5))
    two = AbsorptionModel.from_two_level(2, density=1.0, g=1.0, decay=2.0, delta=0.0, c=1.0, k=1.0, waist=1.0)
    assert two.gamma[0] == pytest.approx(4 * 1.0 / (1.0 * 4.0) * 1.0) and two.gamma[0] > 0
    assert two.dispersion[0] == 0.0
    with pytest.raises(ValueError):
        AbsorptionModel((-1.0,))
    with pytest.raises(ValueError):
        AbsorptionModel((1.0, 2.0), (0.0,))
    with pytest.raises(ValueError):
        m.diagonal(grid, 2)


def test_bench_errors(bench):
    grid, closed, psi0 = bench
    full = closed.full
    with pytest.raises(ValueError, match="shape"):
        apply_multimode_hamiltonian(np.zeros((3,) + grid.shape), full)
    with pytest.raises(InstabilityError):
        MultimodePropagator(full, AbsorptionModel.uniform(2, 1.0), dzeta=2 * multimode_step_bound(full.hermitian()))


def test_adiabaticity_examples():
    rep = adiabaticity_check(coupling=1.0, gap=1000.0, kw=100.0, n=0.01, eta=0.5)
    assert rep.eta_bound == pytest.approx(471.24, rel=1e-4)
    assert rep.eta_ratio == pytest.approx(1.061e-3, rel=1e-3)
    assert rep.passed and rep.ratio == pytest.approx(1e-3)
    assert not adiabaticity_check(2.0, 2.0, 100.0, 0.01, 0.5).passed
    assert any("eta" in line for line in rep.lines())
    with pytest.raises(ValueError):
        adiabaticity_check(1.0, 0.0, 100.0, 0.01, 0.5)


def test_trace_csv(bench, tmp_path):
    grid, closed, psi0 = bench
    trace = propagate_multimode(closed.full, closed, 100.0, psi0, 0.2, samples=4)
    path = tmp_path / "mm.csv"
    trace.write_csv(path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["zeta", "overlap", "leakage", "total_norm"]
    assert len(rows) == 6
    assert float(rows[-1][0]) == pytest.approx(0.2)
