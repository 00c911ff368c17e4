"""Paraxial beam propagation under control-field induced vector and scalar potentials."""

__version__ = "0.1.0"

from .grid import TransverseGrid, gaussian_beam
from .gauge import GaugeFields, ParametricControl, SampledControl, cross_validate, gauge_closed_form, gauge_numeric
from .propagator import Propagator
from .scenarios import ScenarioSpec, BeamSpec, prepare

__all__ = [
    "TransverseGrid", "gaussian_beam", "GaugeFields", "ParametricControl", "SampledControl", "cross_validate",
    "gauge_closed_form", "gauge_numeric", "Propagator", "ScenarioSpec", "BeamSpec", "prepare", "__version__",
]
