"""Uncoded versus random-linear-coded caching over caches placed in the plane."""

from .analytic import ModelParams
from .cost import CostSpec, MissSpec
from .finite_field import FieldSpec
from .montecarlo import Estimate, SimPlan, run_estimate, run_sweep

__all__ = [
    "CostSpec",
    "Estimate",
    "FieldSpec",
    "MissSpec",
    "ModelParams",
    "SimPlan",
    "run_estimate",
    "run_sweep",
]
