"""Weighted curvature integrals, locally constrained curvature flows and their inequalities in space forms."""

from .spaceform import EUCLIDEAN, HYPERBOLIC, SPHERICAL, BallFunctions, SpaceForm
from .hypersurface import ProfileGraph, SphereGraph, convexity_classify, quermassintegrals
from .flow import FlowConfig, FlowRun, run
from .weights import WeightFunction, from_spec, power

__version__ = "0.1.0"

__all__ = [
    "SpaceForm", "BallFunctions", "HYPERBOLIC", "EUCLIDEAN", "SPHERICAL",
    "ProfileGraph", "SphereGraph", "convexity_classify", "quermassintegrals",
    "FlowConfig", "FlowRun", "run", "WeightFunction", "from_spec", "power",
]
