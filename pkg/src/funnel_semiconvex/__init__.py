"""Partition-infimum moduli, concave envelopes, funnel counterexamples and polyhedral reduction."""

from .envelope import EnvelopeResult, upper_concave_envelope
from .errors import ConfigError, FunnelError, GeometryError
from .modulus import LinearOverLog, Power, PowerLog, Sampled, condition_star_estimate
from .omega_eta import (AffineWidth, ConstantWidth, PiecewiseWidth, PowerShiftWidth, build_grid,
                        compute_omega_eta)
from .counterexample import build_counterexample, divergence_witness, verify_semiconvexity
from .geometry import HPolyhedron, recession_cone, reduce

__all__ = [
    "EnvelopeResult", "upper_concave_envelope", "ConfigError", "FunnelError", "GeometryError",
    "LinearOverLog", "Power", "PowerLog", "Sampled", "condition_star_estimate",
    "AffineWidth", "ConstantWidth", "PiecewiseWidth", "PowerShiftWidth", "build_grid",
    "compute_omega_eta", "build_counterexample", "divergence_witness", "verify_semiconvexity",
    "HPolyhedron", "recession_cone", "reduce",
]
