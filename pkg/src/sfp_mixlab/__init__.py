"""Scale-free percolation on the one-dimensional torus: simulation and
mixing-time analysis."""

from .graph import (SfpGraph, deserialize, generate, generate_long_range,
                    generate_simplified, link_probability, sample_weights,
                    serialize, simplified_from)
from .params import PhaseParams, Topology
from .rng import RngStream

__all__ = [
    "SfpGraph", "PhaseParams", "Topology", "RngStream", "generate",
    "generate_long_range", "generate_simplified", "simplified_from",
    "link_probability", "sample_weights", "serialize", "deserialize",
]

__version__ = "0.1.0"
