"""Orientation of signalling networks and simulation of oriented forms."""
from .netcore import (DEFAULT_STIMULUS_LEVEL, Diagnostic, EdgeClass, EdgeKind, EdgeSpec,
                      ModelConfig, Network, NetworkError, NodeSpec, PathwaySpec, StimulusSpec)

__version__ = "1.0.0"

__all__ = ["DEFAULT_STIMULUS_LEVEL", "Diagnostic", "EdgeClass", "EdgeKind", "EdgeSpec",
           "ModelConfig", "Network", "NetworkError", "NodeSpec", "PathwaySpec", "StimulusSpec"]
