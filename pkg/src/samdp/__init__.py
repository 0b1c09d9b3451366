"""Toolkit for building Semi-Aggregated MDP (SAMDP) models from trajectories.

The pipeline stages: feature embedding, spatio-temporal clustering, skill
identification and transition inference, multi-criteria model selection,
policy evaluation, and an eject-button robustification monitor. A gridworld
domain is bundled as the reference experiment.
"""

from .errors import ParseError, SamdpError, ValidationError

__all__ = ["SamdpError", "ParseError", "ValidationError"]
__version__ = "0.1.0"
