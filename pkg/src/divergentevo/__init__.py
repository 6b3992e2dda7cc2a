"""divergent-evo: deterministic neuroevolution on deceptive mazes and grid games."""

from .engine import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
