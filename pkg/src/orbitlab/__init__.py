"""Pulse-level transmon simulator with randomized benchmarking and closed-loop gate calibration."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
