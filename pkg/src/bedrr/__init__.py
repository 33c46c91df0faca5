"""Streaming respiratory-rate estimation from under-bed load sensors."""

__version__ = "0.1.0"

from .signal import WaveformRecord, frame_signal, normalize, stack_context
from .features import PcaModel, fit_pca, project
from .rr import RrEstimate, minute_rr
from .pipeline import ReliabilityModel, classify_stream, estimate_rr, evaluate

__all__ = [
    "WaveformRecord",
    "frame_signal",
    "normalize",
    "stack_context",
    "PcaModel",
    "fit_pca",
    "project",
    "RrEstimate",
    "minute_rr",
    "ReliabilityModel",
    "classify_stream",
    "estimate_rr",
    "evaluate",
]
