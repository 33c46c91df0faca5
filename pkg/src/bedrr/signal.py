"""Framing, sigmoid normalization and context-window stacking.

The raw load-sensor waveform is cut into one-second frames of ``fs``
samples, squashed into (-0.5, 0.5) with a scaled sigmoid so that large
body-movement excursions saturate while weak breathing oscillations stay
near-linear, and stacked into windows of 2*radius+1 neighbouring frames
for the window-based classifiers.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSample, OutOfRange, TooShort

DEFAULT_FS = 10
DEFAULT_SIGMA = 10.0


@dataclass(frozen=True)
class WaveformRecord:
    """Raw sensor samples at a fixed rate."""

    samples: np.ndarray
    fs: int = DEFAULT_FS
    start_time: float = 0.0

    def __post_init__(self):
        if self.fs <= 0 or int(self.fs) != self.fs:
            raise InvalidSample(f"fs must be a positive integer, got {self.fs}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidSample("samples must be one-dimensional")
        if samples.size and not np.isfinite(samples).all():
            raise InvalidSample("samples contain non-finite values")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", int(self.fs))

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.fs


@dataclass(frozen=True)
class Frame:
    """One second of raw waveform; ``index`` is 1-based."""

    index: int
    values: np.ndarray


@dataclass(frozen=True)
class NormalizedFrame:
    """One second of sigmoid-normalized waveform, values in (-0.5, 0.5)."""

    index: int
    values: np.ndarray


@dataclass(frozen=True)
class ContextWindow:
    """Concatenation of 2*radius+1 normalized frames centred on ``center``."""

    center: int
    values: np.ndarray
    radius: int = field(default=0)


def normalize(sample, sigma: float = DEFAULT_SIGMA):
    """Squash a raw value (or array) into (-0.5, 0.5).

    Computes 1/(1 + exp(-sigma*x)) - 0.5: odd-symmetric, monotone, and
    saturating so high-energy movement amplitudes flatten out.
    """
    if sigma <= 0:
        raise InvalidSample(f"sigma must be positive, got {sigma}")
    x = np.asarray(sample, dtype=np.float64)
    if not np.isfinite(x).all():
        raise InvalidSample("cannot normalize non-finite sample")
    # clip keeps exp() in range; sigmoid is saturated flat out there anyway
    out = 1.0 / (1.0 + np.exp(-sigma * np.clip(x, -70.0, 70.0))) - 0.5
    if np.isscalar(sample) or np.ndim(sample) == 0:
        return float(out)
    return out


def frame_signal(record: WaveformRecord) -> list[Frame]:
    """Cut the waveform into complete frames of ``fs`` samples.

    Trailing samples that do not fill a frame are discarded.
    """
    mat = frame_matrix(record)
    return [Frame(index=i + 1, values=mat[i]) for i in range(mat.shape[0])]


def frame_matrix(record: WaveformRecord) -> np.ndarray:
    """Complete frames as a (n_frames, fs) array; remainder discarded."""
    fs = record.fs
    n = record.samples.size // fs
    if n == 0:
        raise TooShort(
            f"need at least fs={fs} samples, got {record.samples.size}"
        )
    return record.samples[: n * fs].reshape(n, fs)


def normalize_frames(frames, sigma: float = DEFAULT_SIGMA) -> list[NormalizedFrame]:
    """Apply sigmoid normalization to a sequence of frames."""
    return [NormalizedFrame(f.index, normalize(f.values, sigma)) for f in frames]


def stack_context(frames, n: int, radius: int) -> ContextWindow:
    """Concatenate frames n-radius .. n+radius (1-based) in frame order.

    Frames lacking the full neighbourhood are the caller's problem: no
    padding is ever fabricated, an OutOfRange is raised instead.
    """
    if radius < 0:
        raise OutOfRange(f"radius must be >= 0, got {radius}")
    count = len(frames)
    if n - radius < 1 or n + radius > count:
        raise OutOfRange(
            f"frame {n} with radius {radius} needs frames "
            f"{n - radius}..{n + radius}, have 1..{count}"
        )
    parts = [np.asarray(frames[k - 1].values) for k in range(n - radius, n + radius + 1)]
    return ContextWindow(center=n, values=np.concatenate(parts), radius=radius)


def normalized_matrix(record: WaveformRecord, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """(n_frames, fs) matrix of sigmoid-normalized frames."""
    return normalize(frame_matrix(record), sigma)


def context_matrix(norm: np.ndarray, radius: int) -> np.ndarray:
    """All full-context windows of a normalized frame matrix.

    Input (N, fs) yields (N - 2*radius, (2*radius+1)*fs); row k is the
    window centred on frame k+radius (0-based). Edge frames without a
    complete neighbourhood are skipped, never padded.
    """
    norm = np.asarray(norm)
    n, fs = norm.shape
    span = 2 * radius + 1
    if n < span:
        raise TooShort(f"need at least {span} frames for radius {radius}, got {n}")
    out = np.empty((n - 2 * radius, span * fs))
    for k in range(n - 2 * radius):
        out[k] = norm[k:k + span].reshape(-1)
    return out
