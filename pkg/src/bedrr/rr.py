"""Respiratory-rate estimation from reliable waveform segments.

Two estimators run over the reliable parts of each minute: counting
breathing peaks that clear a standard-deviation prominence rule, and
fitting a single shared slope to the unwrapped analytic-signal phase of
all segments (per-segment intercepts absorb phase offsets). A per-minute
policy decides when enough reliable data exists to report anything.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NoEstimate, TooShort

FRAMES_PER_MINUTE = 60
MIN_RUN_SECONDS = 3          # reliable runs of <= 2 s are discarded
MIN_TOTAL_SECONDS = 9        # policy: total refined length must exceed this...
MIN_LONGEST_SECONDS = 6      # ...or the longest run must exceed this
MAGNITUDE_CLAMP = 1e-9


@dataclass(frozen=True)
class ReliableSegment:
    """Raw samples judged breathing-only; indices inclusive, in samples."""

    t1: int
    t2: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if self.t2 < self.t1:
            raise TooShort(f"segment end {self.t2} before start {self.t1}")
        if values.size != self.t2 - self.t1 + 1:
            raise TooShort(
                f"segment [{self.t1},{self.t2}] needs {self.t2 - self.t1 + 1} "
                f"values, got {values.size}")
        object.__setattr__(self, "values", values)

    @property
    def n_samples(self) -> int:
        return self.t2 - self.t1 + 1


@dataclass(frozen=True)
class PeakSet:
    """Strictly increasing peak sample indices for one segment."""

    segment: int
    peaks: np.ndarray

    @property
    def count(self) -> int:
        return len(self.peaks)


@dataclass(frozen=True)
class PhaseTrack:
    """Unwrapped analytic phase over one segment."""

    segment: int
    phase: np.ndarray


@dataclass(frozen=True)
class SlopeFit:
    """Shared phase slope (radians/sample) with per-segment intercepts."""

    slope: float
    intercepts: np.ndarray
    residual_rms: float


@dataclass(frozen=True)
class RrEstimate:
    """Estimates for one minute; rates are None when the policy failed."""

    minute: int
    rr_peaks: float | None
    rr_ht: float | None
    reliable_seconds: int
    segment_count: int

    @property
    def has_estimate(self) -> bool:
        return self.rr_ht is not None or self.rr_peaks is not None


def detect_peaks(segment: ReliableSegment, minute_std: float | None = None) -> PeakSet:
    """Peaks that drop by at least one standard deviation on both sides.

    The threshold is the standard deviation of the enclosing one-minute
    stretch of raw waveform; pass it via minute_std. When omitted, the
    segment's own deviation is used (standalone analysis).
    """
    v = segment.values
    if v.size < 3:
        raise TooShort(f"need at least 3 samples, got {v.size}")
    drop = float(minute_std) if minute_std is not None else float(np.std(v))
    if drop <= 0:
        return PeakSet(segment=segment.t1, peaks=np.empty(0, dtype=np.int64))
    idx = _kernels.peak_scan(v, drop)
    # the scan can hand back a plateau edge; peaks must be strict maxima
    strict = [p for p in idx
              if 0 < p < v.size - 1 and v[p] > v[p - 1] and v[p] > v[p + 1]]
    return PeakSet(segment=segment.t1,
                   peaks=np.asarray(strict, dtype=np.int64) + segment.t1)


def rr_peak_counting(segments_with_peaks, fs: int) -> float:
    """Breaths per minute from peak counts across all segments.

    Segments with more than one peak contribute peak-to-peak intervals;
    segments with zero or one peak contribute their whole time span with
    their raw count. All indices are in samples.
    """
    breaths = 0.0
    span = 0.0
    for segment, peakset in segments_with_peaks:
        j = peakset.count
        if j > 1:
            breaths += j - 1
            span += float(peakset.peaks[-1] - peakset.peaks[0])
        else:
            breaths += j
            span += float(segment.t2 - segment.t1)
    if span <= 0:
        raise NoEstimate("no time span covered by any segment")
    return 60.0 * fs * breaths / span


def analytic_signal(values: np.ndarray) -> np.ndarray:
    """Complex signal whose angle is the instantaneous breathing phase.

    The mean is removed first (low-energy zero-crossing noise otherwise
    pollutes the phase), then the one-sided spectrum is doubled with the
    usual DC/Nyquist handling.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 4:
        raise TooShort(f"need at least 4 samples, got {v.size}")
    v = v - v.mean()
    n = v.size
    spectrum = np.fft.fft(v)
    gain = np.zeros(n)
    if n % 2 == 0:
        gain[0] = 1.0
        gain[n // 2] = 1.0
        gain[1:n // 2] = 2.0
    else:
        gain[0] = 1.0
        gain[1:(n + 1) // 2] = 2.0
    return np.fft.ifft(spectrum * gain)


def unwrap_and_if(analytic: np.ndarray, fs: int):
    """Unwrapped phase plus instantaneous frequency in rad/s.

    Tiny magnitudes are clamped before the angle so the phase stays
    defined. The gradient uses central differences in the interior and
    one-sided differences at the ends.
    """
    z = np.asarray(analytic, dtype=np.complex128)
    z = np.where(np.abs(z) < MAGNITUDE_CLAMP, MAGNITUDE_CLAMP + 0.0j, z)
    phase = np.unwrap(np.angle(z))
    inst_freq = np.gradient(phase) * fs
    return PhaseTrack(segment=0, phase=phase), inst_freq


def instantaneous_rr(inst_freq_rad_s: np.ndarray) -> np.ndarray:
    """Map instantaneous frequency (rad/s) to breaths per minute."""
    return 60.0 * np.asarray(inst_freq_rad_s) / (2.0 * np.pi)


def rr_slope_fit(phase_tracks, fs: int) -> tuple[SlopeFit, float]:
    """Fit one shared slope across the unwrapped phases of all segments.

    Builds the design with a ramp column (1..len per segment) and one
    intercept column per segment, solves least squares (minimum-norm when
    rank-deficient), and maps the slope to breaths per minute.
    """
    tracks = [np.asarray(getattr(t, "phase", t), dtype=np.float64)
              for t in phase_tracks]
    tracks = [t for t in tracks if t.size >= 2]
    if not tracks:
        raise NoEstimate("no phase track long enough to fit")
    total = sum(t.size for t in tracks)
    n_seg = len(tracks)
    design = np.zeros((total, 1 + n_seg))
    target = np.concatenate(tracks)
    row = 0
    for i, t in enumerate(tracks):
        design[row:row + t.size, 0] = np.arange(1, t.size + 1)
        design[row:row + t.size, 1 + i] = 1.0
        row += t.size
    coef, _, _, _ = np.linalg.lstsq(design, target, rcond=None)
    residual = target - design @ coef
    fit = SlopeFit(slope=float(coef[0]), intercepts=coef[1:].copy(),
                   residual_rms=float(np.sqrt(np.mean(residual ** 2))))
    rr = 60.0 * fs * fit.slope / (2.0 * np.pi)
    return fit, rr


def reliable_runs(labels: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of consecutive reliable (1) frames as (start, end) incl."""
    runs = []
    start = None
    for i, y in enumerate(labels):
        if y == 1 and start is None:
            start = i
        elif y != 1 and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(labels) - 1))
    return runs


def minute_rr(labels: np.ndarray, samples: np.ndarray, fs: int,
              minute: int = 0) -> RrEstimate:
    """Both estimators applied to one minute of labelled waveform.

    labels: 60 per-frame reliability values (anything but 1 counts as
    unreliable). samples: the minute's 60*fs raw samples. Runs of at most
    2 s are discarded; estimation happens only if the refined runs cover
    more than 9 s in total or the longest exceeds 6 s.
    """
    labels = np.asarray(labels).ravel()
    samples = np.asarray(samples, dtype=np.float64)
    runs = [r for r in reliable_runs(labels)
            if r[1] - r[0] + 1 >= MIN_RUN_SECONDS]
    reliable_s = sum(r[1] - r[0] + 1 for r in runs)
    longest = max((r[1] - r[0] + 1 for r in runs), default=0)
    if not (reliable_s > MIN_TOTAL_SECONDS or longest > MIN_LONGEST_SECONDS):
        return RrEstimate(minute=minute, rr_peaks=None, rr_ht=None,
                          reliable_seconds=reliable_s, segment_count=len(runs))

    segments = []
    for a, b in runs:
        t1, t2 = a * fs, (b + 1) * fs - 1
        segments.append(ReliableSegment(t1=t1, t2=t2, values=samples[t1:t2 + 1]))

    minute_std = float(np.std(samples))
    with_peaks = [(seg, detect_peaks(seg, minute_std=minute_std))
                  for seg in segments]
    try:
        rr_peaks = rr_peak_counting(with_peaks, fs)
    except NoEstimate:
        rr_peaks = None

    tracks = []
    for seg in segments:
        if seg.n_samples >= 4:
            track, _ = unwrap_and_if(analytic_signal(seg.values), fs)
            tracks.append(track.phase)
    try:
        _, rr_ht = rr_slope_fit(tracks, fs)
    except NoEstimate:
        rr_ht = None

    return RrEstimate(minute=minute, rr_peaks=rr_peaks, rr_ht=rr_ht,
                      reliable_seconds=reliable_s, segment_count=len(segments))


def minutes_rr(labels: np.ndarray, samples: np.ndarray, fs: int) -> list[RrEstimate]:
    """Split a labelled recording into aligned minutes and estimate each."""
    labels = np.asarray(labels).ravel()
    samples = np.asarray(samples, dtype=np.float64)
    n_minutes = min(labels.size // FRAMES_PER_MINUTE,
                    samples.size // (FRAMES_PER_MINUTE * fs))
    out = []
    for m in range(n_minutes):
        f0 = m * FRAMES_PER_MINUTE
        s0 = f0 * fs
        out.append(minute_rr(labels[f0:f0 + FRAMES_PER_MINUTE],
                             samples[s0:s0 + FRAMES_PER_MINUTE * fs],
                             fs, minute=m))
    return out
