"""File formats: waveform CSV/JSONL, label, ground-truth and estimate sidecars.

JSONL waveforms round-trip bit-exactly: floats are serialized with
``repr``-style shortest representation, which json decodes back to the
identical double.
"""

import csv
import json

import numpy as np

from .errors import ConfigError
from .signal import WaveformRecord


def write_waveform_jsonl(path, record: WaveformRecord, chunk_s: float | None = None):
    """Write a waveform as JSONL records ``{"fs":..,"samples":[..]}``.

    With chunk_s the samples are split across multiple lines (chunks of
    chunk_s seconds), which is also the shape a live sensor would send.
    """
    fs = record.fs
    samples = record.samples
    step = samples.size if chunk_s is None else max(1, int(round(chunk_s * fs)))
    with open(path, "w") as fh:
        for off in range(0, samples.size, step):
            chunk = samples[off:off + step]
            obj = {"fs": fs, "samples": [float(v) for v in chunk]}
            if off == 0 and record.start_time:
                obj["start_time"] = record.start_time
            fh.write(json.dumps(obj) + "\n")


class WaveformLineParser:
    """Accumulates waveform JSONL lines into one sample stream.

    Tracks malformed lines instead of failing: a live sensor feed should
    survive an occasional corrupt record.
    """

    def __init__(self):
        self.fs = None
        self.start_time = 0.0
        self.malformed = 0
        self._chunks = []

    def feed(self, line: str) -> np.ndarray | None:
        """Parse one line; returns the chunk samples or None if skipped."""
        line = line.strip()
        if not line:
            return None
        try:
            obj = json.loads(line)
            samples = np.asarray(obj["samples"], dtype=np.float64)
            fs = int(obj["fs"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError):
            self.malformed += 1
            return None
        if samples.ndim != 1 or not np.isfinite(samples).all() or fs <= 0:
            self.malformed += 1
            return None
        if self.fs is None:
            self.fs = fs
            self.start_time = float(obj.get("start_time", 0.0))
        elif fs != self.fs:
            self.malformed += 1
            return None
        self._chunks.append(samples)
        return samples

    def record(self) -> WaveformRecord:
        if self.fs is None:
            raise ConfigError("no valid waveform lines were received")
        samples = np.concatenate(self._chunks) if self._chunks else np.empty(0)
        return WaveformRecord(samples=samples, fs=self.fs, start_time=self.start_time)


def read_waveform_jsonl(path) -> WaveformRecord:
    parser = WaveformLineParser()
    with open(path) as fh:
        for line in fh:
            parser.feed(line)
    return parser.record()


def write_waveform_csv(path, record: WaveformRecord):
    """Write the ``t,value`` CSV form (one sample per row)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "value"])
        for i, v in enumerate(record.samples):
            writer.writerow([repr(record.start_time + i / record.fs), repr(float(v))])


def read_waveform_csv(path, fs: int | None = None) -> WaveformRecord:
    """Read a ``t,value`` CSV; fs is inferred from the t column if omitted."""
    times = []
    values = []
    with open(path) as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["t", "value"]:
            raise ConfigError(f"{path}: expected header 't,value'")
        for row in reader:
            if not row:
                continue
            times.append(float(row[0]))
            values.append(float(row[1]))
    if len(values) < 2 and fs is None:
        raise ConfigError(f"{path}: cannot infer fs from fewer than 2 rows")
    if fs is None:
        dt = times[1] - times[0]
        if dt <= 0:
            raise ConfigError(f"{path}: non-increasing time column")
        fs = int(round(1.0 / dt))
    start = times[0] if times else 0.0
    return WaveformRecord(samples=np.asarray(values), fs=fs, start_time=start)


def write_labels(path, labels: np.ndarray):
    """Write per-frame labels as ``{"frame":n,"y":0|1}`` (1-based frames).

    Frames with no label (value < 0, e.g. edge frames a classifier cannot
    cover) are omitted.
    """
    with open(path, "w") as fh:
        for i, y in enumerate(labels):
            if y < 0:
                continue
            fh.write(json.dumps({"frame": i + 1, "y": int(y)}) + "\n")


def read_labels(path, n_frames: int | None = None) -> np.ndarray:
    """Read a labels file into an int8 array; missing frames become -1."""
    pairs = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pairs.append((int(obj["frame"]), int(obj["y"])))
    size = n_frames if n_frames is not None else (max(f for f, _ in pairs) if pairs else 0)
    labels = np.full(size, -1, dtype=np.int8)
    for frame, y in pairs:
        if 1 <= frame <= size:
            labels[frame - 1] = y
    return labels


def write_truth(path, truth: dict[int, float]):
    """Ground-truth rates per observation window: ``{"window":k,"rr":v}``."""
    with open(path, "w") as fh:
        for k in sorted(truth):
            fh.write(json.dumps({"window": int(k), "rr": float(truth[k])}) + "\n")


def read_truth(path) -> dict[int, float]:
    truth = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            truth[int(obj["window"])] = float(obj["rr"])
    return truth


def estimate_to_json(est) -> str:
    """Serialize one per-minute estimate record."""
    return json.dumps({
        "minute": est.minute,
        "rr_peaks": est.rr_peaks,
        "rr_ht": est.rr_ht,
        "reliable_s": est.reliable_seconds,
        "segments": est.segment_count,
    })


def write_estimates(path, estimates):
    with open(path, "w") as fh:
        for est in estimates:
            fh.write(estimate_to_json(est) + "\n")


def read_estimates(path):
    """Read estimates back as a list of dicts (null rates become None)."""
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
