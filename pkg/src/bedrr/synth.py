"""Synthetic waveform and label generation.

Stands in for bed-sensor recordings: quasi-sinusoidal breathing with
per-cycle period jitter, plus injected disturbances whose gains follow
the qualitative magnitude ordering of real body movements (speech ~5x,
tremor ~20x, random movement and coughs ~100x the breathing amplitude).
Every generator is seed-deterministic and emits per-frame reliability
labels plus per-observation-window ground-truth rates.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .signal import WaveformRecord

BASE_AMPLITUDE = 0.05      # breathing amplitude in raw load units
NOISE_FRACTION = 0.02      # additive noise sigma as a fraction of amplitude
SPEAK_GAIN = 5.0
TREMOR_GAIN = 20.0
MOVE_GAIN = 100.0
TRUTH_WINDOW_MINUTES = 2   # ground truth is recorded per 2-minute window

BREATHING_KINDS = ("still", "deep_breath", "shallow_fast")
MOVEMENT_KINDS = ("speak", "random_move", "cough_burst", "tremor")


@dataclass(frozen=True)
class Action:
    """One scripted behaviour block."""

    kind: str
    duration_s: float
    rr_bpm: float | None = None
    amplitude: float | None = None
    bursts: tuple = ()          # movement bursts injected into a breathing block

    def __post_init__(self):
        if self.kind not in BREATHING_KINDS + MOVEMENT_KINDS:
            raise ConfigError(f"unknown action kind {self.kind!r}")
        if self.duration_s <= 0:
            raise ConfigError("action duration must be positive")
        if self.rr_bpm is not None and not 4.0 <= self.rr_bpm <= 60.0:
            raise ConfigError(f"rr_bpm {self.rr_bpm} outside [4, 60]")


@dataclass(frozen=True)
class ScenarioScript:
    actions: tuple
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))


@dataclass(frozen=True)
class LabeledWaveform:
    """Generated waveform with frame labels and window ground truth."""

    record: WaveformRecord
    labels: np.ndarray                 # one {0,1} label per frame
    truth: dict = field(default_factory=dict)   # 2-min window -> breaths/min

    def minute_truth(self, minute: int) -> float | None:
        return self.truth.get(minute // TRUTH_WINDOW_MINUTES)


def gen_breathing(rr_bpm: float, duration_s: float, amplitude: float = 1.0,
                  jitter_pct: float = 0.0, fs: int = 10, seed: int = 0,
                  cycle_amp_range: tuple[float, float] | None = None) -> np.ndarray:
    """Quasi-sinusoidal breathing at a mean rate of rr_bpm.

    Each cycle's period is perturbed uniformly within +-jitter_pct and
    white noise of sigma = 2% amplitude is added. jitter_pct=0 yields the
    exact noise-free tone (the reference signal oracles are built on).
    cycle_amp_range scales individual cycle amplitudes uniformly within
    the given range, producing shallow-breath dropouts.
    """
    if rr_bpm <= 0 or duration_s <= 0 or fs <= 0:
        raise ConfigError("rr_bpm, duration_s and fs must be positive")
    if not 0.0 <= jitter_pct < 1.0:
        raise ConfigError(f"jitter_pct must be in [0, 1), got {jitter_pct}")
    n = int(round(duration_s * fs))
    freq = rr_bpm / 60.0
    if jitter_pct == 0.0 and cycle_amp_range is None:
        t = np.arange(n) / fs
        return amplitude * np.sin(2.0 * np.pi * freq * t)

    rng = np.random.default_rng(seed)
    out = np.empty(n)
    phase = 0.0
    period = (1.0 + rng.uniform(-jitter_pct, jitter_pct)) / freq
    amp = amplitude if cycle_amp_range is None else amplitude * rng.uniform(*cycle_amp_range)
    for i in range(n):
        out[i] = amp * np.sin(phase)
        phase += 2.0 * np.pi / (period * fs)
        if phase >= 2.0 * np.pi:
            phase -= 2.0 * np.pi
            period = (1.0 + rng.uniform(-jitter_pct, jitter_pct)) / freq
            if cycle_amp_range is not None:
                amp = amplitude * rng.uniform(*cycle_amp_range)
    out += rng.normal(0.0, NOISE_FRACTION * amplitude, size=n)
    return out


def _movement_noise(n: int, rms: float, rng: np.random.Generator) -> np.ndarray:
    """Band-limited random walk scaled to a target RMS."""
    if n < 1:
        return np.empty(0)
    walk = np.cumsum(rng.standard_normal(n))
    t = np.arange(n, dtype=np.float64)
    # remove the linear drift so the burst stays centred
    a, b = np.polyfit(t, walk, 1) if n > 1 else (0.0, walk[0])
    walk = walk - (a * t + b)
    walk += 0.25 * rng.standard_normal(n)
    current = np.sqrt(np.mean(walk ** 2))
    if current <= 0:
        walk = rng.standard_normal(n)
        current = np.sqrt(np.mean(walk ** 2))
    return walk * (rms / current)


def inject_movement(samples: np.ndarray, bursts, fs: int = 10, seed: int = 0,
                    base_rms: float | None = None):
    """Overwrite burst windows with high-energy noise and label frames.

    bursts: iterables/dicts with start_s, duration_s and gain (movement
    RMS as a multiple of the breathing RMS). Overlapping bursts merge.
    Returns (samples, labels) where frames overlapping any burst are 0.
    """
    samples = np.asarray(samples, dtype=np.float64).copy()
    n = samples.size
    rng = np.random.default_rng(seed)

    intervals = []
    for b in bursts:
        start = int(round(b["start_s"] * fs))
        length = int(round(b["duration_s"] * fs))
        if start < 0 or start + length > n:
            raise ConfigError(
                f"burst at {b['start_s']}s (+{b['duration_s']}s) outside signal")
        intervals.append((start, start + length, float(b["gain"])))
    intervals.sort()
    merged = []
    for start, end, gain in intervals:
        if merged and start <= merged[-1][1]:
            last = merged[-1]
            merged[-1] = (last[0], max(last[1], end), max(last[2], gain))
        else:
            merged.append((start, end, gain))

    if base_rms is None:
        outside = np.ones(n, dtype=bool)
        for start, end, _ in merged:
            outside[start:end] = False
        clean = samples[outside]
        base_rms = float(np.sqrt(np.mean(clean ** 2))) if clean.size else 1.0

    for start, end, gain in merged:
        samples[start:end] = _movement_noise(end - start, gain * base_rms, rng)

    n_frames = n // fs
    labels = np.ones(n_frames, dtype=np.int8)
    for start, end, _ in merged:
        first = start // fs
        last = min((end - 1) // fs, n_frames - 1)
        labels[first:last + 1] = 0
    return samples, labels


def _action_samples(action: Action, fs: int, rng: np.random.Generator):
    """Generate (samples, labels) for one scripted action."""
    n = int(round(action.duration_s * fs))
    n_frames = n // fs
    seed = int(rng.integers(2 ** 31))
    amp = BASE_AMPLITUDE * (action.amplitude if action.amplitude is not None else 1.0)

    if action.kind in BREATHING_KINDS:
        if action.kind == "still":
            rr = action.rr_bpm if action.rr_bpm is not None else 16.0
            samples = gen_breathing(rr, action.duration_s, amp, 0.03, fs, seed)
        elif action.kind == "deep_breath":
            rr = action.rr_bpm if action.rr_bpm is not None else 8.0
            samples = gen_breathing(rr, action.duration_s, 2.5 * amp, 0.03, fs, seed)
        else:  # shallow_fast: weak cycles with strong amplitude variation
            rr = action.rr_bpm if action.rr_bpm is not None else 41.0
            samples = gen_breathing(rr, action.duration_s, 0.5 * amp, 0.04, fs,
                                    seed, cycle_amp_range=(0.15, 1.0))
        labels = np.ones(n_frames, dtype=np.int8)
        if action.bursts:
            samples, labels = inject_movement(samples, action.bursts, fs,
                                              seed=int(rng.integers(2 ** 31)),
                                              base_rms=amp / np.sqrt(2.0))
        return samples[:n_frames * fs] if n_frames else samples, labels

    if action.kind == "speak":
        # irregular breathing-like modulation at conversational energy
        base = gen_breathing(14.0, action.duration_s, SPEAK_GAIN * amp, 0.4, fs,
                             seed, cycle_amp_range=(0.3, 1.0))
        wobble = _movement_noise(n, 0.3 * SPEAK_GAIN * amp, rng)
        samples = base + wobble
        labels = np.zeros(n_frames, dtype=np.int8)
    elif action.kind == "tremor":
        freq = rng.uniform(4.0, 8.0)
        t = np.arange(n) / fs
        envelope = 1.0 + 0.3 * np.sin(2.0 * np.pi * rng.uniform(0.1, 0.3) * t)
        samples = TREMOR_GAIN * amp * envelope * np.sin(2.0 * np.pi * freq * t)
        samples += _movement_noise(n, 0.1 * TREMOR_GAIN * amp, rng)
        labels = np.zeros(n_frames, dtype=np.int8)
    elif action.kind == "random_move":
        samples = _movement_noise(n, MOVE_GAIN * amp / np.sqrt(2.0), rng)
        labels = np.zeros(n_frames, dtype=np.int8)
    else:  # cough_burst: breathing with repeated violent spikes
        samples = gen_breathing(16.0, action.duration_s, amp, 0.03, fs, seed)
        bursts = []
        t = rng.uniform(0.5, 3.0)
        while t < action.duration_s - 2.0:
            dur = rng.uniform(0.6, 1.8)
            bursts.append({"start_s": t, "duration_s": dur, "gain": MOVE_GAIN})
            t += dur + rng.uniform(1.0, 4.0)
        samples, labels = inject_movement(samples, bursts, fs,
                                          seed=int(rng.integers(2 ** 31)),
                                          base_rms=amp / np.sqrt(2.0))
    return samples[:n_frames * fs] if n_frames else samples, labels


def gen_scenario(script: ScenarioScript, fs: int = 10) -> LabeledWaveform:
    """Render a script into a waveform, frame labels and ground truth.

    Ground-truth rates are recorded per 2-minute window, and only for
    windows that lie entirely inside breathing actions with one rate;
    injected bursts do not void a window (the underlying rate holds).
    """
    rng = np.random.default_rng(script.seed)
    chunks = []
    label_chunks = []
    frame_rates = []       # scripted rate per frame, nan where not breathing
    for action in script.actions:
        samples, labels = _action_samples(action, fs, rng)
        n_frames = labels.size
        chunks.append(samples[:n_frames * fs])
        label_chunks.append(labels)
        if action.kind in BREATHING_KINDS:
            rr = action.rr_bpm if action.rr_bpm is not None else {
                "still": 16.0, "deep_breath": 8.0, "shallow_fast": 41.0,
            }[action.kind]
            frame_rates.extend([rr] * n_frames)
        else:
            frame_rates.extend([np.nan] * n_frames)

    samples = np.concatenate(chunks)
    labels = np.concatenate(label_chunks)
    rates = np.asarray(frame_rates)

    truth = {}
    frames_per_window = 60 * TRUTH_WINDOW_MINUTES
    for k in range(labels.size // frames_per_window):
        window = rates[k * frames_per_window:(k + 1) * frames_per_window]
        if np.isfinite(window).all() and np.unique(window).size == 1:
            truth[k] = float(window[0])

    record = WaveformRecord(samples=samples, fs=fs)
    return LabeledWaveform(record=record, labels=labels, truth=truth)


def _rest_bursts(rng: np.random.Generator, duration_s: float,
                 expected_per_min: float = 0.4) -> tuple:
    """Occasional disturbance bursts inside a breathing block.

    Gains skew toward the hard low-energy (conversation-like) end so the
    window classifiers have genuinely ambiguous frames to chew on.
    """
    bursts = []
    t = rng.uniform(5.0, 30.0)
    mean_gap = 60.0 / max(expected_per_min, 1e-6)
    gains = np.array([3.0, 5.0, 8.0, 20.0, 100.0])
    weights = np.array([0.3, 0.3, 0.2, 0.1, 0.1])
    while t < duration_s - 10.0:
        dur = rng.uniform(3.0, 8.0)
        gain = float(rng.choice(gains, p=weights))
        bursts.append({"start_s": round(t, 1), "duration_s": round(dur, 1),
                       "gain": gain})
        t += dur + rng.uniform(0.5 * mean_gap, 1.5 * mean_gap)
    return tuple(bursts)


def rest_script(minutes: float = 4.0, rr_bpm: float = 16.0, seed: int = 0,
                with_bursts: bool = False) -> ScenarioScript:
    """Quiet breathing, optionally with occasional movement bursts."""
    rng = np.random.default_rng(seed)
    duration = minutes * 60.0
    bursts = _rest_bursts(rng, duration) if with_bursts else ()
    return ScenarioScript(
        actions=(Action("still", duration, rr_bpm=rr_bpm, bursts=bursts),),
        seed=seed)


def training_script(seed: int = 0, repeats: int = 5) -> ScenarioScript:
    """Action-rich script for building labelled classifier training data.

    Cycles through every behaviour so the classifiers see all energy
    levels, breathing styles and burst gains they will meet at inference.
    """
    rng = np.random.default_rng(seed)
    actions = []
    for repeat in range(repeats):
        actions.extend([
            Action("still", 120.0, rr_bpm=rng.uniform(12.0, 20.0),
                   bursts=_rest_bursts(rng, 120.0, expected_per_min=0.6)),
            Action("speak", 90.0),
            Action("still", 60.0, rr_bpm=rng.uniform(14.0, 18.0)),
            Action("random_move", 60.0),
            Action("deep_breath", 90.0, rr_bpm=rng.uniform(6.0, 10.0)),
            Action("cough_burst", 90.0),
            Action("shallow_fast", 90.0, rr_bpm=rng.uniform(35.0, 45.0)),
            Action("tremor", 60.0),
            Action("still", 90.0, rr_bpm=rng.uniform(12.0, 20.0),
                   bursts=_rest_bursts(rng, 90.0, expected_per_min=0.8)),
        ])
    return ScenarioScript(actions=tuple(actions), seed=seed)


def eval_script(seed: int = 1) -> ScenarioScript:
    """Hour-long mixed scenario for end-to-end evaluation.

    Twenty minutes of rest with occasional disturbances, a movement-rich
    middle stretch, two minutes of deep slow breaths, more movement, two
    minutes of rapid shallow breaths, then a quiet tail.
    """
    rng = np.random.default_rng(seed)
    actions = [
        Action("still", 20 * 60.0, rr_bpm=16.0,                 # minutes 0-19
               bursts=_rest_bursts(rng, 20 * 60.0, expected_per_min=0.4)),
        Action("random_move", 120.0),                           # 20-31: movement-rich
        Action("speak", 120.0),
        Action("cough_burst", 120.0),
        Action("tremor", 120.0),
        Action("speak", 120.0),
        Action("random_move", 120.0),
        Action("still", 4 * 60.0, rr_bpm=15.0,                  # 32-35
               bursts=_rest_bursts(rng, 4 * 60.0, expected_per_min=0.5)),
        Action("deep_breath", 120.0, rr_bpm=8.0),               # 36-37
        Action("speak", 120.0),                                 # 38-43
        Action("random_move", 120.0),
        Action("cough_burst", 120.0),
        Action("still", 6 * 60.0, rr_bpm=17.0,                  # 44-49
               bursts=_rest_bursts(rng, 6 * 60.0, expected_per_min=0.5)),
        Action("tremor", 120.0),                                # 50-51
        Action("shallow_fast", 120.0, rr_bpm=41.0),             # 52-53
        Action("still", 6 * 60.0, rr_bpm=16.0,                  # 54-59
               bursts=_rest_bursts(rng, 6 * 60.0, expected_per_min=0.4)),
    ]
    return ScenarioScript(actions=tuple(actions), seed=seed)


BUILTIN_SCRIPTS = {
    "rest": lambda seed: rest_script(minutes=4.0, seed=seed),
    "rest-noisy": lambda seed: rest_script(minutes=10.0, seed=seed, with_bursts=True),
    "training": training_script,
    "eval60": eval_script,
}

