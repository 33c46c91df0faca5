"""End-to-end orchestration: training, classification, RR emission, evaluation.

A ReliabilityModel wraps any of the frame classifiers together with its
preprocessing parameters in one self-describing JSON document. Streaming
classification emits the label for frame n once frame n+radius has
arrived, so online behaviour matches offline batch classification
exactly; per-minute estimates then follow the rr-module policy.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, rr as rr_mod
from .errors import ConfigError, DegenerateLabels
from .features import PcaModel, fit_pca, project_matrix
from .neural import mlp as mlp_mod
from .neural import rnn as rnn_mod
from .neural.optim import TrainConfig
from .signal import (
    DEFAULT_FS,
    DEFAULT_SIGMA,
    WaveformRecord,
    context_matrix,
    frame_matrix,
    normalize,
    normalized_matrix,
)
from .svm import SvmEnsemble, SvmModel, ensemble_scores, train_ensemble

SCHEMA_VERSION = 1
MODEL_KINDS = ("direct", "energy", "svm", "mlp", "rnn")
FRAMES_PER_MINUTE = rr_mod.FRAMES_PER_MINUTE


@dataclass
class ReliabilityModel:
    """A frame classifier plus the preprocessing it was trained with."""

    kind: str
    sigma: float = DEFAULT_SIGMA
    radius: int = 3
    fs: int = DEFAULT_FS
    payload: object = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")


# ---------------------------------------------------------------------------
# serialization

def _pca_to_dict(pca: PcaModel) -> dict:
    return {
        "mean": pca.mean.tolist(),
        "basis": pca.basis.tolist(),
        "eigenvalues": pca.eigenvalues.tolist(),
        "variance_fraction": pca.variance_fraction,
    }


def _pca_from_dict(obj: dict) -> PcaModel:
    return PcaModel(
        mean=np.asarray(obj["mean"], dtype=np.float64),
        basis=np.asarray(obj["basis"], dtype=np.float64),
        eigenvalues=np.asarray(obj["eigenvalues"], dtype=np.float64),
        variance_fraction=float(obj["variance_fraction"]),
    )


def _payload_to_dict(model: ReliabilityModel) -> dict:
    kind = model.kind
    payload = model.payload
    if kind == "direct":
        return {}
    if kind == "energy":
        return {"threshold": float(payload)}
    if kind == "svm":
        return {
            "pca": _pca_to_dict(payload.pca),
            "members": [
                {
                    "sv": m.support_vectors.tolist(),
                    "alphas": m.alphas_signed.tolist(),
                    "bias": m.bias,
                    "gamma": m.gamma,
                    "C": m.box,
                }
                for m in payload.members
            ],
        }
    if kind == "mlp":
        net, pca = payload
        return {
            "pca": _pca_to_dict(pca),
            "dropout": net.dropout_rate,
            "l2": net.l2,
            "layers": [
                {"w": w.tolist(), "b": b.tolist()}
                for w, b in zip(net.weights, net.biases)
            ],
        }
    if kind == "rnn":
        net = payload
        layers = {}
        for name, layer in (("fwd1", net.fwd1), ("fwd2", net.fwd2),
                            ("back", net.back)):
            layers[name] = {"w": layer.W.tolist(), "u": layer.U.tolist(),
                            "b": layer.b.tolist()}
        return {
            "width": net.width,
            "lookahead": net.lookahead,
            "l2": net.l2,
            "layers": layers,
            "head": {"w": net.head_w.tolist(), "b": float(net.head_b[0])},
        }
    raise ConfigError(f"cannot serialize kind {kind!r}")


def _payload_from_dict(kind: str, obj: dict, radius: int, sigma: float):
    if kind == "direct":
        return None
    if kind == "energy":
        return float(obj["threshold"])
    if kind == "svm":
        members = [
            SvmModel(
                support_vectors=np.asarray(m["sv"], dtype=np.float64),
                alphas_signed=np.asarray(m["alphas"], dtype=np.float64),
                bias=float(m["bias"]),
                gamma=float(m["gamma"]),
                box=float(m["C"]),
            )
            for m in obj["members"]
        ]
        return SvmEnsemble(members=members, pca=_pca_from_dict(obj["pca"]),
                           radius=radius, sigma=sigma)
    if kind == "mlp":
        net = mlp_mod.MlpModel(
            weights=[np.asarray(l["w"], dtype=np.float64) for l in obj["layers"]],
            biases=[np.asarray(l["b"], dtype=np.float64) for l in obj["layers"]],
            dropout_rate=float(obj["dropout"]),
            l2=float(obj["l2"]),
        )
        return net, _pca_from_dict(obj["pca"])
    if kind == "rnn":
        def layer(name):
            l = obj["layers"][name]
            return rnn_mod.LstmLayer(W=np.asarray(l["w"], dtype=np.float64),
                                     U=np.asarray(l["u"], dtype=np.float64),
                                     b=np.asarray(l["b"], dtype=np.float64))
        return rnn_mod.HybridRnnModel(
            fwd1=layer("fwd1"), fwd2=layer("fwd2"), back=layer("back"),
            head_w=np.asarray(obj["head"]["w"], dtype=np.float64),
            head_b=np.array([float(obj["head"]["b"])]),
            lookahead=int(obj["lookahead"]),
            l2=float(obj["l2"]),
        )
    raise ConfigError(f"cannot load kind {kind!r}")


def save_model(path, model: ReliabilityModel):
    doc = {
        "schema_version": model.schema_version,
        "kind": model.kind,
        "preprocessing": {"sigma": model.sigma, "radius": model.radius,
                          "fs": model.fs},
        "payload": _payload_to_dict(model),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> ReliabilityModel:
    with open(path) as fh:
        doc = json.load(fh)
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version}")
    kind = doc.get("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    pre = doc.get("preprocessing", {})
    radius = int(pre.get("radius", 3))
    sigma = float(pre.get("sigma", DEFAULT_SIGMA))
    fs = int(pre.get("fs", DEFAULT_FS))
    payload = _payload_from_dict(kind, doc.get("payload", {}), radius, sigma)
    return ReliabilityModel(kind=kind, sigma=sigma, radius=radius, fs=fs,
                            payload=payload)


# ---------------------------------------------------------------------------
# frame classification

def _frame_energy(frame: np.ndarray) -> float:
    """AC energy of one raw frame (standard deviation)."""
    return float(np.std(frame))


def _svm_window_label(ensemble: SvmEnsemble, window: np.ndarray) -> int:
    feat = project_matrix(ensemble.pca, window[None, :])
    return 1 if ensemble_scores(ensemble, feat)[0] >= 0 else 0


def _mlp_window_label(net, pca: PcaModel, window: np.ndarray) -> int:
    feat = project_matrix(pca, window[None, :])
    return int(mlp_mod.forward_matrix(net, feat)[0] >= 0.5)


def classify_batch(model: ReliabilityModel, record: WaveformRecord) -> np.ndarray:
    """Labels for every frame; -1 marks frames no label can cover.

    Frames are normalized and scored one at a time through exactly the
    code paths the streaming classifier uses, so batch and stream agree
    bit for bit.
    """
    if record.fs != model.fs:
        raise ConfigError(f"record fs {record.fs} != model fs {model.fs}")
    frames = frame_matrix(record)
    n = frames.shape[0]
    labels = np.full(n, -1, dtype=np.int8)
    kind = model.kind
    if kind == "direct":
        labels[:] = 1
        return labels
    if kind == "energy":
        for i in range(n):
            labels[i] = 1 if _frame_energy(frames[i]) <= model.payload else 0
        return labels
    radius = model.radius
    norm = [normalize(frames[i], model.sigma) for i in range(n)]
    if kind == "svm":
        ensemble = model.payload
        if ensemble.pca is None:
            raise ConfigError("svm model lacks its feature projection")
        for i in range(radius, n - radius):
            window = np.concatenate(norm[i - radius:i + radius + 1])
            labels[i] = _svm_window_label(ensemble, window)
        return labels
    if kind == "mlp":
        net, pca = model.payload
        for i in range(radius, n - radius):
            window = np.concatenate(norm[i - radius:i + radius + 1])
            labels[i] = _mlp_window_label(net, pca, window)
        return labels
    if kind == "rnn":
        net = model.payload
        if n >= 2 * net.lookahead + 1:
            p = rnn_mod.rnn_forward_batch(net, np.vstack(norm))
            lo = net.lookahead
            labels[lo:n - lo] = (p >= 0.5).astype(np.int8)
        return labels
    raise ConfigError(f"unknown model kind {kind!r}")


class StreamClassifier:
    """Frame-by-frame classifier with a bounded emission delay.

    Samples are pushed in arbitrary chunk sizes; the label for frame n is
    emitted once frame n+radius has arrived (the rnn kind manages its own
    identical lookahead). finish() flushes whatever can still be labelled
    without future context.
    """

    def __init__(self, model: ReliabilityModel):
        self.model = model
        self.fs = model.fs
        self._buffer = np.empty(0)
        self._frame_count = 0
        self._raw_frames: list[np.ndarray] = []     # pending raw frames
        self._norm_frames: list[np.ndarray] = []    # pending normalized frames
        self._rnn_state = (rnn_mod.RnnStreamState(model.payload)
                           if model.kind == "rnn" else None)

    def push(self, chunk) -> list[tuple[int, int]]:
        """Feed samples; returns newly emitted (frame_index, label) pairs."""
        chunk = np.asarray(chunk, dtype=np.float64).ravel()
        self._buffer = np.concatenate([self._buffer, chunk])
        out = []
        while self._buffer.size >= self.fs:
            frame = self._buffer[:self.fs]
            self._buffer = self._buffer[self.fs:]
            self._frame_count += 1
            out.extend(self._on_frame(frame))
        return out

    def _on_frame(self, frame: np.ndarray) -> list[tuple[int, int]]:
        model = self.model
        t = self._frame_count
        radius = model.radius
        kind = model.kind
        if kind == "rnn":
            p = self._rnn_state.step(normalize(frame, model.sigma), index=t)
            if p is None:
                return []
            return [(t - model.payload.lookahead, 1 if p >= 0.5 else 0)]
        if kind in ("direct", "energy"):
            self._raw_frames.append(frame)
            if t <= radius:
                return []
            emit_frame = t - radius
            pending = self._raw_frames.pop(0)
            return [(emit_frame, self._plain_label(pending))]
        # window classifiers: keep the last 2*radius+1 normalized frames
        self._norm_frames.append(normalize(frame, model.sigma))
        if len(self._norm_frames) > 2 * radius + 1:
            self._norm_frames.pop(0)
        if t < 2 * radius + 1:
            return []
        window = np.concatenate(self._norm_frames)
        return [(t - radius, self._window_label(window))]

    def _plain_label(self, frame: np.ndarray) -> int:
        if self.model.kind == "direct":
            return 1
        return 1 if _frame_energy(frame) <= self.model.payload else 0

    def _window_label(self, window: np.ndarray) -> int:
        if self.model.kind == "svm":
            return _svm_window_label(self.model.payload, window)
        net, pca = self.model.payload
        return _mlp_window_label(net, pca, window)

    def finish(self) -> list[tuple[int, int]]:
        """Emit the trailing labels that need no future context."""
        out = []
        if self.model.kind in ("direct", "energy"):
            emitted = self._frame_count - len(self._raw_frames)
            for k, frame in enumerate(self._raw_frames):
                out.append((emitted + k + 1, self._plain_label(frame)))
            self._raw_frames = []
        return out


def classify_stream(model: ReliabilityModel, sample_chunks):
    """Generator of (frame_index, label) over a stream of sample chunks."""
    clf = StreamClassifier(model)
    for chunk in sample_chunks:
        yield from clf.push(chunk)
    yield from clf.finish()


# ---------------------------------------------------------------------------
# RR emission and evaluation

def estimate_rr(labels: np.ndarray, record: WaveformRecord) -> list[rr_mod.RrEstimate]:
    """Per-minute estimates; unlabelled frames (-1) count as unreliable."""
    labels = np.asarray(labels).ravel()
    usable = np.where(labels == 1, 1, 0).astype(np.int8)
    return rr_mod.minutes_rr(usable, record.samples, record.fs)


@dataclass
class EvalReport:
    """Relative errors of the per-minute estimates against window truth."""

    rows: list = field(default_factory=list)
    mean_e: dict = field(default_factory=dict)
    n_compared: dict = field(default_factory=dict)
    n_missing: int = 0
    n_skipped_zero_truth: int = 0


def evaluate(estimates, truth: dict[int, float],
             window_minutes: int = 2) -> EvalReport:
    """Compare estimates to ground truth recorded per observation window.

    Each minute is matched to the window that contains it; minutes
    without an estimate but with truth are counted as missing.
    """
    report = EvalReport()
    sums = {"peaks": 0.0, "ht": 0.0}
    counts = {"peaks": 0, "ht": 0}
    for est in estimates:
        minute = est["minute"] if isinstance(est, dict) else est.minute
        rr_peaks = est["rr_peaks"] if isinstance(est, dict) else est.rr_peaks
        rr_ht = est["rr_ht"] if isinstance(est, dict) else est.rr_ht
        window = minute // window_minutes
        gth = truth.get(window)
        if gth is None:
            continue
        if gth == 0:
            report.n_skipped_zero_truth += 1
            continue
        if rr_peaks is None and rr_ht is None:
            report.n_missing += 1
            continue
        for name, value in (("peaks", rr_peaks), ("ht", rr_ht)):
            if value is None:
                continue
            e = abs(value - gth) / abs(gth)
            report.rows.append({"minute": minute, "window": window,
                                "estimator": name, "rr": value, "gth": gth,
                                "e": e})
            sums[name] += e
            counts[name] += 1
    for name in ("peaks", "ht"):
        report.n_compared[name] = counts[name]
        report.mean_e[name] = (sums[name] / counts[name]) if counts[name] else float("nan")
    return report


def evaluation_table(reports: dict[str, EvalReport]) -> str:
    """Classifier x estimator table of mean relative errors."""
    lines = [f"{'':12s} {'peaks':>10s} {'ht':>10s}"]
    for name, rep in reports.items():
        peaks = rep.mean_e.get("peaks", float("nan"))
        ht = rep.mean_e.get("ht", float("nan"))
        lines.append(f"{name:12s} {peaks:10.4f} {ht:10.4f}")
    return "\n".join(lines)


def confusion(y_true: np.ndarray, y_pred: np.ndarray) -> dict:
    """Detection error, precision and recall with reliable (1) as positive."""
    y_true = np.asarray(y_true).ravel()
    y_pred = np.asarray(y_pred).ravel()
    if y_true.size != y_pred.size:
        raise ConfigError("label arrays differ in length")
    tp = int(((y_pred == 1) & (y_true == 1)).sum())
    fp = int(((y_pred == 1) & (y_true == 0)).sum())
    fn = int(((y_pred == 0) & (y_true == 1)).sum())
    n = y_true.size
    return {
        "error": float((y_pred != y_true).sum() / n) if n else float("nan"),
        "precision": tp / (tp + fp) if tp + fp else float("nan"),
        "recall": tp / (tp + fn) if tp + fn else float("nan"),
    }


# ---------------------------------------------------------------------------
# training

def _split_80_20(n: int, seed: int):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_test = max(1, int(round(0.2 * n)))
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def _fit_energy_threshold(frames: np.ndarray, labels: np.ndarray) -> float:
    """Threshold on frame energy minimizing training error."""
    energy = np.array([_frame_energy(f) for f in frames])
    order = np.argsort(energy)
    e_sorted = energy[order]
    y_sorted = labels[order]
    # predicting reliable below the cut: errors = unreliable below + reliable above
    n = y_sorted.size
    unreliable_below = np.cumsum(y_sorted == 0)
    reliable_total = int((y_sorted == 1).sum())
    reliable_below = np.cumsum(y_sorted == 1)
    best_err = reliable_total          # cut below everything
    best_thr = e_sorted[0] - 1e-12 if n else 0.0
    for k in range(n):
        errors = unreliable_below[k] + (reliable_total - reliable_below[k])
        if errors < best_err:
            best_err = errors
            upper = e_sorted[k + 1] if k + 1 < n else e_sorted[k] + 1e-12
            best_thr = (e_sorted[k] + upper) / 2.0
    return float(best_thr)


def _chunk_sequences(norm: np.ndarray, labels: np.ndarray, rng,
                     lo: int = 20, hi: int = 30):
    """Cut a labelled frame stream into sequences of lo..hi frames."""
    seqs = []
    pos = 0
    n = norm.shape[0]
    while pos < n:
        length = int(rng.integers(lo, hi + 1))
        if n - pos < lo:
            break
        length = min(length, n - pos)
        seqs.append((norm[pos:pos + length], labels[pos:pos + length]))
        pos += length
    return seqs


def train_model(kind: str, record: WaveformRecord, labels: np.ndarray, *,
                sigma: float = DEFAULT_SIGMA, radius: int = 3,
                variance: float = 0.95, n_components: int | None = None,
                C: float = 2.0, gamma: float = 0.4, folds: int = 10,
                epochs: int = 200, batch: int | None = None,
                lr0: float = 0.001, lr_decay: float = 0.99, l2: float = 1e-6,
                width: int = rnn_mod.DEFAULT_WIDTH,
                hidden=mlp_mod.DEFAULT_HIDDEN, dropout: float = 0.2,
                seed: int = 0) -> tuple[ReliabilityModel, dict]:
    """Train one classifier kind on a labelled recording.

    Data is split 80/20 (train/test); the returned metrics are the
    held-out error, precision and recall.
    """
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}")
    frames = frame_matrix(record)
    labels = np.asarray(labels).ravel()
    if labels.size != frames.shape[0]:
        raise ConfigError(
            f"{labels.size} labels for {frames.shape[0]} frames")
    if kind != "direct" and len(np.unique(labels[labels >= 0])) < 2:
        raise DegenerateLabels("training labels contain a single class")

    if kind == "direct":
        model = ReliabilityModel(kind="direct", sigma=sigma, radius=radius,
                                 fs=record.fs)
        return model, confusion(labels, np.ones_like(labels))

    if kind == "energy":
        train_idx, test_idx = _split_80_20(frames.shape[0], seed)
        threshold = _fit_energy_threshold(frames[train_idx], labels[train_idx])
        model = ReliabilityModel(kind="energy", sigma=sigma, radius=radius,
                                 fs=record.fs, payload=threshold)
        pred = np.array([1 if _frame_energy(f) <= threshold else 0
                         for f in frames[test_idx]])
        return model, confusion(labels[test_idx], pred)

    norm = normalized_matrix(record, sigma)

    if kind in ("svm", "mlp"):
        windows = context_matrix(norm, radius)
        y = labels[radius:frames.shape[0] - radius]
        train_idx, test_idx = _split_80_20(windows.shape[0], seed)
        pca = fit_pca(windows[train_idx], variance_fraction=variance,
                      n_components=n_components)
        X_train = project_matrix(pca, windows[train_idx])
        X_test = project_matrix(pca, windows[test_idx])
        if kind == "svm":
            ensemble = train_ensemble(X_train, y[train_idx], n_folds=folds,
                                      C=C, gamma=gamma, seed=seed, pca=pca,
                                      radius=radius, sigma=sigma)
            model = ReliabilityModel(kind="svm", sigma=sigma, radius=radius,
                                     fs=record.fs, payload=ensemble)
            pred = (ensemble_scores(ensemble, X_test) >= 0).astype(np.int8)
        else:
            cfg = TrainConfig(lr0=lr0, lr_decay=lr_decay,
                              batch=batch or 64, epochs=epochs, l2=l2,
                              seed=seed)
            net, history = mlp_mod.train_mlp(X_train, y[train_idx], cfg,
                                             hidden=hidden,
                                             dropout_rate=dropout)
            model = ReliabilityModel(kind="mlp", sigma=sigma, radius=radius,
                                     fs=record.fs, payload=(net, pca))
            pred = mlp_mod.predict_matrix(net, X_test)
        metrics = confusion(y[test_idx], pred)
        if kind == "mlp":
            metrics["history"] = history
        return model, metrics

    # rnn
    rng = np.random.default_rng(seed)
    seqs = _chunk_sequences(norm, labels, rng)
    if len(seqs) < 2:
        raise ConfigError("recording too short to build training sequences")
    train_idx, test_idx = _split_80_20(len(seqs), seed)
    cfg = TrainConfig(lr0=lr0, lr_decay=lr_decay, batch=batch or 32,
                      epochs=epochs, l2=l2, seed=seed)
    net, history = rnn_mod.train_rnn([seqs[i] for i in train_idx], cfg,
                                     width=width, lookahead=radius)
    model = ReliabilityModel(kind="rnn", sigma=sigma, radius=radius,
                             fs=record.fs, payload=net)
    y_true = []
    y_pred = []
    for i in test_idx:
        frames_i, labels_i = seqs[i]
        p = rnn_mod.rnn_forward_batch(net, frames_i)
        y_pred.extend((p >= 0.5).astype(int).tolist())
        y_true.extend(labels_i[radius:frames_i.shape[0] - radius].astype(int).tolist())
    metrics = confusion(np.array(y_true), np.array(y_pred))
    metrics["history"] = history
    return model, metrics


# ---------------------------------------------------------------------------
# streaming session

class StreamSession:
    """Classify a live sample stream and emit estimates minute by minute."""

    def __init__(self, model: ReliabilityModel):
        self.model = model
        self.classifier = StreamClassifier(model)
        self.samples: list[np.ndarray] = []
        self.n_samples = 0
        self.labels: dict[int, int] = {}
        self.labeled_through = 0
        self.estimates: list[rr_mod.RrEstimate] = []
        self._minutes_done = 0

    def push(self, chunk) -> list[rr_mod.RrEstimate]:
        chunk = np.asarray(chunk, dtype=np.float64).ravel()
        self.samples.append(chunk)
        self.n_samples += chunk.size
        return self._absorb(self.classifier.push(chunk))

    def _absorb(self, emitted) -> list[rr_mod.RrEstimate]:
        for frame, label in emitted:
            self.labels[frame] = label
            self.labeled_through = max(self.labeled_through, frame)
        new = []
        fs = self.model.fs
        while (self.labeled_through >= (self._minutes_done + 1) * FRAMES_PER_MINUTE
               and self.n_samples >= (self._minutes_done + 1) * FRAMES_PER_MINUTE * fs):
            new.append(self._emit_minute(self._minutes_done))
            self._minutes_done += 1
        return new

    def _emit_minute(self, minute: int, pad: bool = False) -> rr_mod.RrEstimate:
        fs = self.model.fs
        f0 = minute * FRAMES_PER_MINUTE
        labels = np.array([self.labels.get(f0 + k + 1, 0)
                           for k in range(FRAMES_PER_MINUTE)], dtype=np.int8)
        flat = np.concatenate(self.samples) if self.samples else np.empty(0)
        self.samples = [flat]      # compact so later minutes concatenate cheaply
        s0 = f0 * fs
        s1 = s0 + FRAMES_PER_MINUTE * fs
        chunk = flat[s0:min(s1, flat.size)]
        if chunk.size < FRAMES_PER_MINUTE * fs:
            if not pad:
                raise ConfigError("minute not complete yet")
            chunk = np.concatenate([chunk, np.zeros(FRAMES_PER_MINUTE * fs - chunk.size)])
        est = rr_mod.minute_rr(labels, chunk, fs, minute=minute)
        self.estimates.append(est)
        return est

    def finish(self) -> list[rr_mod.RrEstimate]:
        """Flush the classifier and process any trailing partial minute."""
        new = self._absorb(self.classifier.finish())
        total_frames = self.n_samples // self.model.fs
        if total_frames > self._minutes_done * FRAMES_PER_MINUTE:
            new.append(self._emit_minute(self._minutes_done, pad=True))
            self._minutes_done += 1
        return new


# ---------------------------------------------------------------------------
# benchmark

@dataclass
class BenchReport:
    stage_seconds: dict = field(default_factory=dict)
    op_counts: dict = field(default_factory=dict)
    kernel_compare: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def classifier_ordering_ok(self) -> bool:
        s = self.stage_seconds
        return s.get("svm", 0) > s.get("rnn", 0) > s.get("mlp", 0)

    def rr_fraction(self) -> float:
        s = self.stage_seconds
        rr_cost = s.get("rr_peaks", 0.0) + s.get("rr_ht", 0.0)
        total = (s.get("feature", 0.0) + s.get("svm", 0.0) + s.get("rnn", 0.0)
                 + s.get("mlp", 0.0) + rr_cost)
        return rr_cost / total if total > 0 else float("nan")

    def format(self) -> str:
        lines = ["stage timings (median seconds per 1-minute input):"]
        for name, sec in self.stage_seconds.items():
            ops = self.op_counts.get(name)
            ops_txt = f"  ~{ops:,.0f} ops" if ops else ""
            lines.append(f"  {name:10s} {sec * 1e3:10.3f} ms{ops_txt}")
        lines.append(f"  rr share of pipeline: {self.rr_fraction() * 100:.2f}%")
        if self.kernel_compare:
            lines.append("jit vs numpy kernels (seconds):")
            for name, pair in self.kernel_compare.items():
                lines.append(
                    f"  {name:18s} jit {pair['jit'] * 1e3:9.3f} ms"
                    f"   numpy {pair['numpy'] * 1e3:9.3f} ms"
                    f"   speedup x{pair['numpy'] / max(pair['jit'], 1e-12):.1f}")
        for note in self.notes:
            lines.append(note)
        return "\n".join(lines)


def _time_call(fn, repeats: int = 5) -> float:
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def benchmark(models: dict[str, ReliabilityModel], record: WaveformRecord,
              repeats: int = 5, compare_kernels: bool = True) -> BenchReport:
    """Measure per-stage costs of the pipeline on a one-minute input."""
    report = BenchReport()
    fs = record.fs
    minute = WaveformRecord(samples=record.samples[:FRAMES_PER_MINUTE * fs], fs=fs)
    if minute.samples.size < FRAMES_PER_MINUTE * fs:
        raise ConfigError("benchmark needs at least one full minute of data")

    pca = None
    radius = 3
    sigma = DEFAULT_SIGMA
    for m in models.values():
        radius, sigma = m.radius, m.sigma
        if m.kind == "svm":
            pca = m.payload.pca
        elif m.kind == "mlp" and pca is None:
            pca = m.payload[1]
    span = 2 * radius + 1

    def feature_stage():
        norm = normalized_matrix(minute, sigma)
        windows = context_matrix(norm, radius)
        if pca is not None:
            project_matrix(pca, windows)

    report.stage_seconds["feature"] = _time_call(feature_stage, repeats)
    if pca is not None:
        report.op_counts["feature"] = FRAMES_PER_MINUTE * pca.n_components * span * fs

    for name in ("svm", "mlp", "rnn"):
        model = models.get(name)
        if model is None:
            continue
        report.stage_seconds[name] = _time_call(
            lambda m=model: classify_batch(m, minute), repeats)
        if name == "svm":
            n_sv = int(np.mean([m.n_support for m in model.payload.members]))
            q = model.payload.members[0].support_vectors.shape[1]
            report.op_counts["svm"] = len(model.payload.members) * FRAMES_PER_MINUTE * n_sv * q
        elif name == "mlp":
            net = model.payload[0]
            ops = 0
            for w in net.weights:
                ops += 2 * w.shape[0] * w.shape[1]
            report.op_counts["mlp"] = FRAMES_PER_MINUTE * ops
        else:
            net = model.payload
            per_frame = 0
            for layer, reps in ((net.fwd1, 1), (net.fwd2, 1),
                                (net.back, net.lookahead + 1)):
                per_frame += reps * 2 * (layer.W.shape[0] + layer.U.shape[0]) * layer.W.shape[1]
            report.op_counts["rnn"] = FRAMES_PER_MINUTE * per_frame

    all_reliable = np.ones(FRAMES_PER_MINUTE, dtype=np.int8)
    seg = rr_mod.ReliableSegment(t1=0, t2=minute.samples.size - 1,
                                 values=minute.samples)
    minute_std = float(np.std(minute.samples))

    def peaks_stage():
        peakset = rr_mod.detect_peaks(seg, minute_std=minute_std)
        try:
            rr_mod.rr_peak_counting([(seg, peakset)], fs)
        except rr_mod.NoEstimate:
            pass

    def ht_stage():
        track, _ = rr_mod.unwrap_and_if(rr_mod.analytic_signal(seg.values), fs)
        rr_mod.rr_slope_fit([track.phase], fs)

    report.stage_seconds["rr_peaks"] = _time_call(peaks_stage, repeats)
    report.stage_seconds["rr_ht"] = _time_call(ht_stage, repeats)
    n = minute.samples.size
    report.op_counts["rr_peaks"] = n
    report.op_counts["rr_ht"] = int(2 * n * np.log2(n) + 10 * n)

    report.notes.append(
        "expected ordering svm > rnn > mlp: "
        + ("ok" if report.classifier_ordering_ok() else "VIOLATED"))

    if compare_kernels and _kernels.USING_NUMBA:
        norm = normalized_matrix(minute, sigma)
        rnn_model = models.get("rnn")
        if rnn_model is not None:
            net = rnn_model.payload
            zeros = np.zeros(net.width)
            args = (norm, net.fwd1.W, net.fwd1.U, net.fwd1.b, zeros, zeros)
            _kernels.lstm_seq_forward(*args)   # compile before timing
            report.kernel_compare["lstm_seq_forward"] = {
                "jit": _time_call(lambda: _kernels.lstm_seq_forward(*args), repeats),
                "numpy": _time_call(lambda: _kernels.lstm_seq_forward_py(*args), repeats),
            }
        drop = float(np.std(minute.samples))
        _kernels.peak_scan(minute.samples, drop)
        report.kernel_compare["peak_scan"] = {
            "jit": _time_call(lambda: _kernels.peak_scan(minute.samples, drop), repeats),
            "numpy": _time_call(lambda: _kernels.peak_scan_py(minute.samples, drop), repeats),
        }
    return report
