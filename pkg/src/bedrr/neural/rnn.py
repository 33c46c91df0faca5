"""Hybrid recurrent reliability classifier with bounded lookahead.

Two stacked forward LSTM layers carry history; a third LSTM runs backward
over each (lookahead+1)-frame window so every prediction sees a fixed
amount of future context. Forward and backward features are fused by
elementwise summation and fed to a logistic unit, which keeps the online
latency at exactly ``lookahead`` frames instead of needing the whole
sequence as a true bidirectional network would.
"""

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, OrderingError, TooShort
from .. import _kernels
from .optim import (
    Adam,
    TrainConfig,
    bce_loss_batch,
    check_finite_loss,
    clip_global_norm,
    uniform_fanin,
    validation_split,
)

DEFAULT_WIDTH = 50
GRAD_CLIP_NORM = 5.0


@dataclass
class LstmLayer:
    """Gate kernels stored (input, 4*width); lanes [input, forget, cand, out]."""

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray

    @property
    def width(self) -> int:
        return self.U.shape[0]


@dataclass
class HybridRnnModel:
    fwd1: LstmLayer
    fwd2: LstmLayer
    back: LstmLayer
    head_w: np.ndarray
    head_b: np.ndarray          # shape (1,) so the optimizer can update in place
    lookahead: int
    l2: float = 1e-6

    @property
    def width(self) -> int:
        return self.fwd1.width

    @property
    def n_inputs(self) -> int:
        return self.fwd1.W.shape[0]


def _init_layer(rng, n_inputs: int, width: int) -> LstmLayer:
    W = uniform_fanin(rng, n_inputs, (n_inputs, 4 * width))
    U = uniform_fanin(rng, width, (width, 4 * width))
    b = np.zeros(4 * width)
    b[width:2 * width] = 1.0        # forget-gate bias starts open
    return LstmLayer(W=W, U=U, b=b)


def init_rnn(n_inputs: int, width: int = DEFAULT_WIDTH, lookahead: int = 3,
             l2: float = 1e-6, seed: int = 0) -> HybridRnnModel:
    rng = np.random.default_rng(seed)
    return HybridRnnModel(
        fwd1=_init_layer(rng, n_inputs, width),
        fwd2=_init_layer(rng, width, width),
        back=_init_layer(rng, n_inputs, width),
        head_w=uniform_fanin(rng, width, width),
        head_b=np.zeros(1),
        lookahead=lookahead,
        l2=l2,
    )


def param_dict(model: HybridRnnModel) -> dict[str, np.ndarray]:
    params = {}
    for name, layer in (("fwd1", model.fwd1), ("fwd2", model.fwd2),
                        ("back", model.back)):
        params[f"{name}.W"] = layer.W
        params[f"{name}.U"] = layer.U
        params[f"{name}.b"] = layer.b
    params["head.w"] = model.head_w
    params["head.b"] = model.head_b
    return params


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


def _check_frames(model: HybridRnnModel, frames: np.ndarray) -> np.ndarray:
    frames = np.atleast_2d(np.asarray(frames, dtype=np.float64))
    if frames.shape[1] != model.n_inputs:
        raise DimensionError(
            f"frame width {frames.shape[1]} != model input {model.n_inputs}")
    return frames


def zero_state(model: HybridRnnModel) -> tuple:
    z = np.zeros(model.width)
    return z, z.copy(), z.copy(), z.copy()


def rnn_forward_batch(model: HybridRnnModel, frames: np.ndarray,
                      init_state: tuple | None = None,
                      return_state: bool = False):
    """Reliability probabilities for frames lookahead+1 .. T-lookahead.

    The forward stack runs over frames 1..T-lookahead; its first lookahead
    outputs are dropped before fusion so shapes line up with the
    backward-window tensor. init_state optionally continues the forward
    recurrence from (h1, c1, h2, c2) instead of zeros; with return_state
    the state advanced through all T frames is returned as well.
    """
    frames = _check_frames(model, frames)
    T = frames.shape[0]
    L = model.lookahead
    if T < 2 * L + 1:
        raise TooShort(f"need at least {2 * L + 1} frames, got {T}")
    h1, c1, h2, c2 = init_state if init_state is not None else zero_state(model)
    Xf = frames[:T - L] if L else frames
    H1, C1, _ = _kernels.lstm_seq_forward(Xf, model.fwd1.W, model.fwd1.U,
                                          model.fwd1.b, h1, c1)
    H2, C2, _ = _kernels.lstm_seq_forward(H1, model.fwd2.W, model.fwd2.U,
                                          model.fwd2.b, h2, c2)
    B = _kernels.lookback_tensor(frames, model.back.W, model.back.U,
                                 model.back.b, L)
    fused = H2[L:] + B
    p = _sigmoid(fused @ model.head_w + model.head_b[0])
    if not return_state:
        return p
    state = _advance_tail(model, frames, (H1[-1], C1[-1], H2[-1], C2[-1]))
    return p, state


def _advance_tail(model: HybridRnnModel, frames: np.ndarray, state: tuple) -> tuple:
    """Push the forward stack through the last lookahead frames."""
    L = model.lookahead
    if L == 0:
        return tuple(np.asarray(s).copy() for s in state)
    h1, c1, h2, c2 = state
    E1, EC1, _ = _kernels.lstm_seq_forward(frames[frames.shape[0] - L:],
                                           model.fwd1.W, model.fwd1.U,
                                           model.fwd1.b, h1, c1)
    E2, EC2, _ = _kernels.lstm_seq_forward(E1, model.fwd2.W, model.fwd2.U,
                                           model.fwd2.b, h2, c2)
    return E1[-1].copy(), EC1[-1].copy(), E2[-1].copy(), EC2[-1].copy()


def _training_forward(model: HybridRnnModel, frames: np.ndarray,
                      init_state: tuple):
    """Forward pass retaining every cache the backward pass needs."""
    T = frames.shape[0]
    L = model.lookahead
    zeros = np.zeros(model.width)
    h1, c1, h2, c2 = init_state
    Xf = frames[:T - L] if L else frames
    f1 = _kernels.lstm_seq_forward(Xf, model.fwd1.W, model.fwd1.U,
                                   model.fwd1.b, h1, c1)
    f2 = _kernels.lstm_seq_forward(f1[0], model.fwd2.W, model.fwd2.U,
                                   model.fwd2.b, h2, c2)
    n_out = T - 2 * L
    segments = []
    B = np.empty((n_out, model.width))
    for k in range(n_out):
        x_rev = frames[L + k:L + k + L + 1][::-1].copy()
        seg = _kernels.lstm_seq_forward(x_rev, model.back.W, model.back.U,
                                        model.back.b, zeros, zeros)
        segments.append((x_rev, seg))
        B[k] = seg[0][-1]
    fused = f2[0][L:] + B
    logit = fused @ model.head_w + model.head_b[0]
    return _sigmoid(logit), (Xf, f1, f2, segments, fused)


def loss_and_grads(model: HybridRnnModel, frames: np.ndarray,
                   labels: np.ndarray, include_l2: bool = True,
                   init_state: tuple | None = None,
                   return_state: bool = False):
    """Mean cross-entropy over the T-2L covered positions, with gradients.

    labels must be aligned with frames; only positions
    lookahead..T-lookahead-1 (0-based) enter the loss. init_state
    optionally seeds the forward recurrence (truncated-BPTT style: no
    gradient flows into it); with return_state the forward state advanced
    through all T frames is returned for the next chunk.
    """
    frames = _check_frames(model, frames)
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if labels.size != frames.shape[0]:
        raise DimensionError(f"{labels.size} labels for {frames.shape[0]} frames")
    T = frames.shape[0]
    L = model.lookahead
    if T < 2 * L + 1:
        raise TooShort(f"need at least {2 * L + 1} frames, got {T}")
    state0 = init_state if init_state is not None else zero_state(model)
    p, (Xf, f1, f2, segments, fused) = _training_forward(model, frames, state0)
    y = labels[L:T - L]
    n_out = y.size
    loss = bce_loss_batch(p, y)

    zeros = np.zeros(model.width)
    dlogit = (p - y) / n_out
    grads = {
        "head.w": fused.T @ dlogit,
        "head.b": np.array([dlogit.sum()]),
    }
    dfused = np.outer(dlogit, model.head_w)

    dWb = np.zeros_like(model.back.W)
    dUb = np.zeros_like(model.back.U)
    dbb = np.zeros_like(model.back.b)
    for k, (x_rev, (Hs, Cs, Gs)) in enumerate(segments):
        dH_seg = np.zeros_like(Hs)
        dH_seg[-1] = dfused[k]
        dW, dU, db, _, _, _ = _kernels.lstm_seq_backward(
            x_rev, model.back.W, model.back.U, Hs, Cs, Gs, zeros, zeros, dH_seg)
        dWb += dW
        dUb += dU
        dbb += db
    grads["back.W"] = dWb
    grads["back.U"] = dUb
    grads["back.b"] = dbb

    dH2 = np.zeros_like(f2[0])
    dH2[L:] = dfused
    dW2, dU2, db2, dH1, _, _ = _kernels.lstm_seq_backward(
        f1[0], model.fwd2.W, model.fwd2.U, f2[0], f2[1], f2[2],
        state0[2], state0[3], dH2)
    grads["fwd2.W"] = dW2
    grads["fwd2.U"] = dU2
    grads["fwd2.b"] = db2
    dW1, dU1, db1, _, _, _ = _kernels.lstm_seq_backward(
        Xf, model.fwd1.W, model.fwd1.U, f1[0], f1[1], f1[2],
        state0[0], state0[1], dH1)
    grads["fwd1.W"] = dW1
    grads["fwd1.U"] = dU1
    grads["fwd1.b"] = db1

    if include_l2 and model.l2 > 0:
        l2 = model.l2
        params = param_dict(model)
        for name in ("fwd1.W", "fwd1.U", "fwd2.W", "fwd2.U",
                     "back.W", "back.U", "head.w"):
            arr = params[name]
            loss += 0.5 * l2 * float((arr * arr).sum())
            grads[name] = grads[name] + l2 * arr
    if not return_state:
        return loss, grads
    final = _advance_tail(model, frames,
                          (f1[0][-1], f1[1][-1], f2[0][-1], f2[1][-1]))
    return loss, grads, final


class RnnStreamState:
    """Single-owner online state: one probability per arrival after warm-up.

    The prediction for frame n is emitted when frame n+lookahead arrives,
    matching the batch forward exactly: nothing comes out for the first
    2*lookahead arrivals (the first lookahead frames are never predicted,
    they lack left context in the fused tensor).
    """

    def __init__(self, model: HybridRnnModel):
        self.model = model
        width = model.width
        self.h1 = np.zeros(width)
        self.c1 = np.zeros(width)
        self.h2 = np.zeros(width)
        self.c2 = np.zeros(width)
        self.arrivals = 0
        self.consumed = 0
        self.pending: deque = deque()
        self.tail: deque = deque(maxlen=model.lookahead + 1)

    def _advance_forward(self, frame: np.ndarray):
        x = frame[None, :]
        H1, C1, _ = _kernels.lstm_seq_forward(
            x, self.model.fwd1.W, self.model.fwd1.U, self.model.fwd1.b,
            self.h1, self.c1)
        self.h1, self.c1 = H1[0], C1[0]
        H2, C2, _ = _kernels.lstm_seq_forward(
            self.h1[None, :], self.model.fwd2.W, self.model.fwd2.U,
            self.model.fwd2.b, self.h2, self.c2)
        self.h2, self.c2 = H2[0], C2[0]

    def step(self, frame, index: int | None = None) -> float | None:
        """Consume one frame; returns the prediction it completes, if any."""
        if index is not None and index != self.arrivals + 1:
            raise OrderingError(
                f"expected frame {self.arrivals + 1}, got {index}")
        frame = np.asarray(frame, dtype=np.float64).ravel()
        if frame.size != self.model.n_inputs:
            raise DimensionError(
                f"frame width {frame.size} != model input {self.model.n_inputs}")
        self.arrivals += 1
        self.pending.append(frame)
        self.tail.append(frame)
        L = self.model.lookahead
        if self.arrivals < 2 * L + 1:
            return None
        emit = self.arrivals - L - 1          # 0-based frame index to predict
        while self.consumed <= emit:
            self._advance_forward(self.pending.popleft())
            self.consumed += 1
        x_rev = np.array(list(self.tail))[::-1].copy()
        zeros = np.zeros(self.model.width)
        Hs, _, _ = _kernels.lstm_seq_forward(
            x_rev, self.model.back.W, self.model.back.U, self.model.back.b,
            zeros, zeros)
        fused = self.h2 + Hs[-1]
        return float(_sigmoid(fused @ self.model.head_w + self.model.head_b[0]))


def rnn_stream_step(state: RnnStreamState, frame, index: int | None = None):
    """Functional alias for RnnStreamState.step."""
    return state.step(frame, index=index)


def predict_matrix(model: HybridRnnModel, frames: np.ndarray) -> np.ndarray:
    return (rnn_forward_batch(model, frames) >= 0.5).astype(np.int8)


def train_rnn(sequences, cfg: TrainConfig, width: int = DEFAULT_WIDTH,
              lookahead: int = 3, chain_state: bool = True):
    """Train on labelled (frames, labels) sequences with BPTT + Adam.

    20% of the sequences are held out for validation history. Gradients
    are clipped at global norm 5 before each update.

    With chain_state the sequence list is treated as consecutive chunks
    of one recording: each chunk's forward recurrence starts from the
    state its predecessor ended with (refreshed every epoch, truncated
    BPTT). Online inference accumulates state over arbitrarily long
    streams, so training must see deep states too, not just the first
    thirty frames after a reset. Pass chain_state=False for genuinely
    independent sequences.
    """
    if not sequences:
        raise DimensionError("no training sequences")
    seqs = [(np.atleast_2d(np.asarray(f, dtype=np.float64)),
             np.asarray(l, dtype=np.float64).ravel()) for f, l in sequences]
    n_in = seqs[0][0].shape[1]
    for f, l in seqs:
        if f.shape[0] < 2 * lookahead + 1:
            raise TooShort(
                f"sequence of {f.shape[0]} frames too short for lookahead {lookahead}")
        if f.shape[0] != l.size:
            raise DimensionError("labels misaligned with frames")

    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = validation_split(len(seqs), 0.2, rng)
    val_set = set(val_idx.tolist())
    model = init_rnn(n_in, width=width, lookahead=lookahead, l2=cfg.l2,
                     seed=cfg.seed)
    params = param_dict(model)
    opt = Adam()
    carry = [zero_state(model) for _ in seqs]
    history = []
    lr = cfg.lr0
    for epoch in range(cfg.epochs):
        order = rng.permutation(train_idx)
        batch_losses = []
        for off in range(0, order.size, cfg.batch):
            idx = order[off:off + cfg.batch]
            total = {name: np.zeros_like(arr) for name, arr in params.items()}
            batch_loss = 0.0
            for si in idx:
                frames, labels = seqs[si]
                init = carry[si] if chain_state else None
                loss, grads, final = loss_and_grads(model, frames, labels,
                                                    include_l2=False,
                                                    init_state=init,
                                                    return_state=True)
                if chain_state and si + 1 < len(seqs):
                    carry[si + 1] = final
                batch_loss += loss
                for name in total:
                    total[name] += grads[name]
            scale = 1.0 / idx.size
            for name in total:
                total[name] *= scale
            batch_loss *= scale
            if model.l2 > 0:
                for name in ("fwd1.W", "fwd1.U", "fwd2.W", "fwd2.U",
                             "back.W", "back.U", "head.w"):
                    batch_loss += 0.5 * model.l2 * float((params[name] ** 2).sum())
                    total[name] += model.l2 * params[name]
            check_finite_loss(batch_loss, history)
            batch_losses.append(batch_loss)
            clip_global_norm(total, GRAD_CLIP_NORM)
            opt.step(params, total, lr)
        val_loss, val_err = _evaluate(model, seqs, val_idx, carry,
                                      chain_state)
        history.append({
            "epoch": epoch,
            "lr": lr,
            "train_loss": float(np.mean(batch_losses)) if batch_losses else float("nan"),
            "val_loss": val_loss,
            "val_error": val_err,
        })
        lr *= cfg.lr_decay
    return model, history


def _evaluate(model: HybridRnnModel, seqs, idx, carry, chain_state):
    """Validation loss/error; refreshes carried states past val chunks."""
    if len(idx) == 0:
        return float("nan"), float("nan")
    losses = []
    errors = 0
    count = 0
    L = model.lookahead
    for si in idx:
        frames, labels = seqs[si]
        init = carry[si] if chain_state else None
        p, final = rnn_forward_batch(model, frames, init_state=init,
                                     return_state=True)
        if chain_state and si + 1 < len(seqs):
            carry[si + 1] = final
        y = labels[L:frames.shape[0] - L]
        losses.append(bce_loss_batch(p, y))
        errors += int(((p >= 0.5) != (y >= 0.5)).sum())
        count += y.size
    return float(np.mean(losses)), errors / max(count, 1)
