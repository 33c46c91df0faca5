"""Feedforward reliability classifier.

Dense hidden layers with rectifier activations and inverted dropout,
logistic output unit, trained with Adam on cross-entropy plus an L2
weight penalty. Widths are configurable; the production configuration is
three hidden layers of 100.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError
from .optim import (
    Adam,
    TrainConfig,
    bce_loss_batch,
    check_finite_loss,
    uniform_fanin,
    validation_split,
)

DEFAULT_HIDDEN = (100, 100, 100)


@dataclass
class MlpModel:
    weights: list = field(default_factory=list)   # (fan_in, fan_out) per layer
    biases: list = field(default_factory=list)
    dropout_rate: float = 0.2
    l2: float = 1e-6

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]


def init_mlp(n_inputs: int, hidden=DEFAULT_HIDDEN, dropout_rate: float = 0.2,
             l2: float = 1e-6, seed: int = 0) -> MlpModel:
    rng = np.random.default_rng(seed)
    sizes = [n_inputs, *hidden, 1]
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(uniform_fanin(rng, fan_in, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases,
                    dropout_rate=dropout_rate, l2=l2)


def param_dict(model: MlpModel) -> dict[str, np.ndarray]:
    """Named references to every trainable array (shared, not copied)."""
    params = {}
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        params[f"w{k}"] = w
        params[f"b{k}"] = b
    return params


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.clip(z, -60.0, 60.0)))


def _forward(model: MlpModel, X: np.ndarray, dropout_rng=None):
    """Batch forward pass; returns probabilities and the backprop cache."""
    a = X
    cache = []
    rate = model.dropout_rate
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        z = a @ w + b
        r = np.maximum(z, 0.0)
        if dropout_rng is not None and rate > 0.0:
            mask = (dropout_rng.random(r.shape) >= rate) / (1.0 - rate)
            h = r * mask
        else:
            mask = None
            h = r
        cache.append((a, r, mask))
        a = h
    logit = (a @ model.weights[-1] + model.biases[-1]).ravel()
    cache.append((a, None, None))
    return _sigmoid(logit), cache


def mlp_forward(model: MlpModel, x, mode: str = "infer", rng=None) -> float:
    """Probability that one feature vector is reliable.

    mode="train" applies inverted-scaling dropout masks drawn from rng;
    inference is deterministic.
    """
    values = np.asarray(getattr(x, "values", x), dtype=np.float64)
    if values.ndim != 1 or values.size != model.n_inputs:
        raise DimensionError(
            f"input dimension {values.shape} != model input {model.n_inputs}")
    if mode == "train":
        if rng is None:
            rng = np.random.default_rng()
        p, _ = _forward(model, values[None, :], dropout_rng=rng)
    else:
        p, _ = _forward(model, values[None, :])
    return float(p[0])


def predict_matrix(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """Hard labels; p = 0.5 counts as reliable."""
    p, _ = _forward(model, np.atleast_2d(X))
    return (p >= 0.5).astype(np.int8)


def forward_matrix(model: MlpModel, X: np.ndarray) -> np.ndarray:
    p, _ = _forward(model, np.atleast_2d(X))
    return p


def loss_and_grads(model: MlpModel, X: np.ndarray, y: np.ndarray,
                   dropout_rng=None):
    """Mean cross-entropy (+ L2 on weight matrices) and its gradients."""
    X = np.atleast_2d(X)
    y = np.asarray(y, dtype=np.float64).ravel()
    p, cache = _forward(model, X, dropout_rng=dropout_rng)
    loss = bce_loss_batch(p, y)
    l2 = model.l2
    if l2 > 0:
        loss += 0.5 * l2 * sum(float((w * w).sum()) for w in model.weights)

    grads = {}
    n = X.shape[0]
    dlogit = (p - y) / n
    a_last = cache[-1][0]
    grads[f"w{len(model.weights) - 1}"] = a_last.T @ dlogit[:, None] + l2 * model.weights[-1]
    grads[f"b{len(model.weights) - 1}"] = np.array([dlogit.sum()])
    da = dlogit[:, None] @ model.weights[-1].T
    for k in range(len(model.weights) - 2, -1, -1):
        a_in, r, mask = cache[k]
        dr = da * mask if mask is not None else da
        dz = dr * (r > 0.0)
        grads[f"w{k}"] = a_in.T @ dz + l2 * model.weights[k]
        grads[f"b{k}"] = dz.sum(axis=0)
        da = dz @ model.weights[k].T
    return loss, grads


def train_mlp(X, y, cfg: TrainConfig, hidden=DEFAULT_HIDDEN,
              dropout_rate: float = 0.2):
    """Train on X, y with a 20% validation holdout.

    Returns (model, history); history holds one record per epoch with
    training loss and validation loss/error. Raises DivergenceError
    (carrying the partial history) if the loss leaves the reals.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] != y.size:
        raise DimensionError(f"{X.shape[0]} rows vs {y.size} labels")
    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = validation_split(X.shape[0], 0.2, rng)
    model = init_mlp(X.shape[1], hidden=hidden, dropout_rate=dropout_rate,
                     l2=cfg.l2, seed=cfg.seed)
    params = param_dict(model)
    opt = Adam()
    history = []
    lr = cfg.lr0
    for epoch in range(cfg.epochs):
        order = rng.permutation(train_idx)
        batch_losses = []
        for off in range(0, order.size, cfg.batch):
            idx = order[off:off + cfg.batch]
            loss, grads = loss_and_grads(model, X[idx], y[idx], dropout_rng=rng)
            check_finite_loss(loss, history)
            batch_losses.append(loss)
            opt.step(params, grads, lr)
        val_p = forward_matrix(model, X[val_idx]) if val_idx.size else np.empty(0)
        val_loss = bce_loss_batch(val_p, y[val_idx]) if val_idx.size else float("nan")
        val_err = float(((val_p >= 0.5) != (y[val_idx] >= 0.5)).mean()) if val_idx.size else float("nan")
        history.append({
            "epoch": epoch,
            "lr": lr,
            "train_loss": float(np.mean(batch_losses)) if batch_losses else float("nan"),
            "val_loss": val_loss,
            "val_error": val_err,
        })
        lr *= cfg.lr_decay
    return model, history
