"""Training configuration, loss and the Adam update rule."""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DivergenceError

BCE_EPS = 1e-12


@dataclass
class TrainConfig:
    """Shared hyperparameters for the gradient-trained classifiers."""

    lr0: float = 0.001
    lr_decay: float = 0.99
    batch: int = 64
    epochs: int = 1000
    l2: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ConfigError(f"lr_decay must be in (0, 1], got {self.lr_decay}")
        if self.batch < 1 or self.epochs < 1:
            raise ConfigError("batch and epochs must be >= 1")


def bce_loss(p, y) -> float:
    """Binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    p = min(max(float(p), BCE_EPS), 1.0 - BCE_EPS)
    y = float(y)
    return -y * math.log(p) - (1.0 - y) * math.log(1.0 - p)


def bce_loss_batch(p: np.ndarray, y: np.ndarray) -> float:
    p = np.clip(np.asarray(p, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    y = np.asarray(y, dtype=np.float64)
    return float(np.mean(-y * np.log(p) - (1.0 - y) * np.log(1.0 - p)))


class Adam:
    """Adam with the standard moment defaults (b1=0.9, b2=0.999, eps=1e-8)."""

    def __init__(self, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
             lr: float):
        """Update every parameter array in place."""
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        correction1 = 1.0 - b1 ** self.t
        correction2 = 1.0 - b2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self._m.setdefault(name, np.zeros_like(p))
            v = self._v.setdefault(name, np.zeros_like(p))
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            p -= lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm."""
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm and total > 0:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return total


def check_finite_loss(loss: float, history: list):
    if not math.isfinite(loss):
        raise DivergenceError(f"loss became non-finite ({loss})", history=history)


def uniform_fanin(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    """Uniform init scaled by 1/sqrt(fan_in)."""
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def validation_split(n: int, fraction: float, rng: np.random.Generator):
    """Deterministic (train_idx, val_idx) split; val gets ceil(fraction*n)."""
    perm = rng.permutation(n)
    n_val = max(1, int(math.ceil(fraction * n))) if n > 1 else 0
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])
