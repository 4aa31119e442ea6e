"""Dense-tensor MLP core: parameters, forward/backward, and losses.

Everything is float64 numpy.  Parameters live in a ParamSet whose entries
pair a value tensor with a gradient tensor of the same shape; bias vectors
are stored as single-column matrices so the optimizer sees a uniform
2-D interface, with ``is_matrix`` distinguishing true weight matrices
(eligible for gradient centralization) from bias-like entries.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

__all__ = [
    "MlpConfig",
    "LossConfig",
    "ParamEntry",
    "ParamSet",
    "mlp_init",
    "mlp_forward",
    "softmax",
    "entropy_regularized_loss",
    "mlp_backward",
    "finite_diff_check",
]


@dataclass(frozen=True)
class MlpConfig:
    """Two-layer ReLU MLP dimensions plus the init seed."""

    input_dim: int
    hidden_dim: int
    num_classes: int
    seed: int = 0

    def __post_init__(self) -> None:
        for field in ("input_dim", "hidden_dim", "num_classes"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1")


@dataclass(frozen=True)
class LossConfig:
    """Entropy-regularized cross-entropy settings."""

    entropy_weight: float = 0.01

    def __post_init__(self) -> None:
        if self.entropy_weight < 0.0:
            raise ValueError("entropy_weight must be >= 0")


@dataclass
class ParamEntry:
    name: str
    value: np.ndarray
    grad: np.ndarray
    is_matrix: bool


class ParamSet:
    """Ordered, named parameter tensors with paired gradients."""

    def __init__(self, entries: Sequence[ParamEntry]):
        names = [e.name for e in entries]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names: {names}")
        for e in entries:
            if e.value.ndim != 2 or e.grad.ndim != 2:
                raise ValueError(f"parameter '{e.name}' must be 2-D")
            if e.value.shape != e.grad.shape:
                raise ValueError(
                    f"parameter '{e.name}': grad shape {e.grad.shape} "
                    f"!= value shape {e.value.shape}"
                )
        self.entries = list(entries)

    def __iter__(self) -> Iterator[ParamEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, name: str) -> ParamEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def num_scalars(self) -> int:
        return sum(e.value.size for e in self.entries)

    def zero_grads(self) -> None:
        for e in self.entries:
            e.grad[:] = 0.0

    def flat_grads(self) -> np.ndarray:
        """Concatenated gradients in entry order (copy)."""
        return np.concatenate([e.grad.ravel() for e in self.entries])

    def flat_values(self) -> np.ndarray:
        return np.concatenate([e.value.ravel() for e in self.entries])

    def copy(self) -> "ParamSet":
        return ParamSet(
            [
                ParamEntry(e.name, e.value.copy(), e.grad.copy(), e.is_matrix)
                for e in self.entries
            ]
        )

    def checksum(self) -> str:
        """SHA-256 over the raw value bytes, for run-identity assertions."""
        h = hashlib.sha256()
        for e in self.entries:
            h.update(e.name.encode())
            h.update(np.ascontiguousarray(e.value).tobytes())
        return h.hexdigest()


def mlp_init(cfg: MlpConfig) -> ParamSet:
    """Seeded init: weights uniform in +-1/sqrt(fan_in), biases zero."""
    rng = np.random.default_rng(cfg.seed)
    b1 = 1.0 / np.sqrt(cfg.input_dim)
    b2 = 1.0 / np.sqrt(cfg.hidden_dim)
    w1 = rng.uniform(-b1, b1, size=(cfg.hidden_dim, cfg.input_dim))
    w2 = rng.uniform(-b2, b2, size=(cfg.num_classes, cfg.hidden_dim))
    entries = [
        ParamEntry("w1", w1, np.zeros_like(w1), True),
        ParamEntry("b1", np.zeros((cfg.hidden_dim, 1)), np.zeros((cfg.hidden_dim, 1)), False),
        ParamEntry("w2", w2, np.zeros_like(w2), True),
        ParamEntry("b2", np.zeros((cfg.num_classes, 1)), np.zeros((cfg.num_classes, 1)), False),
    ]
    return ParamSet(entries)


def _hidden_pre(params: ParamSet, x: np.ndarray) -> np.ndarray:
    w1 = params["w1"].value
    b1 = params["b1"].value
    if x.ndim != 2 or x.shape[1] != w1.shape[1]:
        raise ValueError(
            f"input shape {x.shape} incompatible with w1 {w1.shape}"
        )
    return x @ w1.T + b1.ravel()


def mlp_forward(params: ParamSet, x: np.ndarray) -> np.ndarray:
    """Logits of the two-layer ReLU MLP for a (batch, input_dim) batch."""
    h = np.maximum(_hidden_pre(params, x), 0.0)
    return h @ params["w2"].value.T + params["b2"].value.ravel()


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return shifted - lse


def entropy_regularized_loss(
    logits: np.ndarray, labels: np.ndarray, cfg: LossConfig
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy minus entropy_weight times the mean predictive
    entropy, with the exact analytic gradient w.r.t. the logits.

    The entropy gradient goes through the softmax Jacobian:
    d(-H_i)/dz_ij = p_ij * (log p_ij + H_i).
    """
    labels = np.asarray(labels)
    batch, k = logits.shape
    if labels.shape != (batch,):
        raise ValueError(f"labels shape {labels.shape} != ({batch},)")
    if labels.min() < 0 or labels.max() >= k:
        bad = labels[(labels < 0) | (labels >= k)][0]
        raise ValueError(f"label {bad} out of range [0, {k})")

    logp = _log_softmax(logits)
    p = np.exp(logp)
    ce = -logp[np.arange(batch), labels].mean()
    ent_per_sample = -(p * logp).sum(axis=1)
    lam = cfg.entropy_weight
    loss = ce - lam * ent_per_sample.mean()

    grad = p.copy()
    grad[np.arange(batch), labels] -= 1.0
    grad += lam * p * (logp + ent_per_sample[:, None])
    grad /= batch
    return float(loss), grad


def mlp_backward(params: ParamSet, x: np.ndarray, dloss_dlogits: np.ndarray) -> None:
    """Write exact parameter gradients for the given upstream logit grads.

    Recomputes the forward activations, so no state from mlp_forward is
    required beyond the same x.  Gradients are overwritten, not accumulated.
    """
    pre = _hidden_pre(params, x)
    h = np.maximum(pre, 0.0)
    w2 = params["w2"].value
    if dloss_dlogits.shape != (x.shape[0], w2.shape[0]):
        raise ValueError(
            f"dloss_dlogits shape {dloss_dlogits.shape} != "
            f"({x.shape[0]}, {w2.shape[0]})"
        )
    params["w2"].grad[:] = dloss_dlogits.T @ h
    params["b2"].grad[:] = dloss_dlogits.sum(axis=0)[:, None]
    dh = dloss_dlogits @ w2
    dpre = dh * (pre > 0.0)
    params["w1"].grad[:] = dpre.T @ x
    params["b1"].grad[:] = dpre.sum(axis=0)[:, None]


def finite_diff_check(
    params: ParamSet,
    loss_fn: Callable[[ParamSet], float],
    step: float,
) -> float:
    """Worst relative error between stored grads and central differences.

    Checks every coordinate when there are at most 200, otherwise a
    seeded sample of 200.  Relative error uses the denominator
    max(|analytic|, |numeric|, 1e-8).
    """
    if step <= 0.0:
        raise ValueError("step must be > 0")
    coords = [
        (i, r, c)
        for i, e in enumerate(params.entries)
        for r in range(e.value.shape[0])
        for c in range(e.value.shape[1])
    ]
    if len(coords) > 200:
        rng = np.random.default_rng(202)
        picks = rng.choice(len(coords), size=200, replace=False)
        coords = [coords[int(i)] for i in sorted(picks)]

    worst = 0.0
    for i, r, c in coords:
        entry = params.entries[i]
        orig = entry.value[r, c]
        entry.value[r, c] = orig + step
        plus = loss_fn(params)
        entry.value[r, c] = orig - step
        minus = loss_fn(params)
        entry.value[r, c] = orig
        numeric = (plus - minus) / (2.0 * step)
        analytic = entry.grad[r, c]
        denom = max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic - numeric) / denom)
    return worst
