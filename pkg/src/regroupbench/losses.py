"""Multiclass training losses with analytic gradients: CE, inverse-frequency
weighted CE, focal, and LDAM (margin) loss.

All functions accept a 1-D logit vector; the batch variants used by the
trainer take an (n, C) matrix and a label vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("ce", "wce", "focal", "ldam")


class LossError(ValueError):
    """Raised for invalid loss configuration or inputs."""


@dataclass(frozen=True)
class LossSpec:
    """Which loss to use and its hyperparameters.

    class_counts is required for wce and ldam. Defaults follow the standard
    choices from the focal/LDAM literature: gamma=2, margins normalized so
    the largest per-class margin is 0.5, logit scale 30.
    """

    kind: str = "ce"
    class_counts: tuple[int, ...] | None = None
    gamma: float = 2.0
    margin_scale: float = 0.5
    logit_scale: float = 30.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise LossError(f"unknown loss kind {self.kind!r}; expected one of {KINDS}")
        if self.kind in ("wce", "ldam"):
            if self.class_counts is None or any(c < 1 for c in self.class_counts):
                raise LossError(f"{self.kind} needs strictly positive class_counts")
        if self.gamma < 0:
            raise LossError("gamma must be >= 0")
        if self.margin_scale < 0 or self.logit_scale <= 0:
            raise LossError("margin_scale must be >= 0 and logit_scale > 0")
        if self.class_counts is not None:
            object.__setattr__(self, "class_counts", tuple(int(c) for c in self.class_counts))

    def class_weights(self) -> np.ndarray:
        """Inverse-frequency weights w_c = n / (C * n_c), mean-one over samples."""
        counts = np.asarray(self.class_counts, dtype=np.float64)
        return counts.sum() / (len(counts) * counts)

    def margins(self) -> np.ndarray:
        """Per-class margins proportional to n_c^(-1/4), scaled so the
        largest margin equals margin_scale."""
        counts = np.asarray(self.class_counts, dtype=np.float64)
        raw = counts ** -0.25
        return self.margin_scale * raw / raw.max()


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    z = np.asarray(logits, dtype=np.float64)
    if np.any(np.isnan(z)):
        raise LossError("NaN logits")
    z = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=-1, keepdims=True)
    return z - np.log(np.sum(np.exp(z), axis=-1, keepdims=True))


def batch_loss_values(logits: np.ndarray, labels: np.ndarray, spec: LossSpec) -> np.ndarray:
    """Per-sample loss values for an (n, C) logit matrix."""
    Z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    n, C = Z.shape
    if np.any(y < 0) or np.any(y >= C):
        raise LossError(f"label out of range for {C} classes")
    if not np.all(np.isfinite(Z)):
        raise LossError("non-finite logits")
    rows = np.arange(n)
    if spec.kind == "ldam":
        Zadj = Z.copy()
        Zadj[rows, y] -= spec.margins()[y]
        return -_log_softmax(spec.logit_scale * Zadj)[rows, y]
    logp = _log_softmax(Z)[rows, y]
    if spec.kind == "ce":
        return -logp
    if spec.kind == "wce":
        return -spec.class_weights()[y] * logp
    # focal
    p = np.exp(logp)
    return -((1.0 - p) ** spec.gamma) * logp


def batch_loss_gradients(logits: np.ndarray, labels: np.ndarray, spec: LossSpec) -> np.ndarray:
    """Per-sample gradients d loss / d logits, shape (n, C)."""
    Z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    n, C = Z.shape
    if np.any(y < 0) or np.any(y >= C):
        raise LossError(f"label out of range for {C} classes")
    rows = np.arange(n)
    onehot = np.zeros((n, C))
    onehot[rows, y] = 1.0
    if spec.kind == "ldam":
        Zadj = Z.copy()
        Zadj[rows, y] -= spec.margins()[y]
        return spec.logit_scale * (softmax(spec.logit_scale * Zadj) - onehot)
    P = softmax(Z)
    if spec.kind == "ce":
        return P - onehot
    if spec.kind == "wce":
        return spec.class_weights()[y][:, None] * (P - onehot)
    # focal: dL/dp_y * dp_y/dz, with dp_y/dz_j = p_y (1{j=y} - p_j)
    if spec.gamma == 0:  # degenerates to CE; avoids 0 * inf at p_y = 1
        return P - onehot
    py = P[rows, y]
    one_minus = 1.0 - py
    logpy = np.log(py)
    dL_dpy = spec.gamma * one_minus ** (spec.gamma - 1.0) * logpy - one_minus ** spec.gamma / py
    return (dL_dpy * py)[:, None] * (onehot - P)


def loss_value(logits, label: int, spec: LossSpec) -> float:
    """Loss for a single sample (1-D logits)."""
    return float(batch_loss_values(np.asarray(logits)[None, :], [label], spec)[0])


def loss_gradient(logits, label: int, spec: LossSpec) -> np.ndarray:
    """Analytic gradient of loss_value w.r.t. the logits."""
    return batch_loss_gradients(np.asarray(logits)[None, :], [label], spec)[0]
