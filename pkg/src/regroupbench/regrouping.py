"""Pseudo-label regrouping: split majority classes into clusters so an
imbalanced problem becomes a near-balanced multiclass one.

Pseudo id 0 is always the positive/minority class in the binary procedure;
majority clusters take ids 1..K in canonical (lexicographic-centroid) order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import KMeansModel, kmeans_fit
from .dataset import Dataset


class RegroupError(ValueError):
    """Raised for invalid regrouping inputs."""


def _round_half_even(x: float) -> int:
    return int(round(x))


def compute_k(n_majority: int, n_minority: int) -> int:
    """Number of majority clusters = imbalance ratio, round-half-to-even,
    floored at 1."""
    if n_majority < 1 or n_minority < 1:
        raise RegroupError("class counts must be >= 1")
    return max(1, _round_half_even(n_majority / n_minority))


@dataclass(frozen=True)
class RegroupPlan:
    """Bidirectional map between original classes and pseudo-label ids.

    Original class c owns the contiguous pseudo id block
    [offset_c, offset_c + group_counts[c]); classes split into more than one
    group carry the k-means model that produced the split.
    """

    group_counts: tuple[int, ...]
    cluster_models: dict[int, KMeansModel] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if any(g < 1 for g in self.group_counts):
            raise RegroupError("every group count must be >= 1")
        offsets = np.concatenate([[0], np.cumsum(self.group_counts)])
        original = np.concatenate(
            [np.full(g, c, dtype=np.int64) for c, g in enumerate(self.group_counts)]
        )
        object.__setattr__(self, "_offsets", offsets)
        object.__setattr__(self, "_original_of", original)

    @property
    def original_num_classes(self) -> int:
        return len(self.group_counts)

    @property
    def pseudo_num_classes(self) -> int:
        return int(self._offsets[-1])

    def pseudo_of(self, original_class: int, group: int) -> int:
        if not 0 <= original_class < self.original_num_classes:
            raise RegroupError(f"invalid class {original_class}")
        if not 0 <= group < self.group_counts[original_class]:
            raise RegroupError(f"class {original_class} has no group {group}")
        return int(self._offsets[original_class]) + group

    def original_of(self, pseudo_id: int) -> int:
        if not 0 <= pseudo_id < self.pseudo_num_classes:
            raise RegroupError(f"invalid pseudo id {pseudo_id}")
        return int(self._original_of[pseudo_id])

    def pseudo_ids_of(self, original_class: int) -> range:
        lo = int(self._offsets[original_class])
        return range(lo, lo + self.group_counts[original_class])


def _regroup(train: Dataset, group_counts: list[int], seed: int) -> tuple[Dataset, RegroupPlan]:
    models: dict[int, KMeansModel] = {}
    warnings: list[str] = []
    pseudo = np.empty(train.n, dtype=np.int64)
    offset = 0
    for c, g in enumerate(group_counts):
        idx = np.flatnonzero(train.labels == c)
        rows = train.features[idx]
        if g > 1:
            n_distinct = np.unique(rows, axis=0).shape[0]
            if g > n_distinct:
                warnings.append(
                    f"class {c}: requested {g} groups but only {n_distinct} distinct rows; clamped"
                )
                g = n_distinct
                group_counts[c] = g
        if g > 1:
            model = kmeans_fit(rows, g, seed=seed + c)
            models[c] = model
            pseudo[idx] = offset + model.assignments
        else:
            pseudo[idx] = offset
        offset += g
    plan = RegroupPlan(tuple(group_counts), models, tuple(warnings))
    return train.with_labels(pseudo), plan


def regroup_binary(train: Dataset, K: int, seed: int) -> tuple[Dataset, RegroupPlan]:
    """Minority (class 0) keeps pseudo label 0; majority (class 1) is split
    into K clusters taking pseudo labels 1..K. K=1 is a label-preserving
    identity."""
    if train.num_classes != 2:
        raise RegroupError(f"binary regrouping needs 2 classes, got {train.num_classes}")
    if K < 1:
        raise RegroupError(f"K must be >= 1, got {K}")
    return _regroup(train, [1, K], seed)


def regroup_multiclass(train: Dataset, seed: int) -> tuple[Dataset, RegroupPlan]:
    """Every class gets max(1, round-half-to-even(count_c / min count))
    groups; group counts exceeding a class's distinct-row count are clamped
    with a warning recorded in the plan."""
    if train.num_classes < 2:
        raise RegroupError("need >= 2 classes")
    min_count = min(train.class_counts)
    groups = [max(1, _round_half_even(c / min_count)) for c in train.class_counts]
    return _regroup(train, groups, seed)


def _check_probs(pseudo_probs, plan: RegroupPlan) -> np.ndarray:
    p = np.asarray(pseudo_probs, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] != plan.pseudo_num_classes:
        raise RegroupError(
            f"expected {plan.pseudo_num_classes} probabilities, got shape {p.shape}"
        )
    if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-6:
        raise RegroupError("malformed probability vector")
    return p


def binarize_prediction(pseudo_probs, plan: RegroupPlan) -> tuple[int, float]:
    """Hard label is positive (0) iff the pseudo argmax is pseudo id 0
    (ties go to the lowest index); the ranking score for AP is the
    probability mass on pseudo class 0."""
    p = _check_probs(pseudo_probs, plan)
    label = 0 if int(np.argmax(p)) == 0 else 1
    return label, float(p[0])


def collapse_prediction_multiclass(pseudo_probs, plan: RegroupPlan) -> tuple[int, np.ndarray]:
    """Predicted original class = owner of the pseudo argmax; per-class
    scores = summed group probabilities (sums to 1)."""
    p = _check_probs(pseudo_probs, plan)
    scores = np.array(
        [p[list(plan.pseudo_ids_of(c))].sum() for c in range(plan.original_num_classes)]
    )
    return plan.original_of(int(np.argmax(p))), scores


def collapse_proba_matrix(pseudo_proba: np.ndarray, plan: RegroupPlan):
    """Vectorized collapse of an (n, pseudo_C) probability matrix.

    Returns (predicted original labels, (n, original_C) score matrix).
    """
    P = np.asarray(pseudo_proba, dtype=np.float64)
    pred = plan._original_of[np.argmax(P, axis=1)]
    scores = np.column_stack(
        [P[:, list(plan.pseudo_ids_of(c))].sum(axis=1) for c in range(plan.original_num_classes)]
    )
    return pred, scores


def save_plan_json(plan: RegroupPlan, path):
    """Audit dump: group structure plus centroids of every split class."""
    doc = {
        "original_num_classes": plan.original_num_classes,
        "pseudo_num_classes": plan.pseudo_num_classes,
        "group_counts": list(plan.group_counts),
        "pseudo_to_original": [plan.original_of(p) for p in range(plan.pseudo_num_classes)],
        "warnings": list(plan.warnings),
        "centroids": {
            str(c): model.centroids.tolist() for c, model in plan.cluster_models.items()
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
