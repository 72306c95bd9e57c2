"""Experiment runner: configure a dataset and a set of methods, run a seeded
method x seed grid, and persist per-run metric rows plus an aggregate table.

Pipeline per cell: load/generate -> stratified split -> standardize with
train statistics -> method-specific transform (resample or regroup) ->
train -> predict on test -> metrics. Test data never influences any fitted
statistic before final evaluation.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dataset import (
    Dataset,
    GaussianComponent,
    MixtureSpec,
    generate_imbalanced_mixture,
    load_csv_dataset,
    standardize,
    stratified_split,
)
from .losses import LossSpec
from .metrics import confusion_table, per_class_ap, summary_metrics
from .regrouping import collapse_proba_matrix, compute_k, regroup_binary, regroup_multiclass
from .resampling import ResampleSpec, resample
from .trainer import MlpSpec, TrainConfig, predict_proba, train

METHOD_NAMES = ("CE", "WCE", "Focal", "LDAM", "ROS+CE", "RUS+CE", "SMOTE+CE", "RG+CE")

RESULTS_HEADER = (
    "method,seed,accuracy,balanced_accuracy,macro_ap,ap_per_class,K,train_size,"
    "config_hash,wall_time_s,error"
)


class HarnessError(ValueError):
    """Raised for invalid experiment configuration."""


@dataclass(frozen=True)
class MethodKind:
    name: str
    gamma: float = 2.0            # Focal
    margin_scale: float = 0.5     # LDAM
    logit_scale: float = 30.0     # LDAM
    k_neighbors: int = 5          # SMOTE
    k_override: int | None = None  # RG+CE: force K instead of the imbalance-ratio rule

    def __post_init__(self):
        if self.name not in METHOD_NAMES:
            raise HarnessError(f"unknown method {self.name!r}; expected one of {METHOD_NAMES}")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: dict                       # {"builtin": ...} | {"csv": ...} | {"mixture": ...}
    methods: tuple[MethodKind, ...]
    seeds: tuple[int, ...]
    test_fraction: float = 0.2
    standardize: bool = True
    hidden_dims: tuple[int, ...] = (32,)
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: str = "out"

    def __post_init__(self):
        if not self.methods or not self.seeds:
            raise HarnessError("need at least one method and one seed")
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        object.__setattr__(self, "hidden_dims", tuple(int(d) for d in self.hidden_dims))


@dataclass(frozen=True)
class ResultRow:
    method: str
    seed: int
    accuracy: float | None
    balanced_accuracy: float | None
    macro_ap: float | None
    ap_per_class: tuple[float | None, ...]
    k_groups: int | None
    train_size: int | None
    config_hash: str
    wall_time_s: float
    error: str = ""

    def to_csv_line(self) -> str:
        def fmt(v):
            return "" if v is None else repr(float(v))

        ap_cell = ";".join("" if a is None else repr(float(a)) for a in self.ap_per_class)
        return ",".join(
            [
                self.method,
                str(self.seed),
                fmt(self.accuracy),
                fmt(self.balanced_accuracy),
                fmt(self.macro_ap),
                ap_cell,
                "" if self.k_groups is None else str(self.k_groups),
                "" if self.train_size is None else str(self.train_size),
                self.config_hash,
                f"{self.wall_time_s:.6f}",
                self.error.replace(",", ";").replace("\n", " "),
            ]
        )


def rg_favorable_mixture(seed: int = 0) -> MixtureSpec:
    """Minority blob at the center of a ring of 5 majority blobs: the
    majority is a latent mixture, the setting regrouping is built for."""
    ring = []
    for j in range(5):
        angle = 2.0 * math.pi * j / 5
        ring.append(
            GaussianComponent((3.0 * math.cos(angle), 3.0 * math.sin(angle)), 0.5, 180)
        )
    return MixtureSpec(GaussianComponent((0.0, 0.0), 0.5, 100), tuple(ring), seed=seed)


def overlap_mixture(seed: int = 0) -> MixtureSpec:
    """Heavy-overlap variant: the minority blob sits inside one majority
    mode, so recall-oriented methods trade precision away."""
    ring = []
    for j in range(5):
        angle = 2.0 * math.pi * j / 5
        ring.append(
            GaussianComponent((3.0 * math.cos(angle), 3.0 * math.sin(angle)), 0.5, 180)
        )
    minority = GaussianComponent((3.0, 0.0), 0.5, 100)  # on top of component 0
    return MixtureSpec(minority, tuple(ring), seed=seed)


BUILTIN_FAMILIES = {"rg-favorable": rg_favorable_mixture, "overlap": overlap_mixture}


def _mixture_from_dict(d: dict) -> MixtureSpec:
    def comp(c):
        return GaussianComponent(tuple(c["mean"]), float(c["stddev"]), int(c["count"]))

    return MixtureSpec(
        comp(d["minority"]),
        tuple(comp(c) for c in d["majority_components"]),
        seed=int(d.get("seed", 0)),
    )


def load_source(source: dict, seed: int) -> Dataset:
    """Materialize the configured dataset. For synthetic sources the run
    seed offsets the mixture seed so different seeds draw fresh data."""
    if "csv" in source:
        return load_csv_dataset(source["csv"], source.get("label_column", "label"))
    if "builtin" in source:
        name = source["builtin"]
        if name not in BUILTIN_FAMILIES:
            raise HarnessError(f"unknown builtin family {name!r}")
        spec = BUILTIN_FAMILIES[name]()
    elif "mixture" in source:
        spec = _mixture_from_dict(source["mixture"])
    else:
        raise HarnessError(f"dataset source must have csv, builtin, or mixture key: {source}")
    return generate_imbalanced_mixture(replace(spec, seed=spec.seed + seed))


def config_hash(cfg: ExperimentConfig) -> str:
    doc = {
        "dataset": cfg.dataset,
        "methods": [vars(m) for m in cfg.methods],
        "seeds": list(cfg.seeds),
        "test_fraction": cfg.test_fraction,
        "standardize": cfg.standardize,
        "hidden_dims": list(cfg.hidden_dims),
        "train": vars(cfg.train),
    }
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def run_experiment(cfg: ExperimentConfig, method: MethodKind, seed: int) -> ResultRow:
    """One grid cell; deterministic in (cfg, method, seed) except wall time."""
    start = time.perf_counter()
    ds = load_source(cfg.dataset, seed)
    train_ds, test_ds = stratified_split(ds, cfg.test_fraction, seed)
    if cfg.standardize:
        train_ds, (test_ds,), _, _ = standardize(train_ds, [test_ds])
    num_classes = ds.num_classes
    tcfg = replace(cfg.train, shuffle_seed=seed + 1)

    k_groups = None
    counts = train_ds.class_counts
    if method.name == "CE":
        loss = LossSpec("ce")
        fit_ds = train_ds
    elif method.name == "WCE":
        loss = LossSpec("wce", class_counts=counts)
        fit_ds = train_ds
    elif method.name == "Focal":
        loss = LossSpec("focal", gamma=method.gamma)
        fit_ds = train_ds
    elif method.name == "LDAM":
        loss = LossSpec(
            "ldam",
            class_counts=counts,
            margin_scale=method.margin_scale,
            logit_scale=method.logit_scale,
        )
        fit_ds = train_ds
    elif method.name in ("ROS+CE", "RUS+CE", "SMOTE+CE"):
        kind = {"ROS+CE": "ros", "RUS+CE": "rus", "SMOTE+CE": "smote"}[method.name]
        loss = LossSpec("ce")
        fit_ds = resample(
            train_ds, ResampleSpec(kind, seed=seed + 2, k_neighbors=method.k_neighbors)
        )
    else:  # RG+CE
        loss = LossSpec("ce")
        if num_classes == 2:
            K = method.k_override or compute_k(counts[1], counts[0])
            fit_ds, plan = regroup_binary(train_ds, K, seed + 2)
            k_groups = K
        else:
            fit_ds, plan = regroup_multiclass(train_ds, seed + 2)
            k_groups = plan.pseudo_num_classes

    output_dim = fit_ds.num_classes
    spec = MlpSpec(train_ds.dim, output_dim, cfg.hidden_dims, init_seed=seed)
    model, _ = train(fit_ds, spec, loss, tcfg)

    proba = predict_proba(model, test_ds.features)
    if method.name == "RG+CE":
        pred, scores = collapse_proba_matrix(proba, plan)
    else:
        pred, scores = np.argmax(proba, axis=1), proba

    ct = confusion_table(test_ds.labels, pred, num_classes=num_classes)
    report = summary_metrics(ct)
    aps, macro = per_class_ap(test_ds.labels, scores)
    return ResultRow(
        method=method.name,
        seed=seed,
        accuracy=report.accuracy,
        balanced_accuracy=report.balanced_accuracy,
        macro_ap=macro,
        ap_per_class=aps,
        k_groups=k_groups,
        train_size=fit_ds.n,
        config_hash=config_hash(cfg),
        wall_time_s=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class AggregateLine:
    method: str
    n_runs: int
    mean_minority_ap: float
    std_minority_ap: float
    mean_macro_ap: float
    std_macro_ap: float
    mean_ba: float
    std_ba: float
    mean_accuracy: float
    std_accuracy: float


def aggregate(rows: list[ResultRow], methods: tuple[MethodKind, ...]) -> list[AggregateLine]:
    """Mean and population std over seeds, per method, config order.
    Failed cells are skipped; methods with no successful run are omitted."""
    lines = []
    for m in methods:
        ok = [r for r in rows if r.method == m.name and not r.error]
        if not ok:
            continue

        def stats(vals):
            a = np.array(vals, dtype=np.float64)
            return float(a.mean()), float(a.std())

        min_ap = stats([r.ap_per_class[0] for r in ok])
        mac = stats([r.macro_ap for r in ok])
        ba = stats([r.balanced_accuracy for r in ok])
        acc = stats([r.accuracy for r in ok])
        lines.append(AggregateLine(m.name, len(ok), *min_ap, *mac, *ba, *acc))
    return lines


def run_grid(cfg: ExperimentConfig):
    """Run the full method x seed grid in config order. Failed cells are
    recorded with their error string and the grid continues."""
    rows = []
    chash = config_hash(cfg)
    for method in cfg.methods:
        for seed in cfg.seeds:
            try:
                rows.append(run_experiment(cfg, method, seed))
            except Exception as exc:  # record and continue
                rows.append(
                    ResultRow(
                        method.name, seed, None, None, None, (), None, None, chash, 0.0,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
    return rows, aggregate(rows, cfg.methods)


def write_results(rows, aggregates, out_dir) -> tuple[Path, Path]:
    """Persist results.csv (one row per cell) and a human-readable
    summary.txt with the mean +- std table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results = out / "results.csv"
    with results.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(RESULTS_HEADER + "\n")
        for r in rows:
            fh.write(r.to_csv_line() + "\n")

    summary = out / "summary.txt"
    with summary.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"{'method':<10} {'runs':>4} {'minority AP':>16} {'macro AP':>16} "
            f"{'bal. acc':>16} {'accuracy':>16}\n"
        )
        for a in aggregates:
            fh.write(
                f"{a.method:<10} {a.n_runs:>4}"
                f" {a.mean_minority_ap:.4f} +- {a.std_minority_ap:.4f}"
                f" {a.mean_macro_ap:.4f} +- {a.std_macro_ap:.4f}"
                f" {a.mean_ba:.4f} +- {a.std_ba:.4f}"
                f" {a.mean_accuracy:.4f} +- {a.std_accuracy:.4f}\n"
            )
    return results, summary


def load_config(path) -> ExperimentConfig:
    """Read an experiment config from JSON with keys matching
    ExperimentConfig fields."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    methods = tuple(MethodKind(**m) for m in doc["methods"])
    train_kwargs = doc.get("train", {})
    return ExperimentConfig(
        dataset=doc["dataset"],
        methods=methods,
        seeds=tuple(doc["seeds"]),
        test_fraction=float(doc.get("test_fraction", 0.2)),
        standardize=bool(doc.get("standardize", True)),
        hidden_dims=tuple(doc.get("hidden_dims", [32])),
        train=TrainConfig(**train_kwargs),
        output_dir=doc.get("output_dir", "out"),
    )
