"""Acceptance suite: one test per criterion, each printing a PASS line with
its measured numbers. Run with `pytest tests/test_acceptance.py -s -v`."""
import time

import numpy as np
import pytest

from regroupbench.dataset import generate_imbalanced_mixture
from regroupbench.clustering import kmeans_fit
from regroupbench.harness import (
    ExperimentConfig,
    MethodKind,
    rg_favorable_mixture,
    run_experiment,
    run_grid,
    write_results,
)
from regroupbench.losses import LossSpec, batch_loss_values, loss_gradient, loss_value
from regroupbench.metrics import average_precision, confusion_table, summary_metrics
from regroupbench.regrouping import regroup_binary
from regroupbench.trainer import MlpSpec, TrainConfig, batch_gradients, init_params, train
from test_metrics import brute_force_ap


def linear_cfg(builtin):
    """Acceptance experiments use the linear hypothesis class: the ring
    family is not linearly separable as a binary problem, which is exactly
    the regime where regrouping restores separability."""
    return ExperimentConfig(
        dataset={"builtin": builtin},
        methods=(MethodKind("CE"),),
        seeds=(0,),
        hidden_dims=(),
        train=TrainConfig(),
    )


def test_criterion_1_gradient_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    counts = (40, 160, 90)
    specs = [
        LossSpec("ce"),
        LossSpec("wce", class_counts=counts),
        LossSpec("focal", gamma=2.0),
        LossSpec("ldam", class_counts=counts),
    ]
    h = 1e-5
    worst_loss = 0.0
    for spec in specs:
        for _ in range(100):
            z = rng.standard_normal(3) * 3
            y = int(rng.integers(3))
            analytic = loss_gradient(z, y, spec)
            numeric = np.array(
                [
                    (
                        loss_value(z + h * np.eye(3)[j], y, spec)
                        - loss_value(z - h * np.eye(3)[j], y, spec)
                    )
                    / (2 * h)
                    for j in range(3)
                ]
            )
            rel = np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-4)
            worst_loss = max(worst_loss, rel)
            assert rel < 1e-5, spec.kind

    worst_net = 0.0
    for trial in range(10):
        spec = MlpSpec(3, 3, (5, 4), init_seed=trial)
        weights, biases = init_params(spec)
        X = rng.standard_normal((6, 3))
        y = rng.integers(3, size=6)
        loss = LossSpec("ce")
        _, gw, gb = batch_gradients(X, y, weights, biases, loss)

        def full_loss():
            from regroupbench.trainer import _forward

            logits, _ = _forward(X, weights, biases)
            return batch_loss_values(logits, y, loss).mean()

        for params, grads in ((weights, gw), (biases, gb)):
            for layer, grad in zip(params, grads):
                flat, gflat = layer.reshape(-1), grad.reshape(-1)
                for idx in range(flat.size):
                    orig = flat[idx]
                    flat[idx] = orig + h
                    up = full_loss()
                    flat[idx] = orig - h
                    down = full_loss()
                    flat[idx] = orig
                    numeric = (up - down) / (2 * h)
                    rel = abs(gflat[idx] - numeric) / max(abs(numeric), 1e-4)
                    worst_net = max(worst_net, rel)
                    assert rel < 1e-4

    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(
        f"\nPASS criterion 1: gradient oracle (loss rel {worst_loss:.2e}, "
        f"net rel {worst_net:.2e}, {elapsed:.1f}s)"
    )


def test_criterion_2_ap_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(1)
    for trial in range(500):
        n = int(rng.integers(2, 201))
        y = rng.integers(2, size=n)
        if y.sum() == 0:
            y[int(rng.integers(n))] = 1
        # mix of continuous and heavily tied score vectors
        s = rng.random(n) if trial % 2 else np.round(rng.random(n), 1)
        assert average_precision(y, s) == pytest.approx(brute_force_ap(y, s), abs=1e-12)
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    print(f"\nPASS criterion 2: AP equals brute-force oracle on 500 instances ({elapsed:.1f}s)")


def test_criterion_3_metric_identities():
    r = summary_metrics(confusion_table([0] * 3 + [1] * 7, [0, 0, 1, 0, 1, 1, 1, 1, 1, 1]))
    # TP=2 FP=1 FN=1 TN=6
    assert r.precision[0] == pytest.approx(2 / 3, abs=1e-12)
    assert r.recall[0] == pytest.approx(2 / 3, abs=1e-12)
    assert r.f1[0] == pytest.approx(2 / 3, abs=1e-12)
    assert r.accuracy == pytest.approx(0.8, abs=1e-12)
    assert r.balanced_accuracy == pytest.approx((2 / 3 + 6 / 7) / 2, abs=1e-12)
    assert average_precision([1, 0], [0.9, 0.1]) == pytest.approx(1.0, abs=1e-12)
    assert average_precision([0, 1], [0.9, 0.1]) == pytest.approx(0.5, abs=1e-12)
    assert average_precision([1, 1, 0, 0], [0.8, 0.4, 0.6, 0.2]) == pytest.approx(5 / 6, abs=1e-12)
    print("\nPASS criterion 3: worked metric identities exact to 1e-12")


def test_criterion_4_regrouping_identity():
    cfg = linear_cfg("rg-favorable")
    ce = run_experiment(cfg, MethodKind("CE"), 0)
    rg = run_experiment(cfg, MethodKind("RG+CE", k_override=1), 0)
    assert rg.accuracy == ce.accuracy
    assert rg.balanced_accuracy == ce.balanced_accuracy
    assert rg.ap_per_class == ce.ap_per_class
    assert rg.macro_ap == ce.macro_ap

    # and at the trainer level: bit-identical parameters
    ds = generate_imbalanced_mixture(rg_favorable_mixture(0))
    pseudo, _ = regroup_binary(ds, 1, seed=0)
    spec = MlpSpec(2, 2, (8,), init_seed=0)
    tcfg = TrainConfig(epochs=5)
    m1, h1 = train(ds, spec, LossSpec("ce"), tcfg)
    m2, h2 = train(pseudo, spec, LossSpec("ce"), tcfg)
    assert h1 == h2
    for a, b in zip(m1.weights, m2.weights):
        np.testing.assert_array_equal(a, b)
    print("\nPASS criterion 4: K=1 regrouping pipeline bit-identical to plain CE")


def test_criterion_5_rg_beats_ce_on_favorable_family():
    start = time.perf_counter()
    cfg = linear_cfg("rg-favorable")
    ce_aps, rg_aps = [], []
    for seed in range(10):
        ce_aps.append(run_experiment(cfg, MethodKind("CE"), seed).ap_per_class[0])
        rg_aps.append(run_experiment(cfg, MethodKind("RG+CE"), seed).ap_per_class[0])
    wins = sum(r > c for r, c in zip(rg_aps, ce_aps))
    elapsed = time.perf_counter() - start
    assert np.mean(rg_aps) > np.mean(ce_aps)
    assert wins >= 8
    assert elapsed < 300.0
    print(
        f"\nPASS criterion 5: minority AP RG+CE {np.mean(rg_aps):.3f} > "
        f"CE {np.mean(ce_aps):.3f}, sign test {wins}/10 ({elapsed:.0f}s)"
    )


def test_criterion_6_wce_ba_vs_rg_ap_on_overlap_family():
    cfg = linear_cfg("overlap")
    results = {}
    for name in ("CE", "WCE", "RG+CE"):
        rows = [run_experiment(cfg, MethodKind(name), seed) for seed in range(10)]
        results[name] = (
            np.mean([r.balanced_accuracy for r in rows]),
            np.mean([r.ap_per_class[0] for r in rows]),
        )
    assert results["WCE"][0] >= results["CE"][0]
    assert results["WCE"][1] <= results["RG+CE"][1]
    print(
        f"\nPASS criterion 6: WCE BA {results['WCE'][0]:.3f} >= CE BA {results['CE'][0]:.3f}; "
        f"WCE minority AP {results['WCE'][1]:.3f} <= RG+CE {results['RG+CE'][1]:.3f}"
    )


def test_criterion_7_wce_matches_expected_ce_under_ros():
    rng = np.random.default_rng(7)
    counts = (25, 150)
    n = sum(counts)
    y = np.repeat([0, 1], counts)
    hits = 0
    for model_idx in range(20):
        X = rng.standard_normal((n, 3))
        spec = MlpSpec(3, 2, (6,), init_seed=model_idx)
        weights, biases = init_params(spec)
        from regroupbench.trainer import _forward

        logits, _ = _forward(X, weights, biases)
        wce = batch_loss_values(logits, y, LossSpec("wce", class_counts=counts)).mean()
        per_sample = batch_loss_values(logits, y, LossSpec("ce"))
        draws = np.empty(1000)
        for t in range(1000):
            idx = np.concatenate(
                [
                    rng.choice(np.flatnonzero(y == c), size=max(counts), replace=True)
                    for c in (0, 1)
                ]
            )
            draws[t] = per_sample[idx].mean()
        se = draws.std(ddof=1) / np.sqrt(len(draws))
        hits += abs(draws.mean() - wce) <= 3 * se
    assert hits >= 19
    print(f"\nPASS criterion 7: WCE = E[CE under ROS] within 3 SE in {hits}/20 models")


def test_criterion_8_kmeans_properties():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((80, 3))
        model = kmeans_fit(X, 5, seed=seed)
        assert np.all(np.diff(model.inertia_trace) <= 1e-9)

    rng = np.random.default_rng(0)
    means = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0]])
    X = np.vstack([m + 0.1 * rng.standard_normal((200, 2)) for m in means])
    labels = np.repeat([0, 1, 2], 200)
    model = kmeans_fit(X, 3, seed=0)
    for c in range(3):
        assert len(set(model.assignments[labels == c])) == 1
    assert set(model.assignments) == {0, 1, 2}

    again = kmeans_fit(X, 3, seed=0)
    np.testing.assert_array_equal(model.centroids, again.centroids)
    np.testing.assert_array_equal(model.assignments, again.assignments)
    print("\nPASS criterion 8: k-means inertia monotone (100 runs), exact recovery, deterministic")


def test_criterion_9_harness_determinism(tmp_path):
    cfg = ExperimentConfig(
        dataset={"builtin": "rg-favorable"},
        methods=(MethodKind("CE"), MethodKind("RG+CE")),
        seeds=(0, 1),
        hidden_dims=(),
        train=TrainConfig(epochs=10),
    )
    texts = []
    for run in range(2):
        rows, aggs = run_grid(cfg)
        results, _ = write_results(rows, aggs, tmp_path / f"run{run}")
        stripped = []
        for line in results.read_text().strip().splitlines():
            cells = line.split(",")
            del cells[-2]  # wall_time_s
            stripped.append(",".join(cells))
        texts.append("\n".join(stripped))
    assert texts[0] == texts[1]
    print("\nPASS criterion 9: results.csv byte-identical across reruns modulo timing")
