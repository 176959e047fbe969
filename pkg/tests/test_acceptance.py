"""Acceptance criteria, one test each, at their stated tolerances.

Criteria 7-10 run the full pipeline on the MUTAG and NCI1 benchmark files in
TU format, looked up under ``$ANONFP_DATA/<NAME>/`` (default ``data/`` at the
repository root). They fail, rather than skip, when the files are missing.

A summary line per criterion is printed at the end of the pytest run;
``python tests/test_acceptance.py`` runs just this file.
"""
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from anonfp.cli import run_eval, run_embed, run_sample
from anonfp.embed import TrainConfig, pair_gradients
from anonfp.graphs import GraphSet
from anonfp.metrics import roc_auc
from anonfp.svm import decision_values, dual_objective, rbf_gram, train_svm
from anonfp.synthetic import complete_graph, cycle_graph, path_graph, star_graph
from anonfp.walks import anonymous_walk_distribution, build_corpus, count_anonymous_walks, \
    total_variation
from oracles import (brute_force_count, finite_difference, objective, pair_count_auc,
                     projected_gradient_dual)

DATA_ROOT = Path(os.environ.get("ANONFP_DATA", Path(__file__).resolve().parents[1] / "data"))
TEST_GRAPHS = {"K3": complete_graph(3), "C4": cycle_graph(4), "P4": path_graph(4),
               "star5": star_graph(4)}
REPORT_FILES = ("report.csv", "roc.csv", "report.json")
_runs: dict = {}


def criterion(record_property, text):
    record_property("criterion", text)


def dataset_dir(name):
    root = DATA_ROOT / name
    if not (root / f"{name}_A.txt").is_file():
        pytest.fail(f"{name} not found under {DATA_ROOT} (set ANONFP_DATA to a directory "
                    f"holding {name}/{name}_A.txt, _graph_indicator.txt, _graph_labels.txt)")
    return root


def pipeline(name, r, t, tmp_root, copy=0, d=128, seed=0):
    """Run sample -> embed -> eval once per (name, r, t, copy); returns (report, out, seconds)."""
    key = (name, r, t, copy)
    if key not in _runs:
        src = dataset_dir(name)
        out = tmp_root / f"{name}_r{r}_t{t}_{copy}"
        start = time.perf_counter()
        corpus = run_sample(src, name, r, t, seed, out)
        fps = run_embed(corpus, out, TrainConfig(d=d, seed=seed, deterministic=True))
        report = run_eval(fps, out, seed=seed, corpus_path=corpus)
        _runs[key] = (report, out, time.perf_counter() - start)
    return _runs[key]


@pytest.fixture(scope="module")
def runs_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def test_c01_anonymous_walk_counting(record_property):
    criterion(record_property, "1 anonymous-walk counts for r=1..5 match brute force, < 1 s")
    start = time.perf_counter()
    got = [count_anonymous_walks(r) for r in range(1, 6)]
    elapsed = time.perf_counter() - start
    assert got == [1, 2, 5, 15, 52]
    assert got == [brute_force_count(r) for r in range(1, 6)]
    assert elapsed < 1.0


def test_c02_distribution_totality(record_property):
    criterion(record_property, "2 exact distributions sum to 1 within 1e-12; K3 r=2 exact")
    for g in TEST_GRAPHS.values():
        for r in range(1, 7):
            assert abs(sum(anonymous_walk_distribution(g, r).values()) - 1.0) <= 1e-12
    k3 = anonymous_walk_distribution(TEST_GRAPHS["K3"], 2)
    assert k3 == {(1, 2, 1): 0.5, (1, 2, 3): 0.5}


def test_c03_sampling_consistency(record_property):
    criterion(record_property, "3 empirical t=10000 frequencies within TV 0.02 of exact, < 10 s")
    start = time.perf_counter()
    worst = 0.0
    for g in TEST_GRAPHS.values():
        for r in (2, 4, 6):
            c = build_corpus(GraphSet((g,)), r, 10_000, master_seed=7)
            worst = max(worst, total_variation(c.empirical(0), anonymous_walk_distribution(g, r)))
    elapsed = time.perf_counter() - start
    assert worst <= 0.02
    assert elapsed < 10.0


def test_c04_gradient_check(record_property):
    criterion(record_property, "4 analytic gradients match central differences, rel err <= 1e-5")
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        d, K = int(rng.integers(1, 9)), int(rng.integers(1, 4))
        G, a_pos, a_neg = rng.normal(size=d), rng.normal(size=d), rng.normal(size=(K, d))
        analytic = pair_gradients(G, a_pos, a_neg)[:3]
        f = lambda: objective(G, a_pos, a_neg)  # noqa: E731
        for grad, x in zip(analytic, (G, a_pos, a_neg)):
            numeric = finite_difference(f, x, h=1e-5)
            scale = np.maximum(np.abs(grad), np.abs(numeric))
            worst = max(worst, float(np.max(np.abs(grad - numeric) / scale)))
    assert worst <= 1e-5


def test_c05_smo_correctness(record_property):
    criterion(record_property, "5 SMO: analytic 2-point, dual oracle within 1e-4, KKT at 1e-3")
    model = train_svm(np.eye(2), [1, -1], C=10)
    assert np.allclose(model.alpha, [1.0, 1.0], atol=1e-12) and abs(model.b) <= 1e-12
    rng = np.random.default_rng(5)
    tol = 1e-3
    for _ in range(20):
        n = int(rng.integers(2, 13))
        y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        y[:2] = (1.0, -1.0)
        C = float(rng.choice([0.1, 1.0, 10.0]))
        K = rbf_gram(rng.normal(size=(n, 3)), float(rng.choice([0.1, 0.5, 2.0]))).gram
        model = train_svm(K, y, C=C, tol=tol)
        oracle = projected_gradient_dual(K, y, C)
        assert abs(model.dual_objective(K) - dual_objective(oracle, y, K)) <= 1e-4
        a, yf = model.alpha, y * decision_values(model, K)
        assert np.all(yf[a == 0] >= 1 - tol)
        assert np.all(np.abs(yf[(a > 0) & (a < C)] - 1) <= tol)
        assert np.all(yf[a == C] <= 1 + tol)


def test_c06_auc_oracle(record_property):
    criterion(record_property, "6 roc_auc equals pair counting exactly, 100 instances with ties")
    rng = np.random.default_rng(6)
    for _ in range(100):
        n = int(rng.integers(2, 51))
        labels = rng.integers(0, 2, n)
        labels[:2] = (0, 1)
        scores = rng.integers(-4, 5, n) / 8  # coarse grid, many ties
        assert roc_auc(scores, labels)[0] == pair_count_auc(scores.tolist(), labels.tolist())


@pytest.mark.dataset
def test_c07_mutag_reproduction(record_property, runs_dir):
    criterion(record_property, "7 MUTAG r=10 t=30 d=128: mean accuracy >= 0.70 in <= 5 min")
    report, _, seconds = pipeline("MUTAG", 10, 30, runs_dir)
    print(f"MUTAG accuracy {report.mean_accuracy:.4f} +- {report.std_accuracy:.4f}, {seconds:.0f} s")
    assert len(report.folds) == 10
    assert report.mean_accuracy >= 0.70
    assert seconds <= 300


@pytest.mark.dataset
def test_c08_nci1_reproduction(record_property, runs_dir):
    criterion(record_property, "8 NCI1 r=8 t=40 d=128: mean accuracy >= 0.85 in <= 60 min "
                               "(best effort)")
    report, _, seconds = pipeline("NCI1", 8, 40, runs_dir)
    print(f"NCI1 accuracy {report.mean_accuracy:.4f} +- {report.std_accuracy:.4f}, {seconds:.0f} s")
    assert seconds <= 3600
    if report.mean_accuracy < 0.85:
        # best effort: a miss defers to criteria 1-7 and 9, with the number reported
        pytest.xfail(f"NCI1 mean accuracy {report.mean_accuracy:.4f} below 0.85")


@pytest.mark.dataset
def test_c09_typical_scale_trend(record_property, runs_dir):
    criterion(record_property, "9 NCI1 t=40: accuracy at r=8 exceeds r=7 by >= 10 points")
    r8 = pipeline("NCI1", 8, 40, runs_dir)[0].mean_accuracy
    r7 = pipeline("NCI1", 7, 40, runs_dir)[0].mean_accuracy
    print(f"NCI1 t=40: r=7 {r7:.4f}, r=8 {r8:.4f}")
    assert r8 - r7 >= 0.10


@pytest.mark.dataset
def test_c10_determinism(record_property, runs_dir):
    criterion(record_property, "10 criteria 7-9 reruns give byte-identical report files")
    for name, r, t in (("MUTAG", 10, 30), ("NCI1", 8, 40), ("NCI1", 7, 40)):
        first = pipeline(name, r, t, runs_dir)[1]
        second = pipeline(name, r, t, runs_dir, copy=1)[1]
        for f in REPORT_FILES:
            assert (first / f).read_bytes() == (second / f).read_bytes(), f"{name} r={r} {f}"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
