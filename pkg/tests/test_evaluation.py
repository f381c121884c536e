import numpy as np
import pytest

from fwchoice.evaluation import (
    AblationRow,
    evaluate,
    evaluate_predictions,
    f_score,
    format_report_pretty,
    format_report_tsv,
    run_ablation,
    temporal_split,
)
from fwchoice.exposure import ChoiceInstance
from fwchoice.cascade import ForwardEvent
from fwchoice.features import TABLE_GROUPING
from fwchoice.model import fit, sigmoid


def test_f_formula_headline_anchor():
    # Reference operating point: P=0.913, R=0.772 must combine to F=0.837.
    assert f_score(0.913, 0.772) == pytest.approx(0.837, abs=5e-4)


def test_f_is_harmonic_mean_bounds():
    rng = np.random.default_rng(0)
    for _ in range(200):
        p, r = rng.random(2)
        f = f_score(p, r)
        if f is None:
            continue
        assert min(p, r) - 1e-12 <= f <= max(p, r) + 1e-12


def test_perfect_classifier():
    y = np.array([0, 1, 1, 0, 1])
    rep = evaluate_predictions(y, y)
    assert rep.precision == rep.recall == rep.f1 == 1.0


def test_all_zero_predictions_undefined_precision():
    y_true = np.array([1, 0, 1])
    rep = evaluate_predictions(np.zeros(3, dtype=int), y_true)
    assert rep.precision is None
    assert rep.recall == 0.0
    assert rep.f1 is None


def test_counts_partition_n():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 50))
        rep = evaluate_predictions(rng.integers(0, 2, n), rng.integers(0, 2, n))
        assert rep.tp + rep.fp + rep.fn + rep.tn == rep.n == n


def test_evaluate_order_independent():
    rng = np.random.default_rng(2)
    X = rng.integers(0, 2, size=(100, 3)).astype(float)
    y = (rng.random(100) < sigmoid(X @ np.array([2.0, -1.0, 0.0]))).astype(int)
    model, _ = fit(X, y, l2=0.01)
    rep1 = evaluate(model, X, y)
    perm = rng.permutation(100)
    rep2 = evaluate(model, X[perm], y[perm])
    assert rep1 == rep2


def test_evaluate_empty_raises():
    with pytest.raises(ValueError, match="empty"):
        evaluate_predictions(np.array([]), np.array([]))


def make_instance(message_id, root_time):
    bob = ForwardEvent(1, 2, root_time + 10, None)
    jim = ForwardEvent(2, 3, root_time + 20, 1)
    allen = ForwardEvent(3, 4, root_time + 30, 2)
    return ChoiceInstance(message_id, 4, bob, jim, allen, 1, root_time)


def test_temporal_split_boundaries():
    instances = [make_instance(i, 1000 * i) for i in range(1, 10)]
    train, test = temporal_split(instances, 0)
    assert train == [] and test == instances
    train, test = temporal_split(instances, 10_000)
    assert train == instances and test == []


def test_temporal_split_hand_partition():
    instances = [make_instance(i, t) for i, t in enumerate(
        [100, 5000, 4999, 5001, 200, 5000, 4000, 9000, 4998], start=1)]
    train, test = temporal_split(instances, 5000)
    assert sorted(i.message_id for i in train) == [1, 3, 5, 7, 9]
    assert sorted(i.message_id for i in test) == [2, 4, 6, 8]
    assert len(train) + len(test) == 9
    assert not set(train) & set(test)


def planted_structural_data(seed, n=4000):
    rng = np.random.default_rng(seed)
    X = np.zeros((n, 16))
    X[:, 0] = rng.integers(0, 2, n)
    X[:, 1] = rng.integers(0, 2, n)
    X[:, 2] = rng.integers(0, 5, n)
    for col in range(3, 11):
        X[:, col] = rng.integers(0, 2, n)
    X[:, 11] = rng.exponential(1.0, n)
    X[:, 12] = rng.exponential(1.0, n)
    for col in (13, 14, 15):
        X[:, col] = rng.integers(0, 2, n)
    beta = np.zeros(16)
    beta[7], beta[8], beta[9] = 3.0, 2.0, -2.0  # structural ids 8..10
    y = (rng.random(n) < sigmoid(X @ beta - 1.0)).astype(int)
    return X, y


def test_ablation_rows_and_order():
    train = planted_structural_data(3)
    test = planted_structural_data(4, n=2000)
    rows = run_ablation(train, test, TABLE_GROUPING, seed=5)
    assert [r.method for r in rows] == [
        "full", "without_content", "without_structural", "without_temporal",
        "without_history", "baseline_majority_class", "baseline_coin_flip",
    ]
    f1 = {r.method: r.report.f1 for r in rows}
    leave_one_out = [f1[f"without_{g}"] for g in
                     ("content", "structural", "temporal", "history")]
    assert f1["without_structural"] == min(v for v in leave_one_out if v is not None)
    assert f1["without_structural"] < f1["full"]


def test_ablation_empty_group_row_equals_full():
    grouping = {
        "content": [],
        "structural": list(range(1, 11)),
        "temporal": [11, 12, 13],
        "history": [14, 15, 16],
    }
    train = planted_structural_data(6, n=1500)
    test = planted_structural_data(7, n=800)
    rows = {r.method: r.report for r in run_ablation(train, test, grouping)}
    assert rows["without_content"] == rows["full"].__class__(
        **{**rows["full"].__dict__, "groups_used": rows["without_content"].groups_used}
    )


def test_ablation_unknown_group_rejected():
    train = planted_structural_data(8, n=500)
    with pytest.raises(ValueError, match="unknown feature group"):
        run_ablation(train, train, {"content": list(range(1, 17)), "weird": []})
    with pytest.raises(ValueError, match="cover"):
        run_ablation(train, train, {"content": [1, 2], "structural": [3],
                                    "temporal": [4], "history": [5]})


def test_report_formatting_undefined():
    rep = evaluate_predictions(np.zeros(3, dtype=int), np.array([1, 0, 1]))
    tsv = format_report_tsv([AblationRow("full", rep)])
    assert "undefined" in tsv
    assert tsv.splitlines()[0] == "method\tprecision\trecall\tf1\tn"
    pretty = format_report_pretty([AblationRow("full", rep)])
    assert "undefined" in pretty
