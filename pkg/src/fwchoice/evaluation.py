"""Precision/Recall/F metrics, temporal splitting, leave-one-group-out ablation.

The positive class is label 1 (the user forwards the later exposure source):

    precision = tp / (tp + fp)      recall = tp / (tp + fn)
    F1 = 2 * P * R / (P + R)

Undefined ratios (zero denominators) are reported as None and rendered as
"undefined", never silently as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fwchoice.model import ChoiceModel, fit

_GROUP_ORDER = ("content", "structural", "temporal", "history")


@dataclass
class EvalReport:
    tp: int
    fp: int
    fn: int
    tn: int
    n: int
    precision: float | None
    recall: float | None
    f1: float | None
    threshold: float
    groups_used: list[str] | None = None


@dataclass
class AblationRow:
    method: str
    report: EvalReport


def f_score(precision, recall):
    """Harmonic mean of precision and recall; None when undefined."""
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2.0 * precision * recall / (precision + recall)


def evaluate_predictions(y_pred, y_true, threshold: float = 0.5, groups_used=None) -> EvalReport:
    y_pred = np.asarray(y_pred, dtype=np.int64)
    y_true = np.asarray(y_true, dtype=np.int64)
    if y_true.size == 0:
        raise ValueError("empty test set")
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    tn = int(np.sum((y_pred == 0) & (y_true == 0)))
    precision = tp / (tp + fp) if tp + fp > 0 else None
    recall = tp / (tp + fn) if tp + fn > 0 else None
    return EvalReport(
        tp=tp,
        fp=fp,
        fn=fn,
        tn=tn,
        n=int(y_true.size),
        precision=precision,
        recall=recall,
        f1=f_score(precision, recall),
        threshold=threshold,
        groups_used=list(groups_used) if groups_used is not None else None,
    )


def evaluate(model: ChoiceModel, X, y, threshold: float = 0.5, groups_used=None) -> EvalReport:
    """Score the model's hard predictions on a labeled test set."""
    return evaluate_predictions(model.classify(X, threshold), y, threshold, groups_used)


def temporal_split(instances, boundary: int):
    """Split choice instances by cascade root time: train < boundary <= test."""
    train = [i for i in instances if i.root_time < boundary]
    test = [i for i in instances if i.root_time >= boundary]
    return train, test


def _check_grouping(grouping, n_features: int = 16):
    for name in grouping:
        if name not in _GROUP_ORDER:
            raise ValueError(f"unknown feature group {name!r}; expected one of {_GROUP_ORDER}")
    covered = sorted(fid for ids in grouping.values() for fid in ids)
    expected = list(range(1, n_features + 1))
    if covered != expected:
        raise ValueError(f"grouping must cover features 1..{n_features} exactly, got {covered}")


def run_ablation(
    train,
    test,
    grouping,
    *,
    l2: float = 0.0,
    tol: float = 1e-8,
    max_iter: int = 500,
    threshold: float = 0.5,
    seed: int = 0,
    include_baselines: bool = True,
) -> list[AblationRow]:
    """Fit and score the full model plus one model per excluded feature group.

    train/test are (X, y) pairs over the full 16 features. Rows come out in
    fixed order: full, then leaving out content, structural, temporal and
    history in turn, then (optionally) majority-class and coin-flip baseline
    rows for context.
    """
    X_train, y_train = train
    X_test, y_test = test
    _check_grouping(grouping, X_train.shape[1])

    rows = []

    def fit_subset(feature_ids, groups_used):
        cols = [fid - 1 for fid in feature_ids]
        model, _ = fit(
            X_train[:, cols],
            y_train,
            l2=l2,
            tol=tol,
            max_iter=max_iter,
            feature_ids=list(feature_ids),
            grouping={g: list(grouping[g]) for g in groups_used},
        )
        return evaluate(model, X_test[:, cols], y_test, threshold, groups_used)

    all_ids = sorted(fid for ids in grouping.values() for fid in ids)
    rows.append(AblationRow("full", fit_subset(all_ids, list(_GROUP_ORDER))))
    for excluded in _GROUP_ORDER:
        kept_groups = [g for g in _GROUP_ORDER if g != excluded]
        kept_ids = sorted(fid for g in kept_groups for fid in grouping[g])
        rows.append(AblationRow(f"without_{excluded}", fit_subset(kept_ids, kept_groups)))

    if include_baselines:
        ones = int(np.sum(y_train == 1))
        majority = 1 if ones * 2 >= y_train.size else 0
        rows.append(
            AblationRow(
                "baseline_majority_class",
                evaluate_predictions(np.full(y_test.shape, majority), y_test, threshold),
            )
        )
        rng = np.random.default_rng(seed)
        rows.append(
            AblationRow(
                "baseline_coin_flip",
                evaluate_predictions(rng.integers(0, 2, size=y_test.size), y_test, threshold),
            )
        )
    return rows


def _fmt(v) -> str:
    return "undefined" if v is None else f"{v:.6f}"


def format_report_tsv(rows) -> str:
    lines = ["method\tprecision\trecall\tf1\tn"]
    for row in rows:
        r = row.report
        lines.append(
            f"{row.method}\t{_fmt(r.precision)}\t{_fmt(r.recall)}\t{_fmt(r.f1)}\t{r.n}"
        )
    return "\n".join(lines) + "\n"


def format_report_pretty(rows) -> str:
    header = f"{'method':<26}{'precision':>12}{'recall':>12}{'f1':>12}{'n':>10}"
    lines = [header, "-" * len(header)]
    for row in rows:
        r = row.report
        lines.append(
            f"{row.method:<26}{_fmt(r.precision):>12}{_fmt(r.recall):>12}{_fmt(r.f1):>12}{r.n:>10}"
        )
    return "\n".join(lines) + "\n"
