"""Logistic-regression choice model: MLE fitting, prediction, persistence.

The model predicts the probability that a user forwards the later exposure
source (label 1). Fitting maximizes the log-likelihood

    ln L = sum_i { y_i * eta_i - ln(1 + e^{eta_i}) },  eta = b0 + beta . x

by gradient ascent with Armijo backtracking. Continuous features (hour
gaps, ids 12 and 13) are z-scored internally for conditioning; the scaling
statistics are part of the model and applied again at prediction time.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np

from fwchoice.features import CONTINUOUS_FEATURE_IDS, FEATURE_NAMES

log = logging.getLogger(__name__)

# |beta| beyond this on z-scored inputs means the MLE is running off to
# infinity (separable data).
_DIVERGENCE_BOUND = 30.0


class NonIdentifiableError(ValueError):
    """Unregularized MLE diverges (single-class or separable data)."""


class DataError(ValueError):
    """Input features/labels violate the fitting contract."""


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log1pexp(z):
    # ln(1+e^z) = max(z,0) + ln(1+e^-|z|), overflow-safe for any z.
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def log_likelihood(beta0: float, beta, X, y) -> float:
    """ln L of the labeled sample under (beta0, beta); always <= 0."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    eta = beta0 + X @ np.asarray(beta, dtype=float)
    return float(np.sum(y * eta - _log1pexp(eta)))


def log_likelihood_grad(beta0: float, beta, X, y) -> tuple[float, np.ndarray]:
    """Analytic gradient of ln L w.r.t. (beta0, beta)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    resid = y - sigmoid(beta0 + X @ np.asarray(beta, dtype=float))
    return float(np.sum(resid)), X.T @ resid


@dataclass
class TrainReport:
    final_log_likelihood: float
    iterations: int
    converged: bool
    gradient_norm: float
    criterion: str | None = None
    objective_trace: list = field(default_factory=list, repr=False)


@dataclass
class ChoiceModel:
    """Fitted weights plus the scaling statistics needed at inference time.

    feature_ids are 1-based ids into the 16-feature scheme; ablation models
    carry the surviving subset. scaler maps feature id -> (mean, std) for
    the continuous features present.
    """

    beta0: float
    beta: np.ndarray
    feature_ids: list[int]
    feature_names: list[str]
    scaler: dict[int, tuple[float, float]]
    grouping: dict | None = None

    def _transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if X.shape[1] != len(self.feature_ids):
            raise ValueError(
                f"feature dimension {X.shape[1]} != model dimension {len(self.feature_ids)}"
            )
        if self.scaler:
            X = X.copy()
            for fid, (mean, std) in self.scaler.items():
                col = self.feature_ids.index(fid)
                X[:, col] = (X[:, col] - mean) / std
        return X[0] if single else X

    def predict_proba(self, X):
        """P(label 1) in (0,1); accepts one vector or an (n, d) matrix."""
        Xs = self._transform(X)
        return sigmoid(self.beta0 + Xs @ self.beta)

    def classify(self, X, threshold: float = 0.5):
        """Hard prediction: 1 iff predict_proba >= threshold."""
        p = self.predict_proba(X)
        return (p >= threshold).astype(np.int64)

    def raw_weights(self) -> tuple[float, np.ndarray]:
        """(intercept, weights) expressed in unscaled feature units."""
        beta = self.beta.copy()
        beta0 = self.beta0
        for fid, (mean, std) in self.scaler.items():
            col = self.feature_ids.index(fid)
            beta0 -= self.beta[col] * mean / std
            beta[col] = self.beta[col] / std
        return beta0, beta

    def save(self, path) -> None:
        obj = {
            "beta0": self.beta0,
            "beta": [float(b) for b in self.beta],
            "feature_ids": self.feature_ids,
            "feature_names": self.feature_names,
            "scaler": {
                str(fid): {"mean": mean, "std": std}
                for fid, (mean, std) in sorted(self.scaler.items())
            },
            "grouping": self.grouping,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ChoiceModel":
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls(
            beta0=float(obj["beta0"]),
            beta=np.array(obj["beta"], dtype=float),
            feature_ids=[int(i) for i in obj["feature_ids"]],
            feature_names=list(obj["feature_names"]),
            scaler={
                int(fid): (s["mean"], s["std"]) for fid, s in obj.get("scaler", {}).items()
            },
            grouping=obj.get("grouping"),
        )


def fit(
    X,
    y,
    *,
    l2: float = 0.0,
    tol: float = 1e-8,
    max_iter: int = 500,
    feature_ids: list[int] | None = None,
    grouping: dict | None = None,
) -> tuple[ChoiceModel, TrainReport]:
    """Maximum-likelihood fit of the choice model.

    Maximizes ln L - (l2/2)*||beta||^2 (intercept unregularized) by gradient
    ascent with backtracking line search. Converges when the relative change
    of the objective drops below tol or the per-sample gradient inf-norm
    does. Raises NonIdentifiableError for single-class or separable data at
    l2 = 0, DataError for NaN features or empty input.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("need a non-empty 2-D feature matrix")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    if np.isnan(X).any():
        raise DataError("NaN in features")
    if not np.isin(y, (0.0, 1.0)).all():
        raise DataError("labels must be 0 or 1")
    if l2 < 0:
        raise ValueError("l2 must be >= 0")
    n, d = X.shape
    if feature_ids is None:
        feature_ids = list(range(1, d + 1))
    if len(feature_ids) != d:
        raise DataError(f"{len(feature_ids)} feature ids for {d} columns")
    if l2 == 0.0 and (y.min() == y.max()):
        raise NonIdentifiableError(
            "all labels identical; the unregularized MLE diverges (set l2 > 0)"
        )

    scaler: dict[int, tuple[float, float]] = {}
    Xs = X
    for fid in CONTINUOUS_FEATURE_IDS:
        if fid not in feature_ids:
            continue
        col = feature_ids.index(fid)
        mean = float(X[:, col].mean())
        std = float(X[:, col].std())
        if std == 0.0:
            std = 1.0
            log.warning("feature %d has zero variance in the training data", fid)
        if Xs is X:
            Xs = X.copy()
        Xs[:, col] = (Xs[:, col] - mean) / std
        scaler[fid] = (mean, std)

    Xd = np.hstack([np.ones((n, 1)), Xs])
    theta = np.zeros(d + 1)
    reg_mask = np.ones(d + 1)
    reg_mask[0] = 0.0

    def objective(th):
        eta = Xd @ th
        ll = np.sum(y * eta - _log1pexp(eta))
        return (ll - 0.5 * l2 * np.sum((reg_mask * th) ** 2)) / n

    f_cur = objective(theta)
    trace = [f_cur]
    step = 1.0
    converged = False
    criterion = None
    gnorm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        resid = y - sigmoid(Xd @ theta)
        grad = (Xd.T @ resid - l2 * reg_mask * theta) / n
        gnorm = float(np.abs(grad).max())
        if gnorm < tol:
            converged, criterion = True, "gradient"
            break
        gg = float(grad @ grad)
        t = step
        f_new = None
        while t > 1e-16:
            cand = theta + t * grad
            f_cand = objective(cand)
            if f_cand >= f_cur + 1e-4 * t * gg:
                theta, f_new = cand, f_cand
                break
            t *= 0.5
        if f_new is None:
            converged, criterion = True, "objective"  # no ascent step representable
            break
        step = min(t * 2.0, 1e8)
        trace.append(f_new)
        if l2 == 0.0 and np.abs(theta[1:]).max() > _DIVERGENCE_BOUND:
            raise NonIdentifiableError(
                "weights diverging; data is (quasi-)separable, set l2 > 0"
            )
        if abs(f_new - f_cur) < tol * (abs(f_cur) + 1e-12):
            f_cur = f_new
            converged, criterion = True, "objective"
            break
        f_cur = f_new

    beta0, beta = float(theta[0]), theta[1:].copy()
    model = ChoiceModel(
        beta0=beta0,
        beta=beta,
        feature_ids=list(feature_ids),
        feature_names=[FEATURE_NAMES[fid - 1] for fid in feature_ids],
        scaler=scaler,
        grouping=grouping,
    )
    final_ll = log_likelihood(beta0, beta, Xs, y)
    report = TrainReport(
        final_log_likelihood=final_ll,
        iterations=it,
        converged=converged,
        gradient_norm=gnorm,
        criterion=criterion,
        objective_trace=trace,
    )
    if not converged:
        log.warning("fit hit max_iter=%d without converging (grad inf-norm %.3g)", max_iter, gnorm)
    return model, report
