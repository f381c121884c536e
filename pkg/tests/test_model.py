import math

import numpy as np
import pytest

from fwchoice.model import (
    ChoiceModel,
    DataError,
    NonIdentifiableError,
    fit,
    log_likelihood,
    log_likelihood_grad,
    sigmoid,
)


def make_model(beta0=0.0, beta=None, d=16, scaler=None):
    beta = np.zeros(d) if beta is None else np.asarray(beta, dtype=float)
    return ChoiceModel(
        beta0=beta0,
        beta=beta,
        feature_ids=list(range(1, len(beta) + 1)),
        feature_names=[f"f{i}" for i in range(1, len(beta) + 1)],
        scaler=scaler or {},
    )


def random_data(rng, n=30, d=5):
    X = rng.standard_normal((n, d))
    y = rng.integers(0, 2, size=n)
    return X, y


def test_zero_weights_give_half():
    m = make_model()
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 16))
    assert np.allclose(m.predict_proba(X), 0.5)


def test_proba_monotone_in_intercept():
    x = np.ones(3)
    probs = [make_model(beta0=b, d=3).predict_proba(x) for b in (-5, -1, 0, 1, 5, 20)]
    assert all(a < b for a, b in zip(probs, probs[1:]))
    assert probs[-1] < 1.0 and probs[0] > 0.0


def test_hand_probability():
    # beta0=1, beta1=-2, x1=1 -> eta=-1 -> p = 1/(1+e)
    m = make_model(beta0=1.0, beta=[-2.0, 0.0, 0.0])
    x = np.array([1.0, 0.0, 0.0])
    assert m.predict_proba(x) == pytest.approx(1.0 / (1.0 + math.e), rel=1e-12)


def test_complement_probability_exact():
    rng = np.random.default_rng(1)
    m = make_model(beta0=0.3, beta=rng.standard_normal(4))
    X = rng.standard_normal((50, 4))
    p = m.predict_proba(X)
    assert np.all(p + (1.0 - p) == 1.0)


def test_dimension_mismatch():
    m = make_model(d=4)
    with pytest.raises(ValueError, match="dimension"):
        m.predict_proba(np.zeros(7))


def test_ll_zero_weights_is_n_log2():
    rng = np.random.default_rng(2)
    X, y = random_data(rng, n=37)
    assert log_likelihood(0.0, np.zeros(5), X, y) == pytest.approx(-37 * math.log(2))


def test_ll_confident_limit_and_nonpositive():
    X = np.array([[1.0]])
    y = np.array([1])
    lls = [log_likelihood(0.0, np.array([b]), X, y) for b in (1, 5, 20, 100)]
    assert all(a < b for a, b in zip(lls, lls[1:]))
    assert lls[-1] == pytest.approx(0.0, abs=1e-8)
    rng = np.random.default_rng(3)
    for _ in range(20):
        X, y = random_data(rng)
        assert log_likelihood(rng.standard_normal(), rng.standard_normal(5), X, y) <= 0


def test_ll_matches_naive_summation():
    rng = np.random.default_rng(4)
    for _ in range(20):
        X, y = random_data(rng, n=20)
        b0 = float(rng.standard_normal())
        b = rng.standard_normal(5)
        naive = 0.0
        for xi, yi in zip(X, y):
            eta = b0 + float(xi @ b)
            naive += yi * eta - math.log(1 + math.exp(eta))
        got = log_likelihood(b0, b, X, y)
        assert got == pytest.approx(naive, rel=1e-12)


def test_ll_stable_at_extreme_eta():
    X = np.array([[1.0], [1.0]])
    y = np.array([1, 0])
    ll = log_likelihood(0.0, np.array([800.0]), X, y)
    assert np.isfinite(ll)
    assert ll == pytest.approx(-800.0, rel=1e-9)  # wrong sample costs ~eta


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    h = 1e-5
    for _ in range(50):
        X, y = random_data(rng, n=30)
        b0 = float(rng.standard_normal())
        b = rng.standard_normal(5)
        g0, g = log_likelihood_grad(b0, b, X, y)
        analytic = np.concatenate([[g0], g])
        fd = np.empty(6)
        fd[0] = (log_likelihood(b0 + h, b, X, y) - log_likelihood(b0 - h, b, X, y)) / (2 * h)
        for j in range(5):
            bp, bm = b.copy(), b.copy()
            bp[j] += h
            bm[j] -= h
            fd[j + 1] = (log_likelihood(b0, bp, X, y) - log_likelihood(b0, bm, X, y)) / (2 * h)
        rel = np.linalg.norm(analytic - fd) / np.linalg.norm(analytic)
        assert rel < 1e-6


def test_fit_label_independent_balanced():
    # each feature row appears once with label 0 and once with label 1, so
    # the symmetric optimum is exactly beta = 0
    rng = np.random.default_rng(6)
    base = rng.integers(0, 2, size=(200, 4)).astype(float)
    X = np.vstack([base, base])
    y = np.concatenate([np.zeros(200), np.ones(200)])
    model, report = fit(X, y, max_iter=2000, tol=1e-12)
    assert report.converged
    assert abs(model.beta0) < 1e-4
    assert np.abs(model.beta).max() < 1e-4
    assert report.final_log_likelihood == pytest.approx(-400 * math.log(2), rel=1e-6)


def test_fit_separable_raises():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    with pytest.raises(NonIdentifiableError):
        fit(X, y)


def test_fit_separable_ok_with_l2():
    X = np.array([[0.0], [1.0]])
    y = np.array([0, 1])
    model, report = fit(X, y, l2=1.0)
    assert np.isfinite(model.beta).all()


def test_fit_single_class_raises():
    X = np.ones((5, 2))
    y = np.ones(5)
    with pytest.raises(NonIdentifiableError):
        fit(X, y)
    model, _ = fit(X, y, l2=0.5)
    assert np.isfinite(model.beta).all()


def test_fit_rejects_nan_and_bad_labels():
    X = np.ones((4, 2))
    X[1, 0] = np.nan
    with pytest.raises(DataError):
        fit(X, np.array([0, 1, 0, 1]))
    with pytest.raises(DataError):
        fit(np.ones((2, 2)), np.array([0, 2]))
    with pytest.raises(DataError):
        fit(np.zeros((0, 2)), np.zeros(0))


def test_objective_nondecreasing():
    rng = np.random.default_rng(7)
    X = rng.standard_normal((200, 4))
    logits = 0.5 + X @ np.array([1.0, -1.0, 0.5, 0.0])
    y = (rng.random(200) < sigmoid(logits)).astype(int)
    _, report = fit(X, y)
    trace = report.objective_trace
    assert len(trace) > 2
    assert all(b >= a for a, b in zip(trace, trace[1:]))


def test_classify_threshold_rules():
    m = make_model(d=2)  # p = 0.5 everywhere
    X = np.zeros((3, 2))
    assert m.classify(X, threshold=0.5).tolist() == [1, 1, 1]  # ties go to 1
    assert m.classify(X, threshold=0.0).tolist() == [1, 1, 1]
    assert m.classify(X, threshold=1.1).tolist() == [0, 0, 0]


def test_classify_consistent_with_probabilities():
    rng = np.random.default_rng(8)
    m = make_model(beta0=-0.2, beta=rng.standard_normal(6))
    X = rng.standard_normal((100, 6))
    for thr in (0.2, 0.5, 0.8):
        got = m.classify(X, threshold=thr)
        expect = [1 if sigmoid(m.beta0 + x @ m.beta) >= thr else 0 for x in X]
        assert got.tolist() == expect


def test_continuous_features_are_zscored():
    rng = np.random.default_rng(9)
    X = rng.integers(0, 2, size=(300, 16)).astype(float)
    X[:, 11] = rng.exponential(5.0, size=300)
    X[:, 12] = rng.exponential(2.0, size=300)
    y = (rng.random(300) < sigmoid(0.2 * X[:, 11] - 0.5)).astype(int)
    model, _ = fit(X, y)
    assert set(model.scaler) == {12, 13}
    mean, std = model.scaler[12]
    assert mean == pytest.approx(X[:, 11].mean())
    assert std == pytest.approx(X[:, 11].std())


def test_rescaling_invariance_of_classification():
    rng = np.random.default_rng(10)
    X = rng.integers(0, 2, size=(300, 16)).astype(float)
    X[:, 11] = rng.exponential(1.0, size=300)
    X[:, 12] = rng.exponential(1.0, size=300)
    y = (rng.random(300) < sigmoid(X[:, 11] - X[:, 7])).astype(int)
    m1, _ = fit(X, y)
    X_scaled = X.copy()
    X_scaled[:, 11] *= 42.0  # feature 12 rescaled by a positive constant
    m2, _ = fit(X_scaled, y)
    np.testing.assert_array_equal(m1.classify(X), m2.classify(X_scaled))


def test_zero_variance_feature_std_stored_as_one():
    rng = np.random.default_rng(11)
    X = rng.integers(0, 2, size=(100, 16)).astype(float)
    X[:, 11] = 3.0  # constant hour gap
    y = rng.integers(0, 2, size=100)
    model, _ = fit(X, y)
    assert model.scaler[12][1] == 1.0


def test_save_load_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    X = rng.integers(0, 2, size=(200, 16)).astype(float)
    X[:, 11] = rng.exponential(1.0, size=200)
    X[:, 12] = rng.exponential(1.0, size=200)
    y = rng.integers(0, 2, size=200)
    model, _ = fit(X, y, l2=0.1)
    path = tmp_path / "model.json"
    model.save(path)
    loaded = ChoiceModel.load(path)
    assert loaded.feature_ids == model.feature_ids
    assert loaded.scaler == model.scaler
    np.testing.assert_allclose(loaded.predict_proba(X), model.predict_proba(X), rtol=1e-12)


def test_raw_weights_equivalent_predictions():
    rng = np.random.default_rng(13)
    X = rng.integers(0, 2, size=(200, 16)).astype(float)
    X[:, 11] = rng.exponential(1.0, size=200)
    X[:, 12] = rng.exponential(1.0, size=200)
    y = (rng.random(200) < sigmoid(X[:, 11] - 0.5)).astype(int)
    model, _ = fit(X, y)
    b0, b = model.raw_weights()
    np.testing.assert_allclose(sigmoid(b0 + X @ b), model.predict_proba(X), rtol=1e-10)
