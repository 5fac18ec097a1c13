import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.ensemble import RandomForestRegressor

from tramicp._forest import RegressionForest
from tramicp.regress import fit_conditional_mean


def test_empty_set_gives_column_mean():
    E = np.array([[1.0], [0.0], [0.44], [0.48]])
    m = fit_conditional_mean(np.zeros((4, 0)), E, "forest")
    assert m.kind == "mean"
    np.testing.assert_allclose(m.predict(np.zeros((3, 0))), np.full((3, 1), E.mean()))


def test_linear_exact_fit():
    X = np.random.default_rng(0).normal(size=(50, 1))
    m = fit_conditional_mean(X, 2 * X, "linear")
    np.testing.assert_allclose(m.train_predictions, 2 * X, atol=1e-10)
    np.testing.assert_allclose(m.predict([[3.0]]), [[6.0]], atol=1e-10)


def test_linear_predict_with_known_coefficients():
    X = np.array([[0.0], [1.0], [2.0]])
    m = fit_conditional_mean(X, 1 + 2 * X, "linear")
    assert m.predict([[3.0]])[0, 0] == pytest.approx(7.0)


def test_forest_constant_target():
    X = np.random.default_rng(1).normal(size=(100, 2))
    m = fit_conditional_mean(X, np.full(100, 0.7), "forest", n_trees=20)
    # leaf means of a constant are exact up to summation rounding
    np.testing.assert_allclose(m.train_predictions, 0.7, rtol=1e-14)
    np.testing.assert_allclose(m.predict(X[:5]), 0.7, rtol=1e-14)


def test_forest_step_function_accuracy():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(2000, 1))
    E = (X[:, 0] > 0) + rng.normal(0, 0.1, size=2000)
    m = fit_conditional_mean(X, E, "forest", n_trees=100, seed=3)
    Xt = rng.normal(size=(2000, 1))
    mse = np.mean((m.predict(Xt)[:, 0] - (Xt[:, 0] > 0)) ** 2 + 0.01)
    assert mse <= 2 * 0.01


def test_forest_oob_error_comparable_to_sklearn():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(1000, 3))
    y = np.sin(2 * X[:, 0]) + X[:, 1] ** 2 + rng.normal(0, 0.3, size=1000)
    ours = RegressionForest(100, 5, 1, seed=5).fit(X, y)
    ref = RandomForestRegressor(100, min_samples_leaf=5, max_features=1, oob_score=True,
                                random_state=5).fit(X, y)
    mse_ours = np.mean((ours.oob_prediction_ - y) ** 2)
    mse_ref = np.mean((ref.oob_prediction_ - y) ** 2)
    assert mse_ours <= 1.15 * mse_ref


def test_oob_differs_from_inbag():
    rng = np.random.default_rng(6)
    X = rng.normal(size=(300, 1))
    E = rng.normal(size=300)
    oob = fit_conditional_mean(X, E, seed=1).train_predictions
    inb = fit_conditional_mean(X, E, seed=1, inbag=True).train_predictions
    # in-bag values overfit pure noise: they correlate with E much more
    assert np.corrcoef(inb[:, 0], E)[0, 1] > np.corrcoef(oob[:, 0], E)[0, 1] + 0.2


def test_linear_correction_removes_linear_trend():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(500, 2))
    E = rng.normal(size=(500, 1)) + X[:, :1]
    m = fit_conditional_mean(X, E, seed=2, linear_correction=True)
    A = np.hstack([np.ones((500, 1)), X])
    np.testing.assert_allclose(A.T @ (E - m.train_predictions), 0.0, atol=1e-8)


def test_dimension_errors():
    m = fit_conditional_mean(np.ones((10, 2)) * np.arange(10)[:, None], np.arange(10.0), "linear")
    with pytest.raises(ValueError):
        m.predict(np.ones((2, 3)))
    with pytest.raises(ValueError):
        fit_conditional_mean(np.ones((1, 1)), np.ones(1))
    with pytest.raises(ValueError):
        fit_conditional_mean(np.ones((5, 1)), np.ones(5), "boosting")


def test_multivariate_environment_shape():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(80, 2))
    E = rng.normal(size=(80, 3))
    for kind in ("forest", "linear", "mean"):
        m = fit_conditional_mean(X, E, kind, n_trees=10)
        assert m.predict(X[:4]).shape == (4, 3)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.floats(0.05, 0.95))
def test_forest_bernoulli_in_unit_interval_and_deterministic(seed, p):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(120, 2))
    E = (rng.uniform(size=120) < p).astype(float)
    a = fit_conditional_mean(X, E, n_trees=20, seed=seed)
    b = fit_conditional_mean(X, E, n_trees=20, seed=seed)
    np.testing.assert_array_equal(a.train_predictions, b.train_predictions)
    Xt = rng.normal(size=(30, 2)) * 3
    for pred in (a.train_predictions, a.predict(Xt)):
        assert pred.min() >= 0.0 and pred.max() <= 1.0
