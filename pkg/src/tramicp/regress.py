"""Conditional mean models for ``E[E | X^S]``, used to residualize environments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._forest import RegressionForest

__all__ = ["MeanModel", "fit_conditional_mean", "MU_KINDS"]

MU_KINDS = ("forest", "linear", "mean")


@dataclass(frozen=True)
class MeanModel:
    """A fitted conditional mean model.

    Attributes
    ----------
    kind : str
        ``"forest"``, ``"linear"`` or ``"mean"`` (constant).
    q : int
        Number of environment columns.
    n_features : int
    state : object
        Column means, least-squares coefficients, or a pair (list of
        forests, linear correction coefficients or ``None``).
    train_predictions : ndarray, shape (n, q)
        Predictions for the training rows; out-of-bag for forests unless
        fitted with ``inbag=True``.
    """

    kind: str
    q: int
    n_features: int
    state: object
    train_predictions: np.ndarray

    def predict(self, X):
        """Predict ``E[E | x]`` for the rows of ``X``; returns shape (m, q)."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1) if self.n_features else X.reshape(-1, 0)
        if X.shape[1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} features, got {X.shape[1]}"
            )
        if self.kind == "mean":
            return np.tile(self.state, (X.shape[0], 1))
        if self.kind == "linear":
            return np.hstack([np.ones((X.shape[0], 1)), X]) @ self.state
        forests, coef = self.state
        pred = np.column_stack([f.predict(X) for f in forests])
        if coef is not None:
            pred = pred + np.hstack([np.ones((X.shape[0], 1)), X]) @ coef
        return pred


def fit_conditional_mean(
    X,
    E,
    kind="forest",
    n_trees=100,
    min_leaf=5,
    mtry=None,
    seed=0,
    inbag=False,
    linear_correction=False,
) -> MeanModel:
    """Fit a model for ``E[E | X]``.

    Parameters
    ----------
    X : ndarray, shape (n, s)
        Conditioning covariates; ``s = 0`` always gives the constant mean.
    E : ndarray, shape (n, q)
    kind : {"forest", "linear", "mean"}
    n_trees, min_leaf : int
        Forest size and minimum leaf size.
    mtry : int, optional
        Features tried per split; default ``max(1, s // 3)``.
    seed : int or numpy SeedSequence
        Seeds the forests (one independent stream per environment column).
    inbag : bool
        Use in-bag instead of out-of-bag fitted values for training rows.
    linear_correction : bool
        Add a least-squares fit of the forest residuals on ``(1, X)``.

    Returns
    -------
    MeanModel
    """
    X = np.asarray(X, dtype=float)
    E = np.asarray(E, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    n, q = E.shape
    if X.ndim == 1:
        X = X.reshape(n, -1)
    if n < 2:
        raise ValueError("need at least two observations")
    if X.shape[0] != n:
        raise ValueError("X and E differ in length")
    if kind not in MU_KINDS:
        raise ValueError(f"unknown mean model {kind!r}; expected one of {MU_KINDS}")
    s = X.shape[1]

    if s == 0 or kind == "mean":
        means = E.mean(axis=0)
        return MeanModel("mean", q, s, means, np.tile(means, (n, 1)))

    if kind == "linear":
        A = np.hstack([np.ones((n, 1)), X])
        coef = np.linalg.lstsq(A, E, rcond=None)[0]
        return MeanModel("linear", q, s, coef, A @ coef)

    if mtry is None:
        mtry = max(1, s // 3)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    forests, preds = [], []
    for col, child in zip(range(q), ss.spawn(q)):
        forest = RegressionForest(n_trees, min_leaf, min(mtry, s), seed=child)
        forest.fit(X, E[:, col])
        forests.append(forest)
        preds.append(forest.inbag_prediction_ if inbag else forest.oob_prediction_)
    pred = np.column_stack(preds)
    if not linear_correction:
        return MeanModel("forest", q, s, (forests, None), pred)
    # forests shrink towards the mean at the edges; a least-squares fit of
    # the forest residuals on (1, X) removes the part that is linear in X
    A = np.hstack([np.ones((n, 1)), X])
    coef = np.linalg.lstsq(A, E - pred, rcond=None)[0]
    return MeanModel("forest", q, s, (forests, coef), pred + A @ coef)
