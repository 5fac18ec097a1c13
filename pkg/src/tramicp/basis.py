"""Bases for the baseline transformation ``h_Y(y) = a(y)^T theta``.

Every basis maps an unconstrained ``raw`` vector to a constrained
coefficient vector ``theta`` (see :meth:`Basis.constrain`), so optimizers
can work on an open set while ``h_Y`` stays monotone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

__all__ = [
    "Basis",
    "Linear",
    "LogLinear",
    "Bernstein",
    "Discrete",
    "BaselineParams",
    "parse_basis",
]


@dataclass(frozen=True)
class BaselineParams:
    """Constrained baseline coefficients and the raw vector behind them."""

    theta: np.ndarray
    raw: np.ndarray


def _cumulative(raw):
    theta = np.empty(len(raw))
    theta[0] = raw[0]
    if len(raw) > 1:
        theta[1:] = raw[0] + np.cumsum(np.exp(raw[1:]))
    return theta


def _cumulative_jacobian(raw):
    k = len(raw)
    jac = np.zeros((k, k))
    jac[:, 0] = 1.0
    inc = np.exp(raw[1:])
    for j in range(1, k):
        jac[j, 1 : j + 1] = inc[:j]
    return jac


def _inverse_cumulative(theta, min_step):
    theta = np.asarray(theta, dtype=float)
    steps = np.maximum(np.diff(theta), min_step)
    return np.concatenate([[theta[0]], np.log(steps)])


class Basis:
    """Common interface of the baseline bases.

    Attributes
    ----------
    dimension : int
        Length of ``theta`` (including the fixed ``+inf`` of a discrete basis).
    n_free : int
        Number of raw parameters.
    continuous : bool
        Whether ``evaluate_derivative`` is available.
    """

    dimension: int
    n_free: int
    continuous: bool = True

    def evaluate(self, y):
        raise NotImplementedError

    def evaluate_derivative(self, y):
        raise NotImplementedError

    def constrain(self, raw) -> BaselineParams:
        raw = self._check_raw(raw)
        return BaselineParams(theta=self._theta(raw), raw=raw)

    def unconstrain(self, theta, min_step=1e-3) -> np.ndarray:
        """Raw vector reproducing ``theta`` (increments floored at ``min_step``)."""
        raise NotImplementedError

    def constrain_jacobian(self, raw) -> np.ndarray:
        """``d theta_free / d raw`` (rows: finite theta entries)."""
        raise NotImplementedError

    def constrain_hessian_diag(self, raw, grad_theta) -> np.ndarray:
        """``sum_j grad_theta[j] * d^2 theta_j / d raw_k^2`` for each k.

        All parameterizations used here have a diagonal second derivative.
        """
        raise NotImplementedError

    def finite_theta(self, theta) -> np.ndarray:
        return np.asarray(theta, dtype=float)

    def constraint_matrix(self) -> np.ndarray:
        """``C`` with ``C @ theta_free > 0`` encoding the strict constraints."""
        k = self.n_free
        return np.diff(np.eye(k), axis=0)

    def _check_raw(self, raw):
        raw = np.asarray(raw, dtype=float).ravel()
        if raw.shape[0] != self.n_free:
            raise ValueError(
                f"{type(self).__name__} expects {self.n_free} raw parameters, "
                f"got {raw.shape[0]}"
            )
        return raw

    def _theta(self, raw):
        raise NotImplementedError


class _TwoParameter(Basis):
    dimension = 2
    n_free = 2

    def _theta(self, raw):
        return np.array([raw[0], np.exp(raw[1])])

    def unconstrain(self, theta, min_step=1e-3):
        theta = np.asarray(theta, dtype=float)
        return np.array([theta[0], np.log(max(theta[1], min_step))])

    def constrain_jacobian(self, raw):
        raw = self._check_raw(raw)
        return np.diag([1.0, np.exp(raw[1])])

    def constraint_matrix(self):
        return np.array([[0.0, 1.0]])

    def constrain_hessian_diag(self, raw, grad_theta):
        raw = self._check_raw(raw)
        return np.array([0.0, grad_theta[1] * np.exp(raw[1])])

    def _transform(self, y):
        raise NotImplementedError

    def evaluate(self, y):
        t = self._transform(y)
        return np.stack([np.ones_like(t), t], axis=-1)


class Linear(_TwoParameter):
    """``a(y) = (1, y)``."""

    def __repr__(self):
        return "Linear()"

    def __eq__(self, other):
        return isinstance(other, Linear)

    __hash__ = object.__hash__

    def _transform(self, y):
        return np.asarray(y, dtype=float)

    def evaluate_derivative(self, y):
        y = np.asarray(y, dtype=float)
        return np.stack([np.zeros_like(y), np.ones_like(y)], axis=-1)


class LogLinear(_TwoParameter):
    """``a(y) = (1, log y)`` on the positive reals."""

    def __repr__(self):
        return "LogLinear()"

    def __eq__(self, other):
        return isinstance(other, LogLinear)

    __hash__ = object.__hash__

    def _transform(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise ValueError("log-linear basis requires y > 0")
        return np.log(y)

    def evaluate_derivative(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0):
            raise ValueError("log-linear basis requires y > 0")
        return np.stack([np.zeros_like(y), 1.0 / y], axis=-1)


class Bernstein(Basis):
    """Bernstein polynomial basis of order ``M`` on ``[lower, upper]``.

    Monotonicity is enforced strictly via exponentiated increments.
    """

    def __init__(self, order=6, lower=None, upper=None):
        if int(order) < 1:
            raise ValueError("Bernstein order must be >= 1")
        self.order = int(order)
        self.lower = None if lower is None else float(lower)
        self.upper = None if upper is None else float(upper)
        if self.resolved and not self.lower < self.upper:
            raise ValueError("Bernstein support requires lower < upper")
        self.dimension = self.order + 1
        self.n_free = self.order + 1

    def __repr__(self):
        return f"Bernstein(order={self.order}, lower={self.lower}, upper={self.upper})"

    def __eq__(self, other):
        return (
            isinstance(other, Bernstein)
            and other.order == self.order
            and other.lower == self.lower
            and other.upper == self.upper
        )

    __hash__ = object.__hash__

    @property
    def resolved(self):
        return self.lower is not None and self.upper is not None

    def with_support(self, lower, upper):
        return Bernstein(self.order, lower, upper)

    def support_from_data(self, y, extend=0.1):
        """Observed range widened by ``extend`` times its width on each side."""
        y = np.asarray(y, dtype=float)
        y = y[np.isfinite(y)]
        lo, hi = float(np.min(y)), float(np.max(y))
        width = hi - lo if hi > lo else max(abs(lo), 1.0)
        return self.with_support(lo - extend * width, hi + extend * width)

    def _scaled(self, y):
        if not self.resolved:
            raise ValueError("Bernstein support is not set")
        y = np.asarray(y, dtype=float)
        tol = 1e-10 * (self.upper - self.lower)
        if np.any((y < self.lower - tol) | (y > self.upper + tol)):
            raise ValueError(
                f"y outside Bernstein support [{self.lower}, {self.upper}]"
            )
        return np.clip((y - self.lower) / (self.upper - self.lower), 0.0, 1.0)

    @staticmethod
    def _bernstein(s, order):
        j = np.arange(order + 1)
        s = s[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = comb(order, j) * s**j * (1.0 - s) ** (order - j)
        return out

    def evaluate(self, y):
        return self._bernstein(self._scaled(y), self.order)

    def evaluate_derivative(self, y):
        s = self._scaled(y)
        lower = self._bernstein(s, self.order - 1)
        pad = np.zeros(lower.shape[:-1] + (1,))
        left = np.concatenate([pad, lower], axis=-1)
        right = np.concatenate([lower, pad], axis=-1)
        return self.order / (self.upper - self.lower) * (left - right)

    def _theta(self, raw):
        return _cumulative(raw)

    def unconstrain(self, theta, min_step=1e-3):
        return _inverse_cumulative(theta, min_step)

    def constrain_jacobian(self, raw):
        return _cumulative_jacobian(self._check_raw(raw))

    def constrain_hessian_diag(self, raw, grad_theta):
        raw = self._check_raw(raw)
        tail = np.cumsum(np.asarray(grad_theta)[::-1])[::-1]
        out = np.zeros(len(raw))
        out[1:] = np.exp(raw[1:]) * tail[1:]
        return out


class Discrete(Basis):
    """One-hot basis on ordered levels ``y_1 < ... < y_K`` with ``theta_K = +inf``."""

    continuous = False

    def __init__(self, levels):
        levels = np.asarray(levels, dtype=float).ravel()
        if levels.size < 2:
            raise ValueError("discrete basis needs at least two levels")
        if np.any(np.diff(levels) <= 0):
            raise ValueError("levels must be strictly increasing")
        self.levels = levels
        self.dimension = levels.size
        self.n_free = levels.size - 1

    def __repr__(self):
        return f"Discrete(levels={self.levels.tolist()})"

    def __eq__(self, other):
        return isinstance(other, Discrete) and np.array_equal(
            other.levels, self.levels
        )

    __hash__ = object.__hash__

    @property
    def n_levels(self):
        return self.levels.size

    def level_index(self, y):
        """Zero-based index of each ``y`` among the levels."""
        y = np.asarray(y, dtype=float)
        idx = np.searchsorted(self.levels, y)
        idx_c = np.clip(idx, 0, self.n_levels - 1)
        if np.any(self.levels[idx_c] != y):
            raise ValueError("y is not one of the discrete levels")
        return idx_c

    def evaluate(self, y):
        idx = self.level_index(y)
        return np.eye(self.n_levels)[idx]

    def evaluate_derivative(self, y):
        raise NotImplementedError("discrete basis has no derivative")

    def _theta(self, raw):
        return np.concatenate([_cumulative(raw), [np.inf]])

    def finite_theta(self, theta):
        return np.asarray(theta, dtype=float)[:-1]

    def unconstrain(self, theta, min_step=1e-3):
        theta = np.asarray(theta, dtype=float)
        if theta.size == self.dimension:
            theta = theta[:-1]
        return _inverse_cumulative(theta, min_step)

    def constrain_jacobian(self, raw):
        return _cumulative_jacobian(self._check_raw(raw))

    def constrain_hessian_diag(self, raw, grad_theta):
        raw = self._check_raw(raw)
        tail = np.cumsum(np.asarray(grad_theta)[::-1])[::-1]
        out = np.zeros(len(raw))
        out[1:] = np.exp(raw[1:]) * tail[1:]
        return out


def parse_basis(token: str, levels=None) -> Basis:
    """Build a basis from ``linear``, ``loglinear``, ``bernstein:<M>`` or ``discrete``."""
    token = token.strip().lower()
    if token == "linear":
        return Linear()
    if token == "loglinear":
        return LogLinear()
    if token.startswith("bernstein"):
        _, _, order = token.partition(":")
        return Bernstein(int(order) if order else 6)
    if token == "discrete":
        if levels is None:
            raise ValueError("discrete basis needs levels")
        return Discrete(levels)
    raise ValueError(f"unknown basis token {token!r}")
