"""Responses (exact or censored), datasets and CSV input."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Response", "Dataset", "read_csv_dataset", "InputError"]


class InputError(ValueError):
    """Malformed user input (bad columns, unparsable values)."""


@dataclass(frozen=True)
class Response:
    """A vector of possibly censored responses.

    Each row is the interval ``(left, right]`` the true response falls in.

    - ``left == right``: exact observation ``y = left``.
    - ``left == -inf``: left-censored, ``y <= right``.
    - ``right == +inf``: right-censored, ``y > left``.
    - otherwise: interval-censored, ``left < y <= right``.
    """

    left: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        left = np.asarray(self.left, dtype=float).ravel()
        right = np.asarray(self.right, dtype=float).ravel()
        if left.shape != right.shape:
            raise ValueError("left and right bounds differ in length")
        if np.any(np.isnan(left)) or np.any(np.isnan(right)):
            raise ValueError("response bounds contain NaN")
        if np.any(left > right):
            raise ValueError("interval-censored rows require left < right")
        if np.any((left == right) & ~np.isfinite(left)):
            raise ValueError("exact responses must be finite")
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    @classmethod
    def exact(cls, y):
        y = np.asarray(y, dtype=float).ravel()
        return cls(y, y.copy())

    @classmethod
    def left_censored(cls, upper):
        upper = np.asarray(upper, dtype=float).ravel()
        return cls(np.full_like(upper, -np.inf), upper)

    @classmethod
    def right_censored(cls, lower):
        lower = np.asarray(lower, dtype=float).ravel()
        return cls(lower, np.full_like(lower, np.inf))

    @classmethod
    def interval_censored(cls, lower, upper):
        lower = np.asarray(lower, dtype=float).ravel()
        upper = np.asarray(upper, dtype=float).ravel()
        if np.any(lower >= upper):
            raise ValueError("interval-censored rows require left < right")
        return cls(lower, upper)

    @classmethod
    def concat(cls, parts):
        return cls(
            np.concatenate([p.left for p in parts]),
            np.concatenate([p.right for p in parts]),
        )

    def __len__(self):
        return self.left.size

    def __getitem__(self, idx):
        return Response(self.left[idx], self.right[idx])

    @property
    def is_exact(self):
        return self.left == self.right

    @property
    def is_left(self):
        return np.isneginf(self.left) & ~self.is_exact

    @property
    def is_right(self):
        return np.isposinf(self.right) & ~self.is_exact

    @property
    def is_interval(self):
        return ~(self.is_exact | self.is_left | self.is_right)

    @property
    def all_exact(self):
        return bool(np.all(self.is_exact))

    @property
    def y(self):
        """Exact values; raises if any row is censored."""
        if not self.all_exact:
            raise ValueError("response contains censored rows")
        return self.left

    def representative(self):
        """One finite value per row, used for initialization and sorting."""
        rep = np.where(self.is_exact, self.left, 0.5 * (self.left + self.right))
        rep = np.where(self.is_left, self.right, rep)
        rep = np.where(self.is_right, self.left, rep)
        return rep

    def finite_values(self):
        vals = np.concatenate([self.left, self.right])
        return vals[np.isfinite(vals)]


def _as_matrix(a, n, name):
    if a is None:
        return np.zeros((n, 0))
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2 or a.shape[0] != n:
        raise ValueError(f"{name} must have {n} rows")
    if np.any(~np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


@dataclass(frozen=True)
class Dataset:
    """Response, covariates ``X`` (n x d) and environments ``E`` (n x q)."""

    response: Response
    X: np.ndarray
    E: np.ndarray
    covariate_names: tuple = ()
    env_names: tuple = ()
    response_name: str = "Y"

    def __post_init__(self):
        resp = self.response
        if not isinstance(resp, Response):
            resp = Response.exact(resp)
            object.__setattr__(self, "response", resp)
        n = len(resp)
        object.__setattr__(self, "X", _as_matrix(self.X, n, "X"))
        object.__setattr__(self, "E", _as_matrix(self.E, n, "E"))
        if not self.covariate_names:
            names = tuple(f"X{j + 1}" for j in range(self.X.shape[1]))
            object.__setattr__(self, "covariate_names", names)
        if not self.env_names:
            names = tuple(f"E{j + 1}" for j in range(self.E.shape[1]))
            object.__setattr__(self, "env_names", names)

    @property
    def n(self):
        return len(self.response)

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.E.shape[1]

    def subset_rows(self, idx):
        return Dataset(
            self.response[idx],
            self.X[idx],
            self.E[idx],
            self.covariate_names,
            self.env_names,
            self.response_name,
        )


def _parse_float(text, column, row):
    try:
        return float(text)
    except ValueError:
        raise InputError(
            f"row {row}: column {column!r} has non-numeric value {text!r}"
        ) from None


def _encode_environment(columns, names):
    """Numeric columns pass through; categorical ones become 0/1 or one-hot."""
    blocks, out_names = [], []
    for name, col in zip(names, columns):
        try:
            blocks.append(np.array([float(v) for v in col])[:, None])
            out_names.append(name)
            continue
        except ValueError:
            pass
        levels = sorted(set(col))
        if len(levels) < 2:
            raise InputError(f"environment {name!r} has a single level")
        for lev in levels[1:]:
            blocks.append(np.array([v == lev for v in col], dtype=float)[:, None])
            out_names.append(f"{name}{lev}" if len(levels) > 2 else name)
    return np.hstack(blocks), tuple(out_names)


def read_csv_dataset(path, response, covariates, env) -> Dataset:
    """Load a dataset from a CSV file with a header row.

    Parameters
    ----------
    path : str or path-like
    response : str or sequence of two str
        One column for exact responses, or ``(left, right)`` columns for
        censored data. An empty left cell means left-censored, an empty
        right cell means right-censored.
    covariates : sequence of str
    env : sequence of str
        Environment columns (may be empty).
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise InputError("input file has no header")
        header = [h.strip() for h in reader.fieldnames]
        rows = [{k.strip(): (v or "").strip() for k, v in r.items() if k} for r in reader]
    if isinstance(response, str):
        response = [c.strip() for c in response.split(",") if c.strip()]
    response = list(response)
    needed = response + list(covariates) + list(env)
    missing = [c for c in needed if c not in header]
    if missing:
        raise InputError(f"columns not found in input: {missing}")
    if not rows:
        raise InputError("input file has no data rows")

    X = np.array(
        [[_parse_float(r[c], c, i + 2) for c in covariates] for i, r in enumerate(rows)],
        dtype=float,
    ).reshape(len(rows), len(covariates))
    if env:
        E, env_names = _encode_environment([[r[c] for r in rows] for c in env], env)
    else:
        E, env_names = np.zeros((len(rows), 0)), ()

    if len(response) == 1:
        col = response[0]
        y = np.array([_parse_float(r[col], col, i + 2) for i, r in enumerate(rows)])
        resp = Response.exact(y)
        rname = col
    elif len(response) == 2:
        lcol, rcol = response
        left, right = [], []
        for i, r in enumerate(rows):
            lv, rv = r[lcol], r[rcol]
            if lv == "" and rv == "":
                raise InputError(f"row {i + 2}: both response bounds are empty")
            left.append(-np.inf if lv == "" else _parse_float(lv, lcol, i + 2))
            right.append(np.inf if rv == "" else _parse_float(rv, rcol, i + 2))
        try:
            resp = Response(np.array(left), np.array(right))
        except ValueError as exc:
            raise InputError(str(exc)) from None
        rname = f"{lcol},{rcol}"
    else:
        raise InputError("response must be one column or two (left,right)")
    if np.any(~np.isfinite(X)):
        raise InputError("covariates contain non-finite values")
    return Dataset(resp, X, E, tuple(covariates), env_names, rname)
