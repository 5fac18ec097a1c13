"""Invariance tests for a candidate set ``S``: TRAM-GCM, TRAM-Wald, TRAM-COR."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

from .data import Dataset
from .regress import fit_conditional_mean
from .tram import TramSpec, fit

__all__ = [
    "TestResult",
    "chi_sq_sf",
    "gcm_statistic",
    "tram_gcm",
    "tram_wald",
    "tram_cor",
    "invariance_test",
    "canonical_order",
    "subset_seed",
    "TESTS",
]

TESTS = ("gcm", "wald", "cor")

GCM_EIGEN_FLOOR = 1e-12
WALD_EIGEN_FLOOR = 1e-10


@dataclass(frozen=True)
class TestResult:
    """Outcome of one invariance test.

    Attributes
    ----------
    p_value : float
    statistic : float
    df : int
        Chi-square degrees of freedom (GCM, Wald) or t-test df (COR).
    diagnostics : dict
    """

    __test__ = False  # not a pytest class

    p_value: float
    statistic: float
    df: int
    diagnostics: dict = field(default_factory=dict)


def chi_sq_sf(stat, df):
    """Chi-square survival function ``Q(df / 2, stat / 2)``."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    stat = np.asarray(stat, dtype=float)
    if np.any(np.isnan(stat)) or np.any(stat < 0):
        raise ValueError("chi-square statistic must be nonnegative")
    out = special.gammaincc(0.5 * df, 0.5 * stat)
    return out.item() if out.ndim == 0 else out


def subset_seed(seed, S):
    """Deterministic per-subset seed sequence from the test seed and ``S``."""
    mask = 0
    for j in S:
        mask |= 1 << int(j)
    return np.random.SeedSequence([int(seed), mask, len(tuple(S))])


def canonical_order(data: Dataset):
    """Row order that depends only on row contents (stable under permutation)."""
    keys = [data.response.right, data.response.left]
    keys += [data.E[:, j] for j in range(data.q)][::-1]
    keys += [data.X[:, j] for j in range(data.d)][::-1]
    return np.lexsort(keys)


def _sorted(data: Dataset):
    return data.subset_rows(canonical_order(data))


def gcm_statistic(L):
    """Chi-square statistic of residual products ``L`` (n x q).

    Returns ``(statistic, df, diagnostics)``; the covariance is inverted on
    the eigenspace with eigenvalues above ``1e-12`` times the largest.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim == 1:
        L = L[:, None]
    n = L.shape[0]
    mean = L.mean(axis=0)
    sigma = L.T @ L / n - np.outer(mean, mean)
    sigma = 0.5 * (sigma + sigma.T)
    w, V = np.linalg.eigh(sigma)
    diag = {}
    wmax = float(np.max(w)) if w.size else 0.0
    if not wmax > 0:
        diag["degenerate_covariance"] = True
        return 0.0, 0, diag
    keep = w > GCM_EIGEN_FLOOR * wmax
    if not keep.all():
        diag["rank_deficient"] = True
    diag["condition_number"] = float(wmax / np.min(w[keep]))
    T = (V[:, keep].T @ (np.sqrt(n) * mean)) / np.sqrt(w[keep])
    return float(T @ T), int(keep.sum()), diag


def _p_from_chi2(stat, df):
    return 1.0 if df == 0 else float(chi_sq_sf(stat, df))


def tram_gcm(
    data: Dataset,
    S,
    spec: TramSpec,
    mu_kind="forest",
    seed=0,
    n_trees=100,
    min_leaf=5,
    mtry=None,
    inbag=False,
    linear_correction=True,
) -> TestResult:
    """TRAM-GCM test of ``Y independent of E given X^S`` via score residuals.

    At the MLE the score residuals are orthogonal to ``(1, X^S)``, so the
    part of the forest error that is linear in ``X^S`` cancels from the sum
    of residual products but would still inflate their covariance. With
    ``linear_correction`` the forest residuals are additionally regressed on
    ``(1, X^S)``, which keeps the test from being conservative.

    Parameters
    ----------
    data : Dataset
    S : sequence of int
        Zero-based covariate indices.
    spec : TramSpec
    mu_kind : {"forest", "linear", "mean"}
        Regression used for ``E[E | X^S]``.
    seed : int
        Combined with ``S`` to seed the forest.
    n_trees, min_leaf, mtry, inbag, linear_correction
        Forest settings (see :func:`tramicp.regress.fit_conditional_mean`).

    Returns
    -------
    TestResult
    """
    S = tuple(int(j) for j in S)
    data = _sorted(data)
    XS = data.X[:, list(S)]
    model = fit(spec, data.response, XS)
    R, clipped = model.score_residuals(data.response, XS, return_clipped=True)
    mu = fit_conditional_mean(
        XS, data.E, mu_kind, n_trees, min_leaf, mtry, subset_seed(seed, S), inbag,
        linear_correction,
    )
    L = R[:, None] * (data.E - mu.train_predictions)
    stat, df, diag = gcm_statistic(L)
    diag.update(
        converged=model.converged,
        gradient_norm=model.gradient_norm,
        n_clipped=int(clipped.sum()),
        **model.diagnostics,
    )
    return TestResult(_p_from_chi2(stat, df), stat, df, diag)


def tram_wald(data: Dataset, S, spec: TramSpec) -> TestResult:
    """TRAM-Wald test of ``gamma = 0`` in the environment-augmented TRAM.

    The covariance of ``gamma`` is the corresponding block of the inverse
    observed information; the quadratic form uses its pseudo-inverse on the
    eigenspace with eigenvalues above ``1e-10`` times the largest.
    """
    S = tuple(int(j) for j in S)
    data = _sorted(data)
    XS = data.X[:, list(S)]
    model = fit(spec, data.response, XS, data.E, include_env_interactions=True)
    info = model.observed_information(data.response, XS, data.E)
    diag = dict(
        converged=model.converged, gradient_norm=model.gradient_norm, **model.diagnostics
    )
    try:
        cov = np.linalg.inv(info)
        if not np.all(np.isfinite(cov)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(info, hermitian=True)
        diag["singular_information"] = True
    g = model.gamma
    m = g.size
    cov_g = cov[-m:, -m:]
    cov_g = 0.5 * (cov_g + cov_g.T)
    w, V = np.linalg.eigh(cov_g)
    wmax = float(np.max(w))
    if not wmax > 0:
        diag["rank_zero"] = True
        return TestResult(1.0, 0.0, 0, diag)
    keep = w > WALD_EIGEN_FLOOR * wmax
    if not keep.all():
        diag["rank_deficient"] = True
    proj = V[:, keep].T @ g
    stat = float(np.sum(proj**2 / w[keep]))
    df = int(keep.sum())
    diag["gamma"] = g.tolist()
    return TestResult(_p_from_chi2(stat, df), stat, df, diag)


def tram_cor(data: Dataset, S, spec: TramSpec) -> TestResult:
    """Pearson correlation t-test between score residuals and the environment."""
    if data.q != 1:
        raise ValueError("the correlation test needs a single environment column")
    S = tuple(int(j) for j in S)
    data = _sorted(data)
    XS = data.X[:, list(S)]
    model = fit(spec, data.response, XS)
    R = model.score_residuals(data.response, XS)
    e = data.E[:, 0]
    n = R.size
    diag = dict(converged=model.converged, gradient_norm=model.gradient_norm)
    rc, ec = R - R.mean(), e - e.mean()
    denom = np.sqrt(np.sum(rc**2) * np.sum(ec**2))
    if not denom > 0:
        diag["zero_variance"] = True
        return TestResult(1.0, 0.0, n - 2, diag)
    r = float(np.clip(np.sum(rc * ec) / denom, -1.0, 1.0))
    if abs(r) == 1.0:
        return TestResult(0.0, np.inf, n - 2, diag)
    t = r * np.sqrt((n - 2) / (1.0 - r * r))
    p = float(2.0 * stats.t.sf(abs(t), n - 2))
    diag["correlation"] = r
    return TestResult(p, float(t), n - 2, diag)


def invariance_test(kind, data, S, spec, seed=0, mu_kind="forest", **forest):
    """Dispatch to ``tram_gcm``, ``tram_wald`` or ``tram_cor`` by name."""
    if kind == "gcm":
        return tram_gcm(data, S, spec, mu_kind, seed, **forest)
    if kind == "wald":
        return tram_wald(data, S, spec)
    if kind == "cor":
        return tram_cor(data, S, spec)
    raise ValueError(f"unknown test {kind!r}; expected one of {TESTS}")
