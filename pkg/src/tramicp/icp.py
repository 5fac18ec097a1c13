"""Invariant causal prediction over all covariate subsets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .invtest import TESTS, invariance_test
from .tram import TramSpec

__all__ = [
    "IcpResult",
    "run_icp",
    "enumerate_subsets",
    "predictor_pvalues",
    "selected_set",
    "jaccard",
    "fwer_estimate",
    "MAX_COVARIATES",
]

MAX_COVARIATES = 25


def enumerate_subsets(d, max_set_size=None):
    """All subsets of ``range(d)`` by size, then lexicographically."""
    top = d if max_set_size is None else min(int(max_set_size), d)
    for size in range(top + 1):
        yield from itertools.combinations(range(d), size)


def selected_set(set_pvalues, alpha):
    """Intersection of the non-rejected sets and the all-rejected flag."""
    accepted = [set(S) for S, p in set_pvalues.items() if p > alpha]
    if not accepted:
        return (), True
    return tuple(sorted(set.intersection(*accepted))), False


def predictor_pvalues(set_pvalues, alpha, d):
    """Per-predictor p-values: the largest p-value among sets excluding ``j``.

    If every set is rejected at ``alpha``, all predictor p-values are 1.
    """
    if all(p <= alpha for p in set_pvalues.values()):
        return np.ones(d)
    out = np.zeros(d)
    for j in range(d):
        ps = [p for S, p in set_pvalues.items() if j not in S]
        out[j] = max(ps) if ps else 1.0
    return out


def jaccard(A, B):
    """``|A & B| / |A | B|``, with 1 for two empty sets."""
    A, B = set(A), set(B)
    if not A and not B:
        return 1.0
    return len(A & B) / len(A | B)


def fwer_estimate(outputs, truth):
    """Fraction of outputs that contain an element outside ``truth``."""
    outputs = list(outputs)
    if not outputs:
        raise ValueError("need at least one output")
    truth = set(truth)
    return float(np.mean([bool(set(o) - truth) for o in outputs]))


@dataclass(frozen=True)
class IcpResult:
    """Result of :func:`run_icp`.

    Subsets and ``selected`` hold zero-based covariate indices.
    """

    set_pvalues: dict
    predictor_pvalues: np.ndarray
    selected: tuple
    all_rejected: bool
    alpha: float
    test: str = "gcm"
    family: str = "custom"
    covariate_names: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def selected_names(self):
        return [self.covariate_names[j] for j in self.selected]

    def to_dict(self):
        """JSON-ready dict; sets use one-based indices like ``X1, X2, ...``."""
        return {
            "alpha": float(self.alpha),
            "test": self.test,
            "family": self.family,
            "set_pvalues": [
                {"set": [j + 1 for j in S], "p": float(p)}
                for S, p in self.set_pvalues.items()
            ],
            "predictor_pvalues": [float(p) for p in self.predictor_pvalues],
            "selected": [j + 1 for j in self.selected],
            "all_rejected": bool(self.all_rejected),
            "diagnostics": self.diagnostics,
        }

    def summary(self):
        """Human-readable report in the layout of the reference package."""
        names = list(self.covariate_names)
        width = max([len(n) for n in names] + [5])
        lines = [
            "Model-based Invariant Causal Prediction",
            f"Family: {self.family}",
            "",
            f" Invariance test: {self.test}",
            "",
            " Set p-values:",
        ]
        for S, p in self.set_pvalues.items():
            label = "+".join(names[j] for j in S) if S else "Empty"
            lines.append(f"   {label:<{max(width, 12)}} {p:.3g}")
        lines += ["", " Predictor p-values:"]
        lines.append("   " + " ".join(f"{n:>{width}}" for n in names))
        lines.append("   " + " ".join(f"{p:>{width}.3f}" for p in self.predictor_pvalues))
        sel = " ".join(self.selected_names) if self.selected else "Empty"
        lines += ["", f" Set of plausible causal predictors: {sel}"]
        if self.all_rejected:
            lines.append(" (all sets rejected)")
        return "\n".join(lines) + "\n"


def run_icp(
    data: Dataset,
    spec: TramSpec,
    test="gcm",
    alpha=0.05,
    seed=0,
    max_set_size=None,
    mu_kind="forest",
    n_trees=100,
    min_leaf=5,
    inbag=False,
) -> IcpResult:
    """Test every subset ``S`` for invariance and intersect the accepted ones.

    Parameters
    ----------
    data : Dataset
    spec : TramSpec
        Resolved once on the full response.
    test : {"gcm", "wald", "cor"}
    alpha : float
        Level of each invariance test.
    seed : int
        Seeds the forests of the GCM test (combined with each subset).
    max_set_size : int, optional
        Only test subsets up to this size.
    mu_kind, n_trees, min_leaf, inbag
        Environment regression settings for the GCM test.

    Returns
    -------
    IcpResult
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    if test not in TESTS:
        raise ValueError(f"unknown test {test!r}; expected one of {TESTS}")
    d = data.d
    if d > MAX_COVARIATES:
        raise ValueError(f"at most {MAX_COVARIATES} covariates are supported")
    spec = spec.resolve(data.response)
    forest = dict(n_trees=n_trees, min_leaf=min_leaf, inbag=inbag)
    set_p, per_set = {}, {}
    n_failed = n_nonconv = 0
    for S in enumerate_subsets(d, max_set_size):
        key = "{" + ",".join(str(j + 1) for j in S) + "}"
        try:
            res = invariance_test(test, data, S, spec, seed, mu_kind, **forest)
        except (ValueError, FloatingPointError, np.linalg.LinAlgError) as exc:
            # a failed fit cannot reject S; keeping it makes the output conservative
            n_failed += 1
            set_p[S] = 1.0
            per_set[key] = {"failed": True, "error": str(exc)}
            continue
        set_p[S] = float(res.p_value)
        if not res.diagnostics.get("converged", True):
            n_nonconv += 1
        per_set[key] = {
            k: v for k, v in res.diagnostics.items() if k != "gamma"
        } | {"statistic": float(res.statistic), "df": int(res.df)}
    selected, all_rejected = selected_set(set_p, alpha)
    diagnostics = {
        "n": data.n,
        "covariates": list(data.covariate_names),
        "environments": list(data.env_names),
        "n_sets": len(set_p),
        "n_failed": n_failed,
        "n_nonconverged": n_nonconv,
        "seed": int(seed),
        "sets": per_set,
    }
    return IcpResult(
        set_pvalues=set_p,
        predictor_pvalues=predictor_pvalues(set_p, alpha, d),
        selected=selected,
        all_rejected=all_rejected,
        alpha=float(alpha),
        test=test,
        family=spec.family_name,
        covariate_names=tuple(data.covariate_names),
        diagnostics=diagnostics,
    )
