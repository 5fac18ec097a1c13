"""Linear shift transformation models.

The conditional distribution function is ``F_Z(h(y | x))`` with

    h(y | x, e) = a(y)^T theta - x^T beta - m(x, e)^T gamma,

where ``m(x, e) = (1, x^T)^T kron e`` enters only in the environment-augmented
fit used by the Wald test. Parameters are estimated by maximum likelihood on
the unconstrained ``raw`` parameterization of the basis, with an exact
Hessian driving a damped Newton iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .basis import Basis, BaselineParams, Bernstein, Discrete, parse_basis
from .data import Response
from .errdist import ErrorDistribution, get_distribution

__all__ = [
    "FAMILIES",
    "TramSpec",
    "FittedTram",
    "fit",
    "log_likelihood",
    "environment_interactions",
]

#: family token -> (basis token, error token, response type)
FAMILIES = {
    "lm": ("linear", "normal", "continuous"),
    "binary": ("discrete", "logistic", "discrete"),
    "boxcox": ("bernstein", "normal", "continuous"),
    "polr": ("discrete", "logistic", "discrete"),
    "colr": ("bernstein", "logistic", "continuous"),
    "cotram": ("bernstein", "logistic", "count"),
    "coxph": ("bernstein", "minev", "continuous"),
    "weibull": ("loglinear", "minev", "continuous"),
}

RESIDUAL_CLIP = 1e12
SEPARATION_BOUND = 50.0


@dataclass(frozen=True)
class TramSpec:
    """Model family: error distribution, baseline basis and response type.

    A spec built from a family token usually has an unresolved basis
    (Bernstein support or discrete levels unknown); :meth:`resolve` fixes it
    from the observed responses.
    """

    error: ErrorDistribution
    basis: Basis
    family_name: str = "custom"
    response_type: str = "continuous"
    n_covariates: int | None = None

    @classmethod
    def from_family(cls, family, order=6, error=None, levels=None, support=None):
        """Spec for a family token (``lm``, ``binary``, ..., ``weibull``).

        Parameters
        ----------
        family : str
        order : int
            Bernstein order for Bernstein families.
        error : str, optional
            Override the family's error distribution.
        levels : array-like, optional
            Response levels for discrete families. Binary defaults to {0, 1}.
        support : tuple, optional
            ``(lower, upper)`` for Bernstein families.
        """
        family = str(family).lower()
        if family not in FAMILIES:
            raise ValueError(
                f"unknown family {family!r}; expected one of {sorted(FAMILIES)}"
            )
        btoken, etoken, rtype = FAMILIES[family]
        if btoken == "bernstein":
            basis = Bernstein(order)
            if support is not None:
                basis = basis.with_support(*support)
        elif btoken == "discrete":
            if levels is None and family == "binary":
                levels = [0.0, 1.0]
            basis = Discrete(levels) if levels is not None else None
        else:
            basis = parse_basis(btoken)
        return cls(
            error=get_distribution(error or etoken),
            basis=basis,
            family_name=family,
            response_type=rtype,
        )

    @property
    def resolved(self):
        if self.basis is None:
            return False
        return not isinstance(self.basis, Bernstein) or self.basis.resolved

    def resolve(self, response: Response) -> "TramSpec":
        """Fix data-dependent basis settings and validate the response."""
        if not isinstance(response, Response):
            response = Response.exact(response)
        vals = response.finite_values()
        if vals.size == 0:
            raise ValueError("response has no finite values")
        basis = self.basis
        if self.response_type == "discrete":
            if basis is None:
                levels = np.unique(vals)
                if levels.size < 2:
                    raise ValueError("discrete response needs at least two levels")
                basis = Discrete(levels)
            else:
                basis.level_index(vals)
        elif self.response_type == "count":
            if np.any(vals < 0) or np.any(vals != np.round(vals)):
                raise ValueError("count responses must be nonnegative integers")
            if not basis.resolved:
                lo = float(np.min(vals))
                lo = lo - 1.0 if lo > 0 else 0.0
                hi = max(float(np.max(vals)), lo + 1.0)
                width = hi - lo
                basis = basis.with_support(lo - 0.1 * width, hi + 0.1 * width)
        else:
            if isinstance(basis, Bernstein) and not basis.resolved:
                basis = basis.support_from_data(vals)
            if type(basis).__name__ == "LogLinear" and np.any(vals <= 0):
                raise ValueError("log-linear baseline requires positive responses")
        return replace(self, basis=basis)


def environment_interactions(X, E):
    """Rows of ``m(x, e) = (1, x^T)^T kron e`` (length ``q * (1 + d)``)."""
    X = np.asarray(X, dtype=float).reshape(len(E), -1)
    E = np.asarray(E, dtype=float).reshape(len(X), -1)
    ones = np.hstack([np.ones((X.shape[0], 1)), X])
    return np.einsum("ni,nj->nij", ones, E).reshape(X.shape[0], -1)


def _log1mexp(a):
    """``log(1 - exp(a))`` for ``a <= 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a > -np.log(2.0), np.log(-np.expm1(a)), np.log1p(-np.exp(a)))


def _shift_design(X, E, interactions):
    if X is None:
        raise ValueError("X is required (use an n x 0 array for no covariates)")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if not interactions:
        return X
    if E is None:
        raise ValueError("environment-augmented model needs E")
    E = np.asarray(E, dtype=float)
    if E.ndim == 1:
        E = E[:, None]
    return np.hstack([X, environment_interactions(X, E)])


class _Design:
    """Basis evaluations and shift design for one (spec, data) pair."""

    def __init__(self, spec: TramSpec, response: Response, W: np.ndarray):
        self.spec = spec
        self.error = spec.error
        basis = spec.basis
        n = len(response)
        if W.shape[0] != n:
            raise ValueError("covariates and response differ in length")
        self.n = n
        self.W = W
        self.n_theta = basis.n_free
        self.n_shift = W.shape[1]
        k = self.n_theta

        if spec.response_type == "continuous":
            ex = response.is_exact
        else:
            ex = np.zeros(n, dtype=bool)
        self.ex = ex
        y_ex = response.left[ex]
        self.A_ex = basis.evaluate(y_ex)[:, :k] if ex.any() else np.zeros((0, k))
        self.Ad_ex = (
            basis.evaluate_derivative(y_ex) if ex.any() else np.zeros((0, k))
        )

        iv = ~ex
        self.iv = iv
        upper = response.right[iv].copy()
        lower = response.left[iv].copy()
        exact_iv = response.is_exact[iv]
        if spec.response_type == "discrete":
            levels = basis.levels
            idx = basis.level_index(upper[exact_iv])
            lower[exact_iv] = np.where(idx > 0, levels[np.maximum(idx - 1, 0)], -np.inf)
            fin_u = np.isfinite(upper) & (upper < levels[-1])
        elif spec.response_type == "count":
            lower[exact_iv] = np.where(upper[exact_iv] > 0, upper[exact_iv] - 1.0, -np.inf)
            fin_u = np.isfinite(upper)
        else:
            fin_u = np.isfinite(upper)
        fin_l = np.isfinite(lower)
        self.fin_u, self.fin_l = fin_u, fin_l
        self.Au = np.zeros((iv.sum(), k))
        self.Al = np.zeros((iv.sum(), k))
        if fin_u.any():
            self.Au[fin_u] = basis.evaluate(upper[fin_u])[:, :k]
        if fin_l.any():
            self.Al[fin_l] = basis.evaluate(lower[fin_l])[:, :k]

    # ------------------------------------------------------------------

    def pieces(self, theta, b, shift=0.0):
        """Per-row log-likelihood and score residual, plus row-level terms."""
        err = self.error
        eta = self.W @ b if self.n_shift else np.zeros(self.n)
        shift = np.broadcast_to(np.asarray(shift, dtype=float), (self.n,))
        out = {}
        ll = np.empty(self.n)
        res = np.empty(self.n)

        if self.ex.any():
            z = self.A_ex @ theta - eta[self.ex] + shift[self.ex]
            hp = self.Ad_ex @ theta
            with np.errstate(divide="ignore", invalid="ignore"):
                ll[self.ex] = err._logpdf(z) + np.log(hp)
            res[self.ex] = err._dlogpdf(z)
            out["ex"] = (z, hp)

        if self.iv.any():
            eta_iv = eta[self.iv] - shift[self.iv]
            zu = np.where(self.fin_u, self.Au @ theta - eta_iv, np.inf)
            zl = np.where(self.fin_l, self.Al @ theta - eta_iv, -np.inf)
            with np.errstate(all="ignore"):
                lcu, lcl = err._logcdf(zu), err._logcdf(zl)
                lsu, lsl = err._logsf(zu), err._logsf(zl)
                upper_branch = err._cdf(zl) > 0.5
                lp = np.where(
                    upper_branch,
                    lsl + _log1mexp(lsu - lsl),
                    lcu + _log1mexp(lcl - lcu),
                )
                lp = np.where(~self.fin_l, lcu, lp)
                lp = np.where(~self.fin_u, lsl, lp)
                lp = np.where(np.isnan(lp), -np.inf, lp)
                lfu = np.where(self.fin_u, err._logpdf(np.where(self.fin_u, zu, 0.0)), -np.inf)
                lfl = np.where(self.fin_l, err._logpdf(np.where(self.fin_l, zl, 0.0)), -np.inf)
                gu = np.exp(lfu - lp)
                gl = np.exp(lfl - lp)
            gu = np.where(self.fin_u, gu, 0.0)
            gl = np.where(self.fin_l, gl, 0.0)
            ll[self.iv] = lp
            res[self.iv] = gu - gl
            out["iv"] = (zu, zl, gu, gl)
        out["ll"] = ll
        out["res"] = res
        return out

    def loglik(self, theta, b, shift=0.0):
        return self.pieces(theta, b, shift)["ll"]

    def derivatives(self, theta, b):
        """Total log-likelihood, gradient and Hessian in (theta_free, b)."""
        err = self.error
        k, p = self.n_theta, self.n_shift
        P = k + p
        pc = self.pieces(theta, b)
        total = float(np.sum(pc["ll"]))
        grad = np.zeros(P)
        hess = np.zeros((P, P))
        if not np.isfinite(total):
            return total, grad, hess

        if "ex" in pc:
            z, hp = pc["ex"]
            R = np.hstack([self.A_ex, -self.W[self.ex]])
            d1 = err._dlogpdf(z)
            d2 = err._d2logpdf(z)
            Q = self.Ad_ex / hp[:, None]
            grad += R.T @ d1
            grad[:k] += Q.sum(axis=0)
            hess += (R * d2[:, None]).T @ R
            hess[:k, :k] -= Q.T @ Q

        if "iv" in pc:
            zu, zl, gu, gl = pc["iv"]
            Wi = self.W[self.iv]
            Ru = np.hstack([self.Au, -Wi * self.fin_u[:, None]])
            Rl = np.hstack([self.Al, -Wi * self.fin_l[:, None]])
            du = np.where(self.fin_u, err._dlogpdf(np.where(self.fin_u, zu, 0.0)), 0.0)
            dl = np.where(self.fin_l, err._dlogpdf(np.where(self.fin_l, zl, 0.0)), 0.0)
            huu = gu * du - gu * gu
            hll = -gl * dl - gl * gl
            hul = gu * gl
            grad += Ru.T @ gu - Rl.T @ gl
            cross = (Ru * hul[:, None]).T @ Rl
            hess += (Ru * huu[:, None]).T @ Ru + (Rl * hll[:, None]).T @ Rl
            hess += cross + cross.T
        return total, grad, 0.5 * (hess + hess.T)


def _initial_theta(spec: TramSpec, response: Response):
    """Quantile-anchored starting values for the baseline coefficients."""
    basis, err = spec.basis, spec.error
    rep = response.representative()
    n = rep.size
    lo_p, hi_p = 1.0 / (n + 1.0), n / (n + 1.0)
    if isinstance(basis, Discrete):
        idx = np.searchsorted(basis.levels, rep, side="left")
        cum = np.array([(idx <= k).mean() for k in range(basis.n_levels - 1)])
        return err.quantile(np.clip(cum, lo_p, hi_p))
    if isinstance(basis, Bernstein):
        knots = np.linspace(basis.lower, basis.upper, basis.order + 1)
        srt = np.sort(rep)
        cum = np.searchsorted(srt, knots, side="right") / n
        return err.quantile(np.clip(cum, lo_p, hi_p))
    t = basis.evaluate(rep)[:, 1]
    ranks = np.argsort(np.argsort(rep, kind="stable"), kind="stable") + 1.0
    z = err.quantile(ranks / (n + 1.0))
    A = np.column_stack([np.ones(n), t])
    coef = np.linalg.lstsq(A, z, rcond=None)[0]
    return np.array([coef[0], max(coef[1], 1e-3)])


def _newton(objective, x0, n, max_iter=500, tol=1e-6, stop_tol=1e-10):
    """Damped Newton ascent with Levenberg-Marquardt regularization.

    ``objective(x, derivatives)`` returns the log-likelihood, and with
    ``derivatives=True`` also its gradient and Hessian.
    """
    x = x0.copy()
    ll, g, H = objective(x, True)
    if not np.isfinite(ll):
        raise FloatingPointError("log-likelihood is not finite at the start")
    lam = 0.0
    stalled = 0
    it = 0
    line_ok = True
    for it in range(1, max_iter + 1):
        gnorm = np.max(np.abs(g)) / n if g.size else 0.0
        if gnorm <= stop_tol:
            break
        negH = -H
        scale = max(1.0, float(np.max(np.abs(np.diag(negH))))) if g.size else 1.0
        step = None
        for _ in range(60):
            try:
                c = linalg.cho_factor(negH + lam * scale * np.eye(len(g)))
                step = linalg.cho_solve(c, g)
                if np.all(np.isfinite(step)):
                    break
            except linalg.LinAlgError:
                pass
            lam = max(lam * 10.0, 1e-8)
            step = None
        if step is None:
            line_ok = False
            break
        big = np.max(np.abs(step))
        if big > 10.0:
            step *= 10.0 / big
        slope = float(g @ step)
        t = 1.0
        accepted = False
        while t > 1e-12:
            xn = x + t * step
            lln = objective(xn, False)
            if np.isfinite(lln) and lln >= ll + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            if gnorm <= tol or lam > 1e12:
                break
            lam = max(lam * 10.0, 1e-6)
            continue
        lam = lam * 0.1 if lam > 1e-10 else 0.0
        gain = lln - ll
        x = xn
        ll, g, H = objective(x, True)
        stalled = stalled + 1 if gain <= 1e-14 * max(1.0, abs(ll)) else 0
        if stalled >= 5:
            break
    gnorm = np.max(np.abs(g)) / n if g.size else 0.0
    return x, ll, g, H, gnorm, it, line_ok


def _active_set_newton(objective, x0, C, n, max_iter=500, stop_tol=1e-11):
    """Newton ascent for a concave objective under ``C @ x[:k] > 0``.

    Constraints that block a step are made active with a tiny positive
    slack (so the likelihood stays finite); an active constraint is
    released when its Lagrange multiplier estimate turns negative.
    """
    k = C.shape[1] if C.size else 0
    m = C.shape[0] if C.size else 0
    x = x0.copy()
    P = x.size
    ll, g, H = objective(x, True)
    if not np.isfinite(ll):
        raise FloatingPointError("log-likelihood is not finite at the start")
    active = np.zeros(m, dtype=bool)
    it = 0
    for it in range(1, max_iter + 1):
        if active.any():
            Zt = linalg.null_space(C[active])
            Z = np.zeros((P, Zt.shape[1] + P - k))
            Z[:k, : Zt.shape[1]] = Zt
            Z[k:, Zt.shape[1] :] = np.eye(P - k)
        else:
            Z = np.eye(P)
        gz = Z.T @ g
        if np.max(np.abs(gz), initial=0.0) / n <= stop_tol:
            if not active.any():
                break
            Ca = C[active]
            mu = np.linalg.lstsq(Ca.T, -g[:k], rcond=None)[0]
            if np.min(mu) >= -1e-8 * n:
                break
            idx = np.flatnonzero(active)[np.argmin(mu)]
            active[idx] = False
            continue
        M = Z.T @ (-H) @ Z
        scale = max(1.0, float(np.max(np.abs(np.diag(M)))))
        ridge = 1e-12
        step = None
        while ridge < 1e6:
            try:
                c = linalg.cho_factor(M + ridge * scale * np.eye(M.shape[0]))
                step = Z @ linalg.cho_solve(c, gz)
                break
            except linalg.LinAlgError:
                ridge *= 100.0
        if step is None or not np.all(np.isfinite(step)):
            break
        big = np.max(np.abs(step))
        if big > 10.0:
            step *= 10.0 / big
        t, block = 1.0, None
        if m:
            slack, rate = C @ x[:k], C @ step[:k]
            free = ~active & (rate < 0)
            if free.any():
                eps = 1e-9 * np.maximum(1.0, np.abs(x[:k]).max())
                ratios = np.full(m, np.inf)
                ratios[free] = (slack[free] - eps) / -rate[free]
                j = int(np.argmin(ratios))
                if ratios[j] < 1.0:
                    t, block = max(ratios[j], 0.0), j
        slope = float(g @ step)
        accepted = False
        while t > 1e-14:
            xn = x + t * step
            lln = objective(xn, False)
            if np.isfinite(lln) and lln >= ll + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
            block = None
        if not accepted:
            break
        if block is not None:
            active[block] = True
        gain = lln - ll
        x = xn
        ll, g, H = objective(x, True)
        if block is None and gain <= 1e-15 * max(1.0, abs(ll)) and t < 1e-6:
            break
    return x, it


@dataclass(frozen=True)
class FittedTram:
    """A fitted linear shift TRAM.

    Attributes
    ----------
    spec : TramSpec
        Resolved spec (``n_covariates`` set).
    theta : BaselineParams
    beta : ndarray
    gamma : ndarray or None
        Environment main and interaction effects of the augmented fit.
    loglik : float
    converged : bool
    gradient_norm : float
        Max-abs gradient of the mean log-likelihood in raw coordinates.
    """

    spec: TramSpec
    theta: BaselineParams
    beta: np.ndarray
    gamma: np.ndarray | None
    loglik: float
    converged: bool
    gradient_norm: float
    n_iter: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def has_gamma(self):
        return self.gamma is not None

    @property
    def shift_coef(self):
        if self.gamma is None:
            return self.beta
        return np.concatenate([self.beta, self.gamma])

    @property
    def parameters(self):
        """``(theta_free, beta, gamma)`` stacked, the information coordinates."""
        return np.concatenate([self.spec.basis.finite_theta(self.theta.theta), self.shift_coef])

    def _W(self, X, E):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, self.beta.size) if self.beta.size else X.reshape(-1, 0)
        if X.shape[1] != self.beta.size:
            raise ValueError(
                f"expected {self.beta.size} covariates, got {X.shape[1]}"
            )
        if self.has_gamma and E is None:
            raise ValueError("model has environment effects; E is required")
        return _shift_design(X, E, self.has_gamma)

    def _design(self, response, X, E):
        if not isinstance(response, Response):
            response = Response.exact(response)
        return _Design(self.spec, response, self._W(X, E))

    def _theta_free(self):
        return self.spec.basis.finite_theta(self.theta.theta)

    def baseline(self, y):
        """``h_Y(y) = a(y)^T theta`` (``+inf`` at the top discrete level)."""
        basis = self.spec.basis
        y = np.asarray(y, dtype=float)
        if isinstance(basis, Discrete):
            idx = basis.level_index(y)
            return np.append(self._theta_free(), np.inf)[idx]
        return basis.evaluate(y) @ self.theta.theta

    def transformation(self, y, X, E=None):
        """``h(y | x) = a(y)^T theta - x^T beta - m(x, e)^T gamma``."""
        y = np.asarray(y, dtype=float)
        W = self._W(np.atleast_2d(X) if np.ndim(X) == 1 else X, E)
        return self.baseline(y) - W @ self.shift_coef

    def log_likelihood(self, response, X, E=None, shift=0.0):
        """Per-row log-likelihood of ``h + shift``."""
        des = self._design(response, X, E)
        return des.loglik(self._theta_free(), self.shift_coef, shift)

    def score_residuals(self, response, X, E=None, return_clipped=False):
        """Score residuals ``d/d alpha log-lik(h + alpha)`` at ``alpha = 0``.

        Non-finite or extreme values are clipped to ``+/-1e12``; with
        ``return_clipped=True`` the boolean clip mask is returned too.
        """
        des = self._design(response, X, E)
        r = des.pieces(self._theta_free(), self.shift_coef)["res"]
        clipped = ~np.isfinite(r) | (np.abs(r) > RESIDUAL_CLIP)
        r = np.where(np.isnan(r), 0.0, r)
        r = np.clip(r, -RESIDUAL_CLIP, RESIDUAL_CLIP)
        return (r, clipped) if return_clipped else r

    def observed_information(self, response, X, E=None):
        """Negative Hessian of the total log-likelihood in (theta, beta, gamma)."""
        des = self._design(response, X, E)
        _, _, H = des.derivatives(self._theta_free(), self.shift_coef)
        return -H

    def inverse_transformation(self, z, X, E=None):
        """Generalized inverse ``inf{y : z <= h(y | x)}``."""
        X = np.asarray(X, dtype=float)
        W = self._W(X, E)
        z = np.asarray(z, dtype=float)
        target = z + W @ self.shift_coef
        return _baseline_inverse(self.spec, self.theta.theta, target)

    def sample(self, X, rng, E=None):
        """Draw one response per row of ``X`` via ``h^{-1}(Z | x)``."""
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        u = rng.uniform(size=n)
        return self.inverse_transformation(self.spec.error.quantile(u), X, E)


def bernstein_baseline_extended(basis: Bernstein, theta, y):
    """Bernstein ``h_Y`` continued linearly beyond ``[lower, upper]``."""
    y = np.asarray(y, dtype=float)
    lo, hi = basis.lower, basis.upper
    yc = np.clip(y, lo, hi)
    h = basis.evaluate(yc) @ theta
    slope_lo = basis.evaluate_derivative(np.array([lo]))[0] @ theta
    slope_hi = basis.evaluate_derivative(np.array([hi]))[0] @ theta
    return h + np.where(y < lo, slope_lo * (y - lo), 0.0) + np.where(
        y > hi, slope_hi * (y - hi), 0.0
    )


def _bernstein_inverse(basis: Bernstein, theta, target):
    """Solve ``h_Y(y) = target`` with linear continuation outside the support."""
    target = np.asarray(target, dtype=float)
    lo, hi = basis.lower, basis.upper
    h_lo, h_hi = theta[0], theta[-1]
    slope_lo = basis.evaluate_derivative(np.array([lo]))[0] @ theta
    slope_hi = basis.evaluate_derivative(np.array([hi]))[0] @ theta
    out = np.empty_like(target)
    below = target <= h_lo
    above = target >= h_hi
    with np.errstate(invalid="ignore"):
        out[below] = lo + (target[below] - h_lo) / slope_lo
        out[above] = hi + (target[above] - h_hi) / slope_hi
    mid = ~(below | above)
    if mid.any():
        t = target[mid]
        a = np.full(t.shape, lo)
        b = np.full(t.shape, hi)
        for _ in range(100):
            c = 0.5 * (a + b)
            hc = basis.evaluate(c) @ theta
            left = hc < t
            a = np.where(left, c, a)
            b = np.where(left, b, c)
            if np.max(b - a) <= 1e-13 * (hi - lo):
                break
        out[mid] = 0.5 * (a + b)
    return out


def _baseline_inverse(spec: TramSpec, theta, target):
    basis = spec.basis
    target = np.asarray(target, dtype=float)
    if isinstance(basis, Discrete):
        finite = basis.finite_theta(theta)
        idx = np.searchsorted(finite, target, side="left")
        return basis.levels[idx]
    name = type(basis).__name__
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if name == "Linear":
            return (target - theta[0]) / theta[1]
        if name == "LogLinear":
            return np.exp((target - theta[0]) / theta[1])
    if isinstance(basis, Bernstein):
        t = np.where(np.isfinite(target), target, 0.0)
        y = _bernstein_inverse(basis, theta, t)
        y = np.where(target == np.inf, np.inf, np.where(target == -np.inf, -np.inf, y))
        if spec.response_type == "count":
            with np.errstate(invalid="ignore"):
                y = np.maximum(0.0, np.ceil(y - 1e-9))
        return y
    raise NotImplementedError(f"no inverse for {basis!r}")


def log_likelihood(spec: TramSpec, theta, beta, response, X, E=None, gamma=None, shift=0.0):
    """Per-row log-likelihood for given parameters.

    Parameters
    ----------
    spec : TramSpec
        Must be resolved.
    theta : BaselineParams or array-like
        Constrained baseline coefficients (``+inf`` entry allowed for
        discrete bases).
    beta : array-like
    response : Response or array-like
    X : ndarray, shape (n, d)
    E, gamma : optional
        Environments and augmented-model coefficients.
    shift : float or ndarray
        Added to ``h`` before evaluation.
    """
    if not spec.resolved:
        raise ValueError("spec must be resolved before evaluating likelihoods")
    if isinstance(theta, BaselineParams):
        theta = theta.theta
    if not isinstance(response, Response):
        response = Response.exact(response)
    W = _shift_design(X, E, gamma is not None)
    b = np.asarray(beta, dtype=float).ravel()
    if gamma is not None:
        b = np.concatenate([b, np.asarray(gamma, dtype=float).ravel()])
    if W.shape[1] != b.size:
        raise ValueError("coefficient length does not match covariates")
    des = _Design(spec, response, W)
    return des.loglik(spec.basis.finite_theta(np.asarray(theta, dtype=float)), b, shift)


def fit(
    spec: TramSpec,
    response,
    X,
    E=None,
    include_env_interactions=False,
    max_iter=500,
    tol=1e-6,
) -> FittedTram:
    """Maximum likelihood fit of a linear shift TRAM.

    Parameters
    ----------
    spec : TramSpec
        Resolved automatically from ``response`` if needed.
    response : Response or array-like
    X : ndarray, shape (n, d)
        Shift covariates (``d`` may be 0).
    E : ndarray, shape (n, q), optional
        Environments, needed when ``include_env_interactions`` is set.
    include_env_interactions : bool
        Add ``-m(x, e)^T gamma`` to the transformation.
    max_iter : int
    tol : float
        Convergence threshold on the max-abs mean gradient.

    Returns
    -------
    FittedTram
    """
    if not isinstance(response, Response):
        response = Response.exact(response)
    if not spec.resolved:
        spec = spec.resolve(response)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = len(response)
    W = _shift_design(X, E, include_env_interactions)
    des = _Design(spec, response, W)
    basis = spec.basis
    k, p = des.n_theta, des.n_shift
    if n < k + p + 1:
        raise ValueError(
            f"need at least {k + p + 1} observations for {k + p} parameters"
        )

    def objective(x, derivs):
        raw_t, b = x[:k], x[k:]
        theta = basis.constrain(raw_t).theta
        tf = basis.finite_theta(theta)
        if not derivs:
            with np.errstate(all="ignore"):
                return float(np.sum(des.loglik(tf, b)))
        ll, g, H = des.derivatives(tf, b)
        J = basis.constrain_jacobian(raw_t)
        gr = g.copy()
        gr[:k] = J.T @ g[:k]
        Hr = H.copy()
        Hr[:k, :k] = J.T @ H[:k, :k] @ J + np.diag(
            basis.constrain_hessian_diag(raw_t, g[:k])
        )
        Hr[:k, k:] = J.T @ H[:k, k:]
        Hr[k:, :k] = Hr[:k, k:].T
        return ll, gr, Hr

    # Phase 1: Newton in (theta, b), where the log-likelihood is concave,
    # with an active set for the monotonicity constraints.
    C = basis.constraint_matrix()

    def objective_direct(x, derivs):
        tf, b = x[:k], x[k:]
        if C.size and np.any(C @ tf <= 0):
            return (-np.inf, None, None) if derivs else -np.inf
        if not derivs:
            with np.errstate(all="ignore"):
                return float(np.sum(des.loglik(tf, b)))
        return des.derivatives(tf, b)

    raw0 = basis.unconstrain(_initial_theta(spec, response))
    theta0 = basis.finite_theta(basis.constrain(raw0).theta)
    x0 = np.concatenate([theta0, np.zeros(p)])
    x1, it1 = _active_set_newton(objective_direct, x0, C, n, max_iter)
    # Phase 2: polish in the raw coordinates the convergence check refers to.
    raw1 = basis.unconstrain(x1[:k], min_step=1e-300)
    x0 = np.concatenate([raw1, x1[k:]])
    x, ll, g, H, gnorm, n_iter, line_ok = _newton(objective, x0, n, max_iter, tol)
    n_iter += it1
    raw_t = x[:k]
    coef = x[k:]
    d = X.shape[1]
    beta, gamma = coef[:d].copy(), (coef[d:].copy() if include_env_interactions else None)
    diagnostics = {}
    if spec.family_name == "binary" and d and np.max(np.abs(beta)) > SEPARATION_BOUND:
        diagnostics["separation"] = True
    converged = bool(line_ok and gnorm <= tol)
    return FittedTram(
        spec=replace(spec, n_covariates=d),
        theta=basis.constrain(raw_t),
        beta=beta,
        gamma=gamma,
        loglik=float(ll),
        converged=converged,
        gradient_norm=float(gnorm),
        n_iter=int(n_iter),
        diagnostics=diagnostics,
    )
