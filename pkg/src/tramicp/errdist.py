"""Extended error distributions F_Z for transformation models.

Each distribution is defined on the extended real line: ``cdf(-inf) = 0``
and ``cdf(+inf) = 1``. Densities are log-concave on the finite reals.
Functions accept scalars or arrays and are vectorized with numpy.
"""

from __future__ import annotations

import numpy as np
from scipy import special

__all__ = [
    "ErrorDistribution",
    "Normal",
    "Logistic",
    "MinExtremeValue",
    "MaxExtremeValue",
    "get_distribution",
    "DISTRIBUTIONS",
]

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _as_float(z):
    z = np.asarray(z, dtype=float)
    if np.any(np.isnan(z)):
        raise ValueError("NaN is outside the domain of an error distribution")
    return z


def _finite(z):
    z = _as_float(z)
    if np.any(~np.isfinite(z)):
        raise ValueError("density is undefined at +/-inf")
    return z


def _out(x):
    return x.item() if np.ndim(x) == 0 else x


class ErrorDistribution:
    """Base class. Subclasses implement the ``_``-prefixed kernels.

    The kernels receive float arrays and may assume no NaN values. The
    public methods add domain checks and the extended-real convention.
    """

    name: str = ""

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self).__name__)

    # public API -----------------------------------------------------------

    def cdf(self, z):
        z = _as_float(z)
        with np.errstate(over="ignore", under="ignore"):
            return _out(self._cdf(z))

    def sf(self, z):
        """Survival function ``1 - cdf(z)`` computed without cancellation."""
        z = _as_float(z)
        with np.errstate(over="ignore", under="ignore"):
            return _out(self._sf(z))

    def logcdf(self, z):
        z = _as_float(z)
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            return _out(self._logcdf(z))

    def logsf(self, z):
        z = _as_float(z)
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            return _out(self._logsf(z))

    def density(self, z):
        """Density with the convention ``f(+/-inf) = 0``."""
        z = _as_float(z)
        out = np.zeros_like(z)
        fin = np.isfinite(z)
        with np.errstate(over="ignore", under="ignore"):
            out[fin] = np.exp(self._logpdf(z[fin]))
        return _out(out)

    def log_density(self, z):
        z = _finite(z)
        with np.errstate(over="ignore", under="ignore"):
            return _out(self._logpdf(z))

    def log_density_derivative(self, z):
        """``d/dz log f(z)``, i.e. ``f'(z) / f(z)``."""
        z = _finite(z)
        with np.errstate(over="ignore", under="ignore"):
            return _out(self._dlogpdf(z))

    def log_density_second_derivative(self, z):
        z = _finite(z)
        with np.errstate(over="ignore", under="ignore"):
            return _out(self._d2logpdf(z))

    def density_derivative(self, z):
        """``f'(z)`` with ``f'(+/-inf) = 0``."""
        z = _as_float(z)
        out = np.zeros_like(z)
        fin = np.isfinite(z)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            zf = z[fin]
            val = np.exp(self._logpdf(zf)) * self._dlogpdf(zf)
            out[fin] = np.where(np.isfinite(val), val, 0.0)
        return _out(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(np.isnan(p)) or np.any((p < 0) | (p > 1)):
            raise ValueError("quantile requires p in [0, 1]")
        with np.errstate(divide="ignore", over="ignore"):
            return _out(self._ppf(p))


class Normal(ErrorDistribution):
    name = "normal"

    def _cdf(self, z):
        return special.ndtr(z)

    def _sf(self, z):
        return special.ndtr(-z)

    def _logcdf(self, z):
        return special.log_ndtr(z)

    def _logsf(self, z):
        return special.log_ndtr(-z)

    def _logpdf(self, z):
        return -0.5 * z * z - _LOG_SQRT_2PI

    def _dlogpdf(self, z):
        return -z

    def _d2logpdf(self, z):
        return -np.ones_like(z)

    def _ppf(self, p):
        return special.ndtri(p)


class Logistic(ErrorDistribution):
    name = "logistic"

    def _cdf(self, z):
        return special.expit(z)

    def _sf(self, z):
        return special.expit(-z)

    def _logcdf(self, z):
        return special.log_expit(z)

    def _logsf(self, z):
        return special.log_expit(-z)

    def _logpdf(self, z):
        return special.log_expit(z) + special.log_expit(-z)

    def _dlogpdf(self, z):
        return 1.0 - 2.0 * special.expit(z)

    def _d2logpdf(self, z):
        return -2.0 * np.exp(self._logpdf(z))

    def _ppf(self, p):
        return special.logit(p)


class MinExtremeValue(ErrorDistribution):
    """``F(z) = 1 - exp(-exp(z))``, the Gompertz/cloglog error law."""

    name = "minev"

    def _cdf(self, z):
        return -np.expm1(-np.exp(z))

    def _sf(self, z):
        return np.exp(-np.exp(z))

    def _logcdf(self, z):
        ez = np.exp(z)
        # log(1 - exp(-ez)); the series branch keeps precision for tiny ez
        return np.where(ez < 1e-8, z - 0.5 * ez, np.log(-np.expm1(-ez)))

    def _logsf(self, z):
        return -np.exp(z)

    def _logpdf(self, z):
        return z - np.exp(z)

    def _dlogpdf(self, z):
        return 1.0 - np.exp(z)

    def _d2logpdf(self, z):
        return -np.exp(z)

    def _ppf(self, p):
        return np.log(-np.log1p(-p))


class MaxExtremeValue(ErrorDistribution):
    """``F(z) = exp(-exp(-z))``, the Gumbel/loglog error law."""

    name = "maxev"

    def _cdf(self, z):
        return np.exp(-np.exp(-z))

    def _sf(self, z):
        return -np.expm1(-np.exp(-z))

    def _logcdf(self, z):
        return -np.exp(-z)

    def _logsf(self, z):
        ez = np.exp(-z)
        return np.where(ez < 1e-8, -z - 0.5 * ez, np.log(-np.expm1(-ez)))

    def _logpdf(self, z):
        return -z - np.exp(-z)

    def _dlogpdf(self, z):
        return np.exp(-z) - 1.0

    def _d2logpdf(self, z):
        return -np.exp(-z)

    def _ppf(self, p):
        return -np.log(-np.log(p))


DISTRIBUTIONS = {
    "normal": Normal,
    "logistic": Logistic,
    "minev": MinExtremeValue,
    "maxev": MaxExtremeValue,
}


def get_distribution(token) -> ErrorDistribution:
    """Look up a distribution by its token (``normal``, ``logistic``, ...)."""
    if isinstance(token, ErrorDistribution):
        return token
    try:
        return DISTRIBUTIONS[str(token).lower()]()
    except KeyError:
        raise ValueError(
            f"unknown error distribution {token!r}; "
            f"expected one of {sorted(DISTRIBUTIONS)}"
        ) from None
