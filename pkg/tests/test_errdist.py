import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from tramicp.errdist import DISTRIBUTIONS, get_distribution

# scipy laws used as independent oracles
ORACLES = {
    "normal": stats.norm,
    "logistic": stats.logistic,
    "minev": stats.gumbel_l,
    "maxev": stats.gumbel_r,
}
GRID = np.arange(-10.0, 10.0 + 1e-9, 0.01)


@pytest.mark.parametrize("token", sorted(ORACLES))
def test_cdf_and_density_match_scipy(token):
    dist, ref = get_distribution(token), ORACLES[token]
    np.testing.assert_allclose(dist.cdf(GRID), ref.cdf(GRID), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(dist.sf(GRID), ref.sf(GRID), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(dist.density(GRID), ref.pdf(GRID), rtol=1e-10, atol=1e-300)
    core = GRID[np.abs(GRID) <= 5]
    np.testing.assert_allclose(dist.logcdf(core), ref.logcdf(core), rtol=1e-10, atol=1e-15)
    np.testing.assert_allclose(dist.logsf(core), ref.logsf(core), rtol=1e-10, atol=1e-15)


@pytest.mark.parametrize("token", sorted(ORACLES))
def test_density_is_derivative_of_cdf(token):
    dist, h = get_distribution(token), 1e-5
    fd = (dist.cdf(GRID + h) - dist.cdf(GRID - h)) / (2 * h)
    assert np.max(np.abs(fd - dist.density(GRID))) <= 1e-6


@pytest.mark.parametrize("token", sorted(ORACLES))
def test_log_density_derivatives_match_central_differences(token):
    dist, h = get_distribution(token), 1e-5
    z = np.arange(-6.0, 6.0, 0.05)
    fd = (dist.log_density(z + h) - dist.log_density(z - h)) / (2 * h)
    np.testing.assert_allclose(dist.log_density_derivative(z), fd, rtol=1e-6, atol=1e-6)
    fd2 = (dist.log_density_derivative(z + h) - dist.log_density_derivative(z - h)) / (2 * h)
    np.testing.assert_allclose(dist.log_density_second_derivative(z), fd2, rtol=1e-5, atol=1e-5)


@pytest.mark.parametrize("token", sorted(ORACLES))
def test_quantile_inverts_cdf_on_grid(token):
    # rounding cdf(z) costs eps * max(p, ulp) / f(z) in z; keep grid points
    # where that conditioning bound is below the tolerance
    dist = get_distribution(token)
    p = dist.cdf(GRID)
    with np.errstate(divide="ignore"):
        bound = np.finfo(float).eps * np.maximum(p, 1e-300) / dist.density(GRID)
    z = GRID[(p > 0) & (p < 1) & (bound < 1e-9)]
    assert z.min() <= -5 and z.max() >= 2
    np.testing.assert_allclose(dist.quantile(dist.cdf(z)), z, rtol=0, atol=1e-8)


@pytest.mark.parametrize("token", sorted(ORACLES))
def test_extended_endpoints(token):
    dist = get_distribution(token)
    assert dist.cdf(-np.inf) == 0.0 and dist.cdf(np.inf) == 1.0
    assert dist.quantile(0.0) == -np.inf and dist.quantile(1.0) == np.inf
    with pytest.raises(ValueError):
        dist.log_density(np.inf)
    with pytest.raises(ValueError):
        dist.quantile(1.5)


def test_log_density_closed_forms():
    assert get_distribution("normal").log_density(0.0) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-12)
    assert get_distribution("logistic").log_density(0.0) == pytest.approx(np.log(0.25), abs=1e-12)
    assert get_distribution("minev").log_density(0.0) == pytest.approx(-1.0, abs=1e-12)


def test_log_density_derivative_closed_forms():
    assert get_distribution("normal").log_density_derivative(1.5) == pytest.approx(-1.5)
    assert get_distribution("logistic").log_density_derivative(0.0) == pytest.approx(0.0, abs=1e-15)
    assert get_distribution("minev").log_density_derivative(0.0) == pytest.approx(0.0, abs=1e-15)


def test_quantile_values():
    assert get_distribution("logistic").quantile(0.5) == pytest.approx(0.0, abs=1e-15)
    # frozen from bisection on the normal cdf to 1e-10
    assert get_distribution("normal").quantile(0.975) == pytest.approx(1.959963984540054, abs=1e-9)
    assert get_distribution("minev").quantile(1 - np.exp(-1.0)) == pytest.approx(0.0, abs=1e-12)


def test_tokens():
    assert set(DISTRIBUTIONS) == set(ORACLES)
    with pytest.raises(ValueError):
        get_distribution("cauchy")


@settings(max_examples=200, deadline=None)
@given(
    token=st.sampled_from(sorted(ORACLES)),
    z=st.floats(-30, 30, allow_nan=False),
)
def test_cdf_plus_sf_is_one(token, z):
    dist = get_distribution(token)
    assert dist.cdf(z) + dist.sf(z) == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= dist.cdf(z) <= 1.0


@settings(max_examples=200, deadline=None)
@given(
    token=st.sampled_from(sorted(ORACLES)),
    p=st.floats(1e-12, 1 - 1e-12),
)
def test_cdf_of_quantile(token, p):
    dist = get_distribution(token)
    assert dist.cdf(dist.quantile(p)) == pytest.approx(p, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    token=st.sampled_from(sorted(ORACLES)),
    a=st.floats(-20, 20),
    b=st.floats(-20, 20),
)
def test_log_concavity(token, a, b):
    # second derivative of log f is nonpositive everywhere
    dist = get_distribution(token)
    assert dist.log_density_second_derivative(np.array([a, b])).max() <= 1e-12
