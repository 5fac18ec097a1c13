import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import interpolate

from tramicp.basis import Bernstein, Discrete, Linear, LogLinear, parse_basis


def test_bernstein_evaluate_binomial_expansion():
    np.testing.assert_allclose(Bernstein(2, 0, 1).evaluate(0.5), [0.25, 0.5, 0.25], atol=1e-15)


def test_bernstein_matches_scipy_bpoly():
    # scipy's BPoly is an independent Bernstein implementation
    basis = Bernstein(6, -2.0, 3.0)
    theta = np.cumsum(np.r_[-1.0, np.arange(1, 7) * 0.3])
    poly = interpolate.BPoly(theta[:, None], [-2.0, 3.0])
    y = np.linspace(-2, 3, 41)
    np.testing.assert_allclose(basis.evaluate(y) @ theta, poly(y), atol=1e-12)
    np.testing.assert_allclose(basis.evaluate_derivative(y) @ theta, poly.derivative()(y), atol=1e-11)


def test_other_bases_evaluate():
    np.testing.assert_allclose(Linear().evaluate(3.2), [1.0, 3.2])
    np.testing.assert_allclose(Discrete([1, 2, 3]).evaluate(2), [0.0, 1.0, 0.0])
    np.testing.assert_allclose(LogLinear().evaluate(np.e), [1.0, 1.0])


def test_derivatives():
    np.testing.assert_allclose(Linear().evaluate_derivative(7.0), [0.0, 1.0])
    np.testing.assert_allclose(LogLinear().evaluate_derivative(2.0), [0.0, 0.5])
    # d/dt of ((1-t)^2, 2t(1-t), t^2) at t = 1/2
    np.testing.assert_allclose(Bernstein(2, 0, 1).evaluate_derivative(0.5), [-1.0, 0.0, 1.0], atol=1e-12)
    with pytest.raises(NotImplementedError):
        Discrete([0, 1]).evaluate_derivative(0)


@pytest.mark.parametrize("basis", [Bernstein(6, -1.0, 2.0), Linear(), LogLinear()])
def test_derivative_matches_central_difference(basis):
    y = np.linspace(0.05, 1.95, 39) if basis.dimension != 2 or isinstance(basis, LogLinear) else np.linspace(-1, 2, 31)
    h = 1e-6
    fd = (basis.evaluate(y + h) - basis.evaluate(y - h)) / (2 * h)
    np.testing.assert_allclose(basis.evaluate_derivative(y), fd, atol=1e-6)


def test_constrain_examples():
    np.testing.assert_allclose(Discrete([1, 2, 3]).constrain([0.0, 0.0]).theta, [0.0, 1.0, np.inf])
    np.testing.assert_allclose(Linear().constrain([-1.0, 0.0]).theta, [-1.0, 1.0])
    np.testing.assert_allclose(
        Bernstein(2, 0, 1).constrain([0.5, np.log(2), np.log(3)]).theta, [0.5, 2.5, 5.5]
    )


def test_wrong_raw_length():
    with pytest.raises(ValueError):
        Bernstein(3, 0, 1).constrain([0.0, 1.0])
    with pytest.raises(ValueError):
        Discrete([1, 2, 3]).constrain([0.0, 0.0, 0.0])


def test_domain_errors():
    with pytest.raises(ValueError):
        Bernstein(3, 0, 1).evaluate(1.5)
    with pytest.raises(ValueError):
        LogLinear().evaluate(-1.0)
    with pytest.raises(ValueError):
        Discrete([1, 2, 3]).evaluate(2.5)
    with pytest.raises(ValueError):
        Bernstein(0)
    with pytest.raises(ValueError):
        Bernstein(3, 1.0, 1.0)
    with pytest.raises(ValueError):
        Discrete([2, 1])


def test_parse_basis_tokens():
    assert parse_basis("linear") == Linear()
    assert parse_basis("loglinear") == LogLinear()
    assert parse_basis("bernstein:4").order == 4
    assert parse_basis("discrete", levels=[0, 1]) == Discrete([0, 1])
    with pytest.raises(ValueError):
        parse_basis("spline")


def test_support_from_data_extends_range():
    b = Bernstein(6).support_from_data([1.0, 3.0, 2.0])
    assert (b.lower, b.upper) == pytest.approx((0.8, 3.2))


@pytest.mark.parametrize("basis", [Bernstein(5, 0, 1), Discrete([0, 1, 2, 5]), Linear(), LogLinear()])
def test_jacobian_matches_finite_differences(basis):
    rng = np.random.default_rng(1)
    raw = rng.normal(size=basis.n_free)
    J = basis.constrain_jacobian(raw)
    h = 1e-6
    fd = np.column_stack([
        (basis.finite_theta(basis.constrain(raw + h * e).theta)
         - basis.finite_theta(basis.constrain(raw - h * e).theta)) / (2 * h)
        for e in np.eye(basis.n_free)
    ])
    np.testing.assert_allclose(J, fd, atol=1e-7)
    g = rng.normal(size=J.shape[0])
    fd2 = np.array([
        (g @ basis.constrain_jacobian(raw + h * e) - g @ basis.constrain_jacobian(raw - h * e))[k] / (2 * h)
        for k, e in enumerate(np.eye(basis.n_free))
    ])
    np.testing.assert_allclose(basis.constrain_hessian_diag(raw, g), fd2, atol=1e-6)


@settings(max_examples=100, deadline=None)
@given(
    order=st.integers(1, 10),
    raw=arrays(float, 11, elements=st.floats(-5, 3)),
    y=arrays(float, 20, elements=st.floats(0, 1)),
)
def test_bernstein_properties(order, raw, y):
    basis = Bernstein(order, 0.0, 1.0)
    A = basis.evaluate(np.sort(y))
    np.testing.assert_allclose(A.sum(axis=1), 1.0, atol=1e-12)
    theta = basis.constrain(raw[: order + 1]).theta
    assert np.all(np.diff(theta) > 0)
    h = A @ theta
    assert np.all(np.diff(h) >= -1e-10 * (1 + np.abs(h[1:])))


@settings(max_examples=100, deadline=None)
@given(
    k=st.integers(2, 8),
    raw=arrays(float, 7, elements=st.floats(-5, 3)),
)
def test_discrete_constrain_roundtrip(k, raw):
    basis = Discrete(np.arange(k))
    par = basis.constrain(raw[: k - 1])
    assert par.theta[-1] == np.inf
    assert np.all(np.diff(par.theta[:-1]) > 0)
    np.testing.assert_allclose(basis.unconstrain(par.theta, min_step=1e-300), raw[: k - 1], atol=1e-9)
