import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tramicp.cli import _jsonable, load_schema
from tramicp.data import Dataset
from tramicp.dgp import example1, true_model
from tramicp.icp import (
    MAX_COVARIATES,
    enumerate_subsets,
    fwer_estimate,
    jaccard,
    predictor_pvalues,
    run_icp,
    selected_set,
)
from tramicp.tram import TramSpec

# single-run set p-values of the binary example with one parent (X1) and one child (X2)
REPORTED = {(): 1.82e-2, (0,): 5.10e-1, (1,): 4.54e-9, (0, 1): 2.22e-3}


def test_predictor_pvalues_from_reported_values():
    p = predictor_pvalues(REPORTED, 0.05, 2)
    np.testing.assert_allclose(p, [1.82e-2, 5.10e-1])
    assert selected_set(REPORTED, 0.05) == ((0,), False)


def test_all_rejected():
    sp = {S: 0.01 for S in enumerate_subsets(3)}
    np.testing.assert_array_equal(predictor_pvalues(sp, 0.05, 3), np.ones(3))
    assert selected_set(sp, 0.05) == ((), True)


def test_empty_set_accepted_gives_empty_output():
    sp = {(): 0.3, (0,): 0.9, (1,): 0.01, (0, 1): 0.4}
    assert selected_set(sp, 0.05) == ((), False)


def test_single_predictor_pvalue_is_empty_set_pvalue():
    assert predictor_pvalues({(): 0.2, (0,): 0.01}, 0.05, 1)[0] == 0.2


def test_enumeration_order():
    assert list(enumerate_subsets(3)) == [(), (0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
    assert list(enumerate_subsets(3, 1)) == [(), (0,), (1,), (2,)]


def test_jaccard_and_fwer_examples():
    assert jaccard({1, 2}, {1, 2}) == 1.0
    assert jaccard({1}, {2}) == 0.0
    assert jaccard({1}, {1, 2}) == 0.5
    assert jaccard(set(), set()) == 1.0
    assert fwer_estimate([{1}, {1, 2}, set()], {1, 2}) == 0.0
    assert fwer_estimate([{1}, {3}, set(), {2}], {1, 2}) == 0.25
    assert fwer_estimate([set()] * 5, {1}) == 0.0
    with pytest.raises(ValueError):
        fwer_estimate([], {1})


@settings(max_examples=200, deadline=None)
@given(
    d=st.integers(1, 5),
    data=st.data(),
    alpha=st.floats(0.01, 0.2),
)
def test_selection_invariants(d, data, alpha):
    sets = list(enumerate_subsets(d))
    ps = data.draw(st.lists(st.floats(0, 1), min_size=len(sets), max_size=len(sets)))
    sp = dict(zip(sets, ps))
    sel, rejected = selected_set(sp, alpha)
    pj = predictor_pvalues(sp, alpha, d)
    for S, p in sp.items():
        if p > alpha:
            assert set(sel) <= set(S)
    for j in range(d):
        if pj[j] > alpha:
            assert j not in sel
    assert rejected == all(p <= alpha for p in ps)


def _example_run(seed=0, test="gcm"):
    data = example1(1000, np.random.default_rng(seed))
    return run_icp(data, TramSpec.from_family("binary"), test=test, seed=seed)


def test_example1_run_and_schema():
    res = _example_run()
    assert res.selected == (0,)
    assert res.set_pvalues[(1,)] < 1e-3 and res.set_pvalues[(0,)] > 0.05
    out = _jsonable(res.to_dict())
    jsonschema.validate(out, load_schema("icp_result"))
    assert [r["set"] for r in out["set_pvalues"]] == [[], [1], [2], [1, 2]]
    assert out["selected"] == [1]
    assert "Set of plausible causal predictors: X1" in res.summary()


def test_run_is_deterministic_bytewise():
    a = json.dumps(_jsonable(_example_run(3).to_dict()))
    b = json.dumps(_jsonable(_example_run(3).to_dict()))
    assert a == b


def test_count_response_on_example_graph():
    # E -> X1, E -> X3, X2 -> X1, X2 -> Y, X1 -> Y, Y -> X3, X4 -> X3
    rng = np.random.default_rng(2024)
    n = 1000
    e = rng.binomial(1, 0.5, n).astype(float)
    x2 = rng.normal(size=n)
    x1 = 2 * e + 0.5 * x2 + rng.normal(size=n)
    spec = TramSpec.from_family("cotram", support=(0.0, 20.0))
    theta = spec.error.quantile(np.linspace(0.05, 0.999, 7))
    y = true_model(spec, theta, [0.7, -0.7]).sample(np.column_stack([x1, x2]), rng)
    x4 = rng.normal(size=n)
    x3 = e + 0.5 * y + x4 + rng.normal(size=n)
    data = Dataset(y, np.column_stack([x1, x2, x3, x4]), e[:, None])
    res = run_icp(data, TramSpec.from_family("cotram"), seed=1)
    assert res.selected == (0, 1)
    assert "Set of plausible causal predictors: X1 X2" in res.summary()


def test_failed_subset_is_kept_conservative(monkeypatch):
    import tramicp.icp as icp_mod

    real = icp_mod.invariance_test

    def flaky(kind, data, S, *args, **kw):
        if S == (1,):
            raise np.linalg.LinAlgError("singular")
        return real(kind, data, S, *args, **kw)

    monkeypatch.setattr(icp_mod, "invariance_test", flaky)
    res = _example_run()
    assert res.diagnostics["n_failed"] == 1
    assert res.diagnostics["sets"]["{2}"]["failed"]
    # a failed subset cannot be rejected, so X2 is no longer selectable
    assert res.set_pvalues[(1,)] == 1.0
    assert res.selected == ()


def test_argument_validation():
    data = example1(50, np.random.default_rng(0))
    spec = TramSpec.from_family("binary")
    with pytest.raises(ValueError):
        run_icp(data, spec, alpha=1.5)
    with pytest.raises(ValueError):
        run_icp(data, spec, test="hsic")
    wide = Dataset(np.arange(30.0) % 2, np.zeros((30, MAX_COVARIATES + 1)), np.ones(30))
    with pytest.raises(ValueError):
        run_icp(wide, spec)


def test_max_set_size_limits_sets():
    data = example1(200, np.random.default_rng(5))
    res = run_icp(data, TramSpec.from_family("binary"), test="wald", max_set_size=1)
    assert list(res.set_pvalues) == [(), (0,), (1,)]
