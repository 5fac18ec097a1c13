"""Command line interface: ``tramicp {icp, simulate, fit}``.

Exit codes: 0 success, 2 input or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib import resources

import numpy as np

from .data import InputError, read_csv_dataset
from .dgp import ScenarioConfig, simulate_scenario, write_scenario
from .icp import jaccard, run_icp
from .invtest import TESTS
from .regress import MU_KINDS
from .tram import FAMILIES, TramSpec, fit

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

SIMULATE_COLUMNS = (
    "family",
    "test",
    "n",
    "dag_id",
    "rep",
    "jaccard_to_parents",
    "contains_nonparent",
    "jaccard_to_oracle",
)


def load_schema(name):
    """Load a shipped JSON schema (``icp_result`` or ``fit_result``)."""
    text = resources.files("tramicp").joinpath("schema", f"{name}.schema.json").read_text()
    return json.loads(text)


def _jsonable(obj):
    """Plain JSON types; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _split(text):
    return [c.strip() for c in (text or "").split(",") if c.strip()]


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _spec(args):
    return TramSpec.from_family(args.family, order=args.order, error=args.error)


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InputError("alpha must be in (0, 1)")


def cmd_icp(args):
    _check_alpha(args.alpha)
    env = _split(args.env)
    if not env:
        raise InputError("--env is required")
    data = read_csv_dataset(args.data, _split(args.response), _split(args.covariates), env)
    if args.test == "cor" and data.q != 1:
        raise InputError("the cor test needs a single environment column")
    try:
        spec = _spec(args).resolve(data.response)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    res = run_icp(
        data,
        spec,
        test=args.test,
        alpha=args.alpha,
        seed=args.seed,
        max_set_size=args.max_set_size,
        mu_kind=args.mu,
        n_trees=args.forest_trees,
        min_leaf=args.forest_minleaf,
        inbag=args.mu_inbag,
    )
    out = _jsonable(res.to_dict())
    if args.format == "json":
        text = json.dumps(out, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["set", "p_value"])
        for row in out["set_pvalues"]:
            w.writerow([" ".join(str(j) for j in row["set"]), repr(row["p"])])
        text = buf.getvalue()
    summary = res.summary()
    if args.out in (None, "-"):
        sys.stderr.write(summary)
    else:
        sys.stdout.write(summary)
    _write(args.out, text)
    diag = res.diagnostics
    bad = diag["n_failed"] + diag["n_nonconverged"]
    if bad == diag["n_sets"] or (args.strict and bad):
        sys.stderr.write(f"error: {bad} of {diag['n_sets']} subset models failed\n")
        return EXIT_NUMERIC
    return EXIT_OK


def _simulate_one(task):
    family, n, dag_id, rep, tests, opts = task
    config = ScenarioConfig(
        family=family, n=n, seed=opts["seed"], dag_id=dag_id, rep=rep,
        censoring=opts["censoring"],
    )
    data, truth = simulate_scenario(config)
    if opts["save_data"]:
        write_scenario(f"{opts['save_data']}/{family}_n{n}_dag{dag_id}_rep{rep}.csv", data, truth, config)
    spec = TramSpec.from_family(family, order=config.order)
    parents, oracle = set(truth["parents"]), set(truth["oracle"])
    rows = []
    for test in tests:
        res = run_icp(
            data, spec, test=test, alpha=opts["alpha"], seed=opts["seed"],
            mu_kind=opts["mu"], n_trees=opts["trees"], min_leaf=opts["minleaf"],
            inbag=opts["inbag"],
        )
        sel = set(res.selected)
        rows.append(
            (family, test, n, dag_id, rep, jaccard(sel, parents),
             int(bool(sel - parents)), jaccard(sel, oracle))
        )
    return rows


def simulate_rows(families, tests, sizes, ndags, reps, jobs=1, **opts):
    """Run the scenario study; one row per (family, test, n, dag, rep)."""
    opts = dict(dict(seed=0, alpha=0.05, mu="forest", trees=100, minleaf=5,
                     inbag=False, censoring=0.0, save_data=None), **opts)
    tasks = [
        (f, n, g, r, tuple(tests), opts)
        for f in families for n in sizes for g in range(ndags) for r in range(reps)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            chunks = list(pool.map(_simulate_one, tasks))
    else:
        chunks = [_simulate_one(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def cmd_simulate(args):
    _check_alpha(args.alpha)
    families = _split(args.family)
    tests = _split(args.test)
    try:
        sizes = [int(v) for v in _split(args.n)]
    except ValueError:
        raise InputError("--n must be a comma separated list of integers") from None
    bad = [f for f in families if f not in FAMILIES] + [t for t in tests if t not in TESTS]
    if bad or not families or not tests or not sizes:
        raise InputError(f"invalid family/test/n configuration: {bad}")
    if min(sizes) < 10 or args.ndags < 1 or args.reps < 1 or args.jobs < 1:
        raise InputError("need n >= 10 and positive ndags, reps and jobs")
    if not 0.0 <= args.censoring < 1.0:
        raise InputError("censoring must be in [0, 1)")
    rows = simulate_rows(
        families, tests, sizes, args.ndags, args.reps, args.jobs,
        seed=args.seed, alpha=args.alpha, mu=args.mu, trees=args.forest_trees,
        minleaf=args.forest_minleaf, inbag=args.mu_inbag, censoring=args.censoring,
        save_data=args.save_data,
    )
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(SIMULATE_COLUMNS)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    _write(args.out, buf.getvalue())
    return EXIT_OK


def cmd_fit(args):
    data = read_csv_dataset(args.data, _split(args.response), _split(args.covariates), _split(args.env))
    try:
        spec = _spec(args).resolve(data.response)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    interactions = bool(args.env_interactions)
    if interactions and data.q == 0:
        raise InputError("--env-interactions needs --env")
    model = fit(spec, data.response, data.X, data.E if interactions else None, interactions)
    resid = model.score_residuals(data.response, data.X, data.E if interactions else None)
    basis = model.spec.basis
    out = {
        "family": spec.family_name,
        "basis": repr(basis),
        "theta": model.theta.theta,
        "beta": dict(zip(data.covariate_names, model.beta)),
        "gamma": None if model.gamma is None else model.gamma,
        "loglik": model.loglik,
        "converged": model.converged,
        "gradient_norm": model.gradient_norm,
        "n_iter": model.n_iter,
        "n": data.n,
        "mean_residual": float(np.mean(resid)),
        "diagnostics": model.diagnostics,
    }
    if args.format == "json":
        out["residuals"] = resid
        text = json.dumps(_jsonable(out), indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["row", "score_residual"])
        for i, r in enumerate(resid):
            w.writerow([i + 1, repr(float(r))])
        text = buf.getvalue()
    _write(args.out, text)
    if args.strict and not model.converged:
        sys.stderr.write(f"error: fit did not converge (gradient norm {model.gradient_norm:.3g})\n")
        return EXIT_NUMERIC
    return EXIT_OK


def _add_model_args(p):
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--order", type=int, default=6, help="Bernstein order (default 6)")
    p.add_argument("--error", choices=["normal", "logistic", "minev", "maxev"],
                   help="override the family's error distribution")


def _add_forest_args(p):
    p.add_argument("--mu", choices=MU_KINDS, default="forest",
                   help="regression of E on X^S for the gcm test")
    p.add_argument("--forest-trees", type=int, default=100)
    p.add_argument("--forest-minleaf", type=int, default=5)
    p.add_argument("--mu-inbag", action="store_true",
                   help="use in-bag instead of out-of-bag forest predictions")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tramicp", description="Invariant causal prediction for transformation models."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("icp", help="test all covariate subsets for invariance")
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--response", required=True,
                   help="response column, or 'left,right' columns for censored data")
    p.add_argument("--covariates", required=True, help="comma separated covariate columns")
    p.add_argument("--env", required=True, help="comma separated environment columns")
    _add_model_args(p)
    p.add_argument("--test", choices=TESTS, default="gcm")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    _add_forest_args(p)
    p.add_argument("--max-set-size", type=int)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 if any subset model fails or does not converge")
    p.set_defaults(handler=cmd_icp)

    p = sub.add_parser("simulate", help="run the random-DAG simulation study")
    p.add_argument("--family", default="binary", help="comma separated family tokens")
    p.add_argument("--test", default="gcm,wald", help="comma separated tests")
    p.add_argument("--n", default="100,300,1000", help="comma separated sample sizes")
    p.add_argument("--ndags", type=int, default=20)
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--censoring", type=float, default=0.0,
                   help="fraction of right-censored responses")
    _add_forest_args(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--save-data", help="directory for scenario CSV and JSON files")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("fit", help="fit a single transformation model")
    p.add_argument("--data", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--covariates", default="", help="comma separated (may be empty)")
    p.add_argument("--env", default="", help="environment columns for --env-interactions")
    p.add_argument("--env-interactions", action="store_true",
                   help="add environment main and interaction effects")
    _add_model_args(p)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--strict", action="store_true", help="exit 3 if the fit does not converge")
    p.set_defaults(handler=cmd_fit)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
