"""Simulation from random DAGs with environment shifts and TRAM responses.

Node order of simulated scenarios is ``E, X1..Xd1 (ancestors), Y,
X(d1+1)..X(d1+d2) (descendants)``; covariate indices in the returned truth
are zero-based positions in the dataset's ``X``.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import asdict, dataclass, replace

import numpy as np
from scipy import optimize, special, stats

from .basis import Bernstein, Discrete
from .data import Dataset, Response
from .tram import FittedTram, TramSpec

__all__ = [
    "Dag",
    "ScenarioConfig",
    "random_dag",
    "random_icp_dag",
    "sample_sem",
    "baseline_theta",
    "true_model",
    "simulate_scenario",
    "oracle_icp",
    "d_separated",
    "brute_force_oracle",
    "example1",
    "faithfulness_example",
    "counterexample_table",
    "polr_conditional",
    "sample_counterexample",
    "write_scenario",
]

ROLES = ("environment", "ancestor", "response", "descendant", "covariate")


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph stored as a boolean adjacency matrix.

    ``adjacency[i, j]`` is an edge ``i -> j``. Construction fails on cycles.
    """

    adjacency: np.ndarray
    roles: tuple = ()
    names: tuple = ()

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        object.__setattr__(self, "adjacency", A)
        k = A.shape[0]
        if not self.roles:
            object.__setattr__(self, "roles", ("covariate",) * k)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"V{j}" for j in range(k)))
        if len(self.roles) != k or len(self.names) != k:
            raise ValueError("roles and names need one entry per node")
        if any(r not in ROLES for r in self.roles):
            raise ValueError(f"roles must be among {ROLES}")
        if self.topological_order() is None:
            raise ValueError("graph has a cycle")

    @property
    def n_nodes(self):
        return self.adjacency.shape[0]

    @property
    def n_edges(self):
        return int(self.adjacency.sum())

    def topological_order(self):
        """Kahn ordering, or ``None`` if the graph is cyclic."""
        A = self.adjacency
        indeg = A.sum(axis=0).astype(int)
        ready = [j for j in range(A.shape[0]) if indeg[j] == 0]
        order = []
        while ready:
            i = ready.pop(0)
            order.append(i)
            for j in np.flatnonzero(A[i]):
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(int(j))
        return order if len(order) == A.shape[0] else None

    def parents(self, j):
        return set(np.flatnonzero(self.adjacency[:, j]).tolist())

    def children(self, j):
        return set(np.flatnonzero(self.adjacency[j]).tolist())

    def _reach(self, j, step):
        seen, stack = set(), [j]
        while stack:
            for k in step(stack.pop()):
                if k not in seen:
                    seen.add(k)
                    stack.append(k)
        return seen

    def ancestors(self, j):
        """Proper ancestors of ``j`` (``j`` excluded)."""
        return self._reach(j, self.parents)

    def descendants(self, j):
        """Proper descendants of ``j`` (``j`` excluded)."""
        return self._reach(j, self.children)

    def to_dict(self):
        return {
            "names": list(self.names),
            "roles": list(self.roles),
            "adjacency": self.adjacency.astype(int).tolist(),
        }


def random_dag(d, p, rng) -> Dag:
    """DAG on ``d`` nodes in a fixed topological order; each pair ``i < j``
    carries the edge ``i -> j`` independently with probability ``p``."""
    if d < 1:
        raise ValueError("need at least one node")
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must be in [0, 1]")
    A = np.triu(rng.uniform(size=(d, d)) < p, k=1)
    return Dag(A)


def random_icp_dag(n_nodes, p, rng):
    """Random DAG with a source environment node and a response node.

    Node 0 is the environment; the response sits at a random later position
    and has no direct edge from the environment.

    Returns
    -------
    dag : Dag
    env_node, response_node : int
    """
    if n_nodes < 2:
        raise ValueError("need at least two nodes")
    A = np.triu(rng.uniform(size=(n_nodes, n_nodes)) < p, k=1)
    resp = int(rng.integers(1, n_nodes))
    A[0, resp] = False
    roles = ["covariate"] * n_nodes
    roles[0], roles[resp] = "environment", "response"
    names = [f"V{j}" for j in range(n_nodes)]
    names[0], names[resp] = "E", "Y"
    return Dag(A, tuple(roles), tuple(names)), 0, resp


def sample_sem(
    dag,
    coefficients,
    n,
    rng,
    env=None,
    env_coef=None,
    inputs=None,
    input_coef=None,
    standardize=True,
):
    """Sample a linear Gaussian SEM in topological order.

    ``X_j = sum_i B[i, j] X_i + env @ env_coef[:, j] + inputs @ input_coef[:, j] + N_j``
    with ``N_j ~ N(0, 1)``.

    Parameters
    ----------
    dag : Dag
    coefficients : ndarray, shape (k, k)
        Edge weights, zero off the DAG edges.
    n : int
    rng : numpy Generator
    env : ndarray, shape (n, q), optional
    env_coef : ndarray, shape (q, k), optional
        Environment mean shifts entering the structural equations.
    inputs : ndarray, shape (n, m), optional
        Further exogenous parents (other blocks of a larger graph).
    input_coef : ndarray, shape (m, k), optional
    standardize : bool
        Rescale each column to empirical mean 0 and variance 1.

    Returns
    -------
    ndarray, shape (n, k)
    """
    B = np.asarray(coefficients, dtype=float)
    k = dag.n_nodes
    if B.shape != (k, k):
        raise ValueError("coefficients must be k x k")
    if np.any(B[~dag.adjacency] != 0):
        raise ValueError("coefficients must vanish off the DAG edges")
    noise = rng.standard_normal((n, k))
    X = np.zeros((n, k))
    offset = np.zeros((n, k))
    if env is not None:
        offset += np.asarray(env, dtype=float).reshape(n, -1) @ np.asarray(env_coef).reshape(-1, k)
    if inputs is not None:
        offset += np.asarray(inputs, dtype=float).reshape(n, -1) @ np.asarray(input_coef).reshape(-1, k)
    for j in dag.topological_order():
        X[:, j] = X @ B[:, j] + offset[:, j] + noise[:, j]
    if standardize:
        sd = X.std(axis=0)
        X = (X - X.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
    return X


@dataclass(frozen=True)
class ScenarioConfig:
    """Settings of the random-DAG simulation scenario.

    Attributes
    ----------
    family : str
        Model family token of the response.
    n : int
    d1, d2 : int
        Numbers of potential ancestors and descendants of the response.
    edge_prob : float
        Probability of every admissible edge, environment edges included.
    p0 : float
        Smallest baseline anchor probability; anchors are equally spaced on
        ``[p0, 1 - p0]``.
    order : int
        Bernstein order of Bernstein families.
    n_classes : int
        Number of ordinal classes (polr).
    structural_low, structural_high : float
        Uniform law of the structural coefficients and of ancestor to
        descendant edges.
    response_var : float
        Variance of the normal law of the parent and child coefficients of Y.
    env_var : float
        Variance of the normal law of the environment coefficients.
    seed, dag_id, rep : int
        Graph and coefficients depend on ``(seed, dag_id)``; the noise also
        on ``rep``.
    censoring : float
        Target fraction of right-censored responses (continuous families
        with positive responses), via independent exponential censoring.
    continuous_support, count_support : tuple
        Bernstein support used to simulate continuous and count responses.
    weibull_theta : tuple
        Log-linear baseline coefficients.
    """

    family: str = "binary"
    n: int = 1000
    d1: int = 3
    d2: int = 2
    edge_prob: float = 0.8
    p0: float = 2.5e-4
    order: int = 6
    n_classes: int = 6
    structural_low: float = 0.0
    structural_high: float = 1.0
    response_var: float = 0.9
    env_var: float = 10.0
    seed: int = 0
    dag_id: int = 0
    rep: int = 0
    censoring: float = 0.0
    continuous_support: tuple = (-4.0, 4.0)
    count_support: tuple = (0.0, 20.0)
    weibull_theta: tuple = (-22.0, 8.0)

    def __post_init__(self):
        TramSpec.from_family(self.family)
        if self.n < 2 or self.d1 < 0 or self.d2 < 0:
            raise ValueError("need n >= 2 and nonnegative block sizes")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must be in [0, 1]")
        if not 0.0 < self.p0 < 0.5:
            raise ValueError("p0 must be in (0, 0.5)")
        if not 0.0 <= self.censoring < 1.0:
            raise ValueError("censoring must be in [0, 1)")
        if self.n_classes < 2:
            raise ValueError("need at least two classes")


def _anchors(error, p0, k):
    return error.quantile(np.linspace(p0, 1.0 - p0, k))


def baseline_theta(config: ScenarioConfig):
    """Resolved spec and baseline coefficients of the simulated response.

    Coefficients are the error quantiles at equally spaced probabilities
    from ``p0`` to ``1 - p0``; binary uses the median and Weibull the fixed
    log-linear coefficients.
    """
    spec = TramSpec.from_family(config.family, order=config.order)
    err = spec.error
    if config.family == "binary":
        return spec, err.quantile(np.array([0.5]))
    if config.family == "polr":
        spec = replace(spec, basis=Discrete(np.arange(1.0, config.n_classes + 1)))
        return spec, _anchors(err, config.p0, config.n_classes - 1)
    if config.family == "weibull":
        return spec, np.asarray(config.weibull_theta, dtype=float)
    if isinstance(spec.basis, Bernstein):
        support = config.count_support if spec.response_type == "count" else config.continuous_support
        spec = replace(spec, basis=spec.basis.with_support(*support))
        return spec, _anchors(err, config.p0, config.order + 1)
    return spec, _anchors(err, config.p0, 2)


def true_model(spec: TramSpec, theta, beta, gamma=None) -> FittedTram:
    """A :class:`FittedTram` with given (not estimated) parameters, for sampling."""
    basis = spec.basis
    raw = basis.unconstrain(np.asarray(theta, dtype=float), min_step=1e-300)
    beta = np.asarray(beta, dtype=float).ravel()
    return FittedTram(
        spec=replace(spec, n_covariates=beta.size),
        theta=basis.constrain(raw),
        beta=beta,
        gamma=None if gamma is None else np.asarray(gamma, dtype=float).ravel(),
        loglik=np.nan,
        converged=True,
        gradient_norm=0.0,
    )


@dataclass(frozen=True)
class _Structure:
    anc: Dag
    B_anc: np.ndarray
    env_anc: np.ndarray
    beta: np.ndarray
    desc: Dag
    B_desc: np.ndarray
    env_desc: np.ndarray
    anc_desc: np.ndarray
    y_desc: np.ndarray


def _draw_structure(config: ScenarioConfig, rng) -> _Structure:
    p, d1, d2 = config.edge_prob, config.d1, config.d2
    lo, hi = config.structural_low, config.structural_high
    sd_y, sd_e = np.sqrt(config.response_var), np.sqrt(config.env_var)

    def masked(shape, draw):
        return np.where(rng.uniform(size=shape) < p, draw(shape), 0.0)

    anc = random_dag(d1, p, rng) if d1 else Dag(np.zeros((0, 0), bool))
    B_anc = np.where(anc.adjacency, rng.uniform(lo, hi, anc.adjacency.shape), 0.0)
    env_anc = masked((1, d1), lambda s: rng.normal(0.0, sd_e, s))
    beta = masked((d1,), lambda s: rng.normal(0.0, sd_y, s))
    desc = random_dag(d2, p, rng) if d2 else Dag(np.zeros((0, 0), bool))
    B_desc = np.where(desc.adjacency, rng.uniform(lo, hi, desc.adjacency.shape), 0.0)
    env_desc = masked((1, d2), lambda s: rng.normal(0.0, sd_e, s))
    anc_desc = masked((d1, d2), lambda s: rng.uniform(lo, hi, s))
    y_desc = masked((1, d2), lambda s: rng.normal(0.0, sd_y, s))
    return _Structure(anc, B_anc, env_anc, beta, desc, B_desc, env_desc, anc_desc, y_desc)


def _full_dag(st: _Structure, d1, d2) -> Dag:
    k = d1 + d2 + 2
    A = np.zeros((k, k), bool)
    a = slice(1, 1 + d1)
    y = 1 + d1
    dd = slice(2 + d1, k)
    A[0, a] = st.env_anc[0] != 0
    A[a, a] = st.anc.adjacency
    A[a, y] = st.beta != 0
    A[0, dd] = st.env_desc[0] != 0
    A[dd, dd] = st.desc.adjacency
    A[a, dd] = st.anc_desc != 0
    A[y, dd] = st.y_desc[0] != 0
    roles = ("environment",) + ("ancestor",) * d1 + ("response",) + ("descendant",) * d2
    names = ("E",) + tuple(f"X{j + 1}" for j in range(d1)) + ("Y",)
    names += tuple(f"X{d1 + j + 1}" for j in range(d2))
    return Dag(A, roles, names)


def _simulate_block(config, st, spec, theta, n, rng):
    d1, d2 = config.d1, config.d2
    e = rng.binomial(1, 0.5, size=n).astype(float)
    if d1:
        A = sample_sem(st.anc, st.B_anc, n, rng, e[:, None], st.env_anc)
    else:
        A = np.zeros((n, 0))
    y = true_model(spec, theta, st.beta).sample(A, rng)
    if d2:
        inputs = np.column_stack([A, y])
        D = sample_sem(
            st.desc, st.B_desc, n, rng, e[:, None], st.env_desc,
            inputs, np.vstack([st.anc_desc, st.y_desc]),
        )
    else:
        D = np.zeros((n, 0))
    return e, A, y, D


def _censoring_rate(y, fraction):
    """Exponential rate with ``mean(P(C < y)) = fraction`` for ``C ~ Exp(rate)``."""
    y = y[np.isfinite(y)]
    if np.any(y <= 0):
        raise ValueError("censoring needs positive responses")

    def gap(log_rate):
        return np.mean(-np.expm1(-np.exp(log_rate) * y)) - fraction

    scale = np.log(1.0 / np.median(y))
    return float(np.exp(optimize.brentq(gap, scale - 40.0, scale + 40.0, xtol=1e-12)))


def simulate_scenario(config: ScenarioConfig):
    """Simulate one dataset from the random-DAG scenario.

    Returns
    -------
    dataset : Dataset
        Covariates ``X1..X(d1+d2)`` (ancestors first), response and a single
        Bernoulli(0.5) environment.
    truth : dict
        ``parents`` and ``oracle`` (zero-based covariate indices), ``dag``
        (full graph including E and Y), ``beta``, ``theta``, ``spec`` and,
        with censoring, ``censoring_rate`` and ``latent_response``.
    """
    d1, d2, n = config.d1, config.d2, config.n
    struct_rng = np.random.default_rng(np.random.SeedSequence([config.seed, config.dag_id, 0]))
    noise_rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, config.dag_id, 1, config.rep])
    )
    st = _draw_structure(config, struct_rng)
    spec, theta = baseline_theta(config)
    e, A, y, D = _simulate_block(config, st, spec, theta, n, noise_rng)
    truth = {}
    if config.censoring > 0:
        if spec.response_type != "continuous":
            raise ValueError("censoring is supported for continuous families only")
        pilot_rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, config.dag_id, 2])
        )
        y_pilot = _simulate_block(config, st, spec, theta, 10_000, pilot_rng)[2]
        rate = _censoring_rate(y_pilot, config.censoring)
        c = noise_rng.exponential(1.0 / rate, size=n)
        cens = c < y
        response = Response(np.where(cens, c, y), np.where(cens, np.inf, y))
        truth.update(censoring_rate=rate, latent_response=y)
    else:
        response = Response.exact(y)
    dag = _full_dag(st, d1, d2)
    env_node, y_node = 0, d1 + 1
    cov_nodes = [j for j in range(dag.n_nodes) if j not in (env_node, y_node)]
    oracle = oracle_icp(dag, env_node, y_node)
    truth.update(
        parents=tuple(int(j) for j in np.flatnonzero(st.beta)),
        oracle=tuple(cov_nodes.index(j) for j in sorted(oracle)),
        dag=dag,
        env_node=env_node,
        response_node=y_node,
        beta=st.beta.copy(),
        theta=np.asarray(theta, dtype=float),
        spec=spec,
    )
    data = Dataset(response, np.hstack([A, D]), e[:, None], env_names=("E",))
    return data, truth


def oracle_icp(dag: Dag, env_node, response_node):
    """Population ICP output ``pa(Y) & (ch(E) | pa(an(Y) & ch(E)))`` (node indices)."""
    pa_y = dag.parents(response_node)
    ch_e = dag.children(env_node)
    hit = dag.ancestors(response_node) & ch_e
    pa_hit = set().union(*(dag.parents(j) for j in hit)) if hit else set()
    return set(pa_y & (ch_e | pa_hit))


def _simple_paths(A, x, y):
    """All simple paths from ``x`` to ``y`` in the skeleton of ``A``."""
    skel = A | A.T
    paths, stack = [], [(x, [x])]
    while stack:
        node, path = stack.pop()
        for nxt in np.flatnonzero(skel[node]):
            nxt = int(nxt)
            if nxt == y:
                paths.append(path + [y])
            elif nxt not in path:
                stack.append((nxt, path + [nxt]))
    return paths


def d_separated(dag: Dag, x, y, Z):
    """Whether ``x`` and ``y`` are d-separated by ``Z``, by checking every path.

    A path is blocked if an inner node is a non-collider in ``Z`` or a
    collider with neither itself nor a descendant in ``Z``.
    """
    A = dag.adjacency
    Z = set(Z)
    for path in _simple_paths(A, x, y):
        blocked = False
        for a, b, c in zip(path, path[1:], path[2:]):
            collider = A[a, b] and A[c, b]
            if collider:
                if b not in Z and not (dag.descendants(b) & Z):
                    blocked = True
                    break
            elif b in Z:
                blocked = True
                break
        if not blocked:
            return False
    return True


def brute_force_oracle(dag: Dag, env_node, response_node):
    """Intersection of all node sets ``S`` that d-separate ``E`` and ``Y``.

    Returns the empty set if no set does.
    """
    others = [j for j in range(dag.n_nodes) if j not in (env_node, response_node)]
    accepted = [
        set(S)
        for r in range(len(others) + 1)
        for S in itertools.combinations(others, r)
        if d_separated(dag, env_node, response_node, S)
    ]
    return set.intersection(*accepted) if accepted else set()


def example1(n, rng):
    """Binary-response SCM with one causal parent and one child of Y.

    ``X1 = -E + N1``, ``Y = 1(0.5 X1 > N_Y)`` (logistic ``N_Y``),
    ``X2 = Y + 0.8 E + N2``, ``E ~ Bernoulli(0.5)``. Parents of Y: ``{X1}``.
    """
    e = rng.binomial(1, 0.5, size=n).astype(float)
    x1 = -e + rng.standard_normal(n)
    y = (0.5 * x1 > rng.logistic(size=n)).astype(float)
    x2 = y + 0.8 * e + rng.standard_normal(n)
    return Dataset(y, np.column_stack([x1, x2]), e[:, None], env_names=("E",))


def faithfulness_example(beta, n, rng):
    """SCM where ``beta = 0.5`` makes Y independent of E by cancellation.

    ``X1 = E + N1``, ``X2 = E + N2``, ``Y = g(Z - 0.5 X1 + beta X2)`` with
    ``g`` the chi-square(3) quantile of ``Phi``; invariant set ``{X1, X2}``.
    """
    e = rng.binomial(1, 0.5, size=n).astype(float)
    x1 = e + rng.standard_normal(n)
    x2 = e + rng.standard_normal(n)
    z = rng.standard_normal(n)
    y = stats.chi2.ppf(special.ndtr(z - 0.5 * x1 + beta * x2), 3)
    return Dataset(y, np.column_stack([x1, x2]), e[:, None], env_names=("E",))


#: proportional odds parameters of the non-identifiability construction
COUNTER_THETA = (np.log(0.5), np.log(1.5))
COUNTER_BETA = (0.0, np.log(1.4), np.log(1.8))


def polr_conditional(theta=COUNTER_THETA, beta=COUNTER_BETA):
    """``P(Y = k | X = j)`` of a logistic proportional odds model.

    ``P(Y <= k | X = j) = expit(theta_k - beta_j)`` with ``theta_K = +inf``;
    rows index ``X``, columns index ``Y``.
    """
    cum = special.expit(np.asarray(theta)[None, :] - np.asarray(beta)[:, None])
    cum = np.hstack([np.zeros((len(beta), 1)), cum, np.ones((len(beta), 1))])
    return np.diff(cum, axis=1)


def counterexample_table(theta=COUNTER_THETA, beta=COUNTER_BETA):
    """Joint table ``f(y, x1, x2) = f(x1) f(y | x1) f(x2 | y)`` (axes y, x1, x2).

    ``X1`` is uniform and ``f(x2 | y)`` is the Bayes inversion of the same
    proportional odds model with uniform ``X2``, so both ``Y | X1`` and
    ``Y | X2`` follow that model.
    """
    cond = polr_conditional(theta, beta)
    k = cond.shape[0]
    fx = np.full(k, 1.0 / k)
    fy = fx @ cond
    x_given_y = (cond * fx[:, None] / fy[None, :]).T
    return np.einsum("a,ay,yb->yab", fx, cond, x_given_y)


def sample_counterexample(n, rng, theta=COUNTER_THETA, beta=COUNTER_BETA):
    """Draw ``n`` triples ``(Y, X1, X2)`` with values in ``{1, 2, 3}``."""
    table = counterexample_table(theta, beta)
    flat = rng.choice(table.size, size=n, p=table.ravel() / table.sum())
    y, x1, x2 = np.unravel_index(flat, table.shape)
    return Dataset(y + 1.0, np.column_stack([x1, x2]) + 1.0, None)


def write_scenario(path, data: Dataset, truth, config: ScenarioConfig | None = None):
    """Write ``X1..Xd, Y, E`` to CSV and the truth to ``<path>.json``.

    Right-censored responses add ``Y_left``/``Y_right`` columns (empty right
    cell for censored rows) next to ``Y`` (the observed value).
    """
    resp = data.response
    header = list(data.covariate_names) + ["Y"]
    censored = not resp.all_exact
    if censored:
        header += ["Y_left", "Y_right"]
    header += list(data.env_names)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(data.n):
            row = [repr(float(v)) for v in data.X[i]] + [repr(float(resp.left[i]))]
            if censored:
                right = resp.right[i]
                row += [repr(float(resp.left[i])), "" if np.isinf(right) else repr(float(right))]
            row += [repr(float(v)) for v in data.E[i]]
            w.writerow(row)
    sidecar = {
        "parents": [j + 1 for j in truth["parents"]],
        "oracle": [j + 1 for j in truth["oracle"]],
        "dag": truth["dag"].to_dict(),
        "beta": [float(b) for b in truth["beta"]],
        "theta": [float(t) for t in truth["theta"]],
    }
    if config is not None:
        sidecar["config"] = asdict(config)
    with open(f"{path}.json", "w") as fh:
        json.dump(sidecar, fh, indent=2)
