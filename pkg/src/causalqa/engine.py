"""Estimator assignment and execution.

Each task routes to one canonical method:

* CGL  -> PC algorithm (Fisher-z conditional-independence tests, CPDAG output)
* ATE  -> doubly robust (AIPW) estimator
* HTE  -> S-learner with treatment-covariate interactions
* MA   -> product-of-coefficients mediation analysis
* OPO  -> Q-learning (single stage or backward induction over stages)

New methods can be plugged in through :func:`register_method`; a method is a
callable ``(query, dataset, options) -> ToolResult``. All estimators are
deterministic functions of the dataset bytes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from math import atanh, sqrt
from typing import Callable, Mapping

import numpy as np
from scipy.linalg import qr, solve_triangular
from scipy.special import expit
from scipy.stats import norm

from .datagen import UnknownConditionVariable
from .intent import (ALL_VARIABLES, CausalGraph, CausalQuery, EffectEstimate, InvalidQuery,
                     MediationEstimate, RecommendedAction, Task, ToolResult, validate_query)
from .tabular import TabularDataset
from .textmatch import fuzzy_match


class EngineError(Exception):
    """Base class for estimation failures."""


class ColumnNotFound(EngineError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no column matches '{name}'")


class AmbiguousColumn(EngineError):
    def __init__(self, name: str, candidates: list[str]):
        self.name = name
        self.candidates = candidates
        super().__init__(f"'{name}' matches several columns: {candidates}")


class EstimationFailed(EngineError):
    pass


class RankDeficient(EngineError):
    """Design matrix is collinear; carries the pivot order for the fallback."""

    def __init__(self, rank: int, pivots: list[int]):
        self.rank = rank
        self.pivots = pivots
        super().__init__(f"design rank {rank} < {len(pivots)} columns")


class SeparationDetected(EngineError):
    pass


class NonBinaryTreatment(EngineError):
    pass


class TooManyLevels(EngineError):
    pass


class MalformedStageSchema(EngineError):
    pass


class InsufficientSamples(EngineError):
    pass


class MethodId(str, Enum):
    """Canonical estimator identifiers, one default per task."""

    PC = "PC"
    DoublyRobust = "DoublyRobust"
    SLearner = "SLearner"
    MediationPoC = "MediationPoC"
    QLearning = "QLearning"


METHOD_DISPLAY_NAMES: dict[MethodId, str] = {
    MethodId.PC: "the PC algorithm",
    MethodId.DoublyRobust: "the doubly robust estimator",
    MethodId.SLearner: "the S-learner",
    MethodId.MediationPoC: "causal mediation analysis",
    MethodId.QLearning: "Q-Learning",
}

PROPENSITY_CLIP = (0.01, 0.99)


# ---------------------------------------------------------------------------
# Linear-model plumbing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OlsFit:
    """Least-squares fit; slope entries for dropped collinear columns are 0."""

    coefficients: np.ndarray
    intercept: float
    residual_variance: float
    dropped: tuple[int, ...] = ()

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.atleast_2d(x) @ self.coefficients + self.intercept


@dataclass(frozen=True)
class LogisticFit:
    coefficients: np.ndarray
    intercept: float
    converged: bool

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return expit(np.atleast_2d(x) @ self.coefficients + self.intercept)

    def propensity(self, x: np.ndarray) -> np.ndarray:
        return np.clip(self.predict_proba(x), *PROPENSITY_CLIP)


def _design_rank(z: np.ndarray) -> tuple[int, list[int], np.ndarray, np.ndarray]:
    q_mat, r_mat, piv = qr(z, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_mat))
    tol = max(z.shape) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    return rank, list(piv), q_mat, r_mat


def _as_columns(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def ols(x: np.ndarray, y: np.ndarray) -> OlsFit:
    """Least squares of y on [1, x] via rank-revealing QR.

    Raises :class:`RankDeficient` on collinear designs (the exception carries
    the pivot order so callers can drop columns and refit).
    """
    x = _as_columns(x)
    y = np.asarray(y, dtype=float)
    n, k = x.shape
    if n < k + 2:
        raise RankDeficient(rank=min(n, k + 1), pivots=list(range(k + 1)))
    z = np.column_stack([np.ones(n), x])
    rank, piv, q_mat, r_mat = _design_rank(z)
    if rank < z.shape[1]:
        raise RankDeficient(rank=rank, pivots=piv)
    beta_piv = solve_triangular(r_mat, q_mat.T @ y)
    beta = np.empty_like(beta_piv)
    beta[piv] = beta_piv
    resid = y - z @ beta
    sigma2 = float(resid @ resid) / (n - z.shape[1])
    return OlsFit(coefficients=beta[1:], intercept=float(beta[0]), residual_variance=sigma2)


def ols_with_fallback(x: np.ndarray, y: np.ndarray) -> OlsFit:
    """OLS that survives collinearity by dropping columns in pivot order once."""
    x = _as_columns(x)
    try:
        return ols(x, y)
    except RankDeficient as exc:
        n, k = x.shape
        if n < 3:
            raise EstimationFailed("too few rows to fit even a reduced model") from exc
        z = np.column_stack([np.ones(n), x])
        rank, piv, _, _ = _design_rank(z)
        keep = sorted(piv[:rank])
        if 0 not in keep:     # never drop the intercept; sacrifice the weakest pivot
            keep = sorted([0] + piv[: rank - 1])
        try:
            sub = ols(z[:, keep][:, 1:], y)
        except RankDeficient as second:
            raise EstimationFailed("design still collinear after dropping columns") from second
        coef = np.zeros(k)
        kept_x = [c - 1 for c in keep if c != 0]
        for slot, col in enumerate(kept_x):
            coef[col] = sub.coefficients[slot]
        dropped = tuple(c for c in range(k) if c not in kept_x)
        return OlsFit(coefficients=coef, intercept=sub.intercept,
                      residual_variance=sub.residual_variance, dropped=dropped)


def logistic(x: np.ndarray, a: np.ndarray, max_iter: int = 50, tol: float = 1e-8) -> LogisticFit:
    """Logistic regression of a binary label on [1, x] by IRLS.

    Raises :class:`SeparationDetected` when more than 90% of fitted
    probabilities pin beyond the propensity clip bounds.
    """
    x = _as_columns(x)
    a = np.asarray(a, dtype=float)
    if set(np.unique(a)) - {0.0, 1.0}:
        raise NonBinaryTreatment("logistic label must be 0/1")
    n, k = x.shape
    if n < k + 2:
        raise RankDeficient(rank=min(n, k + 1), pivots=list(range(k + 1)))
    z = np.column_stack([np.ones(n), x])
    beta = np.zeros(k + 1)
    converged = False
    for _ in range(max_iter):
        p = expit(z @ beta)
        w = np.maximum(p * (1.0 - p), 1e-12)
        hess = z.T @ (z * w[:, None])
        grad = z.T @ (a - p)
        try:
            step = np.linalg.solve(hess + 1e-10 * np.eye(k + 1), grad)
        except np.linalg.LinAlgError:
            break
        beta = beta + step
        if np.max(np.abs(step)) < tol:
            converged = True
            break
    fitted = expit(z @ beta)
    lo, hi = PROPENSITY_CLIP
    pinned = np.mean((fitted < lo) | (fitted > hi))
    if pinned > 0.9:
        raise SeparationDetected(f"{pinned:.0%} of fitted probabilities pinned to the clip bounds")
    return LogisticFit(coefficients=beta[1:], intercept=float(beta[0]), converged=converged)


# ---------------------------------------------------------------------------
# Column plumbing
# ---------------------------------------------------------------------------

def resolve_column(dataset: TabularDataset, name: str) -> str:
    """Exact column match, else a unique fuzzy match within edit distance 0.25."""
    if name in dataset.columns:
        return name
    hits = fuzzy_match(name, list(dataset.columns))
    if not hits:
        raise ColumnNotFound(name)
    if len(hits) > 1:
        raise AmbiguousColumn(name, hits)
    return hits[0]


def _binary_treatment(dataset: TabularDataset, column: str) -> np.ndarray:
    values = dataset.col(column)
    levels = sorted(set(values.tolist()))
    if len(levels) != 2:
        raise NonBinaryTreatment(f"column '{column}' has {len(levels)} distinct values, need 2")
    return (values == levels[1]).astype(float)


def _numeric_response(dataset: TabularDataset, column: str) -> np.ndarray:
    if not dataset.is_numeric(column):
        raise EstimationFailed(f"response column '{column}' is not numeric")
    return dataset.col(column).astype(float)


def _covariate_names(dataset: TabularDataset, exclude: tuple[str, ...]) -> list[str]:
    return [c for c in dataset.columns if c not in exclude and dataset.is_numeric(c)]


def _query_point(s: np.ndarray, names: list[str], conditions: Mapping[str, float]) -> np.ndarray:
    point = s.mean(axis=0) if s.size else np.empty(0)
    index = {name: i for i, name in enumerate(names)}
    for name, value in conditions.items():
        if name not in index:
            raise UnknownConditionVariable(name)
        try:
            point[index[name]] = float(value)
        except (TypeError, ValueError):
            raise EstimationFailed(f"condition value {value!r} for '{name}' is not numeric") from None
    return point


# ---------------------------------------------------------------------------
# Graph learning (PC)
# ---------------------------------------------------------------------------

def _partial_corr(corr: np.ndarray, i: int, j: int, cond: tuple[int, ...]) -> float:
    idx = [i, j, *cond]
    sub = corr[np.ix_(idx, idx)]
    try:
        prec = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        prec = np.linalg.pinv(sub)
    denom = sqrt(abs(prec[0, 0] * prec[1, 1]))
    if denom == 0.0:
        return 0.0
    return float(np.clip(-prec[0, 1] / denom, -0.999999, 0.999999))


def _independent(corr: np.ndarray, n: int, i: int, j: int,
                 cond: tuple[int, ...], critical: float) -> bool:
    dof = n - len(cond) - 3
    if dof <= 0:
        return True
    r = _partial_corr(corr, i, j, cond)
    return sqrt(dof) * abs(atanh(r)) <= critical


def _creates_cycle(directed: np.ndarray, start: int, end: int) -> bool:
    """Would orienting start -> end close a directed cycle (end ->* start)?"""
    stack, seen = [end], set()
    while stack:
        node = stack.pop()
        if node == start:
            return True
        if node in seen:
            continue
        seen.add(node)
        stack.extend(np.flatnonzero(directed[node]).tolist())
    return False


def _directed_only(marks: np.ndarray) -> np.ndarray:
    return marks & ~marks.T


def learn_graph(dataset: TabularDataset, nodes: list[str], alpha: float = 0.01) -> CausalGraph:
    """PC: Fisher-z skeleton, v-structure orientation, then Meek rules R1-R3.

    Output adjacency has 1s for directed edges and symmetric 1s for edges the
    CPDAG leaves undirected.
    """
    if len(nodes) < 2:
        raise InsufficientSamples("need at least two nodes")
    n = dataset.n_rows
    p = len(nodes)
    if n <= p + 3:
        raise InsufficientSamples(f"need more than {p + 3} rows for {p} nodes, got {n}")
    x = dataset.numeric_matrix(nodes)
    with np.errstate(invalid="ignore"):
        corr = np.corrcoef(x, rowvar=False)
    corr = np.nan_to_num(corr, nan=0.0)
    np.fill_diagonal(corr, 1.0)
    critical = float(norm.ppf(1.0 - alpha / 2.0))

    adj = np.ones((p, p), dtype=bool)
    np.fill_diagonal(adj, False)
    sepset: dict[tuple[int, int], frozenset[int]] = {}

    level = 0
    while level <= p - 2:
        frozen = {i: set(np.flatnonzero(adj[i]).tolist()) for i in range(p)}
        tested_any = False
        for i in range(p):
            for j in range(i + 1, p):
                if not adj[i, j]:
                    continue
                pools = [sorted(frozen[i] - {j}), sorted(frozen[j] - {i})]
                seen: set[tuple[int, ...]] = set()
                for pool in pools:
                    if len(pool) < level:
                        continue
                    for cond in combinations(pool, level):
                        if cond in seen:
                            continue
                        seen.add(cond)
                        tested_any = True
                        if _independent(corr, n, i, j, cond, critical):
                            adj[i, j] = adj[j, i] = False
                            sepset[(i, j)] = frozenset(cond)
                            break
                    if not adj[i, j]:
                        break
        if not tested_any:
            break
        level += 1

    # marks[i, j]: the i -> j arrowhead is still possible
    marks = adj.copy()

    def orient(src: int, dst: int) -> None:
        if marks[src, dst] and marks[dst, src] and not _creates_cycle(_directed_only(marks), src, dst):
            marks[dst, src] = False

    for k in range(p):
        neighbors = sorted(np.flatnonzero(adj[k]).tolist())
        for i, j in combinations(neighbors, 2):
            if adj[i, j]:
                continue
            if k not in sepset.get((min(i, j), max(i, j)), frozenset()):
                orient(i, k)
                orient(j, k)

    changed = True
    while changed:
        changed = False
        directed = _directed_only(marks)
        undirected = marks & marks.T
        for a in range(p):
            for b in range(p):
                if a == b or not undirected[a, b]:
                    continue
                # R1: c -> a, a - b, c and b nonadjacent  =>  a -> b
                r1 = any(directed[c, a] and not adj[c, b] for c in range(p) if c not in (a, b))
                # R2: a -> c -> b with a - b  =>  a -> b
                r2 = any(directed[a, c] and directed[c, b] for c in range(p) if c not in (a, b))
                # R3: a - c, a - d, c -> b, d -> b, c and d nonadjacent  =>  a -> b
                r3 = any(undirected[a, c] and undirected[a, d]
                         and directed[c, b] and directed[d, b] and not adj[c, d]
                         for c in range(p) for d in range(c + 1, p)
                         if c not in (a, b) and d not in (a, b))
                if r1 or r2 or r3:
                    before = marks[b, a]
                    orient(a, b)
                    if before != marks[b, a]:
                        changed = True

    stats = np.zeros((p, p))
    for i in range(p):
        for j in range(p):
            if i != j and marks[i, j]:
                r = float(np.clip(corr[i, j], -0.999999, 0.999999))
                stats[i, j] = sqrt(max(n - 3, 1)) * abs(atanh(r))

    adjacency = tuple(tuple(int(marks[i, j]) for j in range(p)) for i in range(p))
    edge_stats = tuple(tuple(float(stats[i, j]) for j in range(p)) for i in range(p))
    return CausalGraph(nodes=tuple(nodes), adjacency=adjacency, edge_stats=edge_stats)


# ---------------------------------------------------------------------------
# Effect estimators
# ---------------------------------------------------------------------------

def estimate_ate(dataset: TabularDataset, treatment: str, response: str) -> EffectEstimate:
    """AIPW: per-arm outcome regressions plus a logistic propensity model."""
    a = _binary_treatment(dataset, treatment)
    y = _numeric_response(dataset, response)
    covs = _covariate_names(dataset, (treatment, response))
    s = dataset.numeric_matrix(covs)

    treated, control = a == 1.0, a == 0.0
    fit1 = ols_with_fallback(s[treated], y[treated])
    fit0 = ols_with_fallback(s[control], y[control])
    mu1, mu0 = fit1.predict(s).ravel(), fit0.predict(s).ravel()

    if covs:
        e = logistic(s, a).propensity(s).ravel()
    else:
        e = np.full(len(a), float(np.clip(a.mean(), *PROPENSITY_CLIP)))

    psi = mu1 - mu0 + a * (y - mu1) / e - (1.0 - a) * (y - mu0) / (1.0 - e)
    return EffectEstimate(value=float(psi.mean()))


def estimate_hte(dataset: TabularDataset, treatment: str, response: str,
                 conditions: Mapping[str, float]) -> EffectEstimate:
    """S-learner: one OLS of y on [A, S, A*S], differenced at the query point."""
    a = _binary_treatment(dataset, treatment)
    y = _numeric_response(dataset, response)
    covs = _covariate_names(dataset, (treatment, response))
    s = dataset.numeric_matrix(covs)
    point = _query_point(s, covs, conditions)

    design = np.column_stack([a, s, s * a[:, None]]) if covs else a[:, None]
    fit = ols_with_fallback(design, y)
    k = len(covs)
    effect = fit.coefficients[0] + (fit.coefficients[1 + k:] @ point if k else 0.0)
    return EffectEstimate(value=float(effect))


def estimate_mediation(dataset: TabularDataset, treatment: str, response: str,
                       mediator: str) -> MediationEstimate:
    """Product of coefficients: M ~ A gives the exposure path, Y ~ A + M the rest."""
    a = _binary_treatment(dataset, treatment)
    y = _numeric_response(dataset, response)
    if not dataset.is_numeric(mediator):
        raise EstimationFailed(f"mediator column '{mediator}' is not numeric")
    m = dataset.col(mediator).astype(float)

    beta_m = ols(a[:, None], m).coefficients[0]
    fit_y = ols(np.column_stack([a, m]), y)
    direct = float(fit_y.coefficients[0])
    indirect = float(beta_m * fit_y.coefficients[1])
    return MediationEstimate(total=direct + indirect, direct=direct, indirect=indirect)


# ---------------------------------------------------------------------------
# Policy optimization (Q-learning)
# ---------------------------------------------------------------------------

_STAGE_PATTERNS = (re.compile(r"^s(\d+)_(\d+)$"), re.compile(r"^a(\d+)$"), re.compile(r"^y(\d+)$"))


def stage_schema(dataset: TabularDataset) -> tuple[int, int] | None:
    """(stages, features) when every column is stage-indexed, else None."""
    states: dict[int, set[int]] = {}
    actions: set[int] = set()
    rewards: set[int] = set()
    for name in dataset.columns:
        m = _STAGE_PATTERNS[0].match(name)
        if m:
            states.setdefault(int(m.group(1)), set()).add(int(m.group(2)))
            continue
        m = _STAGE_PATTERNS[1].match(name)
        if m:
            actions.add(int(m.group(1)))
            continue
        m = _STAGE_PATTERNS[2].match(name)
        if m:
            rewards.add(int(m.group(1)))
            continue
        return None
    if not states:
        return None
    t = max(actions | rewards | set(states))
    stages_ok = set(states) == actions == rewards == set(range(1, t + 1))
    widths = {frozenset(v) for v in states.values()}
    if not stages_ok or len(widths) != 1:
        raise MalformedStageSchema(f"incomplete stage columns: states={sorted(states)}, "
                                   f"actions={sorted(actions)}, rewards={sorted(rewards)}")
    j = len(next(iter(widths)))
    if set(next(iter(widths))) != set(range(1, j + 1)):
        raise MalformedStageSchema("state columns must be numbered s{t}_1..s{t}_J")
    return t, j


def _level_key(level) -> str:
    return str(level)


def _native_level(level):
    if isinstance(level, (np.integer, int)):
        return int(level)
    if isinstance(level, (np.floating, float)):
        f = float(level)
        return int(f) if f.is_integer() else f
    return str(level)


def optimize_policy(dataset: TabularDataset, treatment: str, response: str,
                    conditions: Mapping[str, float]) -> RecommendedAction:
    """Q-learning: fit Q(s, a) and recommend the argmax level at the query point.

    Multi-stage data (stage-indexed columns) is handled by backward induction
    and the recommendation is the optimal first-stage action. Ties break
    toward the lexicographically smallest level.
    """
    schema = stage_schema(dataset)
    if schema is not None:
        return _optimize_multi_stage(dataset, schema, conditions)

    levels = sorted(set(dataset.col(treatment).tolist()))
    if len(levels) > 10:
        raise TooManyLevels(f"{len(levels)} treatment levels")
    if len(levels) < 2:
        raise NonBinaryTreatment(f"column '{treatment}' has a single level")
    y = _numeric_response(dataset, response)
    covs = _covariate_names(dataset, (treatment, response))
    s = dataset.numeric_matrix(covs)
    point = _query_point(s, covs, conditions)
    values = dataset.col(treatment)

    blocks = []
    for level in levels[1:]:
        indicator = (values == level).astype(float)
        blocks.append(indicator[:, None])
        if covs:
            blocks.append(s * indicator[:, None])
    design = np.hstack([b for b in ([*blocks, s] if covs else blocks)]) if blocks else s
    fit = ols_with_fallback(design, y)

    k = len(covs)
    width = 1 + k
    q_values = []
    base_q = fit.intercept + (fit.coefficients[len(levels[1:]) * width:] @ point if k else 0.0)
    q_values.append((base_q, levels[0]))
    for idx, level in enumerate(levels[1:]):
        offset = idx * width
        bump = fit.coefficients[offset]
        if k:
            bump += fit.coefficients[offset + 1: offset + width] @ point
        q_values.append((base_q + bump, level))

    best_q = max(q for q, _ in q_values)
    tie_tol = 1e-9 * max(1.0, abs(best_q))
    winners = [level for q, level in q_values if best_q - q <= tie_tol]
    return RecommendedAction(level=_native_level(min(winners, key=_level_key)))


def _optimize_multi_stage(dataset: TabularDataset, schema: tuple[int, int],
                          conditions: Mapping[str, float]) -> RecommendedAction:
    t_stages, j = schema
    pseudo = np.zeros(dataset.n_rows)
    first_fit = None
    for t in range(t_stages, 0, -1):
        state_names = [f"s{t}_{k}" for k in range(1, j + 1)]
        s = dataset.numeric_matrix(state_names)
        a = _binary_treatment(dataset, f"a{t}")
        y = dataset.col(f"y{t}").astype(float) + pseudo
        design = np.column_stack([a, s, s * a[:, None]])
        fit = ols_with_fallback(design, y)

        def q_hat(states: np.ndarray, action: float) -> np.ndarray:
            main = states @ fit.coefficients[1:1 + j] + fit.intercept
            return main + action * (fit.coefficients[0] + states @ fit.coefficients[1 + j:])

        pseudo = np.maximum(q_hat(s, 0.0), q_hat(s, 1.0))
        if t == 1:
            first_fit = (fit, state_names, s)

    fit, state_names, s = first_fit
    point = _query_point(s, state_names, conditions)
    q0 = fit.intercept + point @ fit.coefficients[1:1 + j]
    q1 = q0 + fit.coefficients[0] + point @ fit.coefficients[1 + j:]
    if q1 > q0 + 1e-9 * max(1.0, abs(q0)):
        return RecommendedAction(level=1)
    return RecommendedAction(level=0)


# ---------------------------------------------------------------------------
# Dispatch
# ---------------------------------------------------------------------------

@dataclass
class EngineOptions:
    alpha: float = 0.01


MethodFn = Callable[[CausalQuery, TabularDataset, EngineOptions], ToolResult]

_REGISTRY: dict[MethodId, MethodFn] = {}
TASK_METHODS: dict[Task, list[MethodId]] = {
    Task.CGL: [MethodId.PC],
    Task.ATE: [MethodId.DoublyRobust],
    Task.HTE: [MethodId.SLearner],
    Task.MA: [MethodId.MediationPoC],
    Task.OPO: [MethodId.QLearning],
}


def register_method(method: MethodId, fn: MethodFn, task: Task | None = None) -> None:
    """Add or replace a method implementation; optionally append it to a task."""
    _REGISTRY[method] = fn
    if task is not None and method not in TASK_METHODS[task]:
        TASK_METHODS[task].append(method)


def method_for_task(task: Task) -> MethodId:
    return TASK_METHODS[task][0]


def _conditions_map(query: CausalQuery, dataset: TabularDataset,
                    resolve: bool = True) -> dict[str, float]:
    out = {}
    for clause in query.conditions:
        name = resolve_column(dataset, clause.variable) if resolve else clause.variable
        out[name] = clause.value
    return out


def _run_pc(query: CausalQuery, dataset: TabularDataset, options: EngineOptions) -> ToolResult:
    if list(query.nodes) == [ALL_VARIABLES]:
        nodes = [c for c in dataset.columns if dataset.is_numeric(c)]
    else:
        nodes = [resolve_column(dataset, n) for n in query.nodes]
    return learn_graph(dataset, nodes, alpha=options.alpha)


def _run_doubly_robust(query: CausalQuery, dataset: TabularDataset, options: EngineOptions) -> ToolResult:
    return estimate_ate(dataset, resolve_column(dataset, query.treatment),
                        resolve_column(dataset, query.response))


def _run_s_learner(query: CausalQuery, dataset: TabularDataset, options: EngineOptions) -> ToolResult:
    return estimate_hte(dataset, resolve_column(dataset, query.treatment),
                        resolve_column(dataset, query.response),
                        _conditions_map(query, dataset))


def _run_mediation(query: CausalQuery, dataset: TabularDataset, options: EngineOptions) -> ToolResult:
    return estimate_mediation(dataset, resolve_column(dataset, query.treatment),
                              resolve_column(dataset, query.response),
                              resolve_column(dataset, query.mediator))


def _run_q_learning(query: CausalQuery, dataset: TabularDataset, options: EngineOptions) -> ToolResult:
    if stage_schema(dataset) is not None:
        return optimize_policy(dataset, query.treatment, query.response,
                               _conditions_map(query, dataset, resolve=False))
    return optimize_policy(dataset, resolve_column(dataset, query.treatment),
                           resolve_column(dataset, query.response),
                           _conditions_map(query, dataset))


_REGISTRY.update({
    MethodId.PC: _run_pc,
    MethodId.DoublyRobust: _run_doubly_robust,
    MethodId.SLearner: _run_s_learner,
    MethodId.MediationPoC: _run_mediation,
    MethodId.QLearning: _run_q_learning,
})


def dispatch(query: CausalQuery, dataset: TabularDataset,
             options: EngineOptions | None = None) -> ToolResult:
    """Route a validated query to its task's method and execute it."""
    violations = validate_query(query)
    if violations:
        raise InvalidQuery(violations)
    fn = _REGISTRY[method_for_task(query.task)]
    return fn(query, dataset, options or EngineOptions())
