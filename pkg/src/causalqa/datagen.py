"""Synthetic tabular datasets with analytic golden labels.

Five generating processes, one per task:

* graph data from a linear structural equation model with a strictly
  upper-triangular coefficient matrix (columns emitted in topological order),
* effect data ``Y = A*b10 + sum(S_j*b1_j) + sum(A*S_j*b2_j) + noise`` with
  Gaussian features and a Bernoulli(0.5) treatment,
* multi-stage decision data with deterministic linear state transitions
  ``S_{t+1} = B_a @ S_t`` and per-stage rewards from the effect model,
* mediation data ``M = A*bm + noise_m``, ``Y = A*b1 + M*b2 + noise_y``.

Every generator is a pure function of (params, seed); re-running with the
same seed produces byte-identical CSV text.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .tabular import TabularDataset, from_columns


class BadDims(Exception):
    """Generator called with impossible sizes."""


class UnknownConditionVariable(Exception):
    """A condition names a variable outside the covariate list."""


# ---------------------------------------------------------------------------
# Parameter records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SemParams:
    """Linear SEM: X = B^T X + eps, B strictly upper-triangular."""

    b: np.ndarray            # (J, J) coefficients, zero on and below the diagonal
    p_mask: float
    noise_sd: np.ndarray     # (J,) per-node Gaussian noise scale
    j: int
    n: int


@dataclass(frozen=True)
class EffectParams:
    """Outcome model for the effect tasks (interaction form)."""

    beta10: float
    beta1: np.ndarray        # (J,) main covariate effects
    beta2: np.ndarray        # (J,) treatment-covariate interactions
    mu: np.ndarray           # (J,) covariate means
    sigma: np.ndarray        # (J,) covariate scales
    noise_mean: float
    noise_sd: float
    feature_names: tuple[str, ...]


@dataclass(frozen=True)
class MdpParams:
    """Multi-stage extension: per-action transition kernels plus rewards."""

    b_s0: np.ndarray         # (J, J) transition under action 0
    b_s1: np.ndarray         # (J, J) transition under action 1
    t_stages: int
    reward: EffectParams


@dataclass(frozen=True)
class MediationParams:
    beta1: float             # direct path A -> Y
    beta2: float             # mediator path M -> Y
    beta_m: float            # exposure path A -> M
    noise_y: tuple[float, float]
    noise_m: tuple[float, float]


# ---------------------------------------------------------------------------
# Golden labels
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphTruth:
    nodes: tuple[str, ...]
    mask: tuple[tuple[int, ...], ...]   # 1 where b[i][j] != 0


@dataclass(frozen=True)
class AteTruth:
    value: float


@dataclass(frozen=True)
class HteTruth:
    params: EffectParams


@dataclass(frozen=True)
class MediationTruth:
    direct: float
    indirect: float
    total: float


@dataclass(frozen=True)
class PolicyTruth:
    params: EffectParams
    mdp: MdpParams | None = None


GoldenLabel = GraphTruth | AteTruth | HteTruth | MediationTruth | PolicyTruth


# ---------------------------------------------------------------------------
# Parameter sampling (ranges are implementation choices: coefficients keep
# |b| in [0.5, 2] so effects stay detectable at desk-scale sample sizes)
# ---------------------------------------------------------------------------

def _signed(rng: np.random.Generator, size=None) -> np.ndarray | float:
    mag = rng.uniform(0.5, 2.0, size)
    sign = rng.integers(0, 2, size) * 2 - 1
    return mag * sign


def sample_sem_params(j: int, n: int, p_mask: float, rng: np.random.Generator) -> SemParams:
    if j < 2 or n < 1 or not 0.0 <= p_mask <= 1.0:
        raise BadDims(f"bad SEM dims: j={j}, n={n}, p_mask={p_mask}")
    b = np.zeros((j, j))
    for row in range(j):
        for col in range(row + 1, j):
            keep = rng.random() >= p_mask
            weight = _signed(rng)
            if keep:
                b[row, col] = weight
    return SemParams(b=b, p_mask=p_mask, noise_sd=np.ones(j), j=j, n=n)


def sample_effect_params(j: int, rng: np.random.Generator,
                         feature_names: tuple[str, ...] | None = None) -> EffectParams:
    if j < 1:
        raise BadDims(f"need at least one covariate, got j={j}")
    names = feature_names or tuple(f"s{k}" for k in range(1, j + 1))
    if len(names) != j:
        raise BadDims("feature_names length must equal j")
    return EffectParams(
        beta10=float(_signed(rng)),
        beta1=np.asarray(_signed(rng, j)),
        beta2=np.asarray(_signed(rng, j)),
        mu=rng.uniform(-2.0, 2.0, j),
        sigma=rng.uniform(0.5, 1.5, j),
        noise_mean=float(rng.uniform(-1.0, 1.0)),
        noise_sd=float(rng.uniform(0.5, 1.5)),
        feature_names=names,
    )


def sample_mdp_params(j: int, t_stages: int, rng: np.random.Generator,
                      feature_names: tuple[str, ...] | None = None) -> MdpParams:
    if t_stages < 1:
        raise BadDims(f"need t_stages >= 1, got {t_stages}")
    reward = sample_effect_params(j, rng, feature_names)

    def transition() -> np.ndarray:
        b = rng.uniform(-1.0, 1.0, (j, j))
        radius = max(abs(np.linalg.eigvals(b)))
        if radius > 1.0:
            b = b * (0.95 / radius)   # keep states from blowing up over stages
        return b

    return MdpParams(b_s0=transition(), b_s1=transition(), t_stages=t_stages, reward=reward)


def sample_mediation_params(rng: np.random.Generator) -> MediationParams:
    return MediationParams(
        beta1=float(_signed(rng)),
        beta2=float(_signed(rng)),
        beta_m=float(_signed(rng)),
        noise_y=(float(rng.uniform(-1.0, 1.0)), float(rng.uniform(0.5, 1.5))),
        noise_m=(float(rng.uniform(-1.0, 1.0)), float(rng.uniform(0.5, 1.5))),
    )


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------

def gen_cgl(j: int, n: int, p_mask: float, rng: np.random.Generator,
            names: tuple[str, ...] | None = None,
            params: SemParams | None = None) -> tuple[TabularDataset, GraphTruth, SemParams]:
    """Linear-SEM sample plus the nonzero mask of its coefficient matrix."""
    if params is None:
        params = sample_sem_params(j, n, p_mask, rng)
    names = names or tuple(f"x{k}" for k in range(1, params.j + 1))
    if len(names) != params.j:
        raise BadDims("names length must equal the node count")

    noise = rng.normal(0.0, 1.0, (params.n, params.j)) * params.noise_sd
    x = np.zeros((params.n, params.j))
    for col in range(params.j):
        x[:, col] = x[:, :col] @ params.b[:col, col] + noise[:, col]

    mask = tuple(tuple(int(v != 0) for v in row) for row in params.b)
    dataset = from_columns([(name, x[:, k]) for k, name in enumerate(names)])
    return dataset, GraphTruth(nodes=names, mask=mask), params


def sem_covariance(params: SemParams) -> np.ndarray:
    """Analytic covariance (I - B)^{-T} D (I - B)^{-1} of the SEM."""
    eye = np.eye(params.j)
    inv = np.linalg.inv(eye - params.b)
    d = np.diag(params.noise_sd ** 2)
    return inv.T @ d @ inv


def _effect_rows(params: EffectParams, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    j = len(params.mu)
    s = rng.normal(0.0, 1.0, (n, j)) * params.sigma + params.mu
    a = rng.integers(0, 2, n)
    noise = rng.normal(params.noise_mean, params.noise_sd, n)
    y = a * params.beta10 + s @ params.beta1 + a * (s @ params.beta2) + noise
    return s, a, y


def gen_effect(j: int, n: int, rng: np.random.Generator,
               params: EffectParams | None = None,
               treatment_name: str = "treatment",
               response_name: str = "response") -> tuple[TabularDataset, EffectParams]:
    """Randomized-treatment outcome data for the ATE/HTE tasks."""
    if n < 2:
        raise BadDims(f"need n >= 2, got {n}")
    if params is None:
        params = sample_effect_params(j, rng)
    s, a, y = _effect_rows(params, n, rng)
    cols: list[tuple[str, np.ndarray]] = [(name, s[:, k]) for k, name in enumerate(params.feature_names)]
    cols.append((treatment_name, a))
    cols.append((response_name, y))
    return from_columns(cols), params


def gen_opo(j: int, n: int, t_stages: int, rng: np.random.Generator,
            params: MdpParams | None = None,
            treatment_name: str = "treatment",
            response_name: str = "response") -> tuple[TabularDataset, MdpParams]:
    """Decision data; flat single-stage schema for T=1, stage-indexed otherwise."""
    if params is None:
        params = sample_mdp_params(j, t_stages, rng)
    if params.t_stages == 1:
        dataset, _ = gen_effect(j, n, rng, params=params.reward,
                                treatment_name=treatment_name, response_name=response_name)
        return dataset, params

    reward = params.reward
    jj = len(reward.mu)
    s = rng.normal(0.0, 1.0, (n, jj)) * reward.sigma + reward.mu
    cols: list[tuple[str, np.ndarray]] = []
    for t in range(1, params.t_stages + 1):
        a = rng.integers(0, 2, n)
        noise = rng.normal(reward.noise_mean, reward.noise_sd, n)
        y = a * reward.beta10 + s @ reward.beta1 + a * (s @ reward.beta2) + noise
        for k in range(jj):
            cols.append((f"s{t}_{k + 1}", s[:, k]))
        cols.append((f"a{t}", a))
        cols.append((f"y{t}", y))
        next_s = np.where(a[:, None] == 1, s @ params.b_s1.T, s @ params.b_s0.T)
        s = next_s
    return from_columns(cols), params


def gen_mediation(n: int, rng: np.random.Generator,
                  params: MediationParams | None = None,
                  treatment_name: str = "treatment",
                  mediator_name: str = "mediator",
                  response_name: str = "response") -> tuple[TabularDataset, MediationParams, MediationTruth]:
    """Mediation chain data plus its exact effect decomposition."""
    if n < 3:
        raise BadDims(f"need n >= 3, got {n}")
    if params is None:
        params = sample_mediation_params(rng)
    a = rng.integers(0, 2, n)
    m = a * params.beta_m + rng.normal(params.noise_m[0], params.noise_m[1], n)
    y = a * params.beta1 + m * params.beta2 + rng.normal(params.noise_y[0], params.noise_y[1], n)
    truth = mediation_truth(params)
    dataset = from_columns([(treatment_name, a), (mediator_name, m), (response_name, y)])
    return dataset, params, truth


def mediation_truth(params: MediationParams) -> MediationTruth:
    direct = params.beta1
    indirect = params.beta_m * params.beta2
    return MediationTruth(direct=direct, indirect=indirect, total=direct + indirect)


# ---------------------------------------------------------------------------
# Analytic effect targets
# ---------------------------------------------------------------------------

def true_ate(params: EffectParams) -> float:
    """E[Y(1) - Y(0)] = b10 + sum_j b2_j * mu_j under the effect model."""
    return float(params.beta10 + params.beta2 @ params.mu)


def true_hte(params: EffectParams, conditions: Mapping[str, float]) -> float:
    """Conditional effect: pinned covariates at their values, rest at means."""
    point = np.array(params.mu, dtype=float)
    index = {name: k for k, name in enumerate(params.feature_names)}
    for name, value in conditions.items():
        if name not in index:
            raise UnknownConditionVariable(name)
        point[index[name]] = float(value)
    return float(params.beta10 + params.beta2 @ point)


def rename_features(params: EffectParams, names: tuple[str, ...]) -> EffectParams:
    if len(names) != len(params.feature_names):
        raise BadDims("renaming must keep the covariate count")
    return replace(params, feature_names=names)


# ---------------------------------------------------------------------------
# Exact dynamic programming on the decision model
# ---------------------------------------------------------------------------

def expected_reward(params: EffectParams, state: np.ndarray, action: int) -> float:
    base = float(state @ params.beta1 + params.noise_mean)
    return base + action * float(params.beta10 + state @ params.beta2)


def optimal_first_action(mdp: MdpParams, state: np.ndarray) -> int:
    """Exact backward induction over the deterministic transition model.

    Ties break toward action 0.
    """
    def value(s: np.ndarray, stage: int) -> float:
        return max(q(s, a, stage) for a in (0, 1))

    def q(s: np.ndarray, a: int, stage: int) -> float:
        immediate = expected_reward(mdp.reward, s, a)
        if stage == mdp.t_stages:
            return immediate
        nxt = (mdp.b_s1 if a == 1 else mdp.b_s0) @ s
        return immediate + value(nxt, stage + 1)

    q0, q1 = q(state, 0, 1), q(state, 1, 1)
    return 1 if q1 > q0 else 0


def optimal_single_stage_action(params: EffectParams, conditions: Mapping[str, float]) -> int:
    """Golden-rule action: 1 iff the conditional effect at the query point is positive."""
    return 1 if true_hte(params, conditions) > 0 else 0


# ---------------------------------------------------------------------------
# Golden-label (de)serialization for dataset sidecar files
# ---------------------------------------------------------------------------

def _effect_params_to_dict(p: EffectParams) -> dict:
    return {
        "beta10": p.beta10,
        "beta1": list(p.beta1),
        "beta2": list(p.beta2),
        "mu": list(p.mu),
        "sigma": list(p.sigma),
        "noise_mean": p.noise_mean,
        "noise_sd": p.noise_sd,
        "feature_names": list(p.feature_names),
    }


def _effect_params_from_dict(d: dict) -> EffectParams:
    return EffectParams(
        beta10=float(d["beta10"]),
        beta1=np.asarray(d["beta1"], dtype=float),
        beta2=np.asarray(d["beta2"], dtype=float),
        mu=np.asarray(d["mu"], dtype=float),
        sigma=np.asarray(d["sigma"], dtype=float),
        noise_mean=float(d["noise_mean"]),
        noise_sd=float(d["noise_sd"]),
        feature_names=tuple(d["feature_names"]),
    )


def _mdp_params_to_dict(p: MdpParams) -> dict:
    return {
        "b_s0": [list(row) for row in p.b_s0],
        "b_s1": [list(row) for row in p.b_s1],
        "t_stages": p.t_stages,
        "reward": _effect_params_to_dict(p.reward),
    }


def _mdp_params_from_dict(d: dict) -> MdpParams:
    return MdpParams(
        b_s0=np.asarray(d["b_s0"], dtype=float),
        b_s1=np.asarray(d["b_s1"], dtype=float),
        t_stages=int(d["t_stages"]),
        reward=_effect_params_from_dict(d["reward"]),
    )


def golden_to_dict(label: GoldenLabel) -> dict:
    if isinstance(label, GraphTruth):
        return {"kind": "graph", "nodes": list(label.nodes), "mask": [list(r) for r in label.mask]}
    if isinstance(label, AteTruth):
        return {"kind": "ate", "value": label.value}
    if isinstance(label, HteTruth):
        return {"kind": "hte", "params": _effect_params_to_dict(label.params)}
    if isinstance(label, MediationTruth):
        return {"kind": "mediation", "direct": label.direct,
                "indirect": label.indirect, "total": label.total}
    if isinstance(label, PolicyTruth):
        return {"kind": "policy", "params": _effect_params_to_dict(label.params),
                "mdp": _mdp_params_to_dict(label.mdp) if label.mdp else None}
    raise TypeError(f"not a golden label: {label!r}")


def golden_from_dict(d: dict) -> GoldenLabel:
    kind = d["kind"]
    if kind == "graph":
        return GraphTruth(nodes=tuple(d["nodes"]), mask=tuple(tuple(int(v) for v in r) for r in d["mask"]))
    if kind == "ate":
        return AteTruth(value=float(d["value"]))
    if kind == "hte":
        return HteTruth(params=_effect_params_from_dict(d["params"]))
    if kind == "mediation":
        return MediationTruth(direct=float(d["direct"]), indirect=float(d["indirect"]),
                              total=float(d["total"]))
    if kind == "policy":
        return PolicyTruth(params=_effect_params_from_dict(d["params"]),
                           mdp=_mdp_params_from_dict(d["mdp"]) if d.get("mdp") else None)
    raise ValueError(f"unknown golden label kind {kind!r}")
