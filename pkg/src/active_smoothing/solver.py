"""Finite-horizon alpha-vector value iteration over the belief-state MDP.

The value function at each stage is the minimum over a set of linear functions
(alpha vectors). The backup transforms each next-stage vector per observation,
cross-sums one choice per observation, cross-sums the stage-cost tangent
pieces, unions over controls, and prunes. Pruning modes:

  none      keep everything (exponential growth; small problems only);
  pairwise  drop vectors dominated componentwise by a single other vector;
  lp        keep exactly the vectors that attain the minimum somewhere on the
            simplex (witness-point semantics).

The lp mode enumerates the vertices of the lower-envelope polytope once per
kept set and batch-evaluates candidate margins there, which is equivalent to
solving one witness linear program per vector; a direct LP fallback covers
degenerate geometry. Above `exact_prune_cap` vectors, exact pruning switches
to winner selection on a fixed witness-point cloud: every kept vector still
attains the minimum somewhere, so the represented function remains a valid
upper bound, but rarely-winning vectors may be dropped.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import HalfspaceIntersection, QhullError

from .costs import DEFAULT_CONFIG, EntropyConfig, expected_next_entropy
from .model import ControlledHMM, CostModel, fingerprint
from .pwl import (
    BasePointSet,
    fd_gradient,
    stage_tangent_alphas,
    tangent_plane,
    terminal_tangent_alphas,
)

OBJECTIVES = ("smoother", "belief-sum", "costs-only")
PRUNE_MODES = ("none", "pairwise", "lp")
PRUNE_TOL = 1e-9
TIE_TOL = 1e-12
EXACT_PRUNE_CAP = 2000
CROSS_GUARD = 5_000_000
FD_STEP = 1e-6


@dataclass(frozen=True)
class AlphaVector:
    values: np.ndarray
    action: int | None


@dataclass(frozen=True)
class StageSet:
    values: np.ndarray            # (m, N)
    actions: np.ndarray | None    # (m,), None at the terminal stage

    def __len__(self) -> int:
        return len(self.values)

    def alpha_vectors(self) -> list[AlphaVector]:
        return [
            AlphaVector(self.values[i],
                        None if self.actions is None else int(self.actions[i]))
            for i in range(len(self.values))
        ]


@dataclass(frozen=True)
class ValuePolicy:
    stages: tuple[StageSet, ...]   # value sets for stages 0..T
    objective: str
    density: int
    epsilon_interior: float
    log_base: str
    model_fingerprint: str

    @property
    def horizon(self) -> int:
        return len(self.stages) - 1

    def gamma_sizes(self) -> list[int]:
        return [len(s) for s in self.stages]


# ---------------------------------------------------------------- pruning --

def _dedupe_indices(values: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Indices with near-duplicate rows removed, keeping the lowest index."""
    n = len(values)
    if n <= 1:
        return np.arange(n)
    order = np.lexsort((np.arange(n),) + tuple(values.T[::-1]))
    sorted_vals = values[order]
    keep = np.ones(n, dtype=bool)
    keep[1:] = np.abs(np.diff(sorted_vals, axis=0)).max(axis=1) > tol
    return np.sort(order[keep])


def _pairwise_indices(values: np.ndarray) -> np.ndarray:
    """Drop rows dominated componentwise by a single other row (minimisation)."""
    n = len(values)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        vi = values[i]
        others = (values <= vi).all(axis=1)
        others[i] = False
        if not others.any():
            continue
        js = np.flatnonzero(others)
        if (values[js] < vi).any() or js.min() < i:
            keep[i] = False
    return np.flatnonzero(keep)


def _witness_lp(vector: np.ndarray, others: np.ndarray) -> tuple[float, np.ndarray]:
    """max delta s.t. <pi, w - vector> >= delta for all rows w, pi on the simplex."""
    n = len(vector)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    a_ub = np.hstack([vector[None, :] - others, np.ones((len(others), 1))])
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(len(others)),
        A_eq=np.hstack([np.ones((1, n)), [[0.0]]]),
        b_eq=[1.0],
        bounds=[(0, None)] * n + [(None, None)],
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"witness linear program failed: {res.message}")
    return -res.fun, res.x[:n]


def _envelope_vertices(kept: np.ndarray, lower: float) -> np.ndarray:
    """Vertices of {(p, z): p projected simplex, lower <= z <= min over kept rows}.

    Coordinates are (p_1..p_{N-1}, z); p_N = 1 - sum(p). A linear objective over
    this polytope is maximised at one of these vertices, so candidate margins
    against the kept envelope can be evaluated at the vertices alone.
    """
    n_vec, n = kept.shape
    m = n - 1
    halfspaces = []
    for i in range(m):
        row = np.zeros(m + 2)
        row[i] = -1.0
        halfspaces.append(row)                                 # -p_i <= 0
    halfspaces.append(np.concatenate([np.ones(m), [0.0, -1.0]]))   # sum p <= 1
    halfspaces.append(np.concatenate([np.zeros(m), [-1.0, lower]]))  # z >= lower
    reduced = kept[:, :m] - kept[:, m:]
    halfspaces.append(np.hstack([-reduced, np.ones((n_vec, 1)), -kept[:, m:]]))
    stacked = np.vstack([np.vstack(halfspaces[:m + 2]), halfspaces[m + 2]])
    barycentre = np.full(n, 1.0 / n)
    env_at_bary = float(np.min(kept @ barycentre))
    interior = np.concatenate([barycentre[:m], [(env_at_bary + lower) / 2.0]])
    return HalfspaceIntersection(stacked, interior).intersections


def _vertex_margins(vertices: np.ndarray, candidates: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per candidate: max over vertices of (envelope z - candidate value), argmax vertex."""
    m = vertices.shape[1] - 1
    p, z = vertices[:, :m], vertices[:, m]
    values = p @ (candidates[:, :m] - candidates[:, m:]).T + candidates[:, m]
    gaps = z[:, None] - values
    return gaps.max(axis=0), gaps.argmax(axis=0)


_SEED_CLOUDS: dict[int, np.ndarray] = {}


def _seed_cloud(n: int) -> np.ndarray:
    if n not in _SEED_CLOUDS:
        rng = np.random.Generator(np.random.Philox(key=20240601))
        _SEED_CLOUDS[n] = np.vstack([
            np.eye(n),
            np.full((1, n), 1.0 / n),
            rng.dirichlet(np.ones(n), size=4096),
        ])
    return _SEED_CLOUDS[n]


def _lp_indices(values: np.ndarray, tol: float = PRUNE_TOL) -> np.ndarray:
    """Indices of the vectors that attain the min-envelope somewhere on the simplex."""
    idx = _dedupe_indices(values)
    v = values[idx]
    n_vec, n = v.shape
    if n_vec <= 1:
        return idx
    if n == 1:
        return idx[[int(np.argmin(v[:, 0]))]]

    winners = np.unique(np.argmin(v @ _seed_cloud(n).T, axis=0))
    kept = set(int(w) for w in winners)
    candidates = np.array([i for i in range(n_vec) if i not in kept])
    lower = float(v.min()) - 1.0

    while len(candidates):
        kept_rows = v[sorted(kept)]
        try:
            vertices = _envelope_vertices(kept_rows, lower)
        except QhullError:
            while True:
                added = False
                for i in list(candidates):
                    margin, witness = _witness_lp(v[i], v[sorted(kept)])
                    if margin > tol:
                        best = int(np.argmin(v @ witness))
                        if best not in kept:
                            kept.add(best)
                            added = True
                if not added:
                    break
                candidates = np.array([i for i in candidates if i not in kept])
                if not len(candidates):
                    break
            break
        margins, arg_vertex = _vertex_margins(vertices, v[candidates])
        alive = margins > tol
        if not alive.any():
            break
        j = int(np.argmax(margins))
        vertex = vertices[arg_vertex[j]]
        witness = np.concatenate([vertex[:n - 1], [1.0 - vertex[:n - 1].sum()]])
        witness = np.clip(witness, 0.0, None)
        witness /= witness.sum()
        best = int(np.argmin(v @ witness))
        if best in kept:
            best = int(candidates[j])
        kept.add(best)
        candidates = candidates[alive & (candidates != best)]
    return np.sort(idx[np.array(sorted(kept))])


def prune(values: np.ndarray, mode: str = "lp", tol: float = PRUNE_TOL) -> np.ndarray:
    """Indices kept under the given mode; the min-envelope is unchanged within tol."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise ValueError("prune requires a non-empty vector set")
    if mode == "none":
        return np.arange(len(values))
    if mode == "pairwise":
        return _pairwise_indices(values)
    if mode == "lp":
        return _lp_indices(values, tol)
    raise ValueError(f"prune mode must be one of {PRUNE_MODES}, got {mode!r}")


# ------------------------------------------------------- witness clouds --

_WITNESS_CLOUDS: dict[int, np.ndarray] = {}


def _witness_cloud(n: int) -> np.ndarray:
    """Fixed belief cloud used to pick winning vectors when sets exceed the cap."""
    if n not in _WITNESS_CLOUDS:
        rng = np.random.Generator(np.random.Philox(key=714203))
        parts = [
            np.eye(n),
            np.full((1, n), 1.0 / n),
            rng.dirichlet(np.ones(n), size=8192),
            rng.dirichlet(np.full(n, 0.3), size=4096),
        ]
        if 9 ** n <= 100_000:
            coords = np.linspace(0.0, 1.0, 9)
            lattice = [
                coords[list(combo)]
                for combo in itertools.product(range(9), repeat=n)
                if sum(combo) == 8
            ]
            parts.append(np.array(lattice))
        _WITNESS_CLOUDS[n] = np.vstack(parts)
    return _WITNESS_CLOUDS[n]


# ----------------------------------------------------------------- solve --

def _reduce(values: np.ndarray, mode: str, tol: float, cap: int) -> np.ndarray:
    if mode != "lp" or len(values) <= cap:
        return values[prune(values, mode, tol)]
    cloud = _witness_cloud(values.shape[1])
    winners = np.unique(np.argmin(values @ cloud.T, axis=0))
    return values[winners]


def _cross(first: np.ndarray, second: np.ndarray, mode: str, tol: float, cap: int) -> np.ndarray:
    """Pruned cross-sum {a + b}; factorised winner selection above the cap."""
    n = first.shape[1]
    size = len(first) * len(second)
    if mode == "lp" and size > cap:
        cloud = _witness_cloud(n)
        arg_first = np.argmin(first @ cloud.T, axis=0)
        arg_second = np.argmin(second @ cloud.T, axis=0)
        pairs = np.unique(np.stack([arg_first, arg_second], axis=1), axis=0)
        return first[pairs[:, 0]] + second[pairs[:, 1]]
    if size > CROSS_GUARD:
        raise ValueError(
            f"cross-sum of {len(first)} x {len(second)} vectors exceeds the safety "
            f"guard under prune mode {mode!r}; use lp pruning"
        )
    crossed = (first[:, None, :] + second[None, :, :]).reshape(size, n)
    return _reduce(crossed, mode, tol, cap)


def backup(model: ControlledHMM, next_values: np.ndarray, stage_pieces: list[np.ndarray],
           mode: str = "lp", tol: float = PRUNE_TOL,
           cap: int = EXACT_PRUNE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """One DP stage: per control, observation cross-sums then stage-cost pieces.

    next_values: (m, N) alpha vectors of the following stage. stage_pieces[u]:
    tangent pieces of the stage cost under control u. Returns (values, actions).
    """
    out_values, out_actions = [], []
    for u in range(model.n_controls):
        # weight[y, i, j] = B(u)[i, y] A(u)[i, j]; alpha' -> alpha' @ weight[y]
        weight = model.observation[u].T[:, :, None] * model.transition[u][None, :, :]
        acc = _reduce(next_values @ weight[0], mode, tol, cap)
        for y in range(1, model.n_observations):
            acc = _cross(acc, _reduce(next_values @ weight[y], mode, tol, cap), mode, tol, cap)
        acc = _cross(acc, np.asarray(stage_pieces[u], dtype=float), mode, tol, cap)
        out_values.append(acc)
        out_actions.append(np.full(len(acc), u, dtype=int))
    values = np.vstack(out_values)
    actions = np.concatenate(out_actions)
    if mode == "lp" and len(values) > cap:
        cloud = _witness_cloud(values.shape[1])
        kept = np.unique(np.argmin(values @ cloud.T, axis=0))
    else:
        kept = prune(values, mode, tol)
    return values[kept], actions[kept]


def _belief_sum_stage_alphas(model: ControlledHMM, cost_model: CostModel,
                             base_points: BasePointSet, stage: int, control: int,
                             config: EntropyConfig) -> np.ndarray:
    """Tangents of the expected next-step belief entropy plus the linear c_k part."""

    def f(belief: np.ndarray) -> float:
        return expected_next_entropy(model, belief, control, config)

    linear = cost_model.stage_cost[stage][:, control]
    out = np.empty((len(base_points), model.n_states))
    for p, xi in enumerate(base_points.points):
        grad = fd_gradient(f, xi, FD_STEP)
        out[p] = tangent_plane(f(xi), grad, xi) + linear
    return out


def solve(model: ControlledHMM, cost_model: CostModel, objective: str,
          base_points: BasePointSet, prune_mode: str = "lp",
          config: EntropyConfig = DEFAULT_CONFIG,
          tol: float = PRUNE_TOL, exact_prune_cap: int = EXACT_PRUNE_CAP) -> ValuePolicy:
    """Backward induction producing alpha-vector sets for stages 0..T.

    Objectives: `smoother` uses tangent pieces of the pairwise conditional
    entropy stage cost and an entropy-plus-c_T terminal set; `belief-sum`
    replaces the stage pieces with tangents of the expected next-step belief
    entropy (its reported objective additionally carries the constant initial
    belief entropy, added at reporting time); `costs-only` keeps the exact
    linear c pieces alone.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if prune_mode not in PRUNE_MODES:
        raise ValueError(f"prune mode must be one of {PRUNE_MODES}, got {prune_mode!r}")
    horizon = cost_model.horizon

    if objective == "costs-only":
        terminal = cost_model.terminal_cost[None, :].copy()
        stage_pieces = [
            [cost_model.stage_cost[k][:, u][None, :] for u in range(model.n_controls)]
            for k in range(horizon)
        ]
    else:
        terminal = terminal_tangent_alphas(cost_model, base_points, config)
        terminal = _reduce(terminal, prune_mode, tol, exact_prune_cap)
        if objective == "smoother":
            stage_pieces = [
                [stage_tangent_alphas(model, cost_model, base_points, k, u, config)
                 for u in range(model.n_controls)]
                for k in range(horizon)
            ]
        else:
            stage_pieces = [
                [_belief_sum_stage_alphas(model, cost_model, base_points, k, u, config)
                 for u in range(model.n_controls)]
                for k in range(horizon)
            ]

    stages: list[StageSet] = [StageSet(values=np.asarray(terminal, dtype=float), actions=None)]
    current = stages[0].values
    for k in reversed(range(horizon)):
        values, actions = backup(model, current, stage_pieces[k], prune_mode, tol, exact_prune_cap)
        stages.insert(0, StageSet(values=values, actions=actions))
        current = values
    return ValuePolicy(
        stages=tuple(stages),
        objective=objective,
        density=base_points.density,
        epsilon_interior=base_points.epsilon_interior,
        log_base=config.log_base,
        model_fingerprint=fingerprint(model, cost_model),
    )


def value(policy: ValuePolicy, belief: np.ndarray, stage: int) -> float:
    """min over the stage set of <belief, alpha>."""
    return float(np.min(policy.stages[stage].values @ np.asarray(belief)))


def best_action(policy: ValuePolicy, belief: np.ndarray, stage: int) -> int:
    """Action of the minimising alpha vector; ties go to the lowest control index."""
    if not 0 <= stage < policy.horizon:
        raise IndexError(f"stage {stage} out of range [0, {policy.horizon})")
    stage_set = policy.stages[stage]
    vals = stage_set.values @ np.asarray(belief)
    best = vals.min()
    return int(stage_set.actions[vals <= best + TIE_TOL].min())


# ------------------------------------------------------------- policy IO --

def policy_to_dict(policy: ValuePolicy) -> dict:
    return {
        "objective": policy.objective,
        "log_base": policy.log_base,
        "base_point_density": policy.density,
        "epsilon_interior": policy.epsilon_interior,
        "model_fingerprint": policy.model_fingerprint,
        "stages": [
            [
                {
                    "values": [float(x) for x in stage_set.values[i]],
                    "action": None if stage_set.actions is None else int(stage_set.actions[i]),
                }
                for i in range(len(stage_set))
            ]
            for stage_set in policy.stages
        ],
    }


def policy_from_dict(d: dict) -> ValuePolicy:
    stages = []
    for entries in d["stages"]:
        values = np.array([e["values"] for e in entries], dtype=float)
        acts = [e["action"] for e in entries]
        actions = None if all(a is None for a in acts) else np.array(acts, dtype=int)
        stages.append(StageSet(values=values, actions=actions))
    return ValuePolicy(
        stages=tuple(stages),
        objective=d["objective"],
        density=int(d["base_point_density"]),
        epsilon_interior=float(d["epsilon_interior"]),
        log_base=d["log_base"],
        model_fingerprint=d["model_fingerprint"],
    )


def save_policy(path, policy: ValuePolicy, extra_metadata: dict | None = None) -> None:
    payload = policy_to_dict(policy)
    if extra_metadata:
        payload["run_config"] = extra_metadata
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_policy(path) -> ValuePolicy:
    with open(path) as fh:
        return policy_from_dict(json.load(fh))
