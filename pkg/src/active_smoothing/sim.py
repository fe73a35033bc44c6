"""Monte Carlo rollout harness and exact policy evaluation by enumeration.

Rollouts draw their randomness from a counter-based generator keyed by
(seed, run index), so run i sees the same uniform stream regardless of the
policy under test: comparisons across policies use common random numbers.
Exact evaluation enumerates all observation sequences with their probabilities
under a deterministic policy and, per sequence, the full joint distribution of
the hidden trajectory; it refuses above a term-count guard.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import initial_update, observation_marginal, step
from .costs import (
    DEFAULT_CONFIG,
    EntropyConfig,
    belief_entropy,
    pointwise_smoother_entropy,
)
from .model import ControlledHMM, CostModel, fingerprint
from .solver import ValuePolicy, best_action

SIZE_GUARD = 10_000_000
_MASK64 = (1 << 64) - 1


class PolicyModelMismatch(ValueError):
    """Policy was solved for a different model/cost file than the one supplied."""


@dataclass(frozen=True)
class RolloutRecord:
    seed: int
    run_index: int
    states: np.ndarray           # (T+1,) sampled hidden states
    observations: np.ndarray     # (T+1,) y_0..y_T
    controls: np.ndarray         # (T,)
    beliefs: np.ndarray          # (T+1, N) filtered beliefs after each update
    stage_costs: np.ndarray      # (T,) realised c_k(x_k, u_k)
    terminal_cost: float         # c_T(x_T)
    smoother_entropy: float      # entropy of the trajectory given this data
    belief_entropies: np.ndarray  # (T+1,)

    @property
    def total_cost(self) -> float:
        return self.smoother_entropy + float(self.stage_costs.sum()) + self.terminal_cost


@dataclass(frozen=True)
class MetricsSummary:
    runs: int                    # 0 marks exact evaluation
    terminal_cost: float
    terminal_cost_se: float
    total_belief_entropy: float  # sum over stages 0..T of filtered-belief entropies
    tbe_se: float
    smoother_entropy: float
    se_se: float
    total_cost: float
    tc_se: float
    log_base: str
    seed: int


def as_decision_rule(policy_like, n_controls: int):
    """Normalise a policy-like input to a callable (belief, stage) -> control."""
    if isinstance(policy_like, ValuePolicy):
        return lambda belief, stage: best_action(policy_like, belief, stage)
    if isinstance(policy_like, (int, np.integer)):
        u = int(policy_like)
        if not 0 <= u < n_controls:
            raise ValueError(f"fixed control {u} out of range [0, {n_controls})")
        return lambda belief, stage: u
    if isinstance(policy_like, str):
        if policy_like == "always-east":
            return as_decision_rule(2, n_controls)
        if policy_like.startswith("fixed:"):
            return as_decision_rule(int(policy_like.split(":", 1)[1]), n_controls)
        raise ValueError(f"unknown builtin policy {policy_like!r}")
    if callable(policy_like):
        return policy_like
    raise TypeError(f"cannot interpret {type(policy_like).__name__} as a policy")


def check_policy(model: ControlledHMM, cost_model: CostModel, policy_like) -> None:
    if isinstance(policy_like, ValuePolicy):
        expected = fingerprint(model, cost_model)
        if policy_like.model_fingerprint != expected:
            raise PolicyModelMismatch(
                f"policy fingerprint {policy_like.model_fingerprint[:12]}... does not match "
                f"the supplied model/costs ({expected[:12]}...)"
            )
        if policy_like.horizon != cost_model.horizon:
            raise PolicyModelMismatch(
                f"policy has horizon {policy_like.horizon}, costs have {cost_model.horizon}"
            )


def _sample(pmf: np.ndarray, uniform: float) -> int:
    idx = int(np.searchsorted(np.cumsum(pmf), uniform, side="right"))
    return min(idx, len(pmf) - 1)


def rollout(model: ControlledHMM, cost_model: CostModel, policy_like, seed: int,
            config: EntropyConfig = DEFAULT_CONFIG, run_index: int = 0) -> RolloutRecord:
    """Simulate one trajectory; identical (seed, run_index) yields identical records.

    The uniform stream is drawn up front with a fixed layout (two draws for the
    initial state/observation, two per stage), so trajectories are comparable
    across policies under common random numbers.
    """
    check_policy(model, cost_model, policy_like)
    rule = as_decision_rule(policy_like, model.n_controls)
    t = cost_model.horizon
    key = np.array([seed & _MASK64, run_index & _MASK64], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    uniforms = rng.random(2 + 2 * t)

    states = np.empty(t + 1, dtype=int)
    observations = np.empty(t + 1, dtype=int)
    controls = np.empty(t, dtype=int)
    beliefs = np.empty((t + 1, model.n_states))
    stage_costs = np.empty(t)

    states[0] = _sample(model.prior, uniforms[0])
    observations[0] = _sample(model.initial_observation[states[0]], uniforms[1])
    beliefs[0] = initial_update(model, int(observations[0]))
    for k in range(t):
        u = int(rule(beliefs[k], k))
        controls[k] = u
        stage_costs[k] = cost_model.stage_cost[k][states[k], u]
        states[k + 1] = _sample(model.transition[u][:, states[k]], uniforms[2 + 2 * k])
        observations[k + 1] = _sample(model.observation[u][states[k + 1]], uniforms[3 + 2 * k])
        beliefs[k + 1] = step(model, beliefs[k], u, int(observations[k + 1]), stage=k)

    return RolloutRecord(
        seed=seed,
        run_index=run_index,
        states=states,
        observations=observations,
        controls=controls,
        beliefs=beliefs,
        stage_costs=stage_costs,
        terminal_cost=float(cost_model.terminal_cost[states[t]]),
        smoother_entropy=pointwise_smoother_entropy(model, observations, controls, config),
        belief_entropies=np.array([belief_entropy(b, config) for b in beliefs]),
    )


def _summarise(per_run: dict[str, np.ndarray], runs: int, config: EntropyConfig,
               seed: int) -> MetricsSummary:
    def mean_se(x: np.ndarray) -> tuple[float, float]:
        if runs <= 1:
            return float(x.mean()), 0.0
        return float(x.mean()), float(x.std(ddof=1) / np.sqrt(runs))

    terminal, terminal_se = mean_se(per_run["terminal"])
    tbe, tbe_se = mean_se(per_run["tbe"])
    smoother, smoother_se = mean_se(per_run["smoother"])
    total, total_se = mean_se(per_run["total"])
    return MetricsSummary(
        runs=runs,
        terminal_cost=terminal,
        terminal_cost_se=terminal_se,
        total_belief_entropy=tbe,
        tbe_se=tbe_se,
        smoother_entropy=smoother,
        se_se=smoother_se,
        total_cost=total,
        tc_se=total_se,
        log_base=config.log_base,
        seed=seed,
    )


def monte_carlo(model: ControlledHMM, cost_model: CostModel, policy_like, runs: int,
                seed: int, config: EntropyConfig = DEFAULT_CONFIG) -> MetricsSummary:
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")
    per_run = {key: np.empty(runs) for key in ("terminal", "tbe", "smoother", "total")}
    for i in range(runs):
        rec = rollout(model, cost_model, policy_like, seed, config, run_index=i)
        per_run["terminal"][i] = rec.terminal_cost
        per_run["tbe"][i] = rec.belief_entropies.sum()
        per_run["smoother"][i] = rec.smoother_entropy
        per_run["total"][i] = rec.total_cost
    return _summarise(per_run, runs, config, seed)


def _joint_trajectory_entropy(model: ControlledHMM, observations, controls,
                              config: EntropyConfig) -> float:
    """Entropy of p(x_0..x_T | y_0..y_T, u_0..u_{T-1}) by full enumeration."""
    joint = model.prior * model.initial_observation[:, observations[0]]
    for k, u in enumerate(controls):
        w = model.transition[u].T * model.observation[u][:, observations[k + 1]][None, :]
        joint = joint[..., None] * w
    flat = joint.ravel()
    norm = flat.sum()
    q = flat[flat > 0] / norm
    return float(-(q @ np.log(q))) / config.log_scale


def exact_policy_metrics(model: ControlledHMM, cost_model: CostModel, policy_like,
                         config: EntropyConfig = DEFAULT_CONFIG,
                         seed: int = 0) -> MetricsSummary:
    """Exact expectations by enumerating all observation sequences.

    Refuses when |Y|^(T+1) * |X|^(T+1) exceeds the term guard.
    """
    check_policy(model, cost_model, policy_like)
    t, ny, n = cost_model.horizon, model.n_observations, model.n_states
    terms = (ny ** (t + 1)) * (n ** (t + 1))
    if terms > SIZE_GUARD:
        raise ValueError(
            f"exact evaluation needs {terms} joint terms, over the {SIZE_GUARD} guard"
        )
    rule = as_decision_rule(policy_like, model.n_controls)
    totals = {"terminal": 0.0, "tbe": 0.0, "smoother": 0.0, "stage_c": 0.0}

    def walk(belief: np.ndarray, k: int, prob: float, ys: list[int], us: list[int]) -> None:
        totals["tbe"] += prob * belief_entropy(belief, config)
        if k == t:
            totals["terminal"] += prob * float(belief @ cost_model.terminal_cost)
            totals["smoother"] += prob * _joint_trajectory_entropy(model, ys, us, config)
            return
        u = int(rule(belief, k))
        totals["stage_c"] += prob * float(belief @ cost_model.stage_cost[k][:, u])
        p_next = observation_marginal(model, belief, u)
        for y in range(ny):
            if p_next[y] <= 0.0:
                continue
            walk(step(model, belief, u, y, stage=k), k + 1, prob * float(p_next[y]),
                 ys + [y], us + [u])

    p0 = model.prior @ model.initial_observation
    for y0 in range(ny):
        if p0[y0] <= 0.0:
            continue
        walk(initial_update(model, y0), 0, float(p0[y0]), [y0], [])

    total = totals["smoother"] + totals["stage_c"] + totals["terminal"]
    return MetricsSummary(
        runs=0,
        terminal_cost=totals["terminal"],
        terminal_cost_se=0.0,
        total_belief_entropy=totals["tbe"],
        tbe_se=0.0,
        smoother_entropy=totals["smoother"],
        se_se=0.0,
        total_cost=total,
        tc_se=0.0,
        log_base=config.log_base,
        seed=seed,
    )


def compare_policies(model: ControlledHMM, cost_model: CostModel,
                     policies: list[tuple[str, object]], runs: int, seed: int,
                     config: EntropyConfig = DEFAULT_CONFIG) -> list[tuple[str, MetricsSummary]]:
    """One summary per named policy, on common random numbers across policies."""
    return [
        (name, monte_carlo(model, cost_model, policy_like, runs, seed, config))
        for name, policy_like in policies
    ]
