"""Controlled hidden Markov models and cost tables.

A model is the tuple (prior, A, B, B0): a prior belief over N hidden states,
per-control column-stochastic transition matrices A(u) with entry (i, j) =
p(next = i | current = j, control = u), per-control row-stochastic observation
kernels B(u) with entry (i, y) = p(y | state = i, previous control = u), and a
separate kernel B0 for the observation received before any control is applied.
Costs live in a CostModel: a horizon T, per-stage state/control costs c_k(i, u),
and a terminal state cost c_T(i).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

COLUMN_TOL = 1e-12
BELIEF_TOL = 1e-10


@dataclass(frozen=True)
class ControlledHMM:
    n_states: int
    n_controls: int
    n_observations: int
    prior: np.ndarray          # (N,)
    transition: np.ndarray     # (U, N, N), column-stochastic per control
    observation: np.ndarray    # (U, N, Y), row-stochastic per control
    initial_observation: np.ndarray  # (N, Y), row-stochastic

    def A(self, u: int) -> np.ndarray:
        return self.transition[u]

    def B(self, u: int) -> np.ndarray:
        return self.observation[u]


@dataclass(frozen=True)
class CostModel:
    horizon: int
    stage_cost: np.ndarray     # (T, N, U), c_k(i, u) >= 0
    terminal_cost: np.ndarray  # (N,), c_T(i) >= 0

    def c(self, k: int) -> np.ndarray:
        return self.stage_cost[k]


def make_model(prior, transition, observation, initial_observation=None) -> ControlledHMM:
    """Assemble a ControlledHMM from array-likes, defaulting B0 to B(u=0)."""
    transition = np.asarray(transition, dtype=float)
    observation = np.asarray(observation, dtype=float)
    prior = np.asarray(prior, dtype=float)
    if observation.ndim == 2:
        observation = np.broadcast_to(
            observation, (transition.shape[0],) + observation.shape
        ).copy()
    if initial_observation is None:
        initial_observation = observation[0]
    initial_observation = np.asarray(initial_observation, dtype=float)
    u, n, _ = transition.shape
    y = observation.shape[2]
    model = ControlledHMM(
        n_states=n,
        n_controls=u,
        n_observations=y,
        prior=prior,
        transition=transition,
        observation=observation,
        initial_observation=initial_observation,
    )
    for a in (model.prior, model.transition, model.observation, model.initial_observation):
        a.setflags(write=False)
    return model


def make_cost_model(horizon, stage_cost, terminal_cost, n_states=None, n_controls=None) -> CostModel:
    """Assemble a CostModel; stage_cost may be (N, U) (stage-independent) or (T, N, U)."""
    terminal_cost = np.asarray(terminal_cost, dtype=float)
    stage_cost = np.asarray(stage_cost, dtype=float)
    if stage_cost.ndim == 2:
        stage_cost = np.broadcast_to(stage_cost, (horizon,) + stage_cost.shape).copy()
    cm = CostModel(horizon=horizon, stage_cost=stage_cost, terminal_cost=terminal_cost)
    cm.stage_cost.setflags(write=False)
    cm.terminal_cost.setflags(write=False)
    return cm


def validate_model(model: ControlledHMM) -> list[str]:
    """Check every type invariant; returns one message per violation (empty if valid)."""
    out = []
    n, u, y = model.n_states, model.n_controls, model.n_observations
    if model.prior.shape != (n,):
        out.append(f"prior has shape {model.prior.shape}, expected ({n},)")
        return out
    if model.transition.shape != (u, n, n):
        out.append(f"transition has shape {model.transition.shape}, expected {(u, n, n)}")
        return out
    if model.observation.shape != (u, n, y):
        out.append(f"observation has shape {model.observation.shape}, expected {(u, n, y)}")
        return out
    if model.initial_observation.shape != (n, y):
        out.append(
            f"initial_observation has shape {model.initial_observation.shape}, expected {(n, y)}"
        )
        return out

    for idx in np.flatnonzero(model.prior < 0):
        out.append(f"prior[{idx}] = {float(model.prior[idx])!r} is negative")
    s = model.prior.sum()
    if abs(s - 1.0) > COLUMN_TOL:
        out.append(f"prior sums to {float(s)!r}, residual {float(s - 1.0)!r}")

    for uu in range(u):
        a = model.transition[uu]
        if ((a < 0) | (a > 1)).any():
            i, j = np.argwhere((a < 0) | (a > 1))[0]
            out.append(f"transition[{uu}][{i}][{j}] = {float(a[i, j])!r} outside [0, 1]")
        cols = a.sum(axis=0)
        for j in np.flatnonzero(np.abs(cols - 1.0) > COLUMN_TOL):
            out.append(
                f"transition[{uu}] column {j} sums to {float(cols[j])!r}, residual {float(cols[j] - 1.0)!r}"
            )

    kernels = [(f"observation[{uu}]", model.observation[uu]) for uu in range(u)]
    kernels.append(("initial_observation", model.initial_observation))
    for name, b in kernels:
        if ((b < 0) | (b > 1)).any():
            i, j = np.argwhere((b < 0) | (b > 1))[0]
            out.append(f"{name}[{i}][{j}] = {float(b[i, j])!r} outside [0, 1]")
        rows = b.sum(axis=1)
        for i in np.flatnonzero(np.abs(rows - 1.0) > COLUMN_TOL):
            out.append(f"{name} row {i} sums to {float(rows[i])!r}, residual {float(rows[i] - 1.0)!r}")
    return out


def validate_costs(costs: CostModel, model: ControlledHMM) -> list[str]:
    out = []
    t, n, u = costs.horizon, model.n_states, model.n_controls
    if costs.horizon < 0:
        out.append(f"horizon {costs.horizon} must be nonnegative")
    if costs.stage_cost.shape != (t, n, u):
        out.append(f"stage_cost has shape {costs.stage_cost.shape}, expected {(t, n, u)}")
    if costs.terminal_cost.shape != (n,):
        out.append(f"terminal_cost has shape {costs.terminal_cost.shape}, expected ({n},)")
    if out:
        return out
    if not np.isfinite(costs.stage_cost).all() or (costs.stage_cost < 0).any():
        out.append("stage_cost entries must be finite and nonnegative")
    if not np.isfinite(costs.terminal_cost).all() or (costs.terminal_cost < 0).any():
        out.append("terminal_cost entries must be finite and nonnegative")
    return out


def build_grid_agent() -> tuple[ControlledHMM, CostModel]:
    """The bundled 4-cell corridor agent.

    Controls: 0 = west, 1 = stay, 2 = east. A move succeeds with probability 0.8
    and leaves the agent in place with probability 0.2; moves off the grid leave
    it in place with probability 1. Observations: y = 0 has probability 0.8 in
    the two west cells and 0.2 in the two east cells. The prior is uniform,
    stage costs are zero, and the terminal cost charges 1 in every cell except
    the east-most goal cell. Horizon T = 3.
    """
    n = 4
    west = np.zeros((n, n))
    east = np.zeros((n, n))
    for j in range(n):
        if j == 0:
            west[0, 0] = 1.0
        else:
            west[j - 1, j] = 0.8
            west[j, j] = 0.2
        if j == n - 1:
            east[n - 1, n - 1] = 1.0
        else:
            east[j + 1, j] = 0.8
            east[j, j] = 0.2
    stay = np.eye(n)
    b = np.array([[0.8, 0.2], [0.8, 0.2], [0.2, 0.8], [0.2, 0.8]])
    model = make_model(
        prior=np.full(n, 0.25),
        transition=np.stack([west, stay, east]),
        observation=b,
    )
    costs = make_cost_model(
        horizon=3,
        stage_cost=np.zeros((n, 3)),
        terminal_cost=np.array([1.0, 1.0, 1.0, 0.0]),
    )
    return model, costs


def _floats(a: np.ndarray):
    return [repr(float(x)) for x in np.asarray(a).ravel()]


def _canonical_dict(model: ControlledHMM, costs: CostModel | None) -> dict:
    d = {
        "n_states": model.n_states,
        "n_controls": model.n_controls,
        "n_observations": model.n_observations,
        "prior": _floats(model.prior),
        "transition": _floats(model.transition),
        "observation": _floats(model.observation),
        "initial_observation": _floats(model.initial_observation),
    }
    if costs is not None:
        d["horizon"] = costs.horizon
        d["stage_cost"] = _floats(costs.stage_cost)
        d["terminal_cost"] = _floats(costs.terminal_cost)
    return d


def fingerprint(model: ControlledHMM, costs: CostModel | None = None) -> str:
    """sha256 of the canonicalised model (and cost) arrays; stable across runs."""
    payload = json.dumps(_canonical_dict(model, costs), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def _nested(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model: ControlledHMM, costs: CostModel) -> dict:
    return {
        "n_states": model.n_states,
        "n_controls": model.n_controls,
        "n_observations": model.n_observations,
        "prior": _nested(model.prior),
        "transition": [_nested(model.transition[u]) for u in range(model.n_controls)],
        "observation": [_nested(model.observation[u]) for u in range(model.n_controls)],
        "initial_observation": _nested(model.initial_observation),
        "horizon": costs.horizon,
        "stage_cost": [_nested(costs.stage_cost[k]) for k in range(costs.horizon)],
        "terminal_cost": _nested(costs.terminal_cost),
    }


def model_from_dict(d: dict) -> tuple[ControlledHMM, CostModel]:
    model = make_model(
        prior=d["prior"],
        transition=d["transition"],
        observation=d["observation"],
        initial_observation=d.get("initial_observation"),
    )
    horizon = int(d["horizon"])
    stage = np.asarray(d.get("stage_cost", np.zeros((model.n_states, model.n_controls))), dtype=float)
    costs = make_cost_model(
        horizon=horizon,
        stage_cost=stage,
        terminal_cost=d["terminal_cost"],
    )
    return model, costs


def save_model(path, model: ControlledHMM, costs: CostModel) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, costs), fh, indent=2)
        fh.write("\n")


def load_model(path) -> tuple[ControlledHMM, CostModel]:
    with open(path) as fh:
        return model_from_dict(json.load(fh))
