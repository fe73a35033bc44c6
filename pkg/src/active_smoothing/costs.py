"""Entropy-based cost functions on beliefs.

Stage cost: the conditional entropy of the current state given the next state
under the joint predicted belief, whose accumulated expectation (plus the
terminal belief entropy) equals the expected entropy of the full hidden
trajectory given all data. Also provides the analytic stage-cost gradient,
expected costs including the linear c-terms, the entropy/mutual-information
decomposition, the realised (pointwise) trajectory entropy, and the expected
next-step belief entropy used by the belief-sum baseline.

All conventions are term-wise: 0 log 0 = 0 and 0 log(0/0) = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .belief import initial_update, marginalize_next, predict_joint, update
from .model import ControlledHMM, CostModel

BOUNDARY_TOL = 1e-12


class BoundaryBelief(ValueError):
    """Gradient requested at a simplex boundary point; project to the interior first."""


@dataclass(frozen=True)
class EntropyConfig:
    log_base: str = "natural"  # "natural" (nats) or "base-2" (bits)

    def __post_init__(self):
        base = {"e": "natural", "natural": "natural", "2": "base-2", "base-2": "base-2"}.get(
            self.log_base
        )
        if base is None:
            raise ValueError(f"log_base must be one of e/natural/2/base-2, got {self.log_base!r}")
        object.__setattr__(self, "log_base", base)

    @property
    def log_scale(self) -> float:
        """Divisor converting nats to the configured unit."""
        return 1.0 if self.log_base == "natural" else math.log(2.0)


DEFAULT_CONFIG = EntropyConfig()


def _xlogx_sum(p: np.ndarray) -> float:
    """sum p log p in nats with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    pos = p > 0
    return float(np.sum(p[pos] * np.log(p[pos])))


def belief_entropy(belief: np.ndarray, config: EntropyConfig = DEFAULT_CONFIG) -> float:
    return -_xlogx_sum(belief) / config.log_scale


def stage_entropy_cost(model: ControlledHMM, belief: np.ndarray, control: int,
                       config: EntropyConfig = DEFAULT_CONFIG) -> float:
    """Conditional entropy of the current state given the next state.

    Equals -sum_ij J[i,j] log(J[i,j] / rowsum_i J) for the joint predicted
    belief J; terms with J[i,j] = 0 contribute 0.
    """
    joint = predict_joint(model, belief, control)
    predicted = marginalize_next(joint)
    pos = joint > 0
    rows = np.broadcast_to(predicted[:, None], joint.shape)
    val = -np.sum(joint[pos] * np.log(joint[pos] / rows[pos]))
    return float(max(val, 0.0)) / config.log_scale


def stage_entropy_gradient(model: ControlledHMM, belief: np.ndarray, control: int,
                           config: EntropyConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Gradient of stage_entropy_cost in the belief.

    Component m = -sum_i A[i,m] log(A[i,m] pi(m) / sum_l A[i,l] pi(l)), zero
    terms dropped. Defined only on the simplex interior.
    """
    pi = np.asarray(belief, dtype=float)
    if (pi <= BOUNDARY_TOL).any():
        raise BoundaryBelief(
            "stage entropy gradient is undefined at the simplex boundary; "
            "project the belief to the interior first"
        )
    a = model.transition[control]
    joint = a * pi[None, :]
    predicted = joint.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(joint > 0, np.log(joint / predicted[:, None]), 0.0)
    return -(a * logs).sum(axis=0) / config.log_scale


def terminal_entropy_gradient(belief: np.ndarray,
                              config: EntropyConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Gradient of belief_entropy; defined only on the simplex interior."""
    pi = np.asarray(belief, dtype=float)
    if (pi <= BOUNDARY_TOL).any():
        raise BoundaryBelief(
            "entropy gradient is undefined at the simplex boundary; "
            "project the belief to the interior first"
        )
    return -(1.0 + np.log(pi)) / config.log_scale


def expected_stage_cost(model: ControlledHMM, cost_model: CostModel, belief: np.ndarray,
                        control: int, stage: int,
                        config: EntropyConfig = DEFAULT_CONFIG) -> float:
    """g_k: stage entropy cost plus the expected linear stage cost."""
    linear = float(np.asarray(belief) @ cost_model.stage_cost[stage][:, control])
    return stage_entropy_cost(model, belief, control, config) + linear


def expected_terminal_cost(cost_model: CostModel, belief: np.ndarray,
                           config: EntropyConfig = DEFAULT_CONFIG) -> float:
    """g_T: belief entropy plus the expected terminal cost."""
    return belief_entropy(belief, config) + float(np.asarray(belief) @ cost_model.terminal_cost)


def stage_decomposition(model: ControlledHMM, belief: np.ndarray, control: int,
                        config: EntropyConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """(current-state entropy, current/next mutual information) from the joint.

    Their difference equals stage_entropy_cost.
    """
    joint = predict_joint(model, belief, control)
    rows = marginalize_next(joint)
    cols = joint.sum(axis=0)
    outer = np.outer(rows, cols)
    pos = joint > 0
    mi = float(np.sum(joint[pos] * np.log(joint[pos] / outer[pos])))
    return belief_entropy(belief, config), max(mi, 0.0) / config.log_scale


def expected_next_entropy(model: ControlledHMM, belief: np.ndarray, control: int,
                          config: EntropyConfig = DEFAULT_CONFIG) -> float:
    """E over the next observation of the updated belief's entropy."""
    joint = predict_joint(model, belief, control)
    predicted = marginalize_next(joint)
    p_y = predicted @ model.observation[control]
    total = 0.0
    for y in np.flatnonzero(p_y > 0):
        total += p_y[y] * belief_entropy(update(model, joint, control, int(y)), config)
    return float(total)


def pointwise_smoother_entropy(model: ControlledHMM, observations, controls,
                               config: EntropyConfig = DEFAULT_CONFIG) -> float:
    """Entropy of the hidden trajectory given one realised data sequence.

    Runs the filter along (y_0..y_T, u_0..u_{T-1}), extracts the backward
    kernel p(x_k | x_{k+1}, data to k) from each joint predicted belief, and
    accumulates H(final belief) plus the smoothed-marginal-weighted backward
    conditional entropies. Equals the entropy of p(x_0..x_T | all data).
    """
    observations = list(observations)
    controls = list(controls)
    if len(observations) != len(controls) + 1:
        raise ValueError(
            f"need one more observation than controls, got {len(observations)} observations "
            f"and {len(controls)} controls"
        )
    pi = initial_update(model, observations[0])
    backward = []
    for k, u in enumerate(controls):
        joint = predict_joint(model, pi, u)
        rows = marginalize_next(joint)
        with np.errstate(divide="ignore", invalid="ignore"):
            bk = np.where(rows[:, None] > 0, joint / rows[:, None], 0.0)
        backward.append(bk)
        pi = update(model, joint, u, observations[k + 1], stage=k)

    total = belief_entropy(pi, config)
    gamma = pi
    for bk in reversed(backward):
        pos = bk > 0
        row_ent = -np.where(pos, bk * np.where(pos, np.log(np.where(pos, bk, 1.0)), 0.0), 0.0).sum(axis=1)
        total += float(gamma @ row_ent) / config.log_scale
        gamma = gamma @ bk
    return total
