"""Exact Bayesian filtering on the belief simplex.

The filter is expressed through the joint predicted belief J with entry
(i, j) = p(next = i, current = j | data), from which both the one-step
prediction (row sums) and the measurement update follow. Beliefs are
renormalised after every update to absorb floating-point drift.
"""
from __future__ import annotations

import numpy as np

from .model import ControlledHMM


class ImpossibleEvidence(ValueError):
    """Observation with zero probability under the current belief."""

    def __init__(self, observation: int, stage: int | None = None):
        self.observation = observation
        self.stage = stage
        where = "initial stage" if stage is None else f"stage {stage}"
        super().__init__(f"observation {observation} has zero probability at {where}")


def predict_joint(model: ControlledHMM, belief: np.ndarray, control: int) -> np.ndarray:
    """Joint predicted belief J[i, j] = A(u)[i, j] * belief[j]."""
    if not 0 <= control < model.n_controls:
        raise IndexError(f"control {control} out of range [0, {model.n_controls})")
    return model.transition[control] * np.asarray(belief)[None, :]


def marginalize_next(joint: np.ndarray) -> np.ndarray:
    """One-step predicted belief: row sums of the joint."""
    return joint.sum(axis=1)


def update(model: ControlledHMM, joint: np.ndarray, control: int,
           observation: int, stage: int | None = None) -> np.ndarray:
    """Measurement update: belief[i] proportional to B(u)[i, y] * row sum i."""
    unnorm = model.observation[control][:, observation] * marginalize_next(joint)
    norm = unnorm.sum()
    if norm <= 0.0:
        raise ImpossibleEvidence(observation, stage)
    return unnorm / norm


def initial_update(model: ControlledHMM, observation: int) -> np.ndarray:
    """Condition the prior on the pre-control observation y0."""
    unnorm = model.initial_observation[:, observation] * model.prior
    norm = unnorm.sum()
    if norm <= 0.0:
        raise ImpossibleEvidence(observation, None)
    return unnorm / norm


def step(model: ControlledHMM, belief: np.ndarray, control: int,
         observation: int, stage: int | None = None) -> np.ndarray:
    """Composed filter map: predict under the control, then update on the observation."""
    return update(model, predict_joint(model, belief, control), control, observation, stage)


def observation_marginal(model: ControlledHMM, belief: np.ndarray, control: int) -> np.ndarray:
    """Distribution of the next observation: p(y) = sum_i B(u)[i, y] * (A(u) belief)(i)."""
    predicted = model.transition[control] @ np.asarray(belief)
    return predicted @ model.observation[control]
