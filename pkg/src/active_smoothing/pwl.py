"""Piecewise-linear upper bounds of concave belief costs.

A concave cost g on the simplex is bounded above by the minimum of its tangent
hyperplanes at a finite set of base points; each tangent is stored as a length-N
alpha vector whose inner product with a belief evaluates the plane. Linear cost
terms enter the alpha vectors exactly, so only the entropy part carries
approximation error.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .costs import (
    DEFAULT_CONFIG,
    EntropyConfig,
    stage_entropy_cost,
    stage_entropy_gradient,
)
from .model import ControlledHMM, CostModel

MAX_LATTICE = 2_000_000


@dataclass(frozen=True)
class BasePointSet:
    points: np.ndarray        # (P, N), strictly interior beliefs
    density: int              # lattice points per coordinate used to generate them
    epsilon_interior: float

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class CostAlphaSet:
    stage: np.ndarray      # (T, U, P, N): tangents of g_k(., u)
    terminal: np.ndarray   # (P, N): tangents of g_T


def generate_base_points(n_states: int, density: int,
                         epsilon_interior: float = 1e-4) -> BasePointSet:
    """Simplex lattice with `density` coordinate levels, projected to the interior.

    Coordinates take values {0, 1/(density-1), ..., 1}; points not summing to 1
    are discarded. density=1 yields the single barycentre. Each point is then
    mixed with the uniform belief: point <- (1 - N eps) point + eps.
    """
    if density < 1:
        raise ValueError(f"density must be >= 1, got {density}")
    if not 0.0 < epsilon_interior < 1.0 / (2 * n_states):
        raise ValueError(
            f"epsilon_interior must lie in (0, 1/(2N)) = (0, {1.0 / (2 * n_states)}), "
            f"got {epsilon_interior}"
        )
    if density == 1:
        points = np.full((1, n_states), 1.0 / n_states)
    else:
        if density ** n_states > MAX_LATTICE:
            raise ValueError(
                f"lattice of {density}^{n_states} candidate points is too large"
            )
        rows = [
            np.array(combo, dtype=float) / (density - 1)
            for combo in itertools.product(range(density), repeat=n_states)
            if sum(combo) == density - 1
        ]
        points = np.array(rows)
    points = (1.0 - n_states * epsilon_interior) * points + epsilon_interior

    order = np.lexsort(points.T[::-1])
    sorted_pts = points[order]
    keep = np.ones(len(points), dtype=bool)
    if len(points) > 1:
        keep[1:] = np.abs(np.diff(sorted_pts, axis=0)).max(axis=1) > 1e-12
    points = points[np.sort(order[keep])]
    points.setflags(write=False)
    return BasePointSet(points=points, density=density, epsilon_interior=epsilon_interior)


def tangent_plane(value: float, gradient: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Alpha vector of the tangent at `point`: value + gradient - <point, gradient>."""
    return value + gradient - float(np.asarray(point) @ np.asarray(gradient))


def entropy_tangent_alphas(base_points: BasePointSet,
                           config: EntropyConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Tangents of the belief entropy; the plane at xi reduces to -log xi."""
    return -np.log(base_points.points) / config.log_scale


def terminal_tangent_alphas(cost_model: CostModel, base_points: BasePointSet,
                            config: EntropyConfig = DEFAULT_CONFIG) -> np.ndarray:
    return entropy_tangent_alphas(base_points, config) + cost_model.terminal_cost[None, :]


def stage_tangent_alphas(model: ControlledHMM, cost_model: CostModel,
                         base_points: BasePointSet, stage: int, control: int,
                         config: EntropyConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Tangents of g_k(., u): entropy tangents plus the exact linear c_k part."""
    linear = cost_model.stage_cost[stage][:, control]
    out = np.empty((len(base_points), model.n_states))
    for p, xi in enumerate(base_points.points):
        val = stage_entropy_cost(model, xi, control, config)
        grad = stage_entropy_gradient(model, xi, control, config)
        out[p] = tangent_plane(val, grad, xi) + linear
    return out


def tangent_cost_set(model: ControlledHMM, cost_model: CostModel,
                     base_points: BasePointSet,
                     config: EntropyConfig = DEFAULT_CONFIG) -> CostAlphaSet:
    t, u, p, n = cost_model.horizon, model.n_controls, len(base_points), model.n_states
    stage = np.empty((t, u, p, n))
    for k in range(t):
        for uu in range(u):
            stage[k, uu] = stage_tangent_alphas(model, cost_model, base_points, k, uu, config)
    return CostAlphaSet(stage=stage, terminal=terminal_tangent_alphas(cost_model, base_points, config))


def evaluate_pwl(alphas: np.ndarray, belief: np.ndarray) -> float:
    """Minimum inner product over the alpha set: the PWL upper bound at `belief`."""
    return float(np.min(np.asarray(alphas) @ np.asarray(belief)))


def fd_gradient(f, belief: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences along the simplex tangent directions e_m - 1/N.

    Matches an analytic gradient only up to an additive multiple of the all-ones
    vector, which tangent planes on the simplex are insensitive to.
    """
    belief = np.asarray(belief, dtype=float)
    n = len(belief)
    grad = np.zeros(n)
    for m in range(n):
        direction = np.full(n, -1.0 / n)
        direction[m] += 1.0
        grad[m] = (f(belief + step * direction) - f(belief - step * direction)) / (2.0 * step)
    return grad
