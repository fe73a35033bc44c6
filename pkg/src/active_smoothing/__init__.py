"""Planning for controlled hidden Markov models that keeps the hidden
trajectory estimable: policies minimise the expected entropy of the full
state trajectory given all observations and controls, plus standard costs,
via tangent-plane upper bounds solved with alpha-vector value iteration."""
from __future__ import annotations

from .belief import (
    ImpossibleEvidence,
    initial_update,
    marginalize_next,
    observation_marginal,
    predict_joint,
    step,
    update,
)
from .costs import (
    DEFAULT_CONFIG,
    BoundaryBelief,
    EntropyConfig,
    belief_entropy,
    expected_next_entropy,
    expected_stage_cost,
    expected_terminal_cost,
    pointwise_smoother_entropy,
    stage_decomposition,
    stage_entropy_cost,
    stage_entropy_gradient,
    terminal_entropy_gradient,
)
from .model import (
    ControlledHMM,
    CostModel,
    build_grid_agent,
    fingerprint,
    load_model,
    make_cost_model,
    make_model,
    model_from_dict,
    model_to_dict,
    save_model,
    validate_costs,
    validate_model,
)
from .pwl import (
    BasePointSet,
    CostAlphaSet,
    entropy_tangent_alphas,
    evaluate_pwl,
    fd_gradient,
    generate_base_points,
    stage_tangent_alphas,
    tangent_cost_set,
    tangent_plane,
    terminal_tangent_alphas,
)
from .sim import (
    MetricsSummary,
    PolicyModelMismatch,
    RolloutRecord,
    as_decision_rule,
    check_policy,
    compare_policies,
    exact_policy_metrics,
    monte_carlo,
    rollout,
)
from .solver import (
    AlphaVector,
    StageSet,
    ValuePolicy,
    backup,
    best_action,
    load_policy,
    policy_from_dict,
    policy_to_dict,
    prune,
    save_policy,
    solve,
    value,
)

__version__ = "0.1.0"

__all__ = [
    "AlphaVector",
    "BasePointSet",
    "BoundaryBelief",
    "ControlledHMM",
    "CostAlphaSet",
    "CostModel",
    "DEFAULT_CONFIG",
    "EntropyConfig",
    "ImpossibleEvidence",
    "MetricsSummary",
    "PolicyModelMismatch",
    "RolloutRecord",
    "StageSet",
    "ValuePolicy",
    "as_decision_rule",
    "backup",
    "belief_entropy",
    "best_action",
    "build_grid_agent",
    "check_policy",
    "compare_policies",
    "entropy_tangent_alphas",
    "evaluate_pwl",
    "exact_policy_metrics",
    "expected_next_entropy",
    "expected_stage_cost",
    "expected_terminal_cost",
    "fd_gradient",
    "fingerprint",
    "generate_base_points",
    "initial_update",
    "load_model",
    "load_policy",
    "make_cost_model",
    "make_model",
    "marginalize_next",
    "model_from_dict",
    "model_to_dict",
    "monte_carlo",
    "observation_marginal",
    "pointwise_smoother_entropy",
    "policy_from_dict",
    "policy_to_dict",
    "predict_joint",
    "prune",
    "rollout",
    "save_model",
    "save_policy",
    "solve",
    "stage_decomposition",
    "stage_entropy_cost",
    "stage_entropy_gradient",
    "stage_tangent_alphas",
    "step",
    "tangent_cost_set",
    "tangent_plane",
    "terminal_entropy_gradient",
    "terminal_tangent_alphas",
    "update",
    "validate_costs",
    "validate_model",
    "value",
]
