from __future__ import annotations

import numpy as np
import pytest

import _oracles as oracle
from active_smoothing import (
    ImpossibleEvidence,
    initial_update,
    make_model,
    marginalize_next,
    observation_marginal,
    predict_joint,
    step,
    update,
)


def test_predict_joint_matches_elementwise_product(grid):
    model, _ = grid
    belief = np.array([0.5, 0.5, 0.0, 0.0])
    joint = predict_joint(model, belief, 2)
    expected = np.empty((4, 4))
    for i in range(4):
        for j in range(4):
            expected[i, j] = model.A(2)[i, j] * belief[j]
    np.testing.assert_allclose(joint, expected)
    np.testing.assert_allclose(joint.sum(), 1.0)


def test_marginalize_next_is_transition_push_forward(grid):
    model, _ = grid
    belief = np.array([0.1, 0.2, 0.3, 0.4])
    joint = predict_joint(model, belief, 0)
    np.testing.assert_allclose(marginalize_next(joint), model.A(0) @ belief, atol=1e-15)


def test_update_and_step_match_direct_bayes_filter(rng):
    for _ in range(60):
        model = oracle.random_model(rng)
        belief = rng.dirichlet(np.ones(model.n_states))
        u = int(rng.integers(model.n_controls))
        y = int(rng.integers(model.n_observations))
        joint = predict_joint(model, belief, u)
        post = update(model, joint, u, y)
        np.testing.assert_allclose(post, oracle.filter_step(model, belief, u, y),
                                   atol=1e-12)
        np.testing.assert_allclose(post.sum(), 1.0, atol=1e-12)
        np.testing.assert_allclose(step(model, belief, u, y), post, atol=1e-15)


def test_initial_update_uses_initial_kernel(rng):
    for _ in range(20):
        model = oracle.random_model(rng)
        y = int(rng.integers(model.n_observations))
        np.testing.assert_allclose(initial_update(model, y),
                                   oracle.initial_filter(model, y), atol=1e-12)


def test_initial_update_differs_from_control_kernels():
    # distinct initial kernel must drive the first update
    model = make_model(
        prior=[0.5, 0.5],
        transition=[np.eye(2)],
        observation=[[[0.5, 0.5], [0.5, 0.5]]],
        initial_observation=[[0.9, 0.1], [0.2, 0.8]],
    )
    post = initial_update(model, 0)
    np.testing.assert_allclose(post, [0.9 / 1.1, 0.2 / 1.1])


def test_observation_marginal_is_a_distribution(rng):
    for _ in range(40):
        model = oracle.random_model(rng)
        belief = rng.dirichlet(np.ones(model.n_states))
        u = int(rng.integers(model.n_controls))
        marg = observation_marginal(model, belief, u)
        assert marg.shape == (model.n_observations,)
        np.testing.assert_allclose(marg.sum(), 1.0, atol=1e-12)
        for y in range(model.n_observations):
            np.testing.assert_allclose(marg[y], oracle.obs_prob(model, belief, u, y),
                                       atol=1e-12)


def test_impossible_evidence_raised_with_context():
    model = make_model(
        prior=[1.0, 0.0],
        transition=[np.eye(2)],
        observation=[[[1.0, 0.0], [0.0, 1.0]]],
    )
    belief = np.array([1.0, 0.0])
    joint = predict_joint(model, belief, 0)
    with pytest.raises(ImpossibleEvidence) as exc:
        update(model, joint, 0, 1, stage=2)
    assert exc.value.observation == 1
    assert exc.value.stage == 2
    assert isinstance(exc.value, ValueError)

    with pytest.raises(ImpossibleEvidence) as exc:
        initial_update(model, 1)
    assert exc.value.stage is None
    assert "initial stage" in str(exc.value)


def test_bad_control_raises_index_error(grid):
    model, _ = grid
    with pytest.raises(IndexError):
        predict_joint(model, np.full(4, 0.25), 3)


def test_filter_is_invariant_to_belief_scale_after_update(grid):
    # update renormalises, so a slightly unnormalised input is repaired
    model, _ = grid
    belief = np.array([0.3, 0.3, 0.2, 0.2])
    a = step(model, belief, 2, 1)
    b = step(model, belief * (1.0 + 1e-9), 2, 1)
    np.testing.assert_allclose(a, b, atol=1e-9)
    np.testing.assert_allclose(a.sum(), 1.0, atol=1e-12)
