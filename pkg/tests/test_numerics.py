"""Kernel checks: activations, loss clipping, Adam against a scalar oracle."""

import math

import numpy as np
import pytest

from bodl.errors import InputError
from bodl.numerics import PROB_CLIP, AdamState, adam_step, cross_entropy, relu, softmax

from oracles import scalar_adam_step, scalar_softmax


def test_relu_zero_fixed_point():
    assert np.array_equal(relu(np.zeros(2)), np.zeros(2))


def test_relu_definition_case():
    assert np.array_equal(relu(np.array([-1.0, 2.0])), np.array([0.0, 2.0]))


def test_relu_matches_scalar_loop():
    v = np.random.default_rng(0).standard_normal(30)
    expected = np.array([x if x > 0.0 else 0.0 for x in v])
    assert np.array_equal(relu(v), expected)


def test_relu_idempotent():
    rng = np.random.default_rng(1)
    for _ in range(25):
        v = rng.standard_normal(12) * rng.uniform(0.01, 1e3)
        once = relu(v)
        assert np.array_equal(relu(once), once)


def test_softmax_symmetry():
    assert np.allclose(softmax(np.zeros(2)), [0.5, 0.5], atol=1e-15)


def test_softmax_shift_invariance():
    for c in (-7.0, 0.0, 3.25, 1e3):
        out = softmax(np.full(3, c))
        assert np.allclose(out, [1 / 3] * 3, atol=1e-15)


def test_softmax_large_magnitude_no_overflow():
    out = softmax(np.array([1000.0, 0.0]))
    assert np.all(np.isfinite(out))
    expected = scalar_softmax([1000.0, 0.0])
    assert np.allclose(out, expected, rtol=0, atol=1e-15)
    # exp(-1000) underflows cleanly: all mass lands on the dominant entry
    assert out[0] == pytest.approx(1.0, abs=1e-15)
    assert 0.0 <= out[1] < 1e-300


def test_softmax_probability_vector_property():
    rng = np.random.default_rng(2)
    for _ in range(50):
        v = rng.standard_normal(rng.integers(2, 9)) * rng.uniform(0.01, 1e3)
        out = softmax(v)
        assert np.all(out >= 0.0)
        assert abs(float(out.sum()) - 1.0) <= 1e-12
        assert np.allclose(out, scalar_softmax(list(v)), rtol=1e-12)


def test_cross_entropy_perfect_prediction():
    assert cross_entropy(np.array([1.0, 0.0]), 0) == 0.0


def test_cross_entropy_uniform_binary():
    assert cross_entropy(np.array([0.5, 0.5]), 1) == pytest.approx(math.log(2), rel=1e-12)


def test_cross_entropy_clips_zero_probability():
    loss = cross_entropy(np.array([0.0, 1.0]), 0)
    assert math.isfinite(loss)
    assert loss == pytest.approx(-math.log(PROB_CLIP), rel=1e-12)


def test_cross_entropy_label_out_of_range():
    with pytest.raises(InputError):
        cross_entropy(np.array([0.5, 0.5]), 2)
    with pytest.raises(InputError):
        cross_entropy(np.array([0.5, 0.5]), -1)


def test_adam_zero_gradient_is_identity():
    param = np.array([[1.0, -2.0], [0.5, 3.0]])
    state = AdamState.zeros_like(param)
    new_param, new_state = adam_step(param, np.zeros_like(param), state, lr=0.01)
    assert np.array_equal(new_param, param)
    assert new_state.step == 1


def test_adam_first_step_hand_value():
    # m_hat = v_hat = 1 after one unit-gradient step, so the move is
    # lr / (1 + eps), a shade under the learning rate
    param = np.array([1.0])
    new_param, _ = adam_step(param, np.array([1.0]), AdamState.zeros_like(param), lr=0.01)
    expected = 1.0 - 0.01 * (1.0 / (1.0 + 1e-8))
    assert new_param[0] == pytest.approx(expected, abs=1e-15)
    assert new_param[0] == pytest.approx(0.99, abs=1e-9)


def test_adam_two_steps_match_scalar_oracle():
    param = np.array([0.7])
    state = AdamState.zeros_like(param)
    ref_p, ref_m, ref_v = 0.7, 0.0, 0.0
    for t in (1, 2):
        param, state = adam_step(param, np.array([0.3]), state, lr=0.05)
        ref_p, ref_m, ref_v = scalar_adam_step(ref_p, 0.3, ref_m, ref_v, t, lr=0.05)
        assert param[0] == pytest.approx(ref_p, abs=1e-12)
    assert state.step == 2


def test_adam_random_trajectory_matches_scalar_oracle():
    rng = np.random.default_rng(3)
    param = np.array([rng.standard_normal()])
    state = AdamState.zeros_like(param)
    ref_p, ref_m, ref_v = float(param[0]), 0.0, 0.0
    for t in range(1, 40):
        g = float(rng.standard_normal())
        param, state = adam_step(param, np.array([g]), state, lr=0.01)
        ref_p, ref_m, ref_v = scalar_adam_step(ref_p, g, ref_m, ref_v, t, lr=0.01)
        assert param[0] == pytest.approx(ref_p, abs=1e-12)


def test_adam_shape_mismatch_rejected():
    param = np.zeros((2, 2))
    with pytest.raises(InputError):
        adam_step(param, np.zeros(3), AdamState.zeros_like(param), lr=0.01)


def test_adam_deterministic():
    param = np.array([1.0, 2.0])
    grad = np.array([0.1, -0.2])
    a, _ = adam_step(param, grad, AdamState.zeros_like(param), lr=0.01)
    b, _ = adam_step(param, grad, AdamState.zeros_like(param), lr=0.01)
    assert np.array_equal(a, b)
