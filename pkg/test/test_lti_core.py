# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# test/test_lti_core.py
'''
pytest test

or

pytest test/test_lti_core.py
'''
# ruff: noqa: E501

import numpy as np
import pytest

from stqlearn.config import ConfigurationError
from stqlearn.lti_core import (SystemModel, agent_gain, check_interconnection, closed_loop, is_stabilizing,
                               rollout_cost, spectral_radius, stage_cost, step_global)
from stqlearn.topology import Graph


def test_step_zero_state_zero_input(REF_MODEL):
    assert np.array_equal(step_global(REF_MODEL, np.zeros(4), np.zeros(4)), np.zeros(4))


def test_step_uniform_state(REF_MODEL):
    X1 = step_global(REF_MODEL, np.full(4, 0.01), np.zeros(4))
    assert np.allclose(X1, [0.0071, 0.0100, 0.0110, 0.0110], atol=1e-15)


def test_step_unit_input(REF_MODEL):
    U = np.array([1.0, 0.0, 0.0, 0.0])
    assert np.allclose(step_global(REF_MODEL, np.zeros(4), U), U)


def test_step_linearity(REF_MODEL):
    rng = np.random.default_rng(7)
    for _ in range(20):
        X1, X2, U1, U2 = rng.normal(size=(4, 4))
        a, b = rng.normal(size=2)
        lhs = step_global(REF_MODEL, a * X1 + b * X2, a * U1 + b * U2)
        rhs = a * step_global(REF_MODEL, X1, U1) + b * step_global(REF_MODEL, X2, U2)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_step_shape_mismatch(REF_MODEL):
    with pytest.raises(ConfigurationError):
        step_global(REF_MODEL, np.zeros(3), np.zeros(4))
    with pytest.raises(ConfigurationError):
        step_global(REF_MODEL, np.zeros(4), np.zeros(5))


def test_stage_cost(REF_MODEL):
    assert stage_cost(REF_MODEL, 0, np.zeros(1), np.zeros(1)) == 0.0
    assert stage_cost(REF_MODEL, 0, np.array([2.0]), np.array([3.0])) == pytest.approx(13.0)


def test_stage_cost_first_step_four_agent(REF_MODEL, REF_K1_RAW):
    X0 = np.full(4, 0.01)
    u1 = -agent_gain(REF_K1_RAW, 0) @ X0
    assert u1 == pytest.approx([-0.040004], abs=1e-15)
    assert stage_cost(REF_MODEL, 0, X0[:1], u1) == pytest.approx(0.001700320016, abs=1e-14)


def test_stage_cost_nonnegative(REF_MODEL):
    rng = np.random.default_rng(3)
    for _ in range(100):
        x, u = rng.normal(size=2)
        assert stage_cost(REF_MODEL, 2, np.array([x]), np.array([u])) >= 0


def test_spectral_radius():
    assert spectral_radius(np.eye(3)) == pytest.approx(1.0)
    assert spectral_radius(np.zeros((3, 3))) == 0.0
    # Rotation by 90°: eigenvalues ±i
    assert spectral_radius(np.array([[0.0, -2.0], [2.0, 0.0]])) == pytest.approx(2.0)
    with pytest.raises(ConfigurationError):
        spectral_radius(np.zeros((2, 3)))


def test_spectral_radius_four_agent(REF_A):
    assert spectral_radius(REF_A) == pytest.approx(0.98696139, abs=1e-6)


def test_stabilizing(REF_MODEL, REF_KSTAR, REF_K1, REF_K1_RAW):
    assert is_stabilizing(REF_MODEL, REF_KSTAR)
    assert spectral_radius(closed_loop(REF_MODEL, REF_KSTAR)) == pytest.approx(0.3766, abs=1e-3)
    assert is_stabilizing(REF_MODEL, REF_K1)
    assert spectral_radius(closed_loop(REF_MODEL, REF_K1)) < 0.55
    # The unscaled K1 sits just outside the unit circle
    assert not is_stabilizing(REF_MODEL, REF_K1_RAW)
    assert spectral_radius(closed_loop(REF_MODEL, REF_K1_RAW)) > 1.0


def test_closed_loop_decays(REF_MODEL, REF_KSTAR):
    X = np.ones(4)
    norms = []
    for _ in range(80):
        X = step_global(REF_MODEL, X, -REF_KSTAR @ X)
        norms.append(np.linalg.norm(X))
    # Geometric rate approaches the closed loop spectral radius (≈ 0.377)
    assert (norms[79] / norms[39]) ** (1 / 40) < 0.45


def test_agent_gain_blocks():
    K = np.arange(12.0).reshape(4, 3)
    assert np.array_equal(agent_gain(K, 1, m=2), K[2:4])
    assert np.array_equal(agent_gain(K, 3), K[3:4])


def test_model_properties(REF_MODEL):
    assert (REF_MODEL.L, REF_MODEL.n, REF_MODEL.m) == (4, 1, 1)
    assert np.array_equal(REF_MODEL.B, np.eye(4))
    assert np.array_equal(REF_MODEL.P_bar, np.eye(4))
    assert REF_MODEL.state_slice(2) == slice(2, 3)


def test_model_validation():
    with pytest.raises(ConfigurationError):
        # P not positive semi-definite
        SystemModel(np.eye(2), [np.eye(1)] * 2, [np.array([[-1.0]]), np.eye(1)], [np.eye(1)] * 2)
    with pytest.raises(ConfigurationError):
        # A does not match L·n
        SystemModel(np.eye(3), [np.eye(1)] * 2, [np.eye(1)] * 2, [np.eye(1)] * 2)
    with pytest.raises(ConfigurationError):
        SystemModel(np.eye(2), [np.eye(1)] * 2, [np.eye(1)] * 2, [np.eye(1)])


def test_rollout_cost_deadbeat():
    model = SystemModel(np.zeros((2, 2)), [np.eye(1)] * 2, [np.eye(1)] * 2, [np.eye(1)] * 2)
    X0 = np.array([1.0, 2.0])
    # Only the first stage costs anything
    assert rollout_cost(model, np.zeros((2, 2)), X0, 5) == pytest.approx(5.0)


def test_check_interconnection(REF_MODEL, REF_A):
    check_interconnection(REF_MODEL, Graph.complete(4))
    with pytest.raises(ConfigurationError, match='not interconnected'):
        check_interconnection(REF_MODEL, Graph.chain(4))
    banded = np.where(np.abs(np.subtract.outer(range(4), range(4))) <= 1, REF_A, 0.0)
    model = SystemModel(banded, [np.eye(1)] * 4, [np.eye(1)] * 4, [np.eye(1)] * 4)
    check_interconnection(model, Graph.chain(4))


if __name__ == '__main__':
    raise SystemExit("Attention! Run with pytest")
