# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# test/test_qfactor.py
'''
pytest test

or

pytest test/test_qfactor.py
'''

import numpy as np
import pytest

from stqlearn.config import ConfigurationError
from stqlearn.qlearning import (ImprovementError, basis_support, bellman_residual, bellman_sample, improve_policy,
                                pack_H_to_theta, persistency_metric, quadratic_basis, sgd_step, theta_dim,
                                unpack_theta_to_H)


def test_theta_dim():
    assert theta_dim(4, 1, 1) == 15
    assert theta_dim(1, 1, 1) == 3
    assert theta_dim(2, 2, 1) == 15
    with pytest.raises(ConfigurationError):
        theta_dim(0, 1, 1)


def test_quadratic_basis():
    assert quadratic_basis(np.array([2.0]), np.array([3.0])).tolist() == [4.0, 6.0, 9.0]
    assert quadratic_basis(np.array([1.0, 2.0]), np.array([3.0])).tolist() == [1.0, 2.0, 3.0, 4.0, 6.0, 9.0]
    assert quadratic_basis(np.zeros(4), np.zeros(1)).shape == (15,)


def test_basis_support():
    assert basis_support([True, False, True]).tolist() == [True, False, True, False, False, True]
    assert basis_support(np.ones(5, dtype=bool)).all()
    # Outside the support, y is identically zero whenever the inactive coordinates are
    y = quadratic_basis(np.array([1.5, 0.0, -2.0]), np.array([0.7]))
    support = basis_support([True, False, True, True])
    assert np.all(y[~support] == 0.0)
    assert np.all(y[support] != 0.0)


def test_pack():
    assert pack_H_to_theta(np.array([[1.0, 2.0], [2.0, 5.0]])).tolist() == [1.0, 4.0, 5.0]
    assert pack_H_to_theta(np.eye(3)).tolist() == [1.0, 0.0, 0.0, 1.0, 0.0, 1.0]
    with pytest.raises(ConfigurationError):
        pack_H_to_theta(np.array([[1.0, 2.0], [0.0, 5.0]]))


def test_unpack_blocks():
    params = unpack_theta_to_H(np.array([1.0, 4.0, 5.0]), 1, 1)
    assert params.H.tolist() == [[1.0, 2.0], [2.0, 5.0]]
    assert params.H11.tolist() == [[1.0]]
    assert params.H21.tolist() == [[2.0]]
    assert params.H22.tolist() == [[5.0]]
    with pytest.raises(ConfigurationError):
        unpack_theta_to_H(np.zeros(4), 1, 1)


def test_pack_unpack_inverse():
    rng = np.random.default_rng(0)
    for D in (2, 3, 5):
        M = rng.normal(size=(D, D))
        H = M + M.T
        params = unpack_theta_to_H(pack_H_to_theta(H), D - 1, 1)
        assert np.allclose(params.H, H, atol=1e-14)


def test_basis_evaluates_quadratic_form():
    rng = np.random.default_rng(1)
    for _ in range(1000):
        M = rng.normal(size=(5, 5))
        H = M + M.T
        z, u = rng.normal(size=4), rng.normal(size=1)
        v = np.concatenate([z, u])
        assert quadratic_basis(z, u) @ pack_H_to_theta(H) == pytest.approx(v @ H @ v, rel=1e-9, abs=1e-12)


def test_sgd_step():
    assert sgd_step(np.zeros(3), np.array([1.0, 0.0, 0.0]), 2.0, 0.5).tolist() == [1.0, 0.0, 0.0]
    # A consistent sample leaves θ unchanged
    theta = np.array([1.0, 2.0, 3.0])
    phi = np.array([0.5, -1.0, 2.0])
    assert np.array_equal(sgd_step(theta, phi, theta @ phi, 0.1), theta)
    assert np.array_equal(sgd_step(theta, np.zeros(3), 5.0, 0.1), theta)


def test_sgd_converges_on_consistent_data():
    rng = np.random.default_rng(4)
    target = np.array([1.5, -0.5, 2.0])
    theta = np.zeros(3)
    for _ in range(5000):
        phi = rng.uniform(-1, 1, size=3)
        theta = sgd_step(theta, phi, target @ phi, 0.2)
    assert np.allclose(theta, target, atol=1e-6)


def test_bellman_sample():
    y_t = quadratic_basis(np.array([2.0]), np.array([3.0]))
    assert bellman_sample(y_t, np.array([1.0, 2.0, 1.0])).tolist() == [3.0, 4.0, 8.0]
    with pytest.raises(ConfigurationError):
        bellman_sample(np.zeros(3), np.zeros(6))


def test_improve_policy():
    params = unpack_theta_to_H(np.array([1.0, 2.0, 2.0]), 1, 1)
    # H21 = 1, H22 = 2
    assert improve_policy(params).tolist() == [[0.5]]


def test_improve_policy_singular():
    with pytest.raises(ImprovementError):
        improve_policy(unpack_theta_to_H(np.zeros(3), 1, 1))
    with pytest.raises(ImprovementError):
        improve_policy(unpack_theta_to_H(np.array([1.0, 1.0, np.nan]), 1, 1))


def test_improve_recovers_gain_from_exact_h():
    rng = np.random.default_rng(8)
    M = rng.normal(size=(3, 3))
    H11 = M @ M.T + np.eye(3)
    K_true = np.array([[0.3, -0.2, 0.1]])
    H22 = np.array([[2.0]])
    H21 = H22 @ K_true
    H = np.block([[H11, H21.T], [H21, H22]])
    K = improve_policy(unpack_theta_to_H(pack_H_to_theta(H), 3, 1))
    assert np.allclose(K, K_true, atol=1e-12)


def test_bellman_residual():
    theta = np.array([1.0, 2.0])
    phi = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert bellman_residual(theta, phi, np.array([1.0, 2.0])) == 0.0
    assert bellman_residual(theta, phi, np.array([0.0, 0.0])) == pytest.approx(2.5)
    with pytest.raises(ValueError):
        bellman_residual(theta, np.zeros((0, 2)), np.zeros(0))


def test_persistency():
    # Rank one window: nothing beyond one direction is identified
    phi = np.outer(np.arange(1.0, 11.0), np.array([1.0, 2.0, 3.0]))
    report = persistency_metric(phi, start=100)
    assert not report.excited
    assert report.lambda_min == pytest.approx(0.0, abs=1e-9)
    assert (report.start, report.stop) == (100, 110)

    # Cycling through the coordinate axes excites every direction
    cycling = np.eye(3)[np.arange(30) % 3]
    report = persistency_metric(cycling)
    assert report.excited
    assert report.lambda_min == pytest.approx(10.0)


if __name__ == '__main__':
    raise SystemExit("Attention! Run with pytest")
