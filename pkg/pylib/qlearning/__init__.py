# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.qlearning

# ruff: noqa: F401

'''
Per-agent Q-factor learning for multi-agent LQR: Q-factor algebra (qfactor) &
the distributed policy iteration loop (policy_iteration)
'''

from stqlearn.qlearning.qfactor import (
    ImprovementError, QFactorParams, basis_support, bellman_residual, bellman_sample, improve_policy,
    pack_H_to_theta, persistency_metric, quadratic_basis, sgd_step, theta_dim, unpack_theta_to_H)
from stqlearn.qlearning.policy_iteration import (
    DivergenceError, EvaluationTrace, LearningConfig, MetricsRecord, ObservationMode, RunResult, SimulationState,
    Termination, observe, st_e_evaluate, st_q_run)
