# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.riccati

'''
Ground-truth oracle: the discrete algebraic Riccati equation for the optimal gain K*,
fixed-policy Lyapunov cost matrices, & the exact per-agent Q-factor matrices the
learning loop estimates from samples

Everything here is model-based. The learning agents never see it; it backs metrics & tests.

>>> from stqlearn.riccati import solve_dare
>>> sol = solve_dare(model)
>>> sol.K_star  # (L·m)×(L·n), applied as u = -K*·x
'''

import logging
from dataclasses import dataclass

import numpy as np

from stqlearn.config import RICCATI_TOL, RICCATI_MAX_ITER, ConfigurationError
from stqlearn.lti_core import SystemModel, agent_gain, closed_loop, is_stabilizing, spectral_radius

logger = logging.getLogger(__name__)

COST_SCOPES = ('local', 'team')


class StabilizabilityError(RuntimeError):
    '''
    Riccati or Lyapunov recursion failed to converge, or a policy is not stabilizing
    '''
    pass


@dataclass(frozen=True)
class RiccatiSolution:
    S: np.ndarray          # (Ln, Ln) cost-to-go
    K_star: np.ndarray     # (Lm, Ln)
    iterations: int
    residual: float


def _fixed_point(update, S0, tol, max_iter, what):
    S = S0
    for k in range(1, max_iter + 1):
        S_next = update(S)
        if not np.all(np.isfinite(S_next)):
            raise StabilizabilityError(f'{what} iterates became non-finite after {k} steps (not stabilizable?)')
        # Keep iterates exactly symmetric
        S_next = 0.5 * (S_next + S_next.T)
        delta = np.linalg.norm(S_next - S, 'fro')
        S = S_next
        if delta < tol:
            return S, k, delta
    raise StabilizabilityError(f'{what} did not converge within {max_iter} iterations '
                               '(not stabilizable or ill-conditioned)')


def riccati_map(model: SystemModel, S):
    '''
    One step of the Riccati recursion AᵀSA - AᵀSB(R̄+BᵀSB)⁻¹BᵀSA + P̄
    '''
    A, B = model.A, model.B
    BtSA = B.T @ S @ A
    return A.T @ S @ A - BtSA.T @ np.linalg.solve(model.R_bar + B.T @ S @ B, BtSA) + model.P_bar


def riccati_residual(model: SystemModel, S) -> float:
    return float(np.linalg.norm(S - riccati_map(model, S), 'fro'))


def optimal_gain(model: SystemModel, S) -> np.ndarray:
    '''
    K = (R̄ + BᵀSB)⁻¹BᵀSA; row block i is agent i's gain
    '''
    A, B = model.A, model.B
    try:
        return np.linalg.solve(model.R_bar + B.T @ S @ B, B.T @ S @ A)
    except np.linalg.LinAlgError as e:
        raise StabilizabilityError('R̄ + BᵀSB is singular') from e


def solve_dare(model: SystemModel, tol=RICCATI_TOL, max_iter=RICCATI_MAX_ITER) -> RiccatiSolution:
    '''
    Solve the DARE by fixed-point iteration from S₀ = P̄

    Args:
        model (SystemModel): plant & weights; (A, B) must be stabilizable

        tol (float): stop once the Frobenius change between iterates drops below this

        max_iter (int): iteration cap

    Returns:
        RiccatiSolution with S, K*, iteration count & final change

    Raises:
        StabilizabilityError: no convergence within max_iter, or non-finite iterates
    '''
    S, k, delta = _fixed_point(lambda S: riccati_map(model, S), model.P_bar.copy(), tol, max_iter, 'Riccati recursion')
    K_star = optimal_gain(model, S)
    logger.debug('DARE converged in %d iterations, residual %.3e', k, delta)
    return RiccatiSolution(S=S, K_star=K_star, iterations=k, residual=float(delta))


def _lyapunov(model, K, weight, tol, max_iter):
    if not is_stabilizing(model, K):
        raise StabilizabilityError(
            f'Gain is not stabilizing (closed loop spectral radius {spectral_radius(closed_loop(model, K)):.6f})')
    C = closed_loop(model, K)
    return _fixed_point(lambda S: C.T @ S @ C + weight, model.P_bar.copy(), tol, max_iter, 'Lyapunov recursion')[0]


def policy_cost_matrix(model: SystemModel, K, tol=RICCATI_TOL, max_iter=RICCATI_MAX_ITER) -> np.ndarray:
    '''
    S_K solving S_K = (A-BK)ᵀS_K(A-BK) + P̄ + KᵀR̄K, so that Xᵀ·S_K·X is the infinite horizon
    closed loop cost from X. K must be stabilizing
    '''
    K = np.atleast_2d(np.asarray(K, dtype=float))
    return _lyapunov(model, K, model.P_bar + K.T @ model.R_bar @ K, tol, max_iter)


def _check_scope(cost_scope):
    if cost_scope not in COST_SCOPES:
        raise ConfigurationError(f'Unknown cost scope {cost_scope!r}; expected one of {COST_SCOPES}')


def _state_weight(model, K, i, cost_scope):
    '''
    Stage cost weight on X for agent i's Q-factor, once every other agent's input is
    expressed through its gain
    '''
    if cost_scope == 'local':
        Pt = np.zeros_like(model.A)
        sl = model.state_slice(i)
        Pt[sl, sl] = model.P_blocks[i]
        return Pt
    weight = model.P_bar.copy()
    for j in range(model.L):
        if j != i:
            Kj = agent_gain(K, j, model.m)
            weight += Kj.T @ model.R_blocks[j] @ Kj
    return weight


def agent_cost_matrix(model: SystemModel, K, i, cost_scope='local', tol=RICCATI_TOL, max_iter=RICCATI_MAX_ITER):
    '''
    Agent i's tail cost matrix S_i over the global state when every agent follows K

    With the local scope only agent i's own stage cost accumulates; with the team
    scope it is the sum over all agents, i.e. policy_cost_matrix
    '''
    _check_scope(cost_scope)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if cost_scope == 'team':
        return policy_cost_matrix(model, K, tol, max_iter)
    Ki = agent_gain(K, i, model.m)
    return _lyapunov(model, K, _state_weight(model, K, i, 'local') + Ki.T @ model.R_blocks[i] @ Ki, tol, max_iter)


def exact_q_matrix(model: SystemModel, K, i, cost_scope='local') -> np.ndarray:
    '''
    True H_i over [X; u_i] for agent i, every other agent following its row of K

    With Ā_i = A - Σ_{j≠i} B_j·K_j & S_i from agent_cost_matrix:
    H11 = W_x + Ā_iᵀS_iĀ_i, H12 = Ā_iᵀS_iB_i, H22 = R_i + B_iᵀS_iB_i
    '''
    K = np.atleast_2d(np.asarray(K, dtype=float))
    S_i = agent_cost_matrix(model, K, i, cost_scope)
    others = np.zeros_like(model.A)
    for j in range(model.L):
        if j != i:
            Bj = np.zeros((model.A.shape[0], model.m))
            Bj[model.state_slice(j), :] = model.B_blocks[j]
            others += Bj @ agent_gain(K, j, model.m)
    A_i = model.A - others
    B_i = np.zeros((model.A.shape[0], model.m))
    B_i[model.state_slice(i), :] = model.B_blocks[i]

    H11 = _state_weight(model, K, i, cost_scope) + A_i.T @ S_i @ A_i
    H12 = A_i.T @ S_i @ B_i
    H22 = model.R_blocks[i] + B_i.T @ S_i @ B_i
    H = np.block([[H11, H12], [H12.T, H22]])
    return 0.5 * (H + H.T)


def exact_policy_iteration(model: SystemModel, K, cost_scope='local', iterations=1) -> np.ndarray:
    '''
    Model-based counterpart of the learning loop: every agent simultaneously replaces its
    gain with H22⁻¹·H21 from its exact Q-factor matrix, repeated `iterations` times

    With the team scope K* is a fixed point; with the local scope the fixed point is the
    coupled per-agent equilibrium that the sample-based learner tends toward
    '''
    K = np.atleast_2d(np.asarray(K, dtype=float)).copy()
    Ln = model.A.shape[0]
    for _ in range(iterations):
        K_next = np.empty_like(K)
        for i in range(model.L):
            H = exact_q_matrix(model, K, i, cost_scope)
            K_next[model.input_slice(i), :] = np.linalg.solve(H[Ln:, Ln:], H[Ln:, :Ln])
        K = K_next
    return K
