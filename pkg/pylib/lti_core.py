# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.lti_core

'''
Coupled multi-agent linear time-invariant plant

Agent i has state x_i (length n) & input u_i (length m). The global state X stacks all
x_i, and evolves as X(t+1) = A·X(t) + B·U(t), with B the block diagonal of the per-agent B_i.

Gains follow the u = -K·z convention throughout: a stacked gain K is an (L·m)×(L·n) array,
and agent i owns row block i (see `agent_gain`).

>>> import numpy as np
>>> from stqlearn.lti_core import SystemModel, step_global
>>> model = SystemModel(np.array([[0.5]]), [np.eye(1)], [np.eye(1)], [np.eye(1)])
>>> step_global(model, np.array([2.0]), np.array([1.0]))
array([2.])
'''

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import block_diag

from stqlearn.config import ConfigurationError, PSD_FLOOR, STABILITY_MARGIN


def _check_psd(name, M):
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigurationError(f'{name} must be square, got shape {M.shape}')
    if not np.allclose(M, M.T, atol=1e-12):
        raise ConfigurationError(f'{name} must be symmetric')
    if np.linalg.eigvalsh(M).min() < PSD_FLOOR:
        raise ConfigurationError(f'{name} must be positive semi-definite')


@dataclass(frozen=True)
class SystemModel:
    '''
    Block LTI model: A (L·n square), plus per-agent input matrices B_i (n×m)
    and cost weights P_i (n×n), R_i (m×m)
    '''
    A: np.ndarray
    B_blocks: tuple
    P_blocks: tuple
    R_blocks: tuple

    def __post_init__(self):
        # Normalize to float arrays & tuples, then validate
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B_blocks = tuple(np.atleast_2d(np.asarray(b, dtype=float)) for b in self.B_blocks)
        P_blocks = tuple(np.atleast_2d(np.asarray(p, dtype=float)) for p in self.P_blocks)
        R_blocks = tuple(np.atleast_2d(np.asarray(r, dtype=float)) for r in self.R_blocks)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'B_blocks', B_blocks)
        object.__setattr__(self, 'P_blocks', P_blocks)
        object.__setattr__(self, 'R_blocks', R_blocks)

        L = len(B_blocks)
        if L == 0:
            raise ConfigurationError('Model needs at least one agent')
        if len(P_blocks) != L or len(R_blocks) != L:
            raise ConfigurationError(f'Expected {L} P_i & R_i blocks, got {len(P_blocks)} & {len(R_blocks)}')
        n, m = B_blocks[0].shape
        for i, b in enumerate(B_blocks):
            if b.shape != (n, m):
                raise ConfigurationError(f'B_{i + 1} has shape {b.shape}, expected {(n, m)}')
        if A.shape != (L * n, L * n):
            raise ConfigurationError(f'A has shape {A.shape}, expected {(L * n, L * n)}')
        for i, (p, r) in enumerate(zip(P_blocks, R_blocks)):
            if p.shape != (n, n) or r.shape != (m, m):
                raise ConfigurationError(f'Agent {i + 1} weights have shapes {p.shape}, {r.shape}')
            _check_psd(f'P_{i + 1}', p)
            _check_psd(f'R_{i + 1}', r)

    @property
    def L(self) -> int:
        return len(self.B_blocks)

    @property
    def n(self) -> int:
        return self.B_blocks[0].shape[0]

    @property
    def m(self) -> int:
        return self.B_blocks[0].shape[1]

    @cached_property
    def B(self) -> np.ndarray:
        return block_diag(*self.B_blocks)

    @cached_property
    def P_bar(self) -> np.ndarray:
        return block_diag(*self.P_blocks)

    @cached_property
    def R_bar(self) -> np.ndarray:
        return block_diag(*self.R_blocks)

    def state_slice(self, i):
        return slice(i * self.n, (i + 1) * self.n)

    def input_slice(self, i):
        return slice(i * self.m, (i + 1) * self.m)


def agent_gain(K, i, m=1):
    '''
    Row block of stacked gain K belonging to agent i (0-based), shape m×(L·n)
    '''
    return K[i * m:(i + 1) * m, :]


def _check_gain(model, K):
    K = np.atleast_2d(np.asarray(K, dtype=float))
    expected = (model.L * model.m, model.L * model.n)
    if K.shape != expected:
        raise ConfigurationError(f'Gain has shape {K.shape}, expected {expected}')
    return K


def step_global(model: SystemModel, X, U) -> np.ndarray:
    '''
    Advance the plant one synchronous step: A·X + B·U
    '''
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    if X.shape != (model.L * model.n,):
        raise ConfigurationError(f'Global state has shape {X.shape}, expected ({model.L * model.n},)')
    if U.shape != (model.L * model.m,):
        raise ConfigurationError(f'Global control has shape {U.shape}, expected ({model.L * model.m},)')
    return model.A @ X + model.B @ U


def stage_cost(model: SystemModel, i, x_i, u_i) -> float:
    '''
    Agent i's stage cost x_iᵀ·P_i·x_i + u_iᵀ·R_i·u_i

    >>> stage_cost(model, 0, np.array([2.0]), np.array([3.0]))  # P_1 = R_1 = 1
    13.0
    '''
    x_i = np.atleast_1d(np.asarray(x_i, dtype=float))
    u_i = np.atleast_1d(np.asarray(u_i, dtype=float))
    if x_i.shape != (model.n,) or u_i.shape != (model.m,):
        raise ConfigurationError(f'Agent state/input shapes {x_i.shape}, {u_i.shape} '
                                 f'do not match n={model.n}, m={model.m}')
    return float(x_i @ model.P_blocks[i] @ x_i + u_i @ model.R_blocks[i] @ u_i)


def spectral_radius(M) -> float:
    '''
    Largest eigenvalue magnitude of a square matrix
    '''
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ConfigurationError(f'Spectral radius needs a square matrix, got shape {M.shape}')
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(M))))


def closed_loop(model: SystemModel, K) -> np.ndarray:
    '''A - B·K'''
    return model.A - model.B @ _check_gain(model, K)


def is_stabilizing(model: SystemModel, K) -> bool:
    '''
    True if u = -K·x makes the closed loop Schur stable, with margin STABILITY_MARGIN
    '''
    return spectral_radius(closed_loop(model, K)) < 1.0 - STABILITY_MARGIN


def rollout_cost(model: SystemModel, K, X0, T) -> float:
    '''
    Noise-free closed loop cost summed over all agents for T steps from X0,
    i.e. a truncated J(X0) under u = -K·x
    '''
    K = _check_gain(model, K)
    X = np.asarray(X0, dtype=float)
    total = 0.0
    for _ in range(T):
        U = -K @ X
        total += float(X @ model.P_bar @ X + U @ model.R_bar @ U)
        X = step_global(model, X, U)
    return total


def check_interconnection(model: SystemModel, graph):
    '''
    Verify that off-diagonal coupling blocks A_ij are nonzero only along edges of
    the interconnection graph. Raises ConfigurationError otherwise
    '''
    if graph.L != model.L:
        raise ConfigurationError(f'Interconnection graph has {graph.L} nodes, model has {model.L} agents')
    for i in range(model.L):
        neighbors = graph.neighbors(i)
        for j in range(model.L):
            if j in neighbors:
                continue
            block = model.A[model.state_slice(i), model.state_slice(j)]
            if np.any(block != 0):
                raise ConfigurationError(
                    f'A_{i + 1}{j + 1} is nonzero but agents {i + 1} & {j + 1} are not interconnected')
