# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.state_tracking

'''
Each agent's running estimate Z_i of the global state, maintained by a two-phase
protocol once per plant step:

1. Refresh: agent i overwrites its slots for communication neighbors j ∈ N_i with
   the fresh x_j(t+1); every other slot keeps its stale value
2. Mix: non-neighbor slots become the W-weighted average of the neighbors' phase 1
   estimates; neighbor slots stay exact

Both phases produce new arrays, so within a round no agent ever reads another agent's
phase 2 output.
'''

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from stqlearn.config import ConfigurationError
from stqlearn.topology import Graph, TopologySpec, neighbor_mask, validate_weight_matrix


@dataclass(frozen=True)
class EstimateBank:
    '''
    Z[i] is agent i's estimate of the global state (length L·n); Z[i, slot j] is x̄_ij
    '''
    Z: np.ndarray
    n: int = 1

    @property
    def L(self):
        return self.Z.shape[0]

    @classmethod
    def initial(cls, X0, L, n=1):
        '''
        Own slot exact, everything else zero
        '''
        X0 = np.asarray(X0, dtype=float)
        if X0.shape != (L * n,):
            raise ConfigurationError(f'Initial state has shape {X0.shape}, expected ({L * n},)')
        Z = np.zeros((L, L * n))
        for i in range(L):
            Z[i, i * n:(i + 1) * n] = X0[i * n:(i + 1) * n]
        return cls(Z, n)

    def slot(self, i, j):
        return self.Z[i, j * self.n:(j + 1) * self.n]


@lru_cache(maxsize=32)
def slot_mask(graph: Graph, n):
    '''
    Node neighbor mask expanded to per-coordinate slots, shape (L, L·n). Cached & shared, so never mutate it
    '''
    return np.repeat(neighbor_mask(graph), n, axis=1)


def _check_state(bank, X_new):
    X_new = np.asarray(X_new, dtype=float)
    if X_new.shape != (bank.Z.shape[1],):
        raise ConfigurationError(f'Global state has shape {X_new.shape}, expected ({bank.Z.shape[1]},)')
    return X_new


def receive_neighbor_states(bank: EstimateBank, X_new, graph: Graph) -> EstimateBank:
    '''
    Phase 1: x̂_ij(t+1) = x_j(t+1) for j ∈ N_i, else the stale x̄_ij(t)
    '''
    X_new = _check_state(bank, X_new)
    if graph.L != bank.L:
        raise ConfigurationError(f'Communication graph has {graph.L} nodes, estimate bank has {bank.L} agents')
    mask = slot_mask(graph, bank.n)
    return EstimateBank(np.where(mask, X_new[None, :], bank.Z), bank.n)


def mix_estimates(Z_hat: EstimateBank, W, X_new, graph: Graph) -> EstimateBank:
    '''
    Phase 2: x̄_ij(t+1) = Σ_k w_ik·x̂_kj(t+1) for j ∉ N_i; exact x_j(t+1) for j ∈ N_i
    '''
    X_new = _check_state(Z_hat, X_new)
    W = np.asarray(W, dtype=float)
    report = validate_weight_matrix(W, graph)
    if not report.valid:
        raise ConfigurationError('invalid weight matrix: ' + '; '.join(report.problems))
    return _mix(Z_hat, W, X_new, graph)


def _mix(Z_hat, W, X_new, graph):
    mixed = W @ Z_hat.Z
    return EstimateBank(np.where(slot_mask(graph, Z_hat.n), X_new[None, :], mixed), Z_hat.n)


def update_estimates(bank: EstimateBank, X_new, topology: TopologySpec) -> EstimateBank:
    '''
    One full communication round: refresh, exchange, mix. The topology is assumed
    already validated (see topology.validate_topology)
    '''
    Z_hat = receive_neighbor_states(bank, X_new, topology.communication)
    return _mix(Z_hat, topology.W, X_new, topology.communication)


def tracking_error(bank: EstimateBank, X) -> np.ndarray:
    '''
    ‖Z_i - X‖₂ for each agent
    '''
    X = np.asarray(X, dtype=float)
    return np.linalg.norm(bank.Z - X[None, :], axis=1)
