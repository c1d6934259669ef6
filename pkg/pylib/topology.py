# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.topology

'''
Interconnection & communication graphs, plus the consensus weight matrix

Neighborhoods follow the convention N_i = adjacent nodes ∪ {i}. Nodes are 0-based here;
configuration files & CSV output number agents from 1.

>>> from stqlearn.topology import Graph, is_connected
>>> is_connected(Graph.chain(4))
True
'''

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from stqlearn.config import ConfigurationError, STOCHASTIC_TOL


@dataclass(frozen=True)
class Graph:
    '''
    Static undirected graph on L nodes. Edges are stored as (i, j) with i < j
    '''
    L: int
    edges: frozenset = frozenset()

    def __post_init__(self):
        normalized = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ConfigurationError(f'Self-loop on node {i + 1} is not allowed')
            if not (0 <= i < self.L and 0 <= j < self.L):
                raise ConfigurationError(f'Edge ({i + 1}, {j + 1}) is out of range for {self.L} nodes')
            normalized.add((min(i, j), max(i, j)))
        object.__setattr__(self, 'edges', frozenset(normalized))

    @classmethod
    def empty(cls, L):
        return cls(L)

    @classmethod
    def complete(cls, L):
        return cls(L, frozenset((i, j) for i in range(L) for j in range(i + 1, L)))

    @classmethod
    def chain(cls, L):
        return cls(L, frozenset((i, i + 1) for i in range(L - 1)))

    @classmethod
    def from_support(cls, M, block=1):
        '''
        Graph whose edges are the nonzero off-diagonal (block) entries of M,
        e.g. a weight matrix (block=1) or a block dynamics matrix (block=n)
        '''
        M = np.asarray(M)
        L = M.shape[0] // block
        edges = set()
        for i in range(L):
            for j in range(L):
                if i != j and np.any(M[i * block:(i + 1) * block, j * block:(j + 1) * block] != 0):
                    edges.add((min(i, j), max(i, j)))
        return cls(L, frozenset(edges))

    def neighbors(self, i):
        '''
        N_i: adjacent nodes plus i itself
        '''
        result = {i}
        for a, b in self.edges:
            if a == i:
                result.add(b)
            elif b == i:
                result.add(a)
        return frozenset(result)


def neighbor_mask(graph: Graph) -> np.ndarray:
    '''
    L×L boolean array with mask[i, j] true iff j ∈ N_i (diagonal always true)
    '''
    mask = np.eye(graph.L, dtype=bool)
    for i, j in graph.edges:
        mask[i, j] = mask[j, i] = True
    return mask


def is_connected(graph: Graph) -> bool:
    '''
    True iff a single component spans all nodes (breadth-first traversal from node 0)
    '''
    if graph.L <= 1:
        return True
    seen = {0}
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for other in graph.neighbors(node):
            if other not in seen:
                seen.add(other)
                queue.append(other)
    return len(seen) == graph.L


@dataclass(frozen=True)
class WeightReport:
    '''
    Outcome of validating a consensus weight matrix against a communication graph
    '''
    valid: bool
    eta: float
    problems: tuple = ()


@dataclass(frozen=True)
class WeightMatrix:
    W: np.ndarray
    eta: float


def validate_weight_matrix(W, graph: Graph) -> WeightReport:
    '''
    Check that W is doubly stochastic, strictly positive exactly on the supported
    entries (j ∈ N_i, diagonal included) & zero elsewhere

    Returns:
        WeightReport with the realized eta (smallest supported entry) & any problems found
    '''
    W = np.asarray(W, dtype=float)
    if W.shape != (graph.L, graph.L):
        raise ConfigurationError(f'Weight matrix has shape {W.shape}, graph has {graph.L} nodes')
    mask = neighbor_mask(graph)
    problems = []
    for i, s in enumerate(W.sum(axis=1)):
        if abs(s - 1.0) > STOCHASTIC_TOL:
            problems.append(f'row {i + 1} sums to {s!r}')
    for j, s in enumerate(W.sum(axis=0)):
        if abs(s - 1.0) > STOCHASTIC_TOL:
            problems.append(f'column {j + 1} sums to {s!r}')
    supported = W[mask]
    for i, j in zip(*np.nonzero(mask & (W <= 0))):
        problems.append(f'w_{i + 1}{j + 1} = {W[i, j]!r} must be positive on a communication link')
    for i, j in zip(*np.nonzero(~mask & (W != 0))):
        problems.append(f'w_{i + 1}{j + 1} = {W[i, j]!r} must be zero without a communication link')
    eta = float(supported.min())
    return WeightReport(valid=not problems, eta=eta, problems=tuple(problems))


def consensus_contraction(W) -> float:
    '''
    Per-round contraction factor ‖W - (1/L)·𝟙𝟙ᵀ‖₂ of consensus mixing. Below 1 for a valid
    W on a connected graph
    '''
    W = np.asarray(W, dtype=float)
    L = W.shape[0]
    return float(np.linalg.norm(W - np.full((L, L), 1.0 / L), 2))


@dataclass(frozen=True)
class TopologySpec:
    '''
    Interconnection graph G^d, communication graph G^c & consensus weights W
    '''
    interconnection: Graph
    communication: Graph
    W: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'W', np.asarray(self.W, dtype=float))

    @property
    def L(self):
        return self.communication.L

    @classmethod
    def from_weights(cls, W, interconnection=None):
        '''
        Communication graph taken from the support of W; interconnection defaults to complete
        '''
        W = np.asarray(W, dtype=float)
        communication = Graph.from_support(W)
        return cls(interconnection or Graph.complete(communication.L), communication, W)


def validate_topology(spec: TopologySpec) -> WeightMatrix:
    '''
    Raise ConfigurationError naming the violated assumption if either graph is
    disconnected or W is not a valid consensus matrix for the communication graph
    '''
    if spec.interconnection.L != spec.communication.L:
        raise ConfigurationError('Interconnection & communication graphs differ in node count')
    if not is_connected(spec.interconnection):
        raise ConfigurationError('interconnection graph is not connected')
    if not is_connected(spec.communication):
        raise ConfigurationError('communication graph is not connected')
    report = validate_weight_matrix(spec.W, spec.communication)
    if not report.valid:
        raise ConfigurationError('weight matrix not doubly stochastic with positive weights on links: '
                                 + '; '.join(report.problems))
    return WeightMatrix(spec.W, report.eta)
