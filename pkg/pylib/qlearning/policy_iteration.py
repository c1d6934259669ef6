# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.qlearning.policy_iteration

'''
Distributed policy iteration: the evaluation window (every agent fits its own Q-factor from
N plant steps, one SGD step per sample) & the outer loop that alternates evaluation with
greedy improvement, in one of three observation modes

- STATE_TRACKING: agent i acts on its consensus estimate Z_i
- FULL: every agent sees the true global state (DQG baseline)
- PARTIAL_ZERO: agent i sees its communication neighbors' states, zeros elsewhere (DQP baseline)

>>> from stqlearn.qlearning import st_q_run, LearningConfig, ObservationMode
>>> result = st_q_run(model, topology, K1, ObservationMode.STATE_TRACKING, noise,
...                   LearningConfig(N=1000, alpha=0.01), x0, seed=1, K_star=K_star)
>>> result.termination, result.gains
'''

import logging
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from stqlearn.config import (DEFAULT_ALPHA, DEFAULT_EPS_K, DEFAULT_N, DEFAULT_Q_MAX, DIVERGENCE_LIMIT,
                             ConfigurationError)
from stqlearn.excitation import DecayScope, NoiseConfig, noise_block
from stqlearn.lti_core import SystemModel, agent_gain, closed_loop, is_stabilizing, spectral_radius, stage_cost, \
    step_global
from stqlearn.qlearning.qfactor import (ImprovementError, basis_support, bellman_sample, improve_policy,
                                        persistency_metric, quadratic_basis, sgd_step, theta_dim, unpack_theta_to_H)
from stqlearn.riccati import COST_SCOPES
from stqlearn.state_tracking import EstimateBank, receive_neighbor_states, slot_mask, update_estimates
from stqlearn.topology import TopologySpec, validate_topology

logger = logging.getLogger(__name__)

EVALUATORS = ('sgd', 'batch')


class ObservationMode(Enum):
    STATE_TRACKING = 'st'
    FULL = 'full'  # DQG
    PARTIAL_ZERO = 'partial'  # DQP

    @classmethod
    def _missing_(cls, value):
        # Accept a few long-hand spellings, e.g. from config files
        aliases = {'state_tracking': 'st', 'statetracking': 'st', 'full_observation': 'full',
                   'fullobservation': 'full', 'dqg': 'full', 'partial_zero': 'partial',
                   'partialzero': 'partial', 'dqp': 'partial'}
        if isinstance(value, str):
            key = value.strip().lower()
            if key in aliases:
                return cls(aliases[key])
            for member in cls:
                if member.value == key:
                    return member
        return None


class Termination(Enum):
    CONVERGED = 'converged'
    MAX_ITERS = 'max_iters'
    DIVERGED = 'diverged'
    IMPROVEMENT_FAILED = 'improvement_failed'


class DivergenceError(RuntimeError):
    '''
    Plant state or θ̂ blew past the divergence guard
    '''
    def __init__(self, message, t, agent, norm):
        super().__init__(message)
        self.t = t
        self.agent = agent
        self.norm = norm


@dataclass(frozen=True)
class LearningConfig:
    '''
    Settings for one learning run

    N - plant steps per evaluation window
    alpha - SGD step size
    eps_K - stop once every agent's θ̂ changes by less than this over a window
    q_max - policy iteration cap
    cost_scope - 'local' (agent's own stage cost) or 'team' (sum over agents)
    evaluator - 'sgd' (per-sample steps) or 'batch' (least squares over the window)
    divergence_limit - global state norm that aborts the run
    keep_traces - retain every window's EvaluationTrace in the result
    '''
    N: int = DEFAULT_N
    alpha: float = DEFAULT_ALPHA
    eps_K: float = DEFAULT_EPS_K
    q_max: int = DEFAULT_Q_MAX
    cost_scope: str = 'local'
    evaluator: str = 'sgd'
    divergence_limit: float = DIVERGENCE_LIMIT
    keep_traces: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError(f'Evaluation window N must be at least 1, got {self.N}')
        if not self.alpha > 0:
            raise ConfigurationError(f'step size alpha must be positive, got {self.alpha}')
        if not self.eps_K > 0:
            raise ConfigurationError(f'eps_K must be positive, got {self.eps_K}')
        if self.q_max < 0:
            raise ConfigurationError(f'q_max must be nonnegative, got {self.q_max}')
        if self.cost_scope not in COST_SCOPES:
            raise ConfigurationError(f'Unknown cost scope {self.cost_scope!r}; expected one of {COST_SCOPES}')
        if self.evaluator not in EVALUATORS:
            raise ConfigurationError(f'Unknown evaluator {self.evaluator!r}; expected one of {EVALUATORS}')
        if not self.divergence_limit > 0:
            raise ConfigurationError(f'divergence_limit must be positive, got {self.divergence_limit}')


@dataclass
class SimulationState:
    '''
    Everything carried from one evaluation window to the next: plant state, estimate bank,
    global step counter & the run-owned PRNG
    '''
    X: np.ndarray
    bank: EstimateBank
    t: int
    rng: np.random.Generator

    @classmethod
    def initial(cls, X0, topology: TopologySpec, n=1, seed=0):
        '''
        Each agent starts knowing its own state (EstimateBank.initial: other slots zero), then
        takes a first neighbor refresh so neighbor slots are exact from t = 0 as well. With that
        refresh a complete communication graph gives every agent the true X(0), which is what
        makes STATE_TRACKING & FULL runs coincide there
        '''
        X0 = np.asarray(X0, dtype=float)
        bank = EstimateBank.initial(X0, topology.L, n)
        bank = receive_neighbor_states(bank, X0, topology.communication)
        return cls(X=X0.copy(), bank=bank, t=0, rng=np.random.default_rng(seed))


@dataclass(frozen=True)
class EvaluationTrace:
    '''
    Per-step record of one evaluation window. Arrays are indexed [step, agent, ...]

    theta holds θ̂ in force after each step (for the batch evaluator it stays at
    theta_start until the final step, where the fitted value lands)
    '''
    t: np.ndarray           # (N,) plant step of each sample
    y: np.ndarray           # (N, L, d)
    phi: np.ndarray         # (N, L, d)
    g: np.ndarray           # (N, L) learning target
    cost: np.ndarray        # (N, L) local stage cost actually incurred
    theta: np.ndarray       # (N, L, d)
    tracking: np.ndarray    # (N, L) ‖z_i(t+1) - X(t+1)‖ of the observation each agent acts on
    theta_start: np.ndarray  # (L, d)
    persistency: tuple = ()

    @property
    def theta_end(self):
        return self.theta[-1] if len(self.t) else self.theta_start

    def window(self, i):
        '''(φ, g) samples of agent i'''
        return self.phi[:, i, :], self.g[:, i]


@dataclass(frozen=True)
class MetricsRecord:
    '''
    Metrics of one completed (or failed) policy iteration, per agent & global
    '''
    q: int
    t: int
    gain_err: np.ndarray        # (L,) ‖K̂_i - K*_i‖_F, NaN without an oracle
    gain_err_global: float
    theta_delta: np.ndarray     # (L,) ‖θ̂_q - θ̂_{q-1}‖
    tracking_err: np.ndarray    # (L,) max over the window
    tracking_end: np.ndarray    # (L,) at the window's last step
    cum_cost: np.ndarray        # (L,) Σ g_i over the window (the learning target, so team cost in team scope)
    lambda_min: np.ndarray      # (L,) smallest eigenvalue of Σφφᵀ, over the observable sub-basis in PARTIAL_ZERO
    team_cost: float = float('nan')  # Σ over agents & window of the stage cost actually incurred
    diverged: bool = False


@dataclass(frozen=True)
class RunResult:
    gains: np.ndarray
    thetas: np.ndarray
    metrics: tuple
    termination: Termination
    traces: tuple = ()
    error: str | None = None

    @property
    def failed(self):
        return self.termination in (Termination.DIVERGED, Termination.IMPROVEMENT_FAILED)

    @property
    def final_gain_error(self):
        return self.metrics[-1].gain_err_global if self.metrics else float('nan')


def observe(mode: ObservationMode, X, bank: EstimateBank, mask) -> np.ndarray:
    '''
    What each agent acts on, shape (L, L·n): row i is z_i
    '''
    if mode is ObservationMode.FULL:
        return np.tile(X, (mask.shape[0], 1))
    if mode is ObservationMode.PARTIAL_ZERO:
        return np.where(mask, X[None, :], 0.0)
    return bank.Z


def _guard(X, t, model, limit):
    norm = float(np.linalg.norm(X))
    if norm > limit or not np.isfinite(norm):
        per_agent = [np.linalg.norm(X[model.state_slice(i)]) for i in range(model.L)]
        agent = int(np.nanargmax(np.nan_to_num(per_agent, nan=np.inf)))
        raise DivergenceError(f'Plant state norm {norm:.3e} exceeds {limit:.3e} at step {t} (agent {agent + 1})',
                              t=t, agent=agent, norm=norm)


def st_e_evaluate(model: SystemModel, topology: TopologySpec, K, mode, noise: NoiseConfig, N, alpha,
                  state: SimulationState, thetas, cost_scope='local', evaluator='sgd',
                  divergence_limit=DIVERGENCE_LIMIT):
    '''
    One evaluation window of N plant steps under the fixed gain K

    Each step, every agent applies u_i(t) = -K_i·z_i(t) + η_i(t), the plant advances, a state
    tracking round runs (STATE_TRACKING mode), & agent i takes an SGD step on the Bellman
    sample φ_i = y_i(t) - y_i(t+1), where y_i(t+1) uses the noiseless next action -K_i·z_i(t+1)

    Args:
        thetas: (L, d) warm start, one row per agent; not modified

        state (SimulationState): plant, bank, step counter & PRNG at window start

    Returns:
        (thetas, EvaluationTrace, SimulationState) at window end

    Raises:
        DivergenceError: state norm above divergence_limit, or θ̂ no longer finite
    '''
    mode = ObservationMode(mode)
    L, n, m = model.L, model.n, model.m
    d = theta_dim(L, n, m)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    gains = [agent_gain(K, i, m) for i in range(L)]
    mask = slot_mask(topology.communication, n)
    thetas = np.array(thetas, dtype=float, copy=True)
    if thetas.shape != (L, d):
        raise ConfigurationError(f'θ̂ bank has shape {thetas.shape}, expected {(L, d)}')
    theta_start = thetas.copy()

    ts = np.empty(N, dtype=int)
    ys = np.empty((N, L, d))
    phis = np.empty((N, L, d))
    gs = np.empty((N, L))
    costs = np.empty((N, L))
    snapshots = np.empty((N, L, d))
    tracking = np.empty((N, L))

    X, bank, t, rng = state.X, state.bank, state.t, state.rng
    Z = observe(mode, X, bank, mask)
    for p in range(N):
        decay_index = p if noise.decay_scope is DecayScope.PER_ITERATION else t
        eta = noise_block(noise, t, decay_index, rng, m)
        U = np.concatenate([-gains[i] @ Z[i] + eta[i] for i in range(L)])
        X_next = step_global(model, X, U)
        _guard(X_next, t + 1, model, divergence_limit)
        if mode is ObservationMode.STATE_TRACKING:
            bank = update_estimates(bank, X_next, topology)
        Z_next = observe(mode, X_next, bank, mask)

        local = np.array([stage_cost(model, i, X[model.state_slice(i)], U[model.input_slice(i)]) for i in range(L)])
        g = np.full(L, local.sum()) if cost_scope == 'team' else local
        for i in range(L):
            y = quadratic_basis(Z[i], U[model.input_slice(i)])
            y_next = quadratic_basis(Z_next[i], -gains[i] @ Z_next[i])
            phi = bellman_sample(y, y_next)
            if evaluator == 'sgd':
                thetas[i] = sgd_step(thetas[i], phi, g[i], alpha)
            ys[p, i] = y
            phis[p, i] = phi
        if not np.all(np.isfinite(thetas)):
            agent = int(np.argmax(~np.all(np.isfinite(thetas), axis=1)))
            raise DivergenceError(f'θ̂ of agent {agent + 1} is no longer finite at step {t + 1}',
                                  t=t + 1, agent=agent, norm=float('inf'))
        ts[p] = t
        gs[p] = g
        costs[p] = local
        snapshots[p] = thetas
        tracking[p] = np.linalg.norm(Z_next - X_next[None, :], axis=1)
        X, Z, t = X_next, Z_next, t + 1

    if evaluator == 'batch' and N:
        for i in range(L):
            thetas[i] = np.linalg.lstsq(phis[:, i, :], gs[:, i], rcond=None)[0]
        snapshots[-1] = thetas

    if mode is ObservationMode.PARTIAL_ZERO:
        # Zero-filled slots pin whole columns of φ at 0; judge excitation over the rest
        supports = [basis_support(np.append(mask[i], np.ones(m, dtype=bool))) for i in range(L)]
    else:
        supports = [slice(None)] * L
    persistency = tuple(persistency_metric(phis[:, i, supports[i]], start=state.t) for i in range(L))
    trace = EvaluationTrace(t=ts, y=ys, phi=phis, g=gs, cost=costs, theta=snapshots, tracking=tracking,
                            theta_start=theta_start, persistency=persistency)
    return thetas, trace, SimulationState(X=X, bank=bank, t=t, rng=rng)


def _gain_errors(K, K_star, L, m):
    if K_star is None or not np.all(np.isfinite(K)):
        return np.full(L, np.nan), float('nan')
    per_agent = np.array([np.linalg.norm(agent_gain(K, i, m) - agent_gain(K_star, i, m)) for i in range(L)])
    return per_agent, float(np.linalg.norm(K - K_star))


def _failure_record(q, t, K, K_star, L, m):
    gain_err, gain_err_global = _gain_errors(K, K_star, L, m)
    nan = np.full(L, np.nan)
    return MetricsRecord(q=q, t=t, gain_err=gain_err, gain_err_global=gain_err_global, theta_delta=nan,
                         tracking_err=nan, tracking_end=nan, cum_cost=nan, lambda_min=nan, diverged=True)


def st_q_run(model: SystemModel, topology: TopologySpec, K1, mode, noise: NoiseConfig, config: LearningConfig,
             x0, seed=0, K_star=None) -> RunResult:
    '''
    Policy iteration: evaluate the current gains over a window, then every agent improves its
    own gain from its fitted Q-factor. θ̂ is warm started across windows. Stops once
    max_i ‖Δθ̂_i‖ < eps_K, or after q_max iterations

    Divergence or a failed improvement ends the run early; the result then carries the
    failure (termination & error) along with every metric gathered so far, plus a final
    record flagged diverged

    Args:
        K1: initial stacked gain, must be stabilizing

        K_star: optimal gain from the Riccati oracle, for metrics only (agents never see it)

    Returns:
        RunResult
    '''
    mode = ObservationMode(mode)
    L, n, m = model.L, model.n, model.m
    validate_topology(topology)
    if topology.L != L:
        raise ConfigurationError(f'Topology has {topology.L} nodes, model has {L} agents')
    if noise.L != L:
        raise ConfigurationError(f'Noise configuration covers {noise.L} agents, model has {L}')
    K = np.atleast_2d(np.asarray(K1, dtype=float)).copy()
    if K.shape != (L * m, L * n):
        raise ConfigurationError(f'K1 has shape {K.shape}, expected {(L * m, L * n)}')
    if not is_stabilizing(model, K):
        raise ConfigurationError(
            f'K1 not stabilizing '
            f'(closed loop spectral radius {spectral_radius(closed_loop(model, K)):.6f})')
    d = theta_dim(L, n, m)
    if config.N < d:
        warnings.warn(f'Evaluation window N={config.N} is shorter than θ dimension {d}; '
                      'policy evaluation is underdetermined', UserWarning)

    state = SimulationState.initial(x0, topology, n, seed)
    thetas = np.zeros((L, d))
    metrics, traces = [], []
    termination, error = Termination.MAX_ITERS, None
    for q in range(1, config.q_max + 1):
        try:
            new_thetas, trace, state = st_e_evaluate(
                model, topology, K, mode, noise, config.N, config.alpha, state, thetas,
                cost_scope=config.cost_scope, evaluator=config.evaluator, divergence_limit=config.divergence_limit)
        except DivergenceError as e:
            termination, error = Termination.DIVERGED, str(e)
            logger.warning('Iteration %d diverged: %s', q, e)
            metrics.append(_failure_record(q, e.t, K, K_star, L, m))
            break

        try:
            K_new = np.vstack([improve_policy(unpack_theta_to_H(new_thetas[i], L * n, m)) for i in range(L)])
        except ImprovementError as e:
            termination, error = Termination.IMPROVEMENT_FAILED, str(e)
            logger.warning('Policy improvement failed at iteration %d: %s', q, e)
            metrics.append(_failure_record(q, state.t, K, K_star, L, m))
            break

        deltas = np.linalg.norm(new_thetas - thetas, axis=1)
        thetas, K = new_thetas, K_new
        gain_err, gain_err_global = _gain_errors(K, K_star, L, m)
        record = MetricsRecord(
            q=q, t=state.t, gain_err=gain_err, gain_err_global=gain_err_global, theta_delta=deltas,
            tracking_err=trace.tracking.max(axis=0), tracking_end=trace.tracking[-1],
            cum_cost=trace.g.sum(axis=0), lambda_min=np.array([r.lambda_min for r in trace.persistency]),
            team_cost=float(trace.cost.sum()))
        metrics.append(record)
        if config.keep_traces:
            traces.append(trace)
        if not all(r.excited for r in trace.persistency):
            logger.warning('Iteration %d: excitation failed for agents %s', q,
                           [i + 1 for i, r in enumerate(trace.persistency) if not r.excited])
        logger.info('q=%d t=%d max Δθ=%.3e gain error=%.5f max tracking error=%.3e',
                    q, state.t, deltas.max(), gain_err_global, record.tracking_err.max())
        if deltas.max() < config.eps_K:
            termination = Termination.CONVERGED
            break

    logger.info('Run finished: %s after %d iterations', termination.value, len(metrics))
    return RunResult(gains=K, thetas=thetas, metrics=tuple(metrics), termination=termination,
                     traces=tuple(traces), error=error)
