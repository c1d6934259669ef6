# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.harness

'''
Experiment orchestration: configuration files, seeded runs, ablation sweeps & CSV output

Experiment files are TOML, conventionally written line by line as `section.key = value`
with matrices as bracketed row lists, e.g.

    system.A = [[0.2, 0.4], [0.4, 0.2]]
    topology.W = [[0.5, 0.5], [0.5, 0.5]]
    learning.K1 = [[0.1, 0.0], [0.0, 0.1]]
    learning.N = 1000

Agents are numbered from 1 in files (edge lists) & in CSV output, where agent 0 is the
global row.

>>> from stqlearn.harness import load_config, run_experiment, emit_csv
>>> config = load_config('experiment.cfg')
>>> result = run_experiment(config)
>>> emit_csv(result.records, config.out_dir, result.final_gains)
'''

import asyncio
import concurrent.futures
import copy
import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import tomli

from stqlearn.async_helper import gather_with_progress, schedule_callable
from stqlearn.config import (DEFAULT_ALPHA, DEFAULT_DECAY, DEFAULT_EPS_K, DEFAULT_N, DEFAULT_NOISE_A,
                             DEFAULT_NOISE_B, DEFAULT_Q_MAX, DEFAULT_SEED, DIVERGENCE_LIMIT, OMEGA_MAX,
                             ConfigurationError, attr_dict)
from stqlearn.excitation import NoiseConfig
from stqlearn.lti_core import SystemModel, check_interconnection, closed_loop, is_stabilizing, spectral_radius
from stqlearn.qlearning import LearningConfig, MetricsRecord, ObservationMode, Termination, st_q_run
from stqlearn.riccati import solve_dare
from stqlearn.topology import Graph, TopologySpec, validate_topology

logger = logging.getLogger(__name__)

FOUR_AGENT_CONFIG = Path(__file__).parent / 'resources' / 'configs' / 'four_agent.cfg'

METRICS_HEADER = ['q', 't', 'agent', 'gain_err', 'theta_delta', 'tracking_err', 'cum_cost', 'lambda_min', 'diverged']
GAINS_HEADER = ['row', 'col', 'value']

# Recognized keys per section; anything else is rejected as a likely typo
KNOWN_KEYS = {
    'system': {'A', 'B', 'P', 'R', 'x0', 'n', 'm'},
    'topology': {'W', 'communication_edges', 'interconnection_edges'},
    'noise': {'a', 'b', 'c', 'omega_max', 'decay_scope'},
    'learning': {'K1', 'N', 'alpha', 'eps_K', 'q_max', 'mode', 'seed', 'cost_scope', 'evaluator',
                 'divergence_limit'},
    'output': {'out_dir'},
}

# Short names accepted by sweeps & overrides
ALIASES = {
    'N': 'learning.N', 'alpha': 'learning.alpha', 'eps_K': 'learning.eps_K', 'q_max': 'learning.q_max',
    'mode': 'learning.mode', 'seed': 'learning.seed', 'cost_scope': 'learning.cost_scope',
    'evaluator': 'learning.evaluator', 'c': 'noise.c', 'a': 'noise.a', 'b': 'noise.b',
    'decay_scope': 'noise.decay_scope', 'out_dir': 'output.out_dir',
}


@dataclass(frozen=True)
class ExperimentConfig:
    model: SystemModel
    topology: TopologySpec
    K1: np.ndarray
    x0: np.ndarray
    noise: NoiseConfig
    learning: LearningConfig
    mode: ObservationMode
    seed: int
    out_dir: Path
    raw: dict


@dataclass(frozen=True)
class ExperimentResult:
    records: tuple
    final_gains: np.ndarray
    termination: Termination
    K_star: np.ndarray
    error: str | None = None

    def summary(self):
        last = self.records[-1] if self.records else None
        return attr_dict(
            termination=self.termination.value,
            iterations=len(self.records),
            gain_err=last.gain_err_global if last else float('nan'),
            diverged=bool(last.diverged) if last else False,
            error=self.error)


def _parse(fp_or_str):
    # Ensure we have a file-like object
    if isinstance(fp_or_str, str):
        fp_or_str = io.BytesIO(fp_or_str.encode('utf-8'))
    elif isinstance(fp_or_str, bytes):
        fp_or_str = io.BytesIO(fp_or_str)
    try:
        raw = tomli.load(fp_or_str)
    except tomli.TOMLDecodeError as e:
        raise ConfigurationError(f'Configuration parse error: {e}') from e
    if not raw:
        raise ConfigurationError('Configuration parse error: file is empty')
    return raw


def load_config(path_or_fp) -> ExperimentConfig:
    '''
    Read & validate an experiment file

    path_or_fp - filesystem path, or binary file-like object with TOML content

    >>> config = load_config(FOUR_AGENT_CONFIG)
    '''
    if hasattr(path_or_fp, 'read'):
        return config_from_mapping(_parse(path_or_fp))
    with open(path_or_fp, mode='rb') as fp:
        return config_from_mapping(_parse(fp))


def loads_config(text) -> ExperimentConfig:
    '''
    Same as load_config, from a str or bytes of TOML content
    '''
    return config_from_mapping(_parse(text))


def _section(raw, name):
    section = raw.get(name, {})
    if not isinstance(section, dict):
        raise ConfigurationError(f'[{name}] must be a section of key/value pairs')
    return section


def _per_agent_blocks(value, L, rows, cols, name):
    '''
    Scalar → scalar·I for every agent; 1D of length L → per-agent scalar·I;
    2D (rows×cols) → same block for every agent; 3D → one block per agent
    '''
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return [float(arr) * np.eye(rows, cols) for _ in range(L)]
    if arr.ndim == 1 and arr.size == L:
        return [s * np.eye(rows, cols) for s in arr]
    if arr.ndim == 2 and arr.shape == (rows, cols):
        return [arr.copy() for _ in range(L)]
    if arr.ndim == 3 and arr.shape == (L, rows, cols):
        return list(arr)
    raise ConfigurationError(f'{name} has shape {arr.shape}; expected a scalar, {L} scalars, '
                             f'one {rows}×{cols} block or {L} such blocks')


def _input_blocks(value, L, n, m):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 2 and arr.shape == (L * n, L * m) and L > 1:
        # Global block-diagonal B; anything off the diagonal blocks would couple inputs across agents
        blocks = [arr[i * n:(i + 1) * n, i * m:(i + 1) * m] for i in range(L)]
        mask = np.kron(np.eye(L), np.ones((n, m))).astype(bool)
        if np.any(arr[~mask] != 0):
            raise ConfigurationError('system.B must be block diagonal (each agent drives only its own state)')
        return blocks
    return _per_agent_blocks(value, L, n, m, 'system.B')


def _edges(value, L, name):
    try:
        return frozenset((int(i) - 1, int(j) - 1) for i, j in value)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f'{name} must be a list of [i, j] agent pairs (numbered from 1)') from e


def _per_agent(value, L, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(L, float(arr))
    if arr.shape == (L,):
        return arr
    raise ConfigurationError(f'{name} must be a scalar or a list of {L} values')


def config_from_mapping(raw) -> ExperimentConfig:
    '''
    Build & validate an ExperimentConfig from the parsed (nested) mapping. Missing optional
    values take the package defaults. Raises ConfigurationError naming the failing assumption
    '''
    raw = copy.deepcopy(dict(raw))
    for name in raw:
        if name not in KNOWN_KEYS:
            raise ConfigurationError(f'Unknown configuration section {name!r}')
        unknown = set(_section(raw, name)) - KNOWN_KEYS[name]
        if unknown:
            raise ConfigurationError(f'Unknown keys in [{name}]: {", ".join(sorted(unknown))}')

    system, topo, noise = _section(raw, 'system'), _section(raw, 'topology'), _section(raw, 'noise')
    learning, output = _section(raw, 'learning'), _section(raw, 'output')
    if 'A' not in system:
        raise ConfigurationError('system.A is required')
    n, m = int(system.get('n', 1)), int(system.get('m', 1))
    A = np.atleast_2d(np.asarray(system['A'], dtype=float))
    if A.shape[0] % n:
        raise ConfigurationError(f'system.A has {A.shape[0]} rows, not a multiple of n={n}')
    L = A.shape[0] // n

    model = SystemModel(
        A=A,
        B_blocks=_input_blocks(system.get('B', 1.0), L, n, m),
        P_blocks=_per_agent_blocks(system.get('P', 1.0), L, n, n, 'system.P'),
        R_blocks=_per_agent_blocks(system.get('R', 1.0), L, m, m, 'system.R'))

    if 'x0' not in system:
        raise ConfigurationError('system.x0 is required')
    x0 = np.asarray(system['x0'], dtype=float)
    x0 = np.full(L * n, float(x0)) if x0.ndim == 0 else x0
    if x0.shape != (L * n,):
        raise ConfigurationError(f'system.x0 has shape {x0.shape}, expected ({L * n},)')

    if 'W' not in topo and L > 1:
        raise ConfigurationError('topology.W is required')
    W = np.atleast_2d(np.asarray(topo.get('W', [[1.0]]), dtype=float))
    if W.shape != (L, L):
        raise ConfigurationError(f'topology.W has shape {W.shape}, expected {(L, L)}')
    communication = (Graph(L, _edges(topo['communication_edges'], L, 'topology.communication_edges'))
                     if 'communication_edges' in topo else Graph.from_support(W))
    interconnection = (Graph(L, _edges(topo['interconnection_edges'], L, 'topology.interconnection_edges'))
                       if 'interconnection_edges' in topo else Graph.from_support(A, block=n))
    topology = TopologySpec(interconnection, communication, W)
    check_interconnection(model, interconnection)
    validate_topology(topology)

    noise_config = NoiseConfig(
        a=_per_agent(noise.get('a', DEFAULT_NOISE_A), L, 'noise.a'),
        b=_per_agent(noise.get('b', DEFAULT_NOISE_B), L, 'noise.b'),
        c=float(noise.get('c', DEFAULT_DECAY)),
        omega_max=int(noise.get('omega_max', OMEGA_MAX)),
        decay_scope=noise.get('decay_scope', 'per-iteration'))

    learning_config = LearningConfig(
        N=int(learning.get('N', DEFAULT_N)),
        alpha=float(learning.get('alpha', DEFAULT_ALPHA)),
        eps_K=float(learning.get('eps_K', DEFAULT_EPS_K)),
        q_max=int(learning.get('q_max', DEFAULT_Q_MAX)),
        cost_scope=learning.get('cost_scope', 'local'),
        evaluator=learning.get('evaluator', 'sgd'),
        divergence_limit=float(learning.get('divergence_limit', DIVERGENCE_LIMIT)))
    try:
        mode = ObservationMode(learning.get('mode', 'st'))
    except ValueError as e:
        raise ConfigurationError(f'Unknown learning.mode {learning.get("mode")!r}') from e

    if 'K1' not in learning:
        raise ConfigurationError('learning.K1 is required')
    K1 = np.atleast_2d(np.asarray(learning['K1'], dtype=float))
    if K1.shape != (L * m, L * n):
        raise ConfigurationError(f'learning.K1 has shape {K1.shape}, expected {(L * m, L * n)}')
    if not is_stabilizing(model, K1):
        raise ConfigurationError(f'K1 not stabilizing '
                                 f'(closed loop spectral radius {spectral_radius(closed_loop(model, K1)):.6f})')

    return ExperimentConfig(model=model, topology=topology, K1=K1, x0=x0, noise=noise_config,
                            learning=learning_config, mode=mode, seed=int(learning.get('seed', DEFAULT_SEED)),
                            out_dir=Path(output.get('out_dir', 'runs')), raw=raw)


def with_override(config: ExperimentConfig, key, value) -> ExperimentConfig:
    '''
    Copy of config with one setting replaced, e.g. with_override(config, 'alpha', 1.0).
    key is a dotted `section.key` or one of the short ALIASES
    '''
    dotted = ALIASES.get(key, key)
    if '.' not in dotted:
        raise ConfigurationError(f'Unknown setting {key!r}; use section.key or one of {", ".join(ALIASES)}')
    section, name = dotted.split('.', 1)
    raw = copy.deepcopy(config.raw)
    raw.setdefault(section, {})[name] = value
    return config_from_mapping(raw)


def _coerce(text):
    # TOML value syntax, so numbers, strings & bracketed lists all work; bare words become strings
    try:
        return tomli.loads(f'v = {text}')['v']
    except tomli.TOMLDecodeError:
        return text.strip()


def parse_sweep(spec):
    '''
    'alpha=0.01,1.0' → ('alpha', [0.01, 1.0])
    '''
    param, sep, values = spec.partition('=')
    if not sep or not param.strip() or not values.strip():
        raise ConfigurationError(f'Sweep must look like param=v1,v2,...; got {spec!r}')
    return param.strip(), [_coerce(v) for v in values.split(',')]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    '''
    Solve for K* (observer-side only, for metrics), then run the learner. Divergence &
    improvement failures are recorded in the result, not raised. Deterministic for a fixed seed
    '''
    solution = solve_dare(config.model)
    logger.info('Running %s mode, seed %d: N=%d alpha=%g q_max=%d', config.mode.value, config.seed,
                config.learning.N, config.learning.alpha, config.learning.q_max)
    result = st_q_run(config.model, config.topology, config.K1, config.mode, config.noise, config.learning,
                      config.x0, seed=config.seed, K_star=solution.K_star)
    return ExperimentResult(records=result.metrics, final_gains=result.gains, termination=result.termination,
                            K_star=solution.K_star, error=result.error)


def metrics_rows(record: MetricsRecord):
    '''
    CSV rows for one iteration: the global row (agent 0), then agents 1..L. Per agent, cum_cost is
    Σ g_i (the learning target); the global row carries the stage cost the team actually incurred
    '''
    rows = [[record.q, record.t, 0, float(record.gain_err_global), float(np.max(record.theta_delta)),
             float(np.max(record.tracking_err)), float(record.team_cost), float(np.min(record.lambda_min)),
             int(record.diverged)]]
    for i in range(len(record.gain_err)):
        rows.append([record.q, record.t, i + 1, float(record.gain_err[i]), float(record.theta_delta[i]),
                     float(record.tracking_err[i]), float(record.cum_cost[i]), float(record.lambda_min[i]),
                     int(record.diverged)])
    return rows


def _write_csv(path, header, rows):
    with open(path, 'w', encoding='utf-8', newline='') as fp:
        writer = csv.writer(fp, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)


def emit_csv(records, out_dir, final_gains=None):
    '''
    Write metrics.csv (one row per agent per iteration, plus the global row) &
    final_gains.csv (terminal gain, row-major, numbered from 1) into out_dir

    Returns:
        list of the two paths written
    '''
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics_path = out_dir / 'metrics.csv'
    gains_path = out_dir / 'final_gains.csv'
    _write_csv(metrics_path, METRICS_HEADER, [row for rec in records for row in metrics_rows(rec)])
    gain_rows = []
    if final_gains is not None:
        gains = np.atleast_2d(final_gains)
        gain_rows = [[r + 1, c + 1, float(gains[r, c])] for r in range(gains.shape[0]) for c in range(gains.shape[1])]
    _write_csv(gains_path, GAINS_HEADER, gain_rows)
    return [metrics_path, gains_path]


def run_and_emit(config: ExperimentConfig, out_dir=None) -> ExperimentResult:
    '''
    run_experiment, then emit_csv into out_dir (default: the config's). Module-level so
    process pools can pickle it
    '''
    result = run_experiment(config)
    emit_csv(result.records, out_dir or config.out_dir, result.final_gains)
    return result


async def _sweep_async(configs, dirs, indicator):
    with concurrent.futures.ProcessPoolExecutor() as executor:
        tasks = [schedule_callable(run_and_emit, cfg, d, executor=executor) for cfg, d in zip(configs, dirs)]
        return await gather_with_progress(tasks, indicator=indicator)


def sweep(config: ExperimentConfig, param, values, out_dir=None, parallel=True, indicator=True):
    '''
    Run the same experiment once per value of one setting, each into its own
    `<out_dir>/<param>=<value>/` sub-directory with its own seeded PRNG

    Returns:
        list of (value, ExperimentResult), in the order given
    '''
    out_dir = Path(out_dir or config.out_dir)
    configs = [with_override(config, param, v) for v in values]
    dirs = [out_dir / f'{param}={v}' for v in values]
    logger.info('Sweeping %s over %s', param, values)
    if parallel and len(configs) > 1:
        results = asyncio.run(_sweep_async(configs, dirs, indicator))
    else:
        results = [run_and_emit(cfg, d) for cfg, d in zip(configs, dirs)]
    return list(zip(values, results))
