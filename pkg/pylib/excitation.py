# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.excitation

'''
Decaying persistent-excitation noise added to each agent's control during policy evaluation

η_i(t) = (b_i·rand(-1, 1) + a_i·Σ_{ω=1}^{15} sin(ωt)³·cos(ωt)) · c^p

where p is the step index within the current evaluation window (per-iteration decay)
or the global plant step (global decay)
'''

from dataclasses import dataclass
from enum import Enum

import numpy as np

from stqlearn.config import ConfigurationError, OMEGA_MAX, DEFAULT_DECAY, DEFAULT_NOISE_A, DEFAULT_NOISE_B


class DecayScope(Enum):
    PER_ITERATION = 'per-iteration'  # p resets at each policy improvement
    GLOBAL = 'global'  # p is the global plant step


@dataclass(frozen=True)
class NoiseConfig:
    '''
    Per-agent amplitudes a_i (sinusoid sum) & b_i (uniform), decay base c in (0, 1]
    '''
    a: np.ndarray
    b: np.ndarray
    c: float = DEFAULT_DECAY
    omega_max: int = OMEGA_MAX
    decay_scope: DecayScope = DecayScope.PER_ITERATION

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.shape != b.shape:
            raise ConfigurationError(f'Noise amplitudes a & b differ in length ({a.size} vs {b.size})')
        if np.any(a < 0) or np.any(b < 0):
            raise ConfigurationError('noise amplitudes must be nonnegative')
        if not (0 < self.c <= 1):
            raise ConfigurationError(f'noise decay base c must lie in (0, 1], got {self.c}')
        if self.omega_max < 1:
            raise ConfigurationError(f'omega_max must be at least 1, got {self.omega_max}')
        object.__setattr__(self, 'a', a)
        object.__setattr__(self, 'b', b)
        try:
            object.__setattr__(self, 'decay_scope', DecayScope(self.decay_scope))
        except ValueError as e:
            raise ConfigurationError(
                f'Unknown decay scope {self.decay_scope!r}; expected per-iteration or global') from e

    @classmethod
    def uniform(cls, L, a=DEFAULT_NOISE_A, b=DEFAULT_NOISE_B, **kwargs):
        '''Same amplitudes for all L agents'''
        return cls(np.full(L, float(a)), np.full(L, float(b)), **kwargs)

    @property
    def L(self):
        return self.a.size


@dataclass(frozen=True)
class PersistencyReport:
    '''
    Extreme eigenvalues of Σφφᵀ over an evaluation window [start, stop)
    '''
    lambda_min: float
    lambda_max: float
    start: int
    stop: int
    excited: bool


def decay_factor(config: NoiseConfig, p) -> float:
    '''c^p'''
    if p < 0:
        raise ValueError(f'Decay index must be nonnegative, got {p}')
    return float(config.c ** p)


def sinusoid_sum(t, omega_max=OMEGA_MAX) -> float:
    '''Σ_{ω=1}^{omega_max} sin(ωt)³·cos(ωt)'''
    w = np.arange(1, omega_max + 1) * float(t)
    return float(np.sum(np.sin(w) ** 3 * np.cos(w)))


def noise_sample(config: NoiseConfig, i, t, p, rng: np.random.Generator, m=1) -> np.ndarray:
    '''
    Excitation for agent i at plant step t with decay index p; length-m vector with
    independent uniform draws per input coordinate
    '''
    uniform = rng.uniform(-1.0, 1.0, size=m)
    return (config.b[i] * uniform + config.a[i] * sinusoid_sum(t, config.omega_max)) * decay_factor(config, p)


def noise_block(config: NoiseConfig, t, p, rng: np.random.Generator, m=1) -> np.ndarray:
    '''
    Excitation for every agent at one plant step, shape (L, m). Draws happen in agent
    index order from the one run-owned generator, so a seed fixes the whole sequence
    '''
    uniform = rng.uniform(-1.0, 1.0, size=(config.L, m))
    shape = sinusoid_sum(t, config.omega_max)
    return (config.b[:, None] * uniform + config.a[:, None] * shape) * decay_factor(config, p)
