# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.config

# Given the nature of a config module, we don't use __all__
# & avoid top-level imports where possible
# pylint: disable=wrong-import-position

'''
Configuration & globally-relevant values

Numeric defaults shared across the modules, and the error raised whenever
a model, topology or experiment file fails validation
'''

# Fixed-point tolerance & iteration cap for the Riccati & Lyapunov recursions
RICCATI_TOL = 1e-10
RICCATI_MAX_ITER = 10**6

# Closed loop counts as stable only if spectral radius < 1 - STABILITY_MARGIN
STABILITY_MARGIN = 1e-9

# Eigenvalue floor for the positive semi-definite check on cost weights
PSD_FLOOR = -1e-10

# Row & column sums of a doubly stochastic weight matrix
STOCHASTIC_TOL = 1e-12

# Policy iteration stopping rule: max over agents of the θ change, & iteration cap
DEFAULT_EPS_K = 1e-4
DEFAULT_Q_MAX = 100

# Global state norm beyond which a learning run is declared diverged
DIVERGENCE_LIMIT = 1e6

# Largest acceptable condition number of H22 at policy improvement
H22_COND_LIMIT = 1e12

# Excitation noise: sinusoid count, decay base & amplitudes
OMEGA_MAX = 15
DEFAULT_DECAY = 0.9999
DEFAULT_NOISE_A = 0.01
DEFAULT_NOISE_B = 0.001

DEFAULT_N = 1000
DEFAULT_ALPHA = 0.01
DEFAULT_SEED = 0


class ConfigurationError(ValueError):
    '''
    Model, topology or experiment settings are inconsistent, or violate one of the
    standing assumptions (stabilizability, connectivity, weight matrix, excitation, step size)
    '''
    pass


class attr_dict(dict):
    # XXX: Should unknown attr access return None rather than raise?
    # If so, can just do: __getattr__ = dict.get
    def __getattr__(self, attr):
        try:
            return self[attr]
        except KeyError:
            # Substitute with more normally expected exception
            raise AttributeError(attr)
    __setattr__ = dict.__setitem__
    __delattr__ = dict.__delitem__
