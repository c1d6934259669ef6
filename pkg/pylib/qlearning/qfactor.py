# SPDX-FileCopyrightText: 2024-present Oori Data <info@oori.dev>
# SPDX-License-Identifier: Apache-2.0
# stqlearn.qlearning.qfactor

'''
Per-agent Q-factor algebra: quadratic basis, θ↔H packing, the SGD Bellman step,
policy improvement & window diagnostics

Agent i's Q-factor over v = [z; u_i] is vᵀ·H·v = yᵀ·θ, where y enumerates the monomials
v_a·v_b (a ≤ b) in row-major upper triangle order, & θ holds H_aa on the diagonal and
2·H_ab off it, in the same order.

>>> from stqlearn.qlearning.qfactor import quadratic_basis, pack_H_to_theta
>>> quadratic_basis(np.array([1.0, 2.0]), np.array([3.0]))
array([1., 2., 3., 4., 6., 9.])
>>> pack_H_to_theta(np.array([[1.0, 2.0], [2.0, 5.0]]))
array([1., 4., 5.])
'''

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from stqlearn.config import ConfigurationError, H22_COND_LIMIT
from stqlearn.excitation import PersistencyReport


class ImprovementError(RuntimeError):
    '''
    H22 is singular, ill-conditioned or non-finite, so no improved gain exists
    '''
    pass


def theta_dim(L, n, m) -> int:
    '''(Ln+m)(Ln+m+1)/2'''
    if min(L, n, m) < 1:
        raise ConfigurationError(f'L, n & m must be positive, got {L}, {n}, {m}')
    D = L * n + m
    return D * (D + 1) // 2


@lru_cache(maxsize=16)
def _triu(D):
    rows, cols = np.triu_indices(D)
    # 1 on the diagonal, 2 off it
    factor = np.where(rows == cols, 1.0, 2.0)
    return rows, cols, factor


def quadratic_basis(z, u) -> np.ndarray:
    '''
    All monomials v_a·v_b, a ≤ b, over v = [z; u], row-major upper triangle order
    '''
    v = np.concatenate([np.atleast_1d(np.asarray(z, dtype=float)), np.atleast_1d(np.asarray(u, dtype=float))])
    rows, cols, _ = _triu(v.size)
    return v[rows] * v[cols]


def basis_support(active) -> np.ndarray:
    '''
    Mask over the basis: true for monomials v_a·v_b whose factors are both active, i.e. the
    only entries of y (and so of φ) that can be nonzero when inactive coordinates of v stay 0
    '''
    active = np.asarray(active, dtype=bool)
    rows, cols, _ = _triu(active.size)
    return active[rows] & active[cols]


def pack_H_to_theta(H) -> np.ndarray:
    '''
    θ such that quadratic_basis(v)ᵀ·θ = vᵀ·H·v
    '''
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if H.shape[0] != H.shape[1]:
        raise ConfigurationError(f'H must be square, got shape {H.shape}')
    if not np.allclose(H, H.T, rtol=0, atol=1e-12 * max(1.0, np.abs(H).max(initial=0.0))):
        raise ConfigurationError('H must be symmetric to pack into θ')
    rows, cols, factor = _triu(H.shape[0])
    return H[rows, cols] * factor


@dataclass(frozen=True)
class QFactorParams:
    '''
    θ & its symmetric matrix form H, with blocks split at index Ln
    '''
    theta: np.ndarray
    H: np.ndarray
    Ln: int
    m: int

    @property
    def H11(self):
        return self.H[:self.Ln, :self.Ln]

    @property
    def H12(self):
        return self.H[:self.Ln, self.Ln:]

    @property
    def H21(self):
        return self.H[self.Ln:, :self.Ln]

    @property
    def H22(self):
        return self.H[self.Ln:, self.Ln:]


def unpack_theta_to_H(theta, Ln, m) -> QFactorParams:
    '''
    Exact inverse of pack_H_to_theta (off-diagonal entries halved)
    '''
    theta = np.asarray(theta, dtype=float)
    D = Ln + m
    if theta.shape != (D * (D + 1) // 2,):
        raise ConfigurationError(f'θ has shape {theta.shape}, expected ({D * (D + 1) // 2},) for Ln={Ln}, m={m}')
    rows, cols, factor = _triu(D)
    H = np.zeros((D, D))
    H[rows, cols] = theta / factor
    H[cols, rows] = theta / factor
    return QFactorParams(theta=theta, H=H, Ln=Ln, m=m)


def sgd_step(theta_hat, phi, g, alpha) -> np.ndarray:
    '''
    θ̂' = θ̂ - α·φ·(θ̂ᵀφ - g)
    '''
    return theta_hat - alpha * phi * (theta_hat @ phi - g)


def bellman_sample(y_t, y_next) -> np.ndarray:
    '''φ = y(t) - y(t+1)'''
    y_t = np.asarray(y_t, dtype=float)
    y_next = np.asarray(y_next, dtype=float)
    if y_t.shape != y_next.shape:
        raise ConfigurationError(f'Basis vectors differ in shape: {y_t.shape} vs {y_next.shape}')
    return y_t - y_next


def improve_policy(params: QFactorParams) -> np.ndarray:
    '''
    Greedy gain K_i = H22⁻¹·H21 for u = -K_i·z, shape m×Ln

    Raises:
        ImprovementError: H22 non-finite, singular or with condition number ≥ H22_COND_LIMIT
    '''
    H22 = params.H22
    if not (np.all(np.isfinite(H22)) and np.all(np.isfinite(params.H21))):
        raise ImprovementError('H22/H21 contain non-finite entries')
    cond = np.linalg.cond(H22)
    if not np.isfinite(cond) or cond >= H22_COND_LIMIT:
        raise ImprovementError(f'H22 is singular or ill-conditioned (condition number {cond:.3e})')
    return np.linalg.solve(H22, params.H21)


def bellman_residual(theta_hat, phi_window, g_window) -> float:
    '''
    Mean over the window of (φᵀθ̂ - g)²
    '''
    phi_window = np.atleast_2d(np.asarray(phi_window, dtype=float))
    g_window = np.atleast_1d(np.asarray(g_window, dtype=float))
    if phi_window.shape[0] == 0:
        raise ValueError('Bellman residual needs a nonempty window')
    return float(np.mean((phi_window @ theta_hat - g_window) ** 2))


def persistency_metric(phi_window, start=0) -> PersistencyReport:
    '''
    Extreme eigenvalues of Σ_t φ(t)φ(t)ᵀ over the window; `excited` is False when the
    smallest is zero within tolerance, i.e. the window does not identify θ
    '''
    phi_window = np.atleast_2d(np.asarray(phi_window, dtype=float))
    gram = phi_window.T @ phi_window
    eigs = np.linalg.eigvalsh(gram)
    lo, hi = float(eigs[0]), float(eigs[-1])
    excited = bool(np.isfinite(lo) and lo > 1e-12 * max(1.0, hi))
    return PersistencyReport(lambda_min=lo, lambda_max=hi, start=start, stop=start + phi_window.shape[0],
                             excited=excited)
