"""
Biorthogonal eigensystems of traceless 2x2 Bloch matrices.

Right eigenvectors come from the Pauli decomposition in closed form; left
eigenvectors are the rows of the inverse of the right-eigenvector matrix, so
``<u~_m|u_n> = delta_mn`` holds to rounding without any matching step.

Convention: index 0 is the lower band (eigenvalue ``-eps``), index 1 the
upper band (``+eps``), with ``eps`` on the branch fixed in :mod:`biodqpt.model`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from biodqpt.errors import DegeneracyError, ZeroNormError
from biodqpt.model import ModelParams, bloch_hamiltonian, branch_fixed_sqrt

DEGENERACY_FLOOR = 1e-9
# cond(R) beyond this means self-orthogonal eigenvectors (exceptional point)
SINGULAR_COND = 1e12
_TINY = 1e-300


@dataclass(frozen=True)
class BiorthEigenSystem:
    """Branch-fixed eigenvalue with right kets and left bras at one momentum."""

    epsilon: complex
    right_minus: np.ndarray
    right_plus: np.ndarray
    left_minus: np.ndarray
    left_plus: np.ndarray

    @property
    def right(self) -> np.ndarray:
        """Columns ``|u_->, |u_+>``."""
        return np.column_stack([self.right_minus, self.right_plus])

    @property
    def left(self) -> np.ndarray:
        """Rows ``<u~_-|, <u~_+|``."""
        return np.vstack([self.left_minus, self.left_plus])

    def matrix_element(self, op: np.ndarray) -> np.ndarray:
        """``<u~_m| op |u_n>`` as a 2x2 array indexed (m, n)."""
        return self.left @ op @ self.right


def _pauli_of(H):
    """Recover ``(d_y, d_z)`` from a traceless matrix with no sigma_x part."""
    H = np.asarray(H, dtype=complex)
    d_z = 0.5 * (H[..., 0, 0] - H[..., 1, 1])
    d_y = 0.5j * (H[..., 0, 1] - H[..., 1, 0])
    return d_y, d_z


def _eigencolumn(d_y, d_z, lam):
    """Right eigenvector of ``d_y sigma_y + d_z sigma_z`` for eigenvalue ``lam``.

    Two closed-form candidates are available; the one with the larger norm
    is used so neither degenerates at ``d_y = 0``.
    """
    a0, a1 = 1j * d_y, d_z - lam
    b0, b1 = d_z + lam, 1j * d_y
    use_a = (np.abs(a0) ** 2 + np.abs(a1) ** 2) >= (np.abs(b0) ** 2 + np.abs(b1) ** 2)
    v = np.stack([np.where(use_a, a0, b0), np.where(use_a, a1, b1)], axis=-1)
    return _fix_gauge(v)


def _fix_gauge(v):
    """Unit norm, largest-modulus component real and positive."""
    idx = np.argmax(np.abs(v), axis=-1)
    pivot = np.take_along_axis(v, idx[..., None], axis=-1)
    v = v * (np.abs(pivot) / pivot)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _eigensystem_from_pauli(d_y, d_z, floor):
    eps = branch_fixed_sqrt(d_y * d_y + d_z * d_z)
    scale = np.maximum(np.abs(d_y), np.abs(d_z))
    if np.any(np.abs(eps) <= floor * scale):
        raise DegeneracyError(f"|eps| below degeneracy floor ({np.min(np.abs(eps)):.3e})")
    R = np.stack([_eigencolumn(d_y, d_z, -eps), _eigencolumn(d_y, d_z, eps)], axis=-1)
    det = R[..., 0, 0] * R[..., 1, 1] - R[..., 0, 1] * R[..., 1, 0]
    # columns have unit norm, so 1/|det| bounds the condition number from below
    if np.any(np.abs(det) < 1.0 / SINGULAR_COND):
        raise DegeneracyError("right-eigenvector matrix is singular (exceptional point)")
    L = np.empty_like(R)
    L[..., 0, 0] = R[..., 1, 1] / det
    L[..., 0, 1] = -R[..., 0, 1] / det
    L[..., 1, 0] = -R[..., 1, 0] / det
    L[..., 1, 1] = R[..., 0, 0] / det
    return eps, R, L


def biortho_eigensystem(H, floor: float = DEGENERACY_FLOOR) -> BiorthEigenSystem:
    """Biorthonormal eigensystem of one traceless 2x2 Bloch matrix.

    Raises
    ------
    DegeneracyError
        If ``|eps|`` is below ``floor`` relative to the largest Pauli
        component, or the two right eigenvectors are (numerically) parallel.
    """
    d_y, d_z = _pauli_of(H)
    eps, R, L = _eigensystem_from_pauli(d_y, d_z, floor)
    return BiorthEigenSystem(
        epsilon=complex(eps),
        right_minus=R[:, 0].copy(),
        right_plus=R[:, 1].copy(),
        left_minus=L[0].copy(),
        left_plus=L[1].copy(),
    )


def eigensystem_arrays(params: ModelParams, k, floor: float = DEGENERACY_FLOOR, smooth: bool = False):
    """Vectorised eigensystems on a momentum array.

    Returns ``(eps, R, L)`` with shapes ``(K,)``, ``(K, 2, 2)``, ``(K, 2, 2)``;
    ``R[j]`` holds right eigenvectors as columns, ``L[j]`` left ones as rows.
    With ``smooth`` the per-column gauge is chosen along the sweep to keep
    consecutive vectors close (observables do not depend on it).
    """
    d_y, d_z = _pauli_of(bloch_hamiltonian(params, np.atleast_1d(k)))
    eps, R, L = _eigensystem_from_pauli(d_y, d_z, floor)
    if smooth:
        R, L = smooth_gauge(R, L)
    return eps, R, L


def smooth_gauge(R, L):
    """Re-phase eigenvector columns so that consecutive momenta vary smoothly.

    At each step both pivot conventions (component 0 or component 1 real
    positive) are tried and the one closer to the previous vector is kept.
    """
    R = R.copy()
    L = L.copy()
    for j in range(1, R.shape[0]):
        for col in range(2):
            v = R[j, :, col]
            prev = R[j - 1, :, col]
            best, best_dist = None, np.inf
            for p in range(2):
                if abs(v[p]) == 0.0:
                    continue
                phase = abs(v[p]) / v[p]
                dist = np.linalg.norm(v * phase - prev)
                if dist < best_dist:
                    best, best_dist = phase, dist
            R[j, :, col] = v * best
            L[j, col, :] = L[j, col, :] / best
    return R, L


def expand(state, eig: BiorthEigenSystem) -> tuple[complex, complex]:
    """Coefficients ``(c_-, c_+) = (<u~_-|state>, <u~_+|state>)``."""
    c = eig.left @ np.asarray(state, dtype=complex)
    return complex(c[0]), complex(c[1])


def biortho_inner(a, b, eig: BiorthEigenSystem) -> complex:
    """Associated-state inner product ``<a~|b> = sum_n d_n^* c_n``."""
    d = np.array(expand(a, eig))
    c = np.array(expand(b, eig))
    return complex(np.vdot(d, c))


def transition_probability_static(a, b, eig: BiorthEigenSystem) -> float:
    """``<a~|b><b~|a> / (<a~|a><b~|b>)``, real and in [0, 1]."""
    d = np.array(expand(a, eig))
    c = np.array(expand(b, eig))
    norm_a = float(np.vdot(d, d).real)
    norm_b = float(np.vdot(c, c).real)
    if norm_a < _TINY or norm_b < _TINY:
        raise ZeroNormError("biorthogonal self-norm vanished")
    overlap = np.vdot(d, c)
    return min(1.0, float((overlap * overlap.conjugate()).real) / (norm_a * norm_b))
