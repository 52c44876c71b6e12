"""
Bloch Hamiltonians of the non-Hermitian Kitaev chain.

Both the nearest-neighbour chain and its next-nearest-neighbour extension are
handled by one code path.  In the Nambu basis ``(c_k, c_{-k}^dagger)`` the
Bloch matrix is

    H(k) = d_y(k) sigma_y + d_z(k) sigma_z,
    d_y  = delta * sin k,
    d_z  = -(t1 cos k + t2 cos 2k + mu_r + i gamma),

so ``H(k)^2 = eps(k)^2 * I`` with ``eps^2 = d_y^2 + d_z^2``.  Setting ``t2 = 0``
gives the plain Kitaev chain.

A 2x2 Bloch matrix is represented as a plain ``numpy`` array of shape
``(2, 2)``; vectorised calls over a momentum array return shape ``(K, 2, 2)``.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, replace

import numpy as np

from biodqpt.errors import ConfigError

TWO_PI = 2.0 * np.pi

# debug hook used by the selftest negative control; never set in production
_DEBUG = {"branch_flip": False}


@dataclass(frozen=True)
class ModelParams:
    """Hamiltonian parameters of one chain (all in units of energy)."""

    t1: float
    delta: float
    mu_r: float
    gamma: float
    t2: float = 0.0

    def __post_init__(self):
        for name in ("t1", "t2", "delta", "mu_r", "gamma"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.t1 == 0.0:
            raise ConfigError("t1 = 0 is a degenerate flat-band limit")
        if self.delta == 0.0:
            raise ConfigError("delta = 0 is a degenerate flat-band limit")

    @property
    def mu(self) -> complex:
        """Complex chemical potential mu_r + i gamma."""
        return complex(self.mu_r, self.gamma)

    @property
    def is_hermitian(self) -> bool:
        return self.gamma == 0.0

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


def reduce_momentum(k):
    """Map momenta into [0, 2 pi)."""
    return np.mod(k, TWO_PI)


def pauli_components(params: ModelParams, k):
    """Return ``(d_y, d_z)`` such that ``H(k) = d_y sigma_y + d_z sigma_z``."""
    k = reduce_momentum(np.asarray(k, dtype=float))
    d_y = params.delta * np.sin(k) + 0j
    d_z = -(params.t1 * np.cos(k) + params.t2 * np.cos(2.0 * k) + params.mu)
    return d_y, d_z


def branch_fixed_sqrt(z):
    """Square root with Re >= 0, and Im >= 0 when Re == 0."""
    root = np.sqrt(np.asarray(z, dtype=complex))
    flip = (root.real < 0) | ((root.real == 0) & (root.imag < 0))
    root = np.where(flip, -root, root)
    if _DEBUG["branch_flip"]:
        root = -root
    return root


@contextlib.contextmanager
def inject_branch_flip():
    """Temporarily return the wrong square-root branch (selftest negative control)."""
    _DEBUG["branch_flip"] = True
    try:
        yield
    finally:
        _DEBUG["branch_flip"] = False


def bloch_hamiltonian(params: ModelParams, k) -> np.ndarray:
    """Bloch matrix at momentum ``k`` (scalar -> (2, 2), array -> (K, 2, 2))."""
    d_y, d_z = pauli_components(params, k)
    H = np.empty(np.shape(d_y) + (2, 2), dtype=complex)
    H[..., 0, 0] = d_z
    H[..., 0, 1] = -1j * d_y
    H[..., 1, 0] = 1j * d_y
    H[..., 1, 1] = -d_z
    return H


def dispersion(params: ModelParams, k):
    """Branch-fixed upper-band energy ``eps(k)``; the spectrum is ``+-eps``."""
    d_y, d_z = pauli_components(params, k)
    eps = branch_fixed_sqrt(d_y * d_y + d_z * d_z)
    return complex(eps) if np.ndim(eps) == 0 else eps


def phase_boundary_residual(params: ModelParams) -> float:
    """Zero exactly on a gap-closing line of the (mu_r, gamma) plane.

    For ``t2 == 0`` this is the ellipse ``(mu_r/t1)^2 + (gamma/delta)^2 - 1``;
    otherwise ``(mu_r + t2 - 2 t2 g^2)^2 - t1^2 (1 - g^2)`` with
    ``g = gamma/delta``.
    """
    g2 = (params.gamma / params.delta) ** 2
    if params.t2 == 0.0:
        return (params.mu_r / params.t1) ** 2 + g2 - 1.0
    return (params.mu_r + params.t2 - 2.0 * params.t2 * g2) ** 2 - params.t1**2 * (1.0 - g2)


def momentum_grid(n: int) -> np.ndarray:
    """``n`` equally spaced momenta ``2 pi j / n`` covering [0, 2 pi)."""
    return TWO_PI * np.arange(n) / n


def min_gap(params: ModelParams, k_grid) -> tuple[float, float]:
    """Smallest ``|eps(k)|`` on the grid and the momentum where it occurs.

    Only grid-resolution accurate: near a non-Hermitian gap closing ``eps^2``
    has a simple zero, so the grid minimum decays like ``sqrt(dk)``.
    """
    k_grid = np.asarray(k_grid, dtype=float)
    if k_grid.size < 2:
        raise ConfigError("k_grid needs at least two momenta")
    gap = np.abs(dispersion(params, k_grid))
    j = int(np.argmin(gap))
    return float(gap[j]), float(k_grid[j])
