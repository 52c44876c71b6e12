"""
Post-quench dynamics and echo-based diagnostics.

The system is prepared in the lower band ``|u^i_{k-}>`` of the initial Bloch
Hamiltonian at every momentum and evolved with the final one.  Because every
Bloch matrix squares to ``eps^2 I``,

    exp(-i H t) = cos(eps t) I - i sin(eps t) H / eps,

so everything is closed form.  The evolved state is expanded in the *initial*
biorthogonal basis,

    |u(t)> = c1 |u^i_-> + c2 |u^i_+>,

and its associated-state norm is ``|c1|^2 + |c2|^2``.  That fixes

    g_k(t) = |c1|^2 / (|c1|^2 + |c2|^2),    p(k, t) = 1 - g_k(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.ndimage import median_filter
from scipy.signal import find_peaks

from biodqpt.errors import ConfigError, DegeneracyError, ZeroNormError
from biodqpt.model import ModelParams, bloch_hamiltonian, dispersion, momentum_grid
from biodqpt.spectral import DEGENERACY_FLOOR, biortho_eigensystem, eigensystem_arrays, expand

LOG_FLOOR = 1e-300
SERIES_CUTOFF = 1e-6
DEFAULT_DT = 0.005
_TINY = 1e-300


@dataclass(frozen=True)
class ModeAmplitudes:
    """Evolved lower-band state in the initial biorthogonal basis."""

    c1: complex
    c2: complex

    @property
    def norm(self) -> float:
        """Associated-state self-norm ``|c1|^2 + |c2|^2``."""
        return abs(self.c1) ** 2 + abs(self.c2) ** 2


@dataclass(frozen=True)
class ModeData:
    """Per-momentum quantities shared by every diagnostic of a quench.

    ``A[j] = <u~^i_m| H_f |u^i_n>`` (indexed (m, n)) carries all the
    biorthogonal matrix elements the closed-form amplitudes need.
    """

    k: np.ndarray
    eps_i: np.ndarray
    eps_f: np.ndarray
    R_i: np.ndarray
    L_i: np.ndarray
    H_f: np.ndarray
    A: np.ndarray

    def __len__(self):
        return self.k.size

    def take(self, sl) -> "ModeData":
        return ModeData(*(getattr(self, f)[sl] for f in self.__dataclass_fields__))


def mode_data(initial: ModelParams, final: ModelParams, k) -> ModeData:
    k = np.atleast_1d(np.asarray(k, dtype=float))
    try:
        eps_i, R_i, L_i = eigensystem_arrays(initial, k)
    except DegeneracyError as exc:
        worst = k[np.argmin(np.abs(np.atleast_1d(dispersion(initial, k))))]
        raise DegeneracyError(f"initial Hamiltonian: {exc} near k={worst:.6g}") from None
    H_f = bloch_hamiltonian(final, k)
    eps_f = np.atleast_1d(dispersion(final, k))
    scale = np.maximum(np.abs(H_f[:, 0, 0]), np.abs(H_f[:, 0, 1]))
    if np.any(np.abs(eps_f) <= DEGENERACY_FLOOR * scale):
        worst = k[np.argmin(np.abs(eps_f))]
        raise DegeneracyError(f"final Hamiltonian gapless near k={worst:.6g}")
    A = L_i @ H_f @ R_i
    return ModeData(k=k, eps_i=eps_i, eps_f=eps_f, R_i=R_i, L_i=L_i, H_f=H_f, A=A)


@dataclass(frozen=True, eq=False)
class QuenchSpec:
    """A sudden quench ``H^i -> H^f`` sampled on uniform momentum and time grids."""

    initial: ModelParams
    final: ModelParams
    n_momenta: int
    times: np.ndarray

    def __post_init__(self):
        if self.n_momenta < 2:
            raise ConfigError("n_momenta must be >= 2")
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ConfigError("need at least two time samples")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise ConfigError("times must start at 0 and increase")
        steps = np.diff(times)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise ConfigError("time grid must be uniform")
        object.__setattr__(self, "times", times)

    @classmethod
    def uniform(cls, initial, final, n_momenta, t_max, n_times=None):
        """Uniform time grid on [0, t_max]; default step about 0.005."""
        if t_max <= 0:
            raise ConfigError("t_max must be positive")
        if n_times is None:
            n_times = int(math.ceil(t_max / DEFAULT_DT)) + 1
        return cls(initial, final, int(n_momenta), np.linspace(0.0, t_max, int(n_times)))

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def k_grid(self) -> np.ndarray:
        return momentum_grid(self.n_momenta)

    @property
    def is_trivial(self) -> bool:
        return self.initial == self.final

    def refined(self, factor: int = 2) -> "QuenchSpec":
        return QuenchSpec(self.initial, self.final, self.n_momenta * factor, self.times)

    @cached_property
    def modes(self) -> ModeData:
        """Mode data on the full momentum grid (raises DegeneracyError if gapless)."""
        return mode_data(self.initial, self.final, self.k_grid)

    def modes_at(self, k) -> ModeData:
        return mode_data(self.initial, self.final, k)


def sin_over_eps(eps, t):
    """``sin(eps t) / eps`` with the small-argument series near ``eps t = 0``."""
    eps = np.asarray(eps, dtype=complex)
    t = np.asarray(t, dtype=float)
    z = eps * t
    small = np.abs(z) < SERIES_CUTOFF
    safe_eps = np.where(small, 1.0, eps)
    series = t * (1.0 - z * z / 6.0 + z**4 / 120.0)
    return np.where(small, series, np.sin(z) / safe_eps)


def evolve(H_f, eps_f, t: float, state) -> np.ndarray:
    """``exp(-i H_f t) state`` from the closed form ``cos(eps t) - i sin(eps t) H/eps``."""
    state = np.asarray(state, dtype=complex)
    H_f = np.asarray(H_f, dtype=complex)
    s = complex(sin_over_eps(eps_f, t))
    return np.cos(eps_f * t) * state - 1j * s * (H_f @ state)


def amplitudes(modes: ModeData, t):
    """Closed-form ``(c1, c2)`` on a time array; both have shape ``(T, K)``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    eps = modes.eps_f[None, :]
    cos = np.cos(eps * t)
    s = sin_over_eps(eps, t)
    c1 = cos - 1j * s * modes.A[None, :, 0, 0]
    c2 = -1j * s * modes.A[None, :, 1, 0]
    return c1, c2


def mode_amplitudes(quench: QuenchSpec, k: float, t: float) -> ModeAmplitudes:
    """``c1 = <u~^i_-|u(t)>``, ``c2 = <u~^i_+|u(t)>`` by evolving and expanding."""
    eig_i = biortho_eigensystem(bloch_hamiltonian(quench.initial, k))
    H_f = bloch_hamiltonian(quench.final, k)
    eps_f = dispersion(quench.final, k)
    c1, c2 = expand(evolve(H_f, eps_f, t, eig_i.right_minus), eig_i)
    return ModeAmplitudes(c1, c2)


def closed_form_amplitudes(quench: QuenchSpec, k: float, t: float) -> ModeAmplitudes:
    """Same amplitudes from the matrix elements ``<u~^i_m|H_f/eps_f|u^i_->``."""
    c1, c2 = amplitudes(quench.modes_at(k), t)
    return ModeAmplitudes(complex(c1[0, 0]), complex(c2[0, 0]))


def _split(c1, c2):
    n1 = np.abs(c1) ** 2
    n2 = np.abs(c2) ** 2
    norm = n1 + n2
    if np.any(norm < _TINY):
        raise ZeroNormError("associated-state norm of the evolved state underflowed")
    return n1 / norm, n2 / norm


def mode_echo(quench: QuenchSpec, k: float, t: float) -> float:
    """Per-mode biorthogonal echo ``g_k(t)`` in [0, 1]."""
    amp = mode_amplitudes(quench, k, t)
    g, _ = _split(amp.c1, amp.c2)
    return float(g)


def transition_probability(quench: QuenchSpec, k: float, t: float) -> float:
    """``p(k, t) = |c2|^2 / (|c1|^2 + |c2|^2)`` between ``|u^i_-(t)>`` and ``|u^i_+>``."""
    amp = mode_amplitudes(quench, k, t)
    _, p = _split(amp.c1, amp.c2)
    return float(p)


def echo_grid(modes: ModeData, t):
    """``(g, p)`` on ``(T, K)`` for every time in ``t`` and every mode."""
    return _split(*amplitudes(modes, t))


def self_normal_echo_grid(modes: ModeData, t):
    """Conventional per-mode echo ``|<u|u(t)>|^2 / ||u(t)||^2`` with ``||u|| = 1``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))[:, None]
    u = modes.R_i[:, :, 0]
    u = u / np.linalg.norm(u, axis=1, keepdims=True)
    Hu = np.einsum("kij,kj->ki", modes.H_f, u)
    eps = modes.eps_f[None, :]
    cos = np.cos(eps * t)
    s = sin_over_eps(eps, t)
    # <u|u(t)> and ||u(t)||^2, written with u^dagger H u to avoid a (T, K, 2) array
    uHu = np.einsum("ki,ki->k", u.conj(), Hu)[None, :]
    HuHu = np.einsum("ki,ki->k", Hu.conj(), Hu).real[None, :]
    overlap = cos - 1j * s * uHu
    norm = np.abs(cos) ** 2 + np.abs(s) ** 2 * HuHu + 2.0 * np.real(np.conj(cos) * (-1j) * s * uHu)
    if np.any(norm < _TINY):
        raise ZeroNormError("self-normal norm of the evolved state underflowed")
    return np.abs(overlap) ** 2 / norm


def _rate_from_echo(echo, n_momenta):
    return -np.sum(np.log(np.maximum(echo, LOG_FLOOR)), axis=1) / n_momenta


def _rate(quench, t, echo_fn, chunk):
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    modes = quench.modes
    total = np.zeros(t.size)
    # chunks are reduced in ascending k order so results do not depend on chunking
    for start in range(0, len(modes), chunk):
        sub = modes.take(slice(start, start + chunk))
        total += _rate_from_echo(echo_fn(sub, t), quench.n_momenta)
    return float(total[0]) if scalar else total


def loschmidt_rate(quench: QuenchSpec, t, chunk: int = 512):
    """Biorthogonal Loschmidt rate ``-(1/N) sum_k ln g_k(t)`` (scalar or array ``t``)."""
    return _rate(quench, t, lambda m, tt: echo_grid(m, tt)[0], chunk)


def self_normal_rate(quench: QuenchSpec, t, chunk: int = 512):
    """Self-normal rate built from conjugate overlaps with enforced normalisation."""
    return _rate(quench, t, self_normal_echo_grid, chunk)


def find_cusps(times, rate, threshold: float = 8.0, window: int = 41, floor: float = 1e-10):
    """Grid indices of cusp candidates of a sampled rate function.

    A cusp shows up as an isolated spike of the discrete second difference.
    A sample is kept when its ``|second difference|`` is a local maximum and
    exceeds ``threshold`` times the running median of its neighbourhood.
    """
    rate = np.asarray(rate, dtype=float)
    if rate.size < 5:
        return np.array([], dtype=int)
    d2 = np.abs(rate[2:] - 2.0 * rate[1:-1] + rate[:-2])
    background = median_filter(d2, size=window, mode="nearest")
    height = threshold * background + floor
    peaks, _ = find_peaks(d2, height=height, distance=3)
    return peaks + 1


def refine_cusp(rate_fn, t_lo: float, t_hi: float, n: int = 201) -> float:
    """Locate a cusp inside ``[t_lo, t_hi]`` on a fine uniform subgrid."""
    fine = np.linspace(t_lo, t_hi, n)
    values = rate_fn(fine)
    d2 = np.abs(values[2:] - 2.0 * values[1:-1] + values[:-2])
    return float(fine[int(np.argmax(d2)) + 1])


def rate_cusps(quench: QuenchSpec, kind: str = "bio", rate=None, refine: bool = False):
    """Cusp times of the biorthogonal (``"bio"``) or self-normal rate."""
    rate_fn = {"bio": loschmidt_rate, "self_normal": self_normal_rate}[kind]
    if rate is None:
        rate = rate_fn(quench, quench.times)
    idx = find_cusps(quench.times, rate)
    cusps = quench.times[idx]
    if refine:
        dt = quench.dt
        cusps = np.array([refine_cusp(lambda tt: rate_fn(quench, tt), t - dt, t + dt) for t in cusps])
    return cusps
