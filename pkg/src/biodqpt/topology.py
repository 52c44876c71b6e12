"""
Geometric phase and the dynamical topological order parameter.

The total phase is ``arg c1``.  The dynamical phase integrates the normalised
energy of the evolved state,

    phi_dyn(t) = -int_0^t <u~(s)|H_f|u(s)> / <u~(s)|u(s)> ds + (i/2) ln <u~(t)|u(t)>,

with the associated bra built in the initial biorthogonal basis, so
``<u~|u> = |c1|^2 + |c2|^2`` is real and positive and the log term is purely
imaginary.  Only ``Re phi_dyn`` enters the geometric phase used for winding;
the imaginary remainder is single valued along the momentum path and cannot
wind.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import cumulative_simpson, simpson

from biodqpt.dynamics import QuenchSpec, amplitudes
from biodqpt.errors import ConfigError, GridTooCoarseError, UndefinedPhaseError, ZeroNormError

SUBSTEPS_PER_UNIT = 64
PHASE_ZERO = 1e-14
WRAP_LIMIT = np.pi * (1.0 - 1e-6)
_TINY = 1e-300


def wrap(phase):
    """Principal value in (-pi, pi]."""
    wrapped = np.angle(np.exp(1j * np.asarray(phase, dtype=float)))
    return np.where(wrapped == -np.pi, np.pi, wrapped)


def _energy_density(modes, c1, c2):
    """``<u~|H_f|u> / <u~|u>`` and ``<u~|u>`` for amplitude arrays of shape (T, K)."""
    A = modes.A
    norm = np.abs(c1) ** 2 + np.abs(c2) ** 2
    if np.any(norm < _TINY):
        raise ZeroNormError("biorthogonal norm vanished along the trajectory")
    num = (
        np.conj(c1) * c1 * A[None, :, 0, 0]
        + np.conj(c1) * c2 * A[None, :, 0, 1]
        + np.conj(c2) * c1 * A[None, :, 1, 0]
        + np.conj(c2) * c2 * A[None, :, 1, 1]
    )
    return num / norm, norm


def _substeps(t, eps_f):
    return max(2, math.ceil(SUBSTEPS_PER_UNIT * t * max(1.0, float(np.max(np.abs(eps_f))))))


def phase_grid(modes, times, refine: int):
    """Total phase ``arg c1``, complex dynamical phase and ``c1`` on ``times``.

    ``times`` must be uniform and start at 0; the energy integral is done by
    cumulative Simpson on a grid ``refine`` times finer.
    """
    times = np.asarray(times, dtype=float)
    fine = np.linspace(times[0], times[-1], refine * (times.size - 1) + 1)
    c1, c2 = amplitudes(modes, fine)
    energy, norm = _energy_density(modes, c1, c2)
    integral = cumulative_simpson(energy.real, x=fine, axis=0, initial=0.0) + 1j * cumulative_simpson(
        energy.imag, x=fine, axis=0, initial=0.0
    )
    sl = slice(None, None, refine)
    dyn = -integral[sl] + 0.5j * np.log(norm[sl])
    return np.angle(c1[sl]), dyn, c1[sl]


def dynamical_phase(quench: QuenchSpec, k: float, t: float, t_substeps: int | None = None) -> complex:
    """Biorthogonal dynamical phase at one momentum (composite Simpson in time)."""
    if t < 0:
        raise ConfigError("t must be non-negative")
    if t == 0:
        return 0j
    modes = quench.modes_at(k)
    n = t_substeps if t_substeps is not None else _substeps(t, modes.eps_f)
    n += n % 2
    s = np.linspace(0.0, t, n + 1)
    c1, c2 = amplitudes(modes, s)
    energy, norm = _energy_density(modes, c1, c2)
    integral = simpson(energy[:, 0].real, x=s) + 1j * simpson(energy[:, 0].imag, x=s)
    return complex(-integral + 0.5j * np.log(norm[-1, 0]))


def geometric_phase(quench: QuenchSpec, k: float, t: float, t_substeps: int | None = None) -> float:
    """``arg c1 - Re phi_dyn`` reduced to (-pi, pi]."""
    c1, _ = amplitudes(quench.modes_at(k), t)
    c1 = complex(c1[0, 0])
    if abs(c1) < PHASE_ZERO:
        raise UndefinedPhaseError(f"|c1| = {abs(c1):.2e} at k={k}, t={t}: total phase undefined")
    dyn = dynamical_phase(quench, k, t, t_substeps)
    return float(wrap(np.angle(c1) - dyn.real))


def _path(values, half_bz):
    """Momentum path along the last axis: [0, pi] or the closed loop over [0, 2 pi)."""
    n = values.shape[-1]
    if half_bz:
        if n % 2:
            raise ConfigError("half_bz needs an even number of momenta")
        return values[..., : n // 2 + 1]
    return np.concatenate([values, values[..., :1]], axis=-1)


def winding(phi_g, half_bz: bool):
    """``(nu, max |step|)`` from principal-value differences along the k axis."""
    steps = wrap(np.diff(_path(phi_g, half_bz), axis=-1))
    return steps.sum(axis=-1) / (2.0 * np.pi), np.abs(steps).max(axis=-1)


def _dtop_on(quench, times, half_bz, include_imaginary, chunk=512):
    modes = quench.modes
    N = quench.n_momenta
    if half_bz and N % 2:
        raise ConfigError("half_bz needs an even number of momenta")
    dt = float(times[1] - times[0])
    refine = max(2, math.ceil(SUBSTEPS_PER_UNIT * dt * max(1.0, float(np.max(np.abs(modes.eps_f))))))
    stop = N // 2 + 1 if half_bz else N
    nu = np.zeros(times.size)
    nu_imag = np.zeros(times.size)
    max_step = np.zeros(times.size)
    first = prev = prev_imag = first_imag = None
    # ordered fold over momentum chunks; each chunk carries its left neighbour
    for start in range(0, stop, chunk):
        sub = modes.take(slice(start, min(start + chunk, stop)))
        total, dyn, _ = phase_grid(sub, times, refine)
        phi_g = wrap(total - dyn.real)
        phi_im = -dyn.imag
        if prev is None:
            first, first_imag = phi_g[:, :1], phi_im[:, :1]
        else:
            phi_g = np.concatenate([prev, phi_g], axis=1)
            phi_im = np.concatenate([prev_imag, phi_im], axis=1)
        steps = wrap(np.diff(phi_g, axis=1))
        nu += steps.sum(axis=1)
        nu_imag += np.diff(phi_im, axis=1).sum(axis=1)
        if steps.size:
            max_step = np.maximum(max_step, np.abs(steps).max(axis=1))
        prev, prev_imag = phi_g[:, -1:], phi_im[:, -1:]
    if not half_bz:
        closing = wrap(first - prev)[:, 0]
        nu += closing
        nu_imag += (first_imag - prev_imag)[:, 0]
        max_step = np.maximum(max_step, np.abs(closing))
    nu /= 2.0 * np.pi
    nu_imag /= 2.0 * np.pi
    out = nu + 1j * nu_imag if include_imaginary else nu
    return out, max_step


def _with_doubling(quench, times, half_bz, include_imaginary):
    nu, max_step = _dtop_on(quench, times, half_bz, include_imaginary)
    if np.all(max_step < WRAP_LIMIT):
        return nu
    finer = quench.refined(2)
    nu, max_step = _dtop_on(finer, times, half_bz, include_imaginary)
    bad = np.flatnonzero(max_step >= WRAP_LIMIT)
    if bad.size:
        raise GridTooCoarseError(
            f"geometric-phase step reaches pi at t={times[bad[0]]:.6g} even with {finer.n_momenta} momenta"
        )
    return nu


def dtop(quench: QuenchSpec, t: float, half_bz: bool = False, include_imaginary: bool = False):
    """Winding number ``nu(t)`` of the geometric phase over the Brillouin zone.

    With ``half_bz`` the path is [0, pi] instead of the closed loop over
    [0, 2 pi).  ``include_imaginary`` adds the (non-winding) imaginary part
    of the geometric phase as the imaginary part of the result.
    """
    if t < 0:
        raise ConfigError("t must be non-negative")
    if t == 0:
        return 0j if include_imaginary else 0.0
    nu, max_step = _dtop_single(quench, t, half_bz, include_imaginary)
    if max_step < WRAP_LIMIT:
        return nu
    finer = quench.refined(2)
    nu, max_step = _dtop_single(finer, t, half_bz, include_imaginary)
    if max_step >= WRAP_LIMIT:
        raise GridTooCoarseError(f"geometric-phase step reaches pi at t={t:.6g} even with {finer.n_momenta} momenta")
    return nu


def _dtop_single(quench, t, half_bz, include_imaginary, chunk=256):
    modes = quench.modes
    n = _substeps(t, modes.eps_f)
    phi_g = np.empty(len(modes))
    phi_im = np.empty(len(modes))
    for start in range(0, len(modes), chunk):
        sl = slice(start, start + chunk)
        total, dyn, _ = phase_grid(modes.take(sl), np.array([0.0, t]), n)
        phi_g[sl] = wrap(total[-1] - dyn[-1].real)
        phi_im[sl] = -dyn[-1].imag
    nu, max_step = winding(phi_g, half_bz)
    if include_imaginary:
        nu = complex(nu, np.diff(_path(phi_im, half_bz)).sum() / (2.0 * np.pi))
    else:
        nu = float(nu)
    return nu, float(max_step)


def dtop_series(quench: QuenchSpec, half_bz: bool = False, include_imaginary: bool = False) -> np.ndarray:
    """``nu(t)`` on every sample of ``quench.times``."""
    return _with_doubling(quench, quench.times, half_bz, include_imaginary)


def dtop_jumps(times, nu):
    """``(t_before, t_after, change)`` wherever the rounded winding changes."""
    level = np.round(np.real(nu))
    idx = np.flatnonzero(np.diff(level))
    return [(float(times[i]), float(times[i + 1]), int(level[i + 1] - level[i])) for i in idx]


def refine_jump(quench: QuenchSpec, t_lo: float, t_hi: float, half_bz: bool = False, tol: float = 1e-6) -> float:
    """Bisect the time at which ``round(nu)`` changes inside ``[t_lo, t_hi]``."""
    level_lo = round(dtop(quench, t_lo, half_bz))
    while t_hi - t_lo > tol:
        mid = 0.5 * (t_lo + t_hi)
        if round(dtop(quench, mid, half_bz)) == level_lo:
            t_lo = mid
        else:
            t_hi = mid
    return 0.5 * (t_lo + t_hi)
