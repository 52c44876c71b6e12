"""
Dynamical Fisher zeros and critical-event extraction.

The amplitude ``c1(t) = cos(eps t) - i sin(eps t) x`` with
``x = <u~^i_-|H_f/eps_f|u^i_->`` vanishes at the complex times

    t_n(k) = (2n + 1) pi / (2 eps_f) - i artanh(x) / eps_f,    n = 0, 1, ...

A real critical time exists where ``Im t_n(k) = 0``, i.e. where the Fisher
zero ``Z_n = i t_n`` crosses the imaginary axis.  The same construction with
the conventional expectation value ``<u|H_f|u> / eps_f`` gives the zeros of the
self-normal overlap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

from biodqpt.dynamics import ModeData, QuenchSpec
from biodqpt.errors import BranchPointError
from biodqpt.model import TWO_PI, momentum_grid

BRANCH_EPS = 1e-12


@dataclass(frozen=True)
class FisherBranch:
    """Fisher-zero curve ``t_n(k)`` sampled on a momentum grid (NaN marks gaps)."""

    n: int
    k: np.ndarray
    t: np.ndarray

    @property
    def zeros(self) -> np.ndarray:
        """``Z_n(k) = i t_n(k)``."""
        return 1j * self.t

    @property
    def mask(self) -> np.ndarray:
        """True where the sample is finite."""
        return np.isfinite(self.t)


@dataclass(frozen=True)
class DqptEvent:
    n: int
    k_c: float
    t_c: float


def artanh(x):
    """Principal complex artanh, ``(ln(1 + x) - ln(1 - x)) / 2``."""
    x = np.asarray(x, dtype=complex)
    return 0.5 * (np.log(1.0 + x) - np.log(1.0 - x))


def matrix_element(modes: ModeData, kind: str = "bio") -> np.ndarray:
    """Artanh argument: biorthogonal or self-normal ``<H_f>/eps_f`` of the initial lower band."""
    if kind == "bio":
        return modes.A[:, 0, 0] / modes.eps_f
    if kind == "self_normal":
        u = modes.R_i[:, :, 0]
        num = np.einsum("ki,kij,kj->k", u.conj(), modes.H_f, u)
        return num / np.einsum("ki,ki->k", u.conj(), u).real / modes.eps_f
    raise ValueError(f"unknown kind {kind!r}")


def fisher_times(modes: ModeData, n: int, kind: str = "bio") -> np.ndarray:
    """Vectorised ``t_n(k)``; NaN where the artanh argument is a branch point."""
    x = matrix_element(modes, kind)
    branch = (np.abs(x - 1.0) <= BRANCH_EPS) | (np.abs(x + 1.0) <= BRANCH_EPS)
    x = np.where(branch, 0.0, x)
    t = ((2 * n + 1) * np.pi / 2.0 - 1j * artanh(x)) / modes.eps_f
    return np.where(branch, np.nan + 1j * np.nan, t)


def fisher_time(quench: QuenchSpec, k: float, n: int, kind: str = "bio") -> complex:
    """Complex Fisher-zero time ``t_n(k)``.

    Raises
    ------
    BranchPointError
        If the artanh argument lies within 1e-12 of +1 or -1 (no finite zero).
    """
    t = complex(fisher_times(quench.modes_at(k), n, kind)[0])
    if not np.isfinite(t):
        raise BranchPointError(f"artanh argument at a branch point for k={k}")
    return t


def trace_branches(quench: QuenchSpec, n_max: int = 3, k_samples: int = 4096, kind: str = "bio"):
    """Sample the branches ``n = 0..n_max`` on ``k_samples`` momenta over [0, 2 pi)."""
    k = momentum_grid(k_samples)
    modes = quench.modes_at(k)
    return [FisherBranch(n, k, fisher_times(modes, n, kind)) for n in range(n_max + 1)]


def _imag_t(quench, n, kind):
    def f(k):
        t = fisher_times(quench.modes_at(k), n, kind)[0]
        return t.imag if np.isfinite(t) else np.nan

    return f


def _refine(f, a, b, tol):
    fa, fb = f(a), f(b)
    if not (np.isfinite(fa) and np.isfinite(fb)):
        return None
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    root = bisect(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    value = f(root)
    # sign changes through a pole of artanh converge onto the pole; drop them
    if not np.isfinite(value) or abs(value) > tol:
        return None
    return root


def find_events(
    quench: QuenchSpec,
    n_max: int = 3,
    k_samples: int = 4096,
    tol: float = 1e-10,
    t_max: float | None = None,
    kind: str = "bio",
    fold_mirror: bool = True,
) -> list[DqptEvent]:
    """Critical events ``(n, k_c, t_c)`` where a Fisher branch crosses the imaginary axis.

    Each sign change of ``Im t_n(k)`` on the sampling grid is refined by
    bisection to ``|Im t_n| <= tol``.  Events with ``t_c <= 0`` (or beyond
    ``t_max``) are dropped, near-duplicates within one grid cell are merged
    and, since ``t_n(k) = t_n(-k)`` for this model, mirror images at
    ``2 pi - k_c`` are folded onto ``k_c <= pi`` when ``fold_mirror`` is set.
    """
    branches = trace_branches(quench, n_max, k_samples, kind)
    dk = TWO_PI / k_samples
    events = []
    for branch in branches:
        f = _imag_t(quench, branch.n, kind)
        im = branch.t.imag
        k_ext = np.append(branch.k, TWO_PI)
        im_ext = np.append(im, im[0])
        for j in range(k_samples):
            a, b = im_ext[j], im_ext[j + 1]
            if not (np.isfinite(a) and np.isfinite(b)) or np.sign(a) == np.sign(b):
                continue
            root = _refine(f, k_ext[j], k_ext[j + 1], tol)
            if root is None:
                continue
            k_c = float(np.mod(root, TWO_PI))
            t_c = float(fisher_times(quench.modes_at(k_c), branch.n, kind)[0].real)
            if t_c <= 0 or (t_max is not None and t_c > t_max):
                continue
            events.append(DqptEvent(branch.n, k_c, t_c))
    events = _dedupe(events, dk, quench.dt)
    if fold_mirror:
        events = _fold_mirror(events, dk, quench.dt)
    return sorted(events, key=lambda e: (e.t_c, e.k_c, e.n))


def _dedupe(events, dk, dt):
    kept = []
    for ev in sorted(events, key=lambda e: (e.n, e.k_c)):
        if any(ev.n == o.n and abs(ev.k_c - o.k_c) < dk and abs(ev.t_c - o.t_c) < dt for o in kept):
            continue
        kept.append(ev)
    return kept


def _fold_mirror(events, dk, dt):
    kept = []
    for ev in events:
        if ev.k_c > np.pi:
            mirror = TWO_PI - ev.k_c
            if any(o.n == ev.n and abs(o.k_c - mirror) < 2 * dk and abs(o.t_c - ev.t_c) < dt for o in events):
                continue
        kept.append(ev)
    return kept
