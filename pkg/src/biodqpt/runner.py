"""Sweep orchestration, file output and the reduced-scale selftest."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from biodqpt import __version__
from biodqpt.config import RunConfig
from biodqpt.dynamics import (
    QuenchSpec,
    echo_grid,
    evolve,
    find_cusps,
    loschmidt_rate,
    self_normal_rate,
)
from biodqpt.fisher import find_events, fisher_times, trace_branches
from biodqpt.model import ModelParams, bloch_hamiltonian, dispersion, phase_boundary_residual
from biodqpt.spectral import eigensystem_arrays
from biodqpt.tables import SeriesTable
from biodqpt.topology import dtop_jumps, dtop_series

log = logging.getLogger(__name__)

BOUNDARY_MU = np.linspace(-3.0, 3.0, 121)
BOUNDARY_GAMMA_SPAN = 1.5


def make_quench(config: RunConfig) -> QuenchSpec:
    return QuenchSpec.uniform(
        config.params_initial, config.params_final, config.n_momenta, config.t_max, config.n_times
    )


def fisher_k_samples(config: RunConfig) -> int:
    return max(4096, config.n_momenta)


def compute(config: RunConfig):
    """All requested diagnostics as ``(tables, summary)`` without touching the disk."""
    quench = make_quench(config)
    meta = {"config": config.to_dict(), "version": __version__}
    diags = set(config.diagnostics)
    tables: dict[str, SeriesTable] = {}
    summary: dict = {"config": config.to_dict(), "version": __version__}
    t = quench.times

    events = None
    if diags & {"fisher", "pkt"}:
        log.info("tracing Fisher zeros (n <= %d)", config.n_max)
        events = find_events(quench, n_max=config.n_max, k_samples=fisher_k_samples(config), t_max=config.t_max)
        summary["events"] = [{"n": e.n, "k_c": e.k_c, "t_c": e.t_c} for e in events]

    if diags & {"rate", "self_normal_rate"}:
        log.info("Loschmidt rates on %d x %d grid", quench.n_momenta, t.size)
        lr_bio = loschmidt_rate(quench, t)
        lr_sn = self_normal_rate(quench, t)
        tables["rate"] = SeriesTable.from_columns(
            "rate", {"t": t, "LR_bio": lr_bio, "LR_selfnormal": lr_sn}, meta
        )
        summary["cusps_bio"] = t[find_cusps(t, lr_bio)].tolist()
        summary["cusps_selfnormal"] = t[find_cusps(t, lr_sn)].tolist()

    if "dtop" in diags:
        log.info("DTOP (half_bz=%s)", config.half_bz)
        nu = dtop_series(quench, half_bz=config.half_bz)
        tables["dtop"] = SeriesTable.from_columns("dtop", {"t": t, "nu": nu}, meta)
        summary["dtop_jumps"] = [{"t_before": a, "t_after": b, "change": c} for a, b, c in dtop_jumps(t, nu)]

    if "fisher" in diags:
        for branch in trace_branches(quench, config.n_max, fisher_k_samples(config)):
            z = branch.zeros
            tables[f"fisher_n{branch.n}"] = SeriesTable.from_columns(
                f"fisher_n{branch.n}",
                {"k": branch.k, "Re_Z": z.real, "Im_Z": z.imag, "Re_t": branch.t.real, "Im_t": branch.t.imag},
                dict(meta, n=branch.n),
            )
        tables["events"] = SeriesTable.from_columns(
            "events",
            {
                "n": [e.n for e in events],
                "k_c": [e.k_c for e in events],
                "t_c": [e.t_c for e in events],
            },
            meta,
        )

    if "pkt" in diags:
        data = {"t": t}
        if events:
            modes = quench.modes_at([e.k_c for e in events])
            _, p = echo_grid(modes, t)
            for j, e in enumerate(events):
                data[f"p_n{e.n}_k{e.k_c:.6f}"] = p[:, j]
        tables["pkt"] = SeriesTable.from_columns(
            "pkt", data, dict(meta, k_c=[e.k_c for e in events], t_c=[e.t_c for e in events])
        )

    if "phase_boundary" in diags:
        tables["boundary"] = boundary_table(config.params_final, meta)

    return tables, summary


def boundary_table(params: ModelParams, meta=None) -> SeriesTable:
    """Residual of the gap-closing condition on a (mu_r, gamma) grid."""
    span = BOUNDARY_GAMMA_SPAN * abs(params.delta)
    gammas = np.linspace(-span, span, 61)
    mu, gamma = np.meshgrid(BOUNDARY_MU, gammas, indexing="ij")
    residual = np.array(
        [phase_boundary_residual(params.with_(mu_r=float(m), gamma=float(g))) for m, g in zip(mu.ravel(), gamma.ravel())]
    )
    return SeriesTable.from_columns(
        "boundary", {"mu_r": mu.ravel(), "gamma": gamma.ravel(), "residual": residual}, meta or {}
    )


def run(config: RunConfig, output_dir=None) -> dict[str, SeriesTable]:
    """Compute the requested diagnostics and write one file per table plus ``run.json``."""
    out = Path(output_dir or config.output_dir)
    tables, summary = compute(config)
    out.mkdir(parents=True, exist_ok=True)
    for table in tables.values():
        path = table.write(out)
        log.info("wrote %s (%d rows)", path, table.rows.shape[0])
    summary["files"] = sorted(f"{name}.csv" for name in tables)
    (out / "run.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return tables


# --- selftest ---------------------------------------------------------------

def _random_params(rng, t2=True) -> ModelParams:
    return ModelParams(
        t1=rng.uniform(0.5, 1.5),
        delta=rng.uniform(0.3, 1.5),
        mu_r=rng.uniform(-2.0, 2.0),
        gamma=rng.uniform(-1.0, 1.0),
        t2=rng.uniform(-0.8, 0.8) if t2 else 0.0,
    )


def _check_branch(rng):
    for _ in range(200):
        eps = dispersion(_random_params(rng), rng.uniform(0, 2 * np.pi))
        if eps.real < 0 or (eps.real == 0 and eps.imag < 0):
            return False, f"eps = {eps} violates Re >= 0"
    return True, "200 draws"


def _check_square(rng):
    worst = 0.0
    for _ in range(200):
        p, k = _random_params(rng), rng.uniform(0, 2 * np.pi)
        H = bloch_hamiltonian(p, k)
        eps = dispersion(p, k)
        worst = max(worst, np.max(np.abs(H @ H - eps**2 * np.eye(2))) / max(1.0, abs(eps) ** 2))
    return worst < 1e-12, f"max rel residual {worst:.2e}"


def _check_biorthonormal(rng):
    p = _random_params(rng)
    k = rng.uniform(0, 2 * np.pi, 400)
    # keep clearly gapped momenta; near exceptional points the basis is ill conditioned
    k = k[np.abs(dispersion(p, k)) > 0.05][:200]
    eps, R, L = eigensystem_arrays(p, k)
    H = bloch_hamiltonian(p, k)
    eye = np.eye(2)
    res = max(np.max(np.abs(L @ R - eye)), np.max(np.abs(R @ L - eye)))
    lam = np.stack([-eps, eps], axis=-1)[:, None, :]
    eig = np.max(np.abs(H @ R - R * lam)) / max(1.0, np.max(np.abs(eps)))
    return max(res, eig) < 1e-10, f"biorthonormality {res:.2e}, eigen-equation {eig:.2e}"


def _check_evolve(rng):
    worst = 0.0
    for _ in range(100):
        p, k, t = _random_params(rng), rng.uniform(0, 2 * np.pi), rng.uniform(0, 10)
        H = bloch_hamiltonian(p, k)
        w, V = np.linalg.eig(H)
        if np.linalg.cond(V) > 1e4:
            continue
        state = rng.normal(size=2) + 1j * rng.normal(size=2)
        ref = V @ (np.exp(-1j * w * t) * np.linalg.solve(V, state))
        got = evolve(H, dispersion(p, k), t, state)
        worst = max(worst, np.linalg.norm(got - ref) / np.linalg.norm(ref))
    return worst < 1e-10, f"max rel deviation {worst:.2e}"


def _demo_quench(n=256, t_max=3.0):
    a = ModelParams(t1=1.0, delta=0.9, mu_r=0.25, gamma=0.5)
    return QuenchSpec.uniform(a, a.with_(mu_r=1.7), n, t_max)


def _check_echo(rng):
    q = _demo_quench()
    g, p = echo_grid(q.modes, rng.uniform(0, 6, 50))
    dev = np.max(np.abs(g + p - 1.0))
    in_range = np.all((g >= 0) & (g <= 1) & (p >= 0) & (p <= 1))
    return dev < 1e-12 and bool(in_range), f"max |g + p - 1| = {dev:.2e}"


def _check_fisher(rng):
    q = _demo_quench()
    modes = q.modes_at(rng.uniform(0.1, np.pi - 0.1, 50))
    worst = 0.0
    for n in range(3):
        t = fisher_times(modes, n)
        c1 = np.cos(modes.eps_f * t) - 1j * np.sin(modes.eps_f * t) * modes.A[:, 0, 0] / modes.eps_f
        worst = max(worst, np.nanmax(np.abs(c1)))
    return worst < 1e-10, f"max |c1(t_n)| = {worst:.2e}"


def _check_hermitian(rng):
    a = ModelParams(t1=1.0, delta=rng.uniform(0.5, 1.2), mu_r=rng.uniform(-0.8, 0.8), gamma=0.0)
    q = QuenchSpec.uniform(a, a.with_(mu_r=rng.uniform(1.2, 2.0)), 256, 3.0, 61)
    dev = np.max(np.abs(loschmidt_rate(q, q.times) - self_normal_rate(q, q.times)))
    return dev < 1e-10, f"max |LR_bio - LR_sn| = {dev:.2e}"


def _check_trivial(rng):
    a = _random_params(rng, t2=False)
    q = QuenchSpec.uniform(a, a, 128, 3.0, 31)
    dev = np.max(np.abs(loschmidt_rate(q, q.times)))
    return dev < 1e-12, f"max |LR| = {dev:.2e}"


def _check_dtop(rng):
    q = _demo_quench(n=512, t_max=1.2)
    nu = dtop_series(q, half_bz=True)
    frac = np.max(np.abs(nu - np.round(nu)))
    jumps = dtop_jumps(q.times, nu)
    return frac < 1e-3 and [j[2] for j in jumps] == [1], f"max |nu - round(nu)| = {frac:.2e}, jumps {jumps}"


SELFTEST_CHECKS = {
    "dispersion_branch": _check_branch,
    "hamiltonian_square": _check_square,
    "biorthonormality": _check_biorthonormal,
    "evolve_vs_eig_exponential": _check_evolve,
    "echo_plus_transition_probability": _check_echo,
    "fisher_substitution": _check_fisher,
    "hermitian_reduction": _check_hermitian,
    "trivial_quench": _check_trivial,
    "dtop_quantization": _check_dtop,
}


def selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    """Run the reduced-scale invariant suite; returns ``(name, passed, detail)`` rows."""
    report = []
    for name, check in SELFTEST_CHECKS.items():
        rng = np.random.default_rng([seed, len(report)])
        try:
            ok, detail = check(rng)
        except Exception as exc:  # reported, not thrown
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        report.append((name, bool(ok), detail))
    return report
