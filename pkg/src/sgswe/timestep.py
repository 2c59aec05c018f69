"""Positivity-aware adaptive SSP-RK3 time integration.

Each Shu-Osher stage is an Euler step, so keeping dt below the positivity
bound lambda of every stage state keeps all node heights positive.  lambda
is recomputed per stage; if a stage reveals a tighter bound than the dt in
flight, the whole step restarts from the accepted state with dt shrunk to
0.9 of that bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import PceBasis
from .core import Field, symmetrizer_eig, velocity
from .entropy import energy
from .errors import BlowUpError, DtUnderflowError, PositivityError
from .schemes import SchemeKind, semidiscrete_rhs

__all__ = [
    "positivity_check",
    "positivity_lambda",
    "cfl_dt",
    "total_energy",
    "min_node_height",
    "StepResult",
    "StepRecord",
    "ssp_rk3_step",
    "rk3_fixed",
    "integrate",
]

# Accepted dt below this fraction of the horizon aborts the run.
_DT_FLOOR_FRAC = 1e-14


def positivity_check(basis: PceBasis, h: np.ndarray):
    """True when the height surrogate is positive at every quadrature node.

    Returns (ok, None) or (False, (cell, node)) for the first violation.
    """
    node_h = h @ basis.basis_table.T
    if np.all(node_h > 0.0):
        return True, None
    i, m = np.argwhere(node_h <= 0.0)[0]
    return False, (int(i), int(m))


def positivity_lambda(
    basis: PceBasis, h: np.ndarray, fluxes: np.ndarray, dx: float
) -> float:
    """Largest Euler step that keeps all node heights nonnegative.

    lambda = min over cells i and nodes m of |dx h_i(xi_m) / (F+ - F-)(xi_m)|
    evaluated on the height block of the interface fluxes; vanishing flux
    differences contribute +inf.  Requires positive node heights on entry.
    """
    node_h = h @ basis.basis_table.T
    if np.any(node_h <= 0.0):
        i, m = np.argwhere(node_h <= 0.0)[0]
        raise PositivityError(
            f"nonpositive node height {node_h[i, m]:.6e}",
            cell=int(i),
            node=int(m),
        )
    node_F = fluxes[:, : basis.K] @ basis.basis_table.T
    dF = node_F[1:] - node_F[:-1]
    ratio = np.where(dF != 0.0, np.abs(dx * node_h / np.where(dF == 0.0, 1.0, dF)), np.inf)
    return float(ratio.min())


def cfl_dt(basis: PceBasis, field: Field, g: float, cfl: float, eps: float = 0.0) -> float:
    """dt = cfl dx / max spectral radius of the flux Jacobian over cells."""
    vel, _ = velocity(basis, field.state, eps)
    _, lam = symmetrizer_eig(basis, field.h, vel.u, g)
    amax = float(np.max(np.abs(lam)))
    if amax == 0.0:
        return np.inf
    return cfl * field.dx / amax


def total_energy(basis: PceBasis, field: Field, g: float, eps: float | None = None) -> float:
    """dx-weighted sum of cell energies; velocity uses eps = dx by default."""
    e = energy(basis, field.state, field.bottom, g, eps=field.dx if eps is None else eps)
    return field.dx * float(np.sum(e))


def min_node_height(basis: PceBasis, field: Field) -> float:
    return float((field.h @ basis.basis_table.T).min())


def _check_finite(h: np.ndarray, q: np.ndarray, t: float):
    if not (np.all(np.isfinite(h)) and np.all(np.isfinite(q))):
        raise BlowUpError("non-finite state encountered", t=t)


@dataclass(frozen=True)
class StepResult:
    field: Field
    t: float
    dt: float
    lam: float
    restarts: int


@dataclass(frozen=True)
class StepRecord:
    """Per accepted step diagnostics; restarts counts cumulatively."""

    t: float
    dt: float
    lam: float
    restarts: int
    energy: float
    min_node_height: float


def _stage_euler(h0, q0, r, dt, K):
    return h0 + dt * r.rhs[:, :K], q0 + dt * r.rhs[:, K:]


def ssp_rk3_step(
    basis: PceBasis,
    field: Field,
    scheme: SchemeKind,
    g: float,
    cfl: float,
    t: float,
    t_final: float,
    t_target: float | None = None,
) -> StepResult:
    """One adaptive SSP-RK3 step from time t.

    dt starts at min(CFL bound, 0.9 lambda, clamp to t_target); stages that
    expose a smaller lambda shrink dt and restart the step.  Raises
    DtUnderflowError once dt falls below 1e-14 t_final, BlowUpError on
    non-finite states, and lets positivity/hyperbolicity errors propagate.
    """
    K = basis.K
    eps = field.dx
    _check_finite(field.h, field.q, t)
    r0 = semidiscrete_rhs(basis, field, scheme, g, eps=eps)
    lam0 = positivity_lambda(basis, r0.field.h, r0.fluxes, field.dx)
    dt = min(cfl_dt(basis, r0.field, g, cfl, eps=eps), 0.9 * lam0)
    cap = (t_final if t_target is None else t_target) - t
    dt = min(dt, cap)
    floor = _DT_FLOOR_FRAC * t_final
    restarts = 0

    while True:
        if dt < floor:
            raise DtUnderflowError(
                f"dt {dt:.3e} fell below {floor:.3e}", t=t, dt=dt
            )

        h1, q1 = _stage_euler(r0.field.h, r0.field.q, r0, dt, K)
        _check_finite(h1, q1, t)
        r1 = semidiscrete_rhs(basis, field.replace(h=h1, q=q1), scheme, g, eps=eps)
        lam1 = positivity_lambda(basis, r1.field.h, r1.fluxes, field.dx)
        if 0.9 * lam1 < dt:
            dt = 0.9 * lam1
            restarts += 1
            continue

        eh, eq = _stage_euler(r1.field.h, r1.field.q, r1, dt, K)
        h2 = 0.75 * r0.field.h + 0.25 * eh
        q2 = 0.75 * r0.field.q + 0.25 * eq
        _check_finite(h2, q2, t)
        r2 = semidiscrete_rhs(basis, field.replace(h=h2, q=q2), scheme, g, eps=eps)
        lam2 = positivity_lambda(basis, r2.field.h, r2.fluxes, field.dx)
        if 0.9 * lam2 < dt:
            dt = 0.9 * lam2
            restarts += 1
            continue

        eh, eq = _stage_euler(r2.field.h, r2.field.q, r2, dt, K)
        h3 = r0.field.h / 3.0 + (2.0 / 3.0) * eh
        q3 = r0.field.q / 3.0 + (2.0 / 3.0) * eq
        _check_finite(h3, q3, t)
        return StepResult(
            field=field.replace(h=h3, q=q3),
            t=t + dt,
            dt=dt,
            lam=lam0,
            restarts=restarts,
        )


def rk3_fixed(
    basis: PceBasis,
    field: Field,
    scheme: SchemeKind,
    g: float,
    dt: float,
    n_steps: int,
    eps: float = 0.0,
) -> Field:
    """Plain fixed-dt SSP-RK3 without adaptivity, for convergence studies."""
    K = basis.K
    for _ in range(n_steps):
        r0 = semidiscrete_rhs(basis, field, scheme, g, eps=eps)
        h1, q1 = _stage_euler(r0.field.h, r0.field.q, r0, dt, K)
        r1 = semidiscrete_rhs(basis, field.replace(h=h1, q=q1), scheme, g, eps=eps)
        eh, eq = _stage_euler(r1.field.h, r1.field.q, r1, dt, K)
        h2 = 0.75 * r0.field.h + 0.25 * eh
        q2 = 0.75 * r0.field.q + 0.25 * eq
        r2 = semidiscrete_rhs(basis, field.replace(h=h2, q=q2), scheme, g, eps=eps)
        eh, eq = _stage_euler(r2.field.h, r2.field.q, r2, dt, K)
        field = field.replace(
            h=r0.field.h / 3.0 + (2.0 / 3.0) * eh,
            q=r0.field.q / 3.0 + (2.0 / 3.0) * eq,
        )
    return field


def integrate(
    basis: PceBasis,
    field: Field,
    scheme: SchemeKind,
    g: float,
    cfl: float,
    t_final: float,
    snapshot_times: tuple[float, ...] = (),
    on_snapshot=None,
    records: list | None = None,
) -> tuple[Field, list[StepRecord]]:
    """March to t_final, clamping steps onto snapshot times.

    on_snapshot(t, field) fires exactly at each requested time (including 0
    or t_final when listed).  Returns the final field and one StepRecord per
    accepted step, plus the initial record at t = 0.  Passing a records list
    makes it fill in place, so partial histories survive mid-run failures.
    """
    for ts in snapshot_times:
        if ts < 0.0 or ts > t_final:
            raise ValueError(f"snapshot time {ts} outside [0, {t_final}]")
    targets = sorted(set(float(ts) for ts in snapshot_times) | {float(t_final)})
    tol = 1e-12 * max(1.0, t_final)

    t = 0.0
    restarts_total = 0
    if records is None:
        records = []
    records.append(
        StepRecord(
            t=0.0,
            dt=0.0,
            lam=np.inf,
            restarts=0,
            energy=total_energy(basis, field, g),
            min_node_height=min_node_height(basis, field),
        )
    )
    if on_snapshot is not None and targets and targets[0] <= tol:
        on_snapshot(0.0, field)
    targets = [ts for ts in targets if ts > tol]

    while targets:
        target = targets[0]
        step = ssp_rk3_step(basis, field, scheme, g, cfl, t, t_final, t_target=target)
        field, t = step.field, step.t
        restarts_total += step.restarts
        if t >= target - tol:
            t = target
            if on_snapshot is not None and _wants_snapshot(target, snapshot_times, tol):
                on_snapshot(target, field)
            targets.pop(0)
        records.append(
            StepRecord(
                t=t,
                dt=step.dt,
                lam=step.lam,
                restarts=restarts_total,
                energy=total_energy(basis, field, g),
                min_node_height=min_node_height(basis, field),
            )
        )
    return field, records


def _wants_snapshot(target: float, snapshot_times, tol: float) -> bool:
    return any(abs(target - float(ts)) <= tol for ts in snapshot_times)
