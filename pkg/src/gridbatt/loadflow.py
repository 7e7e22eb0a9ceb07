"""Backward/forward sweep load flow for radial feeders.

Loads are constant power. Each iteration recomputes the load currents from
the latest voltage estimate, accumulates them leaf-to-root into branch
currents (backward sweep) and then propagates the branch voltage drops from
the slack outwards (forward sweep). Both sweeps are expressed through the
network's line/bus path matrix so that many hourly snapshots can be solved
in one batch.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, InfeasibleFlowError, SchemaError
from .network import RadialNetwork

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
COLLAPSE_PU = 0.3


@dataclass(frozen=True)
class BusInjection:
    """Net consumption per bus for one hour (kW / kVAR, positive = load)."""

    p_kw: Mapping[int, float]
    q_kvar: Mapping[int, float]

    @classmethod
    def nominal(cls, net: RadialNetwork) -> BusInjection:
        return cls(
            p_kw={b.id: b.p_load_kw for b in net.buses if b.id != net.slack_id},
            q_kvar={b.id: b.q_load_kvar for b in net.buses if b.id != net.slack_id},
        )

    @classmethod
    def zero(cls, net: RadialNetwork) -> BusInjection:
        ids = [b.id for b in net.buses if b.id != net.slack_id]
        return cls(p_kw=dict.fromkeys(ids, 0.0), q_kvar=dict.fromkeys(ids, 0.0))

    def to_arrays(self, net: RadialNetwork) -> tuple[np.ndarray, np.ndarray]:
        p = np.zeros(net.n_buses)
        q = np.zeros(net.n_buses)
        missing = [b.id for b in net.buses if b.id != net.slack_id and b.id not in self.p_kw]
        if missing:
            raise SchemaError(f"injection missing for buses {missing}")
        for bid, val in self.p_kw.items():
            p[net.index[bid]] = val
        for bid, val in self.q_kvar.items():
            q[net.index[bid]] = val
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise SchemaError("injection values must be finite")
        return p, q


@dataclass(frozen=True)
class PowerFlowSolution:
    bus_ids: tuple[int, ...]
    v_pu: np.ndarray
    v_angle: np.ndarray
    i_line_a: np.ndarray
    p_loss_kw: float
    q_loss_kvar: float
    iterations: int
    converged: bool
    p_slack_kw: float = 0.0
    q_slack_kvar: float = 0.0
    line_ends: tuple[tuple[int, int], ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "p_loss_kw": float(self.p_loss_kw),
            "q_loss_kvar": float(self.q_loss_kvar),
            "p_slack_kw": float(self.p_slack_kw),
            "q_slack_kvar": float(self.q_slack_kvar),
            "min_v_pu": float(self.v_pu.min()),
            "buses": [
                {"bus": int(b), "v_pu": float(v), "v_angle_rad": float(a)}
                for b, v, a in zip(self.bus_ids, self.v_pu, self.v_angle)
            ],
            "lines": [
                {"from": int(f), "to": int(t), "i_a": float(i)} for (f, t), i in zip(self.line_ends, self.i_line_a)
            ],
        }


@dataclass(frozen=True)
class BatchSolution:
    """Sweep results for H snapshots solved together; arrays are (n, H) or (lines, H)."""

    v: np.ndarray
    i_branch_pu: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    collapsed: np.ndarray
    p_loss_kw: np.ndarray
    q_loss_kvar: np.ndarray
    s_slack_pu: np.ndarray

    @property
    def v_pu(self) -> np.ndarray:
        return np.abs(self.v)

    @property
    def ok(self) -> np.ndarray:
        return self.converged & ~self.collapsed


def solve_batch(
    net: RadialNetwork,
    p_kw: np.ndarray,
    q_kvar: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> BatchSolution:
    """Solve one column per snapshot. Collapsed or non-converged columns are flagged, never raised."""
    if not tol > 0:
        raise ConfigurationError("tol must be positive")
    if max_iter < 1:
        raise ConfigurationError("max_iter must be at least 1")
    p_kw = np.asarray(p_kw, dtype=float)
    q_kvar = np.asarray(q_kvar, dtype=float)
    squeeze = p_kw.ndim == 1
    if squeeze:
        p_kw, q_kvar = p_kw[:, None], q_kvar[:, None]
    if p_kw.shape != q_kvar.shape or p_kw.shape[0] != net.n_buses:
        raise ConfigurationError(f"injection arrays must have {net.n_buses} rows")

    kw_base = net.base_mva * 1000.0
    s = (p_kw + 1j * q_kvar) / kw_base
    s[net.slack_index, :] = 0.0
    z = (net.r_ohm + 1j * net.x_ohm) / net.z_base_ohm
    m = net.path_matrix
    v0 = complex(net.v_rated_pu)
    n_snap = s.shape[1]

    v = np.full(s.shape, v0, dtype=complex)
    iterations = np.zeros(n_snap, dtype=int)
    converged = np.zeros(n_snap, dtype=bool)
    collapsed = np.zeros(n_snap, dtype=bool)
    running = np.arange(n_snap)

    for _ in range(max_iter):
        if running.size == 0:
            break
        vr = v[:, running]
        i_load = np.conj(s[:, running] / vr)
        j_branch = m @ i_load  # backward sweep
        v_new = v0 - m.T @ (z[:, None] * j_branch)  # forward sweep
        delta = np.max(np.abs(v_new - vr), axis=0)
        v[:, running] = v_new
        iterations[running] += 1
        low = np.min(np.abs(v_new), axis=0) < COLLAPSE_PU
        bad = ~np.isfinite(delta)
        collapsed[running[low | bad]] = True
        done = (delta < tol) & ~low & ~bad
        converged[running[done]] = True
        running = running[~(done | low | bad)]

    # restore collapsed columns to flat so downstream arithmetic stays finite
    v[:, collapsed] = v0
    i_load = np.conj(s / v)
    j_branch = m @ i_load
    j_branch[:, collapsed] = 0.0
    loss = (np.abs(j_branch) ** 2) * z[:, None]
    s_loss = loss.sum(axis=0) * kw_base
    frm, _ = net.line_ends
    out_of_slack = frm == net.slack_index
    s_slack = v[net.slack_index] * np.conj(j_branch[out_of_slack].sum(axis=0))

    sol = BatchSolution(
        v=v,
        i_branch_pu=j_branch,
        iterations=iterations,
        converged=converged,
        collapsed=collapsed,
        p_loss_kw=s_loss.real,
        q_loss_kvar=s_loss.imag,
        s_slack_pu=s_slack,
    )
    return sol


def solve(
    net: RadialNetwork,
    inj: BusInjection | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PowerFlowSolution:
    """Solve a single snapshot; ``inj`` defaults to the network's spot loads.

    Raises InfeasibleFlowError on voltage collapse. Running out of
    iterations is reported through ``converged=False``.
    """
    if inj is None:
        inj = BusInjection.nominal(net)
    p, q = inj.to_arrays(net)
    batch = solve_batch(net, p, q, tol=tol, max_iter=max_iter)
    if batch.collapsed[0]:
        raise InfeasibleFlowError(f"voltage collapse below {COLLAPSE_PU} p.u.", min_voltage=None)
    return _single(net, batch, 0)


def _single(net: RadialNetwork, batch: BatchSolution, col: int) -> PowerFlowSolution:
    v = batch.v[:, col]
    kw_base = net.base_mva * 1000.0
    frm, to = net.line_ends
    ids = net.bus_ids
    return PowerFlowSolution(
        bus_ids=ids,
        v_pu=np.abs(v),
        v_angle=np.angle(v),
        i_line_a=np.abs(batch.i_branch_pu[:, col]) * net.i_base_a,
        p_loss_kw=float(batch.p_loss_kw[col]),
        q_loss_kvar=float(batch.q_loss_kvar[col]),
        iterations=int(batch.iterations[col]),
        converged=bool(batch.converged[col]),
        p_slack_kw=float(batch.s_slack_pu[col].real * kw_base),
        q_slack_kvar=float(batch.s_slack_pu[col].imag * kw_base),
        line_ends=tuple((ids[int(a)], ids[int(b)]) for a, b in zip(frm, to)),
    )


def snapshot(net: RadialNetwork, batch: BatchSolution, col: int) -> PowerFlowSolution:
    """Extract one column of a batch as a PowerFlowSolution."""
    return _single(net, batch, col)


@dataclass(frozen=True)
class AmpacityViolation:
    from_bus: int
    to_bus: int
    current_a: float
    ampacity_a: float

    @property
    def overload_a(self) -> float:
        return self.current_a - self.ampacity_a


def check_ampacity(net: RadialNetwork, sol: PowerFlowSolution) -> list[AmpacityViolation]:
    out = []
    for (f, t), i_a, lim in zip(sol.line_ends, sol.i_line_a, net.ampacity_a):
        if i_a > lim:
            out.append(AmpacityViolation(f, t, float(i_a), float(lim)))
    return out


@dataclass(frozen=True)
class VoltageViolation:
    bus: int
    v_pu: float
    deviation: float


def check_voltage_band(sol: PowerFlowSolution, band: float = 0.10, v_rated_pu: float = 1.0) -> list[VoltageViolation]:
    if not 0 < band < 1:
        raise ConfigurationError("band must lie in (0, 1)")
    out = []
    for bid, v in zip(sol.bus_ids, sol.v_pu):
        dev = abs(v - v_rated_pu)
        if dev > band:
            out.append(VoltageViolation(int(bid), float(v), float(dev)))
    return out

