"""Godunov finite-volume simulator for the lane-changing kinematic wave model.

Cell-centered densities and intensities on a uniform grid; interface
fluxes are min(demand upstream, supply downstream), which is the exact
Riemann flux of the system. Intensity is evaluated from the pre-update
densities each step (explicit lagging), so a density-dependent model
never feeds back within a step.

Boundary conditions: upstream is a demand (flow) of time or a ghost
state; downstream a supply of time or a ghost state. The default
downstream supply is infinite (free outflow).

The per-step mass ledger is exact up to round-off: the density update
telescopes interior fluxes, so (total vehicles) changes by
(inflow - outflow) * dt each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .errors import BlowupError, DomainError
from .fd import FundamentalDiagram, TrafficState
from .intensity import IntensityModel
from .riemann import demand, supply

_T_TOL_REL = 1e-12
_RHO_SLACK_REL = 1e-9


@dataclass(frozen=True)
class DemandBC:
    """Upstream boundary: inflow demand, constant or a function of time."""

    flow: Union[float, Callable[[float], float]]

    def value(self, t: float) -> float:
        return self.flow(t) if callable(self.flow) else self.flow


@dataclass(frozen=True)
class SupplyBC:
    """Downstream boundary: outflow supply, constant or a function of time."""

    flow: Union[float, Callable[[float], float]]

    def value(self, t: float) -> float:
        return self.flow(t) if callable(self.flow) else self.flow


@dataclass(frozen=True)
class StateBC:
    """Ghost-state boundary; demand/supply of the state is used."""

    state: TrafficState


FREE_OUTFLOW = SupplyBC(math.inf)


def piecewise_constant(pairs) -> Callable[[float], float]:
    """Step schedule [(t0, v0), (t1, v1), ...] -> v(t), left-continuous."""
    pairs = sorted(pairs)
    times = [t for t, _ in pairs]
    values = [v for _, v in pairs]

    def f(t: float) -> float:
        i = np.searchsorted(times, t, side="right") - 1
        return values[max(int(i), 0)]

    return f


@dataclass(frozen=True)
class RoadScenario:
    """Everything needed to run one road.

    initial_density is an array of cell densities, a scalar, or a
    callable of cell-center position. Lengths in miles, times in hours.
    """

    length: float
    cells: int
    fd: FundamentalDiagram
    intensity: IntensityModel
    initial_density: Union[float, Callable, np.ndarray, list, tuple]
    upstream: Union[DemandBC, StateBC, float]
    downstream: Union[SupplyBC, StateBC, float] = FREE_OUTFLOW
    cfl: float = 0.9
    t_end: float = 0.0
    output_interval: Optional[float] = None

    def __post_init__(self):
        if not (self.length > 0.0):
            raise DomainError(f"length must be positive, got {self.length}")
        if self.cells < 1:
            raise DomainError(f"need >= 1 cell, got {self.cells}")
        if not (0.0 < self.cfl <= 1.0):
            raise DomainError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end < 0.0:
            raise DomainError(f"t_end must be >= 0, got {self.t_end}")
        if self.output_interval is not None and not (self.output_interval > 0.0):
            raise DomainError("output_interval must be positive when given")

    @property
    def dx(self) -> float:
        return self.length / self.cells

    def cell_centers(self) -> np.ndarray:
        return (np.arange(self.cells) + 0.5) * self.dx


@dataclass(frozen=True, eq=False)
class SimState:
    """One snapshot: time, per-cell density/intensity, cumulative ledger."""

    t: float
    rho: np.ndarray
    eps: np.ndarray
    inflow: float = 0.0   # vehicles that entered since t = 0
    outflow: float = 0.0  # vehicles that left since t = 0
    steps: int = 0

    def total_vehicles(self, dx: float) -> float:
        return float(np.sum(self.rho)) * dx


def stable_dt(scn: RoadScenario) -> float:
    """Largest CFL-stable step: cfl * dx / (fastest wave speed)."""
    return scn.cfl * scn.dx / scn.fd.max_wave_speed()


def initial_state(scn: RoadScenario) -> SimState:
    x = scn.cell_centers()
    init = scn.initial_density
    if callable(init):
        rho = np.array([float(init(xi)) for xi in x])
    elif np.isscalar(init):
        rho = np.full(scn.cells, float(init))
    else:
        rho = np.asarray(init, dtype=float).copy()
        if rho.shape != (scn.cells,):
            raise DomainError(
                f"initial_density has shape {rho.shape}, expected ({scn.cells},)")
    eps = scn.intensity.eval_cells(x, rho)
    _check_cells(scn, rho, eps, t=0.0)
    return SimState(t=0.0, rho=rho, eps=np.asarray(eps, dtype=float))


def _check_cells(scn: RoadScenario, rho: np.ndarray, eps: np.ndarray,
                 t: float) -> None:
    slack = _RHO_SLACK_REL * scn.fd.rho_j
    bad = ~np.isfinite(rho) | (rho < -slack) | (rho * (1.0 + eps) > scn.fd.rho_j + slack)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise BlowupError(
            f"invalid state rho={rho[i]!r}, eps={eps[i]!r} in cell {i} at t={t}",
            cell=i, t=t)


def _bc_flow(bc, t: float, fd: FundamentalDiagram, upstream: bool) -> float:
    if isinstance(bc, StateBC):
        return demand(fd, bc.state) if upstream else supply(fd, bc.state)
    if isinstance(bc, (DemandBC, SupplyBC)):
        return bc.value(t)
    if isinstance(bc, (int, float)):
        return float(bc)
    raise DomainError(f"unsupported boundary condition {bc!r}")


class _Stepper:
    """Preallocated buffers + kernel binding for repeated steps."""

    def __init__(self, scn: RoadScenario, backend: Optional[str] = None):
        self.scn = scn
        self.kern = kernels.get(backend)
        self.params = kernels.fd_params(scn.fd)
        self.x = scn.cell_centers()
        self.q = np.empty(scn.cells + 1)
        self.rho_out = np.empty(scn.cells)
        self.static_eps = None
        if not scn.intensity.depends_on_density:
            self.static_eps = np.asarray(
                scn.intensity.eval_cells(self.x, np.zeros(scn.cells)), dtype=float)

    def eps_for(self, rho: np.ndarray) -> np.ndarray:
        if self.static_eps is not None:
            return self.static_eps
        return np.asarray(self.scn.intensity.eval_cells(self.x, rho), dtype=float)

    def step(self, state: SimState, dt: float) -> SimState:
        scn = self.scn
        if dt <= 0.0:
            raise DomainError(f"dt must be positive, got {dt}")
        if dt > stable_dt(scn) * (1.0 + 1e-12):
            raise DomainError(
                f"dt={dt} exceeds the stable step {stable_dt(scn)}")
        eps = self.eps_for(state.rho)
        d_up = _bc_flow(scn.upstream, state.t, scn.fd, upstream=True)
        s_dn = _bc_flow(scn.downstream, state.t, scn.fd, upstream=False)
        kind, vf, rc0, cap0, rj, cja = self.params
        self.kern.godunov_fluxes(kind, vf, rc0, cap0, rj, cja,
                                 eps, state.rho, d_up, s_dn, self.q)
        self.kern.apply_fluxes(state.rho, self.q, dt / scn.dx, self.rho_out)
        rho_new = self.rho_out.copy()
        _check_cells(scn, rho_new, eps, t=state.t + dt)
        return SimState(
            t=state.t + dt,
            rho=rho_new,
            eps=eps if self.static_eps is None else eps.copy(),
            inflow=state.inflow + float(self.q[0]) * dt,
            outflow=state.outflow + float(self.q[-1]) * dt,
            steps=state.steps + 1,
        )


def step(scn: RoadScenario, state: SimState, dt: float,
         backend: Optional[str] = None) -> SimState:
    """Advance one explicit step of size dt (must satisfy dt <= stable_dt)."""
    return _Stepper(scn, backend).step(state, dt)


def run(scn: RoadScenario, backend: Optional[str] = None) -> list:
    """Run to t_end, returning snapshots at 0, k*output_interval, ..., t_end."""
    stepper = _Stepper(scn, backend)
    state = initial_state(scn)
    out = [state]
    tol = _T_TOL_REL * max(scn.t_end, 1.0)

    targets = []
    if scn.output_interval is not None:
        k = 1
        while k * scn.output_interval < scn.t_end - tol:
            targets.append(k * scn.output_interval)
            k += 1
    if scn.t_end > 0.0:
        targets.append(scn.t_end)

    dt_max = stable_dt(scn)
    for target in targets:
        while state.t < target - tol:
            dt = min(dt_max, target - state.t)
            state = stepper.step(state, dt)
        out.append(state)
    return out


def mass_balance_error(scn: RoadScenario, first: SimState, last: SimState) -> float:
    """|change in stored vehicles - net boundary inflow|, for ledger checks."""
    stored = last.total_vehicles(scn.dx) - first.total_vehicles(scn.dx)
    net = (last.inflow - first.inflow) - (last.outflow - first.outflow)
    return abs(stored - net)


def write_snapshots_csv(f, scn: RoadScenario, snapshots, units: str = "us") -> None:
    """CSV rows t,x,rho,eps,v,q, time-major then cell order.

    units="metric" converts x to km, rho to veh/km and v to km/h on the
    way out (flows are veh/h either way, times hours).
    """
    from .units import KM_PER_MILE

    if units not in ("us", "metric"):
        raise DomainError(f"unknown unit system {units!r}")
    metric = units == "metric"
    x = scn.cell_centers()
    fd = scn.fd
    f.write("t,x,rho,eps,v,q\n")
    for snap in snapshots:
        for i in range(scn.cells):
            rho, eps = float(snap.rho[i]), float(snap.eps[i])
            q = fd.flow_lc(eps, rho)
            v = fd.speed(min(max(rho * (1.0 + eps), 0.0), fd.rho_j))
            xi = x[i]
            if metric:
                xi, rho, v = xi * KM_PER_MILE, rho / KM_PER_MILE, v * KM_PER_MILE
            f.write(f"{snap.t:.12g},{xi:.12g},{rho:.12g},"
                    f"{eps:.12g},{v:.12g},{q:.12g}\n")
