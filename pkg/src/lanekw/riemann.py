"""Exact Riemann solutions for the lane-changing kinematic wave system.

State U = (eps, rho) evolves under rho_t + flow_lc(eps, rho)_x = 0 with
eps frozen in time (intensity rides with location). The system is
resonant: one characteristic family is the standing wave (speed 0,
carrying the eps jump at conserved flux), the other the kinematic wave
family with speed wave_speed(eps, rho), which vanishes on the
transitional curve rho = critical_density(eps).

Solutions fall into ten types depending on which side of the
transitional curve each state lies on and how the two flow levels and
capacities order. Every type's flux agrees with min(demand(left),
supply(right)); the structural solve() additionally returns the full
wave fan so solutions can be sampled in similarity coordinates x/t.

Admissibility: wave speeds are nondecreasing left to right, and a
standing wave never crosses the transitional curve (its endpoints sit on
a common side, possibly touching the curve).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .fd import FundamentalDiagram, TrafficState, _bisect, check_state

STANDING = "standing"
SHOCK = "shock"
RAREFACTION = "rarefaction"

# Waves with a density jump below this (relative to rho_j) and no eps
# jump are artifacts of inverting a state at its own flow; drop them.
_DROP_RHO_REL = 1e-11
_DROP_EPS = 1e-13


@dataclass(frozen=True)
class Wave:
    """One wave of a Riemann fan.

    speed_lo == speed_hi for shocks and standing waves; rarefactions
    span [speed_lo, speed_hi] (collapsing to a contact at the branch
    speed for the triangular diagram).
    """

    kind: str
    left: TrafficState
    right: TrafficState
    speed_lo: float
    speed_hi: float


@dataclass(frozen=True)
class RiemannSolution:
    fd: FundamentalDiagram
    left: TrafficState
    right: TrafficState
    type_id: int
    waves: tuple
    intermediates: tuple
    boundary_flux: float


def is_undercongested(fd: FundamentalDiagram, s: TrafficState) -> bool:
    """True iff s lies at or left of the transitional curve."""
    return s.rho <= fd.critical_density(s.eps)


def demand(fd: FundamentalDiagram, s: TrafficState) -> float:
    """Flow the state can send downstream."""
    check_state(fd, s)
    if s.rho <= fd.critical_density(s.eps):
        return fd.flow_lc(s.eps, s.rho)
    return fd.capacity(s.eps)


def supply(fd: FundamentalDiagram, s: TrafficState) -> float:
    """Flow the state can accept from upstream."""
    check_state(fd, s)
    if s.rho <= fd.critical_density(s.eps):
        return fd.capacity(s.eps)
    return fd.flow_lc(s.eps, s.rho)


def boundary_flux(fd: FundamentalDiagram, left: TrafficState,
                  right: TrafficState) -> float:
    """Flux at x/t = 0: min(demand(left), supply(right))."""
    return min(demand(fd, left), supply(fd, right))


def classify(fd: FundamentalDiagram, left: TrafficState,
             right: TrafficState) -> int:
    """Solution type 1..10; ties on region boundaries take the lowest id.

    Types 1-4 have an undercongested left state (demand = flow(left)),
    types 5-10 an overcongested one (demand = capacity(eps_left)).
    """
    check_state(fd, left)
    check_state(fd, right)
    l_uc = left.rho <= fd.critical_density(left.eps)
    r_uc = right.rho <= fd.critical_density(right.eps)
    r_oc = right.rho >= fd.critical_density(right.eps)
    q_l = fd.flow_lc(left.eps, left.rho)
    q_r = fd.flow_lc(right.eps, right.rho)
    cap_l = fd.capacity(left.eps)
    cap_r = fd.capacity(right.eps)

    if l_uc:
        if r_uc and q_r <= q_l <= cap_r:
            return 1
        if q_r > q_l:
            return 2
        if r_oc and q_r <= q_l:
            return 3
        if r_uc and cap_r < q_l:
            return 4
    else:
        if r_oc and q_r <= q_l:
            return 5
        if r_oc and q_l < q_r <= cap_l:
            return 6
        if r_uc and q_r <= cap_l <= cap_r:
            return 7
        if q_r > cap_l:
            return 8
        if r_uc and cap_r < q_l:
            return 9
        if r_uc and q_l <= cap_r < cap_l:
            return 10
    raise DomainError(  # unreachable: the ten regions tile the state space
        f"unclassifiable pair {left}, {right}")


def _same(a: TrafficState, b: TrafficState, rho_j: float) -> bool:
    return (abs(a.eps - b.eps) <= _DROP_EPS
            and abs(a.rho - b.rho) <= _DROP_RHO_REL * rho_j)


def _shock(fd, a: TrafficState, b: TrafficState) -> Wave:
    s = ((fd.flow_lc(b.eps, b.rho) - fd.flow_lc(a.eps, a.rho))
         / (b.rho - a.rho))
    return Wave(SHOCK, a, b, s, s)


def _rarefaction(fd, a: TrafficState, b: TrafficState, congested: bool) -> Wave:
    lo = fd.branch_wave_speed(a.eps, a.rho, congested)
    hi = fd.branch_wave_speed(b.eps, b.rho, congested)
    return Wave(RAREFACTION, a, b, lo, hi)


def _standing(fd, a: TrafficState, b: TrafficState) -> Wave:
    return Wave(STANDING, a, b, 0.0, 0.0)


def solve(fd: FundamentalDiagram, left: TrafficState,
          right: TrafficState) -> RiemannSolution:
    """Construct the full wave fan for the pair (left, right)."""
    tid = classify(fd, left, right)
    q_l = fd.flow_lc(left.eps, left.rho)
    q_r = fd.flow_lc(right.eps, right.rho)
    cap_l = fd.capacity(left.eps)
    cap_r = fd.capacity(right.eps)

    def uc(eps, q):
        return TrafficState(eps, fd.density_from_flow(eps, q, congested=False))

    def oc(eps, q):
        return TrafficState(eps, fd.density_from_flow(eps, q, congested=True))

    def crit(eps):
        return TrafficState(eps, fd.critical_density(eps))

    e_l, e_r = left.eps, right.eps
    if tid == 1:
        u1 = uc(e_r, q_l)
        specs = [(_standing, left, u1), (_rar_uc, u1, right)]
        q0 = q_l
    elif tid == 2:
        u1 = uc(e_r, q_l)
        specs = [(_standing, left, u1), (_shk, u1, right)]
        q0 = q_l
    elif tid == 3:
        u1 = oc(e_l, q_r)
        specs = [(_shk, left, u1), (_standing, u1, right)]
        q0 = q_r
    elif tid == 4:
        u1, u2 = oc(e_l, cap_r), crit(e_r)
        specs = [(_shk, left, u1), (_standing, u1, u2), (_rar_uc, u2, right)]
        q0 = cap_r
    elif tid == 5:
        u1 = oc(e_l, q_r)
        specs = [(_shk, left, u1), (_standing, u1, right)]
        q0 = q_r
    elif tid == 6:
        u1 = oc(e_l, q_r)
        specs = [(_rar_oc, left, u1), (_standing, u1, right)]
        q0 = q_r
    elif tid == 7:
        u1, u2 = crit(e_l), uc(e_r, cap_l)
        specs = [(_rar_oc, left, u1), (_standing, u1, u2), (_rar_uc, u2, right)]
        q0 = cap_l
    elif tid == 8:
        u1, u2 = crit(e_l), uc(e_r, cap_l)
        specs = [(_rar_oc, left, u1), (_standing, u1, u2), (_shk, u2, right)]
        q0 = cap_l
    elif tid == 9:
        u1, u2 = oc(e_l, cap_r), crit(e_r)
        specs = [(_shk, left, u1), (_standing, u1, u2), (_rar_uc, u2, right)]
        q0 = cap_r
    else:  # type 10
        u1, u2 = oc(e_l, cap_r), crit(e_r)
        specs = [(_rar_oc, left, u1), (_standing, u1, u2), (_rar_uc, u2, right)]
        q0 = cap_r

    waves = []
    for build, a, b in specs:
        if _same(a, b, fd.rho_j):
            continue
        waves.append(build(fd, a, b))

    seen = {(left.eps, left.rho), (right.eps, right.rho)}
    intermediates = []
    for w in waves:
        for s in (w.left, w.right):
            key = (s.eps, s.rho)
            if key not in seen:
                seen.add(key)
                intermediates.append(s)
    return RiemannSolution(fd, left, right, tid, tuple(waves),
                           tuple(intermediates), q0)


def _shk(fd, a, b):
    return _shock(fd, a, b)


def _rar_uc(fd, a, b):
    return _rarefaction(fd, a, b, congested=False)


def _rar_oc(fd, a, b):
    return _rarefaction(fd, a, b, congested=True)


def sample(sol: RiemannSolution, xi: float) -> TrafficState:
    """State at similarity coordinate x/t = xi.

    At a discontinuity the downstream state is returned, so sample(sol, 0)
    at a standing wave gives the state just right of the interface.
    """
    cur = sol.left
    for w in sol.waves:
        if xi < w.speed_lo:
            return cur
        if w.kind == RAREFACTION and w.speed_lo < w.speed_hi and xi <= w.speed_hi:
            return _fan_state(sol.fd, w, xi)
        cur = w.right
    return cur


def _fan_state(fd, w: Wave, xi: float) -> TrafficState:
    """Interior of a genuine rarefaction: solve wave_speed(eps, rho) = xi."""
    eps = w.left.eps
    lo, hi = w.right.rho, w.left.rho  # wave speed decreasing in rho
    rho = _bisect(lambda r: fd.wave_speed(eps, r) - xi, lo, hi)
    return TrafficState(eps, rho)
