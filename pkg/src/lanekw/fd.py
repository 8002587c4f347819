"""Fundamental diagrams with a lane-changing intensity variable.

A lane-changing vehicle momentarily occupies two lanes, so a stream with
intensity eps >= 0 behaves as if its density were inflated to the
effective value rho_bar = rho * (1 + eps). Actual flow under lane
changing is

    q = rho * V(rho * (1 + eps))

and the corresponding "no lane-changing effect" curve (effective
vehicles counted) is (1 + eps) * q. Two speed-density relations are
provided: a triangular flow curve (free-flow speed up to a critical
density, linear congested branch down to jam) and a smooth
max-sensitivity curve that is strictly decreasing in density with a
strictly concave flow.

Units are unit-agnostic but mi/h/veh-mi is assumed throughout the
package; see lanekw.units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

from .errors import DomainError

# Relative slack on density domain checks: states constructed through
# inversions or unit round trips may overshoot rho_j by a few ulp.
_RHO_SLACK_REL = 1e-9

# Above this value of the inner exponent the max-sensitivity speed is
# free-flow to double precision (exp(1 - exp(u)) underflows to 0).
_MS_FREEFLOW_CUTOFF = 500.0

_BISECT_REL_TOL = 1e-12
_BISECT_MAX_ITER = 200


@dataclass(frozen=True)
class TrafficState:
    """A (lane-changing intensity, density) pair."""

    eps: float
    rho: float


def _bisect(f, lo: float, hi: float, rel_tol: float = _BISECT_REL_TOL) -> float:
    """Root of f on [lo, hi] by bisection; f(lo) and f(hi) must differ in sign."""
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        raise DomainError(f"no sign change on [{lo}, {hi}]")
    for _ in range(_BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if hi - lo <= rel_tol * max(abs(lo), abs(hi), 1.0):
            return mid
        fmid = f(mid)
        if fmid == 0.0:
            return mid
        if (fmid > 0.0) == (flo > 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class FundamentalDiagram:
    """Shared eps-lifted operations; subclasses provide the base curve.

    Subclasses implement speed/dspeed/flow/dflow of the effective density
    rho_bar on [0, rho_j], plus critical_density/capacity/max_wave_speed.
    """

    v_f: float
    rho_j: float

    # -- base curve ----------------------------------------------------

    def _clip_rho_bar(self, rho_bar: float) -> float:
        slack = _RHO_SLACK_REL * self.rho_j
        if not (-slack <= rho_bar <= self.rho_j + slack) or math.isnan(rho_bar):
            raise DomainError(
                f"effective density {rho_bar!r} outside [0, {self.rho_j}]")
        return min(max(rho_bar, 0.0), self.rho_j)

    def speed(self, rho_bar: float) -> float:
        """V(rho_bar), nonincreasing, V(0) = v_f, V(rho_j) = 0."""
        raise NotImplementedError

    def dspeed(self, rho_bar: float) -> float:
        """dV/drho_bar."""
        raise NotImplementedError

    def flow(self, rho_bar: float) -> float:
        """Base flow curve rho_bar * V(rho_bar)."""
        rho_bar = self._clip_rho_bar(rho_bar)
        return rho_bar * self.speed(rho_bar)

    def dflow(self, rho_bar: float) -> float:
        """Slope of the base flow curve (kinematic wave speed)."""
        raise NotImplementedError

    # -- lane-changing lift --------------------------------------------

    def flow_lc(self, eps: float, rho: float) -> float:
        """Vehicle flow under lane changing, rho * V(rho * (1 + eps))."""
        _check_eps(eps)
        rho_bar = self._clip_rho_bar(rho * (1.0 + eps))
        return rho_bar * self.speed(rho_bar) / (1.0 + eps)

    def flow_no_lc(self, eps: float, rho: float) -> float:
        """Flow with lane changers counted at their effective weight."""
        return (1.0 + eps) * self.flow_lc(eps, rho)

    def wave_speed(self, eps: float, rho: float) -> float:
        """Kinematic wave speed of the lane-changing flow, dflow(rho*(1+eps))."""
        _check_eps(eps)
        return self.dflow(self._clip_rho_bar(rho * (1.0 + eps)))

    def branch_wave_speed(self, eps: float, rho: float, congested: bool) -> float:
        """Wave speed of (eps, rho) taken on the stated branch.

        Identical to wave_speed for smooth curves; the triangular
        override resolves the kink, where the two one-sided slopes
        differ.
        """
        return self.wave_speed(eps, rho)

    def critical_density(self, eps: float = 0.0) -> float:
        """Density where the lane-changing flow curve peaks for this eps."""
        raise NotImplementedError

    def capacity(self, eps: float = 0.0) -> float:
        """Peak flow at intensity eps; scales as capacity(0)/(1+eps)."""
        _check_eps(eps)
        return self.flow_lc(eps, self.critical_density(eps))

    def jam_density(self, eps: float = 0.0) -> float:
        """Largest admissible density at intensity eps."""
        _check_eps(eps)
        return self.rho_j / (1.0 + eps)

    def max_wave_speed(self) -> float:
        """CFL bound: max of free-flow speed and fastest backward wave."""
        raise NotImplementedError

    # -- branch inversion ----------------------------------------------

    def density_from_flow(self, eps: float, q: float, congested: bool) -> float:
        """Density on the requested branch of the eps-curve with flow q.

        The undercongested branch is [0, critical_density(eps)], the
        congested branch [critical_density(eps), jam_density(eps)];
        requires 0 <= q <= capacity(eps) (with relative slack for
        round-off at the peak).
        """
        _check_eps(eps)
        cap = self.capacity(eps)
        if math.isnan(q) or q < -_RHO_SLACK_REL * cap or q > cap * (1.0 + 1e-9):
            raise DomainError(f"flow {q!r} outside [0, capacity {cap}]")
        q = min(max(q, 0.0), cap)
        rho_bar = self._invert_base_flow(q * (1.0 + eps), congested)
        return rho_bar / (1.0 + eps)

    def _invert_base_flow(self, q_bar: float, congested: bool) -> float:
        """rho_bar on the requested branch of the base curve with flow q_bar."""
        raise NotImplementedError


def _check_eps(eps: float) -> None:
    if math.isnan(eps) or eps < 0.0:
        raise DomainError(f"lane-changing intensity {eps!r} must be >= 0")


@dataclass(frozen=True)
class TriangularFD(FundamentalDiagram):
    """Triangular flow curve: free-flow speed v_f up to rho_c, linear
    congested branch with wave speed -w = -rho_c*v_f/(rho_j - rho_c)."""

    v_f: float
    rho_c: float
    rho_j: float

    def __post_init__(self):
        if not (self.v_f > 0.0):
            raise DomainError(f"v_f must be positive, got {self.v_f}")
        if not (0.0 < self.rho_c < self.rho_j):
            raise DomainError(
                f"need 0 < rho_c < rho_j, got rho_c={self.rho_c}, rho_j={self.rho_j}")

    @property
    def w(self) -> float:
        """Magnitude of the congested-branch wave speed."""
        return self.rho_c * self.v_f / (self.rho_j - self.rho_c)

    def speed(self, rho_bar: float) -> float:
        rho_bar = self._clip_rho_bar(rho_bar)
        if rho_bar <= self.rho_c:
            return self.v_f
        return self.w * (self.rho_j - rho_bar) / rho_bar

    def dspeed(self, rho_bar: float) -> float:
        rho_bar = self._clip_rho_bar(rho_bar)
        if rho_bar <= self.rho_c:
            return 0.0
        return -self.w * self.rho_j / (rho_bar * rho_bar)

    def dflow(self, rho_bar: float) -> float:
        # At the kink the congested value is returned, which makes the
        # critical state the first congested point.
        rho_bar = self._clip_rho_bar(rho_bar)
        if rho_bar < self.rho_c:
            return self.v_f
        return -self.w

    def branch_wave_speed(self, eps: float, rho: float, congested: bool) -> float:
        return -self.w if congested else self.v_f

    def critical_density(self, eps: float = 0.0) -> float:
        _check_eps(eps)
        return self.rho_c / (1.0 + eps)

    def capacity(self, eps: float = 0.0) -> float:
        _check_eps(eps)
        return self.v_f * self.rho_c / (1.0 + eps)

    def max_wave_speed(self) -> float:
        return max(self.v_f, self.w)

    def _invert_base_flow(self, q_bar: float, congested: bool) -> float:
        if congested:
            return self.rho_j - q_bar / self.w
        return q_bar / self.v_f


@dataclass(frozen=True)
class MaxSensitivityFD(FundamentalDiagram):
    """Smooth speed-density relation with maximum-sensitivity form

        V(rho_bar) = v_f * (1 - exp(1 - exp((|c_j|/v_f) * (rho_j/rho_bar - 1))))

    c_j < 0 is the wave speed at jam density; the flow curve is strictly
    concave so kinematic waves are genuinely nonlinear everywhere.
    """

    v_f: float
    c_j: float
    rho_j: float

    def __post_init__(self):
        if not (self.v_f > 0.0):
            raise DomainError(f"v_f must be positive, got {self.v_f}")
        if not (self.c_j < 0.0):
            raise DomainError(f"c_j must be negative, got {self.c_j}")
        if not (self.rho_j > 0.0):
            raise DomainError(f"rho_j must be positive, got {self.rho_j}")

    def _u(self, rho_bar: float) -> float:
        return (-self.c_j / self.v_f) * (self.rho_j / rho_bar - 1.0)

    def speed(self, rho_bar: float) -> float:
        rho_bar = self._clip_rho_bar(rho_bar)
        if rho_bar == 0.0:
            return self.v_f
        u = self._u(rho_bar)
        if u > _MS_FREEFLOW_CUTOFF:
            return self.v_f
        return self.v_f * (1.0 - math.exp(1.0 - math.exp(u)))

    def dspeed(self, rho_bar: float) -> float:
        rho_bar = self._clip_rho_bar(rho_bar)
        if rho_bar == 0.0:
            return 0.0
        u = self._u(rho_bar)
        if u > _MS_FREEFLOW_CUTOFF:
            return 0.0
        # V' = c_j * (rho_j / rho_bar^2) * exp(u + 1 - exp(u)); the
        # exponent is <= 0 with equality only at rho_bar = rho_j.
        return self.c_j * (self.rho_j / (rho_bar * rho_bar)) * math.exp(
            u + 1.0 - math.exp(u))

    def dflow(self, rho_bar: float) -> float:
        rho_bar = self._clip_rho_bar(rho_bar)
        if rho_bar == 0.0:
            return self.v_f
        return self.speed(rho_bar) + rho_bar * self.dspeed(rho_bar)

    @cached_property
    def _crit0(self) -> float:
        # dflow is strictly decreasing from v_f to c_j; bisect its sign change.
        return _bisect(self.dflow, 0.0, self.rho_j)

    @cached_property
    def _cap0(self) -> float:
        return self.flow(self._crit0)

    def critical_density(self, eps: float = 0.0) -> float:
        _check_eps(eps)
        # wave_speed(eps, rho) = dflow(rho*(1+eps)), so the root scales
        # exactly as 1/(1+eps) from the eps = 0 root.
        return self._crit0 / (1.0 + eps)

    def capacity(self, eps: float = 0.0) -> float:
        _check_eps(eps)
        return self._cap0 / (1.0 + eps)

    def max_wave_speed(self) -> float:
        return max(self.v_f, -self.c_j)

    def _invert_base_flow(self, q_bar: float, congested: bool) -> float:
        crit = self._crit0
        if congested:
            lo, hi = crit, self.rho_j
        else:
            lo, hi = 0.0, crit
        if q_bar >= self._cap0:
            return crit
        f = lambda r: self.flow(r) - q_bar
        # flow is monotone on each branch; endpoints bracket by construction
        if congested:
            return _bisect(f, lo, hi, rel_tol=1e-12)
        if q_bar <= 0.0:
            return 0.0
        return _bisect(f, lo, hi, rel_tol=1e-12)


def check_state(fd: FundamentalDiagram, s: TrafficState) -> None:
    """Raise DomainError unless s is admissible for fd."""
    _check_eps(s.eps)
    slack = _RHO_SLACK_REL * fd.rho_j
    if math.isnan(s.rho) or s.rho < -slack or s.rho * (1.0 + s.eps) > fd.rho_j + slack:
        raise DomainError(
            f"state (eps={s.eps}, rho={s.rho}) outside 0 <= rho*(1+eps) <= {fd.rho_j}")
