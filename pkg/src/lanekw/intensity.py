"""Lane-changing intensity models and hand estimates.

The intensity eps is the fraction of vehicle-time spent straddling two
lanes. Models map (location, density) to eps; evaluated values are
clamped to >= 0 and clamping events are counted on the model so a
simulation can report how often a fitted form went negative.

Two closed-form estimates mirror common field situations: a uniform
stream where a share of vehicles each change lanes once while crossing a
segment, and an on-ramp whose merging flow disturbs a mainline segment.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError

# Weight applied to on-ramp merges: each merge blocks the shoulder lane
# and triggers knock-on changes, so one ramp vehicle counts for 2.5
# expected lane crossings on the mainline.
ONRAMP_CROSSING_WEIGHT = 2.5


@dataclass
class ClampCounter:
    """Mutable tally of negative-evaluation clamps (shared per model)."""

    count: int = 0


@dataclass(frozen=True)
class IntensityModel:
    """Base class: subclasses implement raw()/raw_cells(); eval() clamps."""

    def raw(self, x: float, rho: float) -> float:
        raise NotImplementedError

    def raw_cells(self, x: np.ndarray, rho: np.ndarray) -> np.ndarray:
        # generic fallback; vectorized overrides exist where it matters
        return np.array([self.raw(xi, ri) for xi, ri in zip(x, rho)])

    @property
    def depends_on_density(self) -> bool:
        return True

    def eval(self, x: float, rho: float) -> float:
        v = self.raw(x, rho)
        if v < 0.0:
            self.clamps.count += 1
            return 0.0
        return v

    def eval_cells(self, x: np.ndarray, rho: np.ndarray) -> np.ndarray:
        v = self.raw_cells(x, rho)
        neg = v < 0.0
        n = int(np.count_nonzero(neg))
        if n:
            self.clamps.count += n
            v = np.where(neg, 0.0, v)
        return v


def _counter_field():
    return field(default_factory=ClampCounter, compare=False, repr=False)


@dataclass(frozen=True)
class ConstantIntensity(IntensityModel):
    eps: float
    clamps: ClampCounter = _counter_field()

    def __post_init__(self):
        if self.eps < 0.0:
            raise DomainError(f"constant intensity must be >= 0, got {self.eps}")

    def raw(self, x, rho):
        return self.eps

    def raw_cells(self, x, rho):
        return np.full_like(np.asarray(rho, dtype=float), self.eps)

    @property
    def depends_on_density(self):
        return False


@dataclass(frozen=True)
class ReverseLambdaIntensity(IntensityModel):
    """Density-triggered intensity: zero below rho_c, then
    (2 - 2 rho/rho_j) / (15 + 2 rho/rho_j).

    The jump at rho_c puts a capacity drop into the flow-density curve
    (a reverse-lambda shape): congested flow falls below the free-flow
    peak the instant lane changing switches on.
    """

    rho_c: float
    rho_j: float
    clamps: ClampCounter = _counter_field()

    def __post_init__(self):
        if not (0.0 < self.rho_c < self.rho_j):
            raise DomainError(
                f"need 0 < rho_c < rho_j, got {self.rho_c}, {self.rho_j}")

    def raw(self, x, rho):
        if rho < self.rho_c:
            return 0.0
        r = rho / self.rho_j
        return (2.0 - 2.0 * r) / (15.0 + 2.0 * r)

    def raw_cells(self, x, rho):
        rho = np.asarray(rho, dtype=float)
        r = rho / self.rho_j
        return np.where(rho < self.rho_c, 0.0, (2.0 - 2.0 * r) / (15.0 + 2.0 * r))


@dataclass(frozen=True)
class ReciprocalIntensity(IntensityModel):
    """Fitted hyperbolic form a + b / rho (negative tails clamp to 0)."""

    a: float
    b: float
    clamps: ClampCounter = _counter_field()

    def raw(self, x, rho):
        if rho <= 0.0:
            raise DomainError(f"reciprocal intensity undefined at rho={rho}")
        return self.a + self.b / rho

    def raw_cells(self, x, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0.0):
            raise DomainError("reciprocal intensity undefined at rho<=0")
        return self.a + self.b / rho


@dataclass(frozen=True)
class ExponentialIntensity(IntensityModel):
    """Fitted exponential form a * exp(b * rho)."""

    a: float
    b: float
    clamps: ClampCounter = _counter_field()

    def raw(self, x, rho):
        return self.a * math.exp(self.b * rho)

    def raw_cells(self, x, rho):
        rho = np.asarray(rho, dtype=float)
        return self.a * np.exp(self.b * rho)


@dataclass(frozen=True)
class TabulatedIntensity(IntensityModel):
    """Piecewise-linear table of (density, eps) pairs."""

    rho: tuple
    eps: tuple
    clamps: ClampCounter = _counter_field()

    def __post_init__(self):
        if len(self.rho) != len(self.eps) or len(self.rho) < 2:
            raise DomainError("table needs >= 2 (rho, eps) pairs of equal length")
        if any(b <= a for a, b in zip(self.rho, self.rho[1:])):
            raise DomainError("table densities must be strictly increasing")

    def raw(self, x, rho):
        return float(np.interp(rho, self.rho, self.eps))

    def raw_cells(self, x, rho):
        return np.interp(np.asarray(rho, dtype=float), self.rho, self.eps)


@dataclass(frozen=True)
class PiecewiseLocationIntensity(IntensityModel):
    """Different sub-models on half-open road segments [x_i, x_{i+1}).

    breakpoints has one more entry than segments; lookup at the final
    breakpoint maps to the last segment so a query at the road end is
    legal. Anything outside [x_0, x_n] is a domain error.
    """

    breakpoints: tuple
    segments: tuple
    clamps: ClampCounter = _counter_field()

    def __post_init__(self):
        if len(self.breakpoints) != len(self.segments) + 1:
            raise DomainError("need len(breakpoints) == len(segments) + 1")
        if any(b <= a for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise DomainError("breakpoints must be strictly increasing")

    def _segment(self, x: float) -> IntensityModel:
        bp = self.breakpoints
        if x == bp[-1]:
            return self.segments[-1]
        if not (bp[0] <= x < bp[-1]):
            raise DomainError(f"location {x} outside [{bp[0]}, {bp[-1]}]")
        return self.segments[bisect_right(bp, x) - 1]

    def raw(self, x, rho):
        return self._segment(x).raw(x, rho)

    def raw_cells(self, x, rho):
        x = np.asarray(x, dtype=float)
        rho = np.asarray(rho, dtype=float)
        out = np.empty_like(rho)
        for i in range(x.size):
            out[i] = self._segment(float(x[i])).raw(float(x[i]), float(rho[i]))
        return out

    @property
    def depends_on_density(self):
        return any(seg.depends_on_density for seg in self.segments)


# ---------------------------------------------------------------------------
# closed-form estimates


def lane_change_duration(lane_width: float, v: float, theta: float) -> float:
    """Time to traverse one lane width at speed v under yaw angle theta.

    t_lc = lane_width / (v * tan(theta)); units must be consistent
    (miles and mi/h give hours). theta in radians, 0 < theta < pi/2.
    """
    if not (v > 0.0):
        raise DomainError(f"speed must be positive, got {v}")
    if not (0.0 < theta < math.pi / 2.0):
        raise DomainError(f"angle must lie in (0, pi/2), got {theta}")
    if not (lane_width > 0.0):
        raise DomainError(f"lane width must be positive, got {lane_width}")
    return lane_width / (v * math.tan(theta))


@dataclass(frozen=True)
class UniformTrafficSpec:
    """Inputs for the uniform-stream intensity estimate.

    alpha weights each physical change by the expected number of lane
    crossings; rho_lc is the density of vehicles that change lanes once
    while traversing the segment; T is the segment traversal time
    (derivable as length/speed); t_lc the single-change duration
    (derivable from lane_width/speed/theta).
    """

    alpha: float
    rho_lc: float
    rho: float
    t_lc: Optional[float] = None
    T: Optional[float] = None
    length: Optional[float] = None
    speed: Optional[float] = None
    lane_width: Optional[float] = None
    theta: Optional[float] = None


def uniform_intensity(spec: UniformTrafficSpec) -> float:
    """eps = alpha * rho_lc * t_lc / (rho * T) for a uniform stream.

    Dimensionless ratio: t_lc and T (or length/speed) must share one time
    unit, rho_lc and rho one density unit.
    """
    t_lc = spec.t_lc
    if t_lc is None:
        if spec.lane_width is None or spec.speed is None or spec.theta is None:
            raise DomainError("t_lc missing and not derivable "
                              "(need lane_width, speed, theta)")
        t_lc = lane_change_duration(spec.lane_width, spec.speed, spec.theta)
    T = spec.T
    if T is None:
        if spec.length is None or spec.speed is None:
            raise DomainError("T missing and not derivable (need length, speed)")
        T = spec.length / spec.speed
    elif spec.length is not None and spec.speed is not None:
        if abs(T - spec.length / spec.speed) > 1e-12 * abs(T):
            raise DomainError(
                f"inconsistent traversal time: T={T} but length/speed="
                f"{spec.length / spec.speed}")
    if not (spec.rho > 0.0):
        raise DomainError(f"density must be positive, got {spec.rho}")
    if not (T > 0.0):
        raise DomainError(f"traversal time must be positive, got {T}")
    if spec.rho_lc < 0.0 or spec.alpha < 0.0:
        raise DomainError("alpha and rho_lc must be >= 0")
    return spec.alpha * spec.rho_lc * t_lc / (spec.rho * T)


def onramp_intensity(q_on: float, t_lc: float, rho: float, length: float) -> float:
    """Mainline intensity induced by an on-ramp merging flow q_on over a
    segment of the given length: weight * q_on * t_lc / (rho * length)."""
    if not (rho > 0.0):
        raise DomainError(f"density must be positive, got {rho}")
    if not (length > 0.0):
        raise DomainError(f"length must be positive, got {length}")
    if q_on < 0.0 or t_lc < 0.0:
        raise DomainError("q_on and t_lc must be >= 0")
    return ONRAMP_CROSSING_WEIGHT * q_on * t_lc / (rho * length)
