"""Scenario configuration: one YAML document drives every subcommand.

The file declares its unit system (`us` or `metric`). Everything is
converted to the internal units (miles, hours, vehicles) while loading,
so the rest of the library never sees unit branches. Times are hours in
both systems; metric lengths are km, speeds km/h, densities veh/km.

The calibrate section is the exception: trajectory files are feet and
seconds by convention, so its geometry (separations, thresholds,
section bounds) stays in feet and its times in seconds.

Errors carry the dotted path of the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import yaml

from .errors import ConfigError
from .fd import FundamentalDiagram, MaxSensitivityFD, TriangularFD
from .intensity import (ConstantIntensity, ExponentialIntensity,
                        IntensityModel, PiecewiseLocationIntensity,
                        ReciprocalIntensity, ReverseLambdaIntensity,
                        TabulatedIntensity)
from .sim import (FREE_OUTFLOW, DemandBC, RoadScenario, StateBC, SupplyBC,
                  piecewise_constant)
from .units import KM_PER_MILE

UNIT_SYSTEMS = ("us", "metric")

FD_KINDS = ("triangular", "max-sensitivity")
INTENSITY_KINDS = ("constant", "reverse-lambda", "reciprocal", "exponential",
                   "table", "by-location")


@dataclass(frozen=True)
class CalibrateSettings:
    separations: tuple          # ft
    dy_threshold: float         # ft
    vehicle_width: Optional[float]
    section: tuple              # (x_a, x_b) ft
    T: float                    # s
    stride: float               # s
    span: Optional[tuple]       # (t0, t1) s or None -> derived from data
    split: float
    smooth_window: int


@dataclass(frozen=True)
class ConfigBundle:
    units: str
    fd: Optional[FundamentalDiagram]
    intensity: Optional[IntensityModel]
    scenario: Optional[RoadScenario]
    calibrate: Optional[CalibrateSettings]


class _Scale:
    """Multipliers taking declared units to internal mi/h/veh."""

    def __init__(self, units: str):
        if units not in UNIT_SYSTEMS:
            raise ConfigError(f"units: expected one of {UNIT_SYSTEMS}, got {units!r}")
        k = 1.0 / KM_PER_MILE if units == "metric" else 1.0
        self.length = k       # km -> mi
        self.speed = k        # km/h -> mi/h
        self.density = 1.0 / k  # veh/km -> veh/mi


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise ConfigError(f"{path}.{key}: missing required field")
    return d[key]


def _mapping(v, path: str) -> dict:
    if not isinstance(v, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(v).__name__}")
    return v


def _num(v, path: str, *, positive=False, nonneg=False) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    x = float(v)
    if positive and not x > 0.0:
        raise ConfigError(f"{path}: must be positive, got {x}")
    if nonneg and not x >= 0.0:
        raise ConfigError(f"{path}: must be nonnegative, got {x}")
    return x


def _int(v, path: str, *, positive=False) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path}: must be positive, got {v}")
    return v


def _choice(v, options, path: str) -> str:
    if v not in options:
        raise ConfigError(f"{path}: expected one of {list(options)}, got {v!r}")
    return v


def _numlist(v, path: str) -> list:
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{path}: expected a nonempty list of numbers")
    return [_num(x, f"{path}[{i}]") for i, x in enumerate(v)]


def _build_fd(node, sc: _Scale, path="fd") -> FundamentalDiagram:
    node = _mapping(node, path)
    kind = _choice(_require(node, "kind", path), FD_KINDS, f"{path}.kind")
    if kind == "triangular":
        return TriangularFD(
            v_f=_num(_require(node, "v_f", path), f"{path}.v_f", positive=True) * sc.speed,
            rho_c=_num(_require(node, "rho_c", path), f"{path}.rho_c", positive=True) * sc.density,
            rho_j=_num(_require(node, "rho_j", path), f"{path}.rho_j", positive=True) * sc.density)
    c_j = _num(_require(node, "c_j", path), f"{path}.c_j") * sc.speed
    if c_j >= 0.0:
        raise ConfigError(f"{path}.c_j: jam wave speed must be negative, got {c_j}")
    return MaxSensitivityFD(
        v_f=_num(_require(node, "v_f", path), f"{path}.v_f", positive=True) * sc.speed,
        c_j=c_j,
        rho_j=_num(_require(node, "rho_j", path), f"{path}.rho_j", positive=True) * sc.density)


def _build_intensity(node, sc: _Scale, fd, path="intensity",
                     nested=False) -> IntensityModel:
    node = _mapping(node, path)
    kind = _choice(_require(node, "kind", path), INTENSITY_KINDS, f"{path}.kind")
    if kind == "constant":
        return ConstantIntensity(_num(_require(node, "eps", path), f"{path}.eps", nonneg=True))
    if kind == "reverse-lambda":
        if "rho_c" in node:
            rho_c = _num(node["rho_c"], f"{path}.rho_c", positive=True) * sc.density
        elif fd is not None:
            rho_c = fd.critical_density(0.0)
        else:
            raise ConfigError(f"{path}.rho_c: required when no fd is configured")
        if "rho_j" in node:
            rho_j = _num(node["rho_j"], f"{path}.rho_j", positive=True) * sc.density
        elif fd is not None:
            rho_j = fd.rho_j
        else:
            raise ConfigError(f"{path}.rho_j: required when no fd is configured")
        return ReverseLambdaIntensity(rho_c=rho_c, rho_j=rho_j)
    if kind == "reciprocal":
        # eps = a + b/rho; b carries veh/mi, so it scales like a density
        return ReciprocalIntensity(
            a=_num(_require(node, "a", path), f"{path}.a"),
            b=_num(_require(node, "b", path), f"{path}.b") * sc.density)
    if kind == "exponential":
        # eps = a exp(b rho); b carries mi/veh, inverse of a density
        return ExponentialIntensity(
            a=_num(_require(node, "a", path), f"{path}.a", nonneg=True),
            b=_num(_require(node, "b", path), f"{path}.b") / sc.density)
    if kind == "table":
        rho = [r * sc.density for r in _numlist(_require(node, "rho", path), f"{path}.rho")]
        eps = _numlist(_require(node, "eps", path), f"{path}.eps")
        if len(rho) != len(eps):
            raise ConfigError(f"{path}: rho and eps lengths differ")
        return TabulatedIntensity(rho=tuple(rho), eps=tuple(eps))
    if nested:
        raise ConfigError(f"{path}.kind: by-location cannot nest")
    breaks = [b * sc.length for b in
              _numlist(_require(node, "breakpoints", path), f"{path}.breakpoints")]
    seg_nodes = _require(node, "segments", path)
    if not isinstance(seg_nodes, list) or len(seg_nodes) != len(breaks) - 1:
        raise ConfigError(
            f"{path}.segments: need exactly {len(breaks) - 1} entries "
            f"(one per breakpoint gap)")
    segs = [_build_intensity(s, sc, fd, f"{path}.segments[{i}]", nested=True)
            for i, s in enumerate(seg_nodes)]
    return PiecewiseLocationIntensity(breakpoints=tuple(breaks), segments=tuple(segs))


def _build_initial(node, sc: _Scale, length: float, path="initial"):
    node = _mapping(node, path)
    dens = _require(node, "density", path)
    if isinstance(dens, (int, float)) and not isinstance(dens, bool):
        return _num(dens, f"{path}.density", nonneg=True) * sc.density
    if not isinstance(dens, list) or not dens:
        raise ConfigError(f"{path}.density: expected a number or a list of segments")
    segs = []
    for i, raw in enumerate(dens):
        p = f"{path}.density[{i}]"
        seg = _mapping(raw, p)
        segs.append((_num(_require(seg, "from", p), f"{p}.from", nonneg=True) * sc.length,
                     _num(_require(seg, "to", p), f"{p}.to") * sc.length,
                     _num(_require(seg, "value", p), f"{p}.value", nonneg=True)
                     * sc.density))
    segs.sort(key=lambda s: s[0])
    tol = 1e-9 * length
    if abs(segs[0][0]) > tol or abs(segs[-1][1] - length) > tol:
        raise ConfigError(f"{path}.density: segments must cover [0, length]")
    for (a0, b0, _), (a1, _, _) in zip(segs, segs[1:]):
        if abs(b0 - a1) > tol:
            raise ConfigError(f"{path}.density: segments must be contiguous "
                              f"(gap between {b0} and {a1})")

    def profile(x: float) -> float:
        for a, b, val in segs:
            if a <= x < b:
                return val
        return segs[-1][2]

    return profile


def _build_flow_spec(node, path: str):
    """A flat flow value or a {schedule: [{t, value}...]} step function.
    Flows are veh/h in both unit systems; times are hours."""
    if isinstance(node, (int, float)) and not isinstance(node, bool):
        return _num(node, path, nonneg=True)
    node = _mapping(node, path)
    sched = _require(node, "schedule", f"{path}")
    if not isinstance(sched, list) or not sched:
        raise ConfigError(f"{path}.schedule: expected a nonempty list")
    pairs = []
    for i, raw in enumerate(sched):
        p = f"{path}.schedule[{i}]"
        e = _mapping(raw, p)
        pairs.append((_num(_require(e, "t", p), f"{p}.t", nonneg=True),
                      _num(_require(e, "value", p), f"{p}.value", nonneg=True)))
    if any(b[0] <= a[0] for a, b in zip(pairs, pairs[1:])):
        raise ConfigError(f"{path}.schedule: times must be strictly increasing")
    return piecewise_constant(pairs)


def _build_boundary(node, sc: _Scale, upstream: bool, path: str):
    node = _mapping(node, path)
    kinds = ("demand", "state") if upstream else ("supply", "state", "free")
    kind = _choice(_require(node, "kind", path), kinds, f"{path}.kind")
    if kind == "free":
        return FREE_OUTFLOW
    if kind == "state":
        from .fd import TrafficState
        return StateBC(TrafficState(
            eps=_num(_require(node, "eps", path), f"{path}.eps", nonneg=True),
            rho=_num(_require(node, "rho", path), f"{path}.rho", nonneg=True)
            * sc.density))
    flow = _build_flow_spec(_require(node, "flow", path), f"{path}.flow")
    return DemandBC(flow) if upstream else SupplyBC(flow)


def _build_calibrate(node, path="calibrate") -> CalibrateSettings:
    node = _mapping(node, path)
    seps = tuple(_numlist(_require(node, "separations", path), f"{path}.separations"))
    width = None
    if "vehicle_width" in node:
        width = _num(node["vehicle_width"], f"{path}.vehicle_width", positive=True)
    if "dy_threshold" in node:
        dy = _num(node["dy_threshold"], f"{path}.dy_threshold", positive=True)
    elif width is not None:
        dy = width
    else:
        raise ConfigError(f"{path}: needs dy_threshold or vehicle_width")
    sect = _numlist(_require(node, "section", path), f"{path}.section")
    if len(sect) != 2 or sect[1] <= sect[0]:
        raise ConfigError(f"{path}.section: expected [x_a, x_b] with x_b > x_a")
    T = _num(_require(node, "T", path), f"{path}.T", positive=True)
    stride = _num(node["stride"], f"{path}.stride", positive=True) if "stride" in node else T
    span = None
    if "span" in node:
        sp = _numlist(node["span"], f"{path}.span")
        if len(sp) != 2 or sp[1] <= sp[0]:
            raise ConfigError(f"{path}.span: expected [t0, t1] with t1 > t0")
        span = (sp[0], sp[1])
    split = _num(node.get("split", 0.5), f"{path}.split")
    if not 0.0 < split < 1.0:
        raise ConfigError(f"{path}.split: must lie in (0, 1)")
    smooth = node.get("smooth_window", 0)
    smooth = _int(smooth, f"{path}.smooth_window")
    if smooth < 0 or (smooth > 1 and smooth % 2 == 0):
        raise ConfigError(f"{path}.smooth_window: must be 0 or odd")
    return CalibrateSettings(
        separations=seps, dy_threshold=dy, vehicle_width=width,
        section=(sect[0], sect[1]), T=T, stride=stride, span=span,
        split=split, smooth_window=smooth)


def load_config(source) -> ConfigBundle:
    """Parse a YAML scenario from a path, file object, or mapping."""
    if isinstance(source, dict):
        doc = source
    elif hasattr(source, "read"):
        doc = yaml.safe_load(source)
    else:
        with open(source) as f:
            doc = yaml.safe_load(f)
    if doc is None:
        doc = {}
    doc = _mapping(doc, "config")

    units = _choice(doc.get("units", "us"), UNIT_SYSTEMS, "units")
    sc = _Scale(units)

    fd = _build_fd(doc["fd"], sc) if "fd" in doc else None
    intensity = (_build_intensity(doc["intensity"], sc, fd)
                 if "intensity" in doc else None)
    calib = _build_calibrate(doc["calibrate"]) if "calibrate" in doc else None

    scenario = None
    if "road" in doc:
        if fd is None:
            raise ConfigError("road: requires an fd section")
        road = _mapping(doc["road"], "road")
        length = _num(_require(road, "length", "road"), "road.length",
                      positive=True) * sc.length
        cells = _int(_require(road, "cells", "road"), "road.cells", positive=True)
        init = _build_initial(_require(doc, "initial", "config"), sc, length)
        bounds = _mapping(_require(doc, "boundaries", "config"), "boundaries")
        up = _build_boundary(_require(bounds, "upstream", "boundaries"), sc,
                             True, "boundaries.upstream")
        dn = (_build_boundary(bounds["downstream"], sc, False,
                              "boundaries.downstream")
              if "downstream" in bounds else FREE_OUTFLOW)
        simc = _mapping(doc.get("sim", {}), "sim")
        cfl = _num(simc.get("cfl", 0.9), "sim.cfl", positive=True)
        if cfl > 1.0:
            raise ConfigError(f"sim.cfl: must be <= 1, got {cfl}")
        t_end = _num(_require(simc, "t_end", "sim"), "sim.t_end", positive=True)
        out_iv = (_num(simc["output_interval"], "sim.output_interval",
                       positive=True) if "output_interval" in simc else None)
        if intensity is None:
            intensity = ConstantIntensity(0.0)
        try:
            scenario = RoadScenario(
                length=length, cells=cells, fd=fd, intensity=intensity,
                initial_density=init, upstream=up, downstream=dn, cfl=cfl,
                t_end=t_end, output_interval=out_iv)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc))

    return ConfigBundle(units=units, fd=fd, intensity=intensity,
                        scenario=scenario, calibrate=calib)
