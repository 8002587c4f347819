"""Synthetic trajectory corpora with known ground truth.

Two generators feed the calibration pipeline tests. Both lay out a
single-lane platoon at exact headways so that the generalized density
and speed aggregate back to the planted values (integer number of
headways per interval makes the vehicle-time bookkeeping exact), then
graft lateral lane-change maneuvers onto selected vehicles.

Linear ramps cross the separation at constant lateral rate, so the
detected window duration is threshold/rate and the detected angle is
exactly atan(rate/speed) no matter where the samples fall: sampled
points on a straight line interpolate back to the same line. That makes
the planted (rho, eps, theta) recoverable to rounding error, which is
what the round-trip fit tests need.

Smoothstep ramps curve the lateral path, so a larger displacement
threshold widens the window by more than the threshold ratio and the
window-mean angle strictly drops. Those vehicles exercise the strict
form of the threshold-monotonicity property.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibrate import VehicleTrack
from .errors import DomainError
from .units import FEET_PER_MILE, SECONDS_PER_HOUR


@dataclass(frozen=True)
class SyntheticBlock:
    """One constant-density stretch plus the ground truth planted in it."""

    tracks: list
    t0: float
    T: float            # realized interval length, s (integer headways)
    section: tuple      # (x_a, x_b) ft
    rho: float          # veh/mi, exact aggregate over (section x interval)
    v: float            # mi/h
    eps: float          # realized n_events * tau_detected / vehicle-time
    theta_deg: float    # exact detected angle of every event
    n_events: int
    lane_width: float
    separation: float


def _fps(v_mph: float) -> float:
    return v_mph * FEET_PER_MILE / SECONDS_PER_HOUR


def _ramp_linear(t, t_c, tau_ramp, lane_width):
    start = t_c - 0.5 * tau_ramp
    return np.clip((t - start) * (lane_width / tau_ramp), 0.0, lane_width)


def _ramp_smoothstep(t, t_c, tau_ramp, lane_width):
    u = np.clip((t - (t_c - 0.5 * tau_ramp)) / tau_ramp, 0.0, 1.0)
    return lane_width * u * u * (3.0 - 2.0 * u)


def linear_block(*, rho, v, eps, theta_deg, length_ft, T_target, dy_threshold,
                 rng, lane_width=12.0, dt=0.5, t0=0.0,
                 prefix="veh") -> SyntheticBlock:
    """Platoon at density rho (veh/mi) and speed v (mi/h) with linear-ramp
    lane changes tuned so the aggregated sample lands on (rho, v, eps,
    theta_deg) up to event-count rounding."""
    if not (0.0 < dy_threshold < lane_width):
        raise DomainError("dy_threshold must lie in (0, lane_width)")
    if not (rho > 0.0 and v > 0.0 and length_ft > 0.0 and T_target > 0.0):
        raise DomainError("rho, v, length_ft, T_target must be positive")
    v_fps = _fps(v)
    spacing = FEET_PER_MILE / rho          # ft between vehicles
    headway = spacing / v_fps              # s
    m = max(1, round(T_target / headway))
    T = m * headway

    # lateral rate from the target angle; ramp sweeps the full lane width
    rate = v_fps * math.tan(math.radians(theta_deg))
    if rate <= 0.0:
        raise DomainError("theta_deg must be positive")
    tau_det = dy_threshold / rate
    tau_ramp = lane_width / rate
    if tau_ramp < 5.0 * dt:
        raise DomainError(
            f"ramp {tau_ramp:.3g} s too short for sample step {dt} s")

    veh_time = rho / FEET_PER_MILE * length_ft * T
    n_events = round(eps * veh_time / tau_det)
    eps_real = n_events * tau_det / veh_time

    margin_t = 0.5 * tau_ramp + 2.0 * dt
    traversal = length_ft / v_fps
    k_lo = -math.ceil(length_ft / spacing) - 2
    k_hi = m + 2

    # crossing must keep the detected window inside both the interval and
    # the section so aggregation clips nothing
    pad = 0.5 * tau_det + 1e-6
    feasible = {}
    for k in range(k_lo, k_hi + 1):
        entry = t0 + k * headway
        lo = max(entry, t0) + pad
        hi = min(entry + traversal, t0 + T) - pad
        if hi > lo:
            feasible[k] = (lo, hi)
    if n_events > len(feasible):
        raise DomainError(
            f"cannot place {n_events} events on {len(feasible)} vehicles; "
            "raise T_target or lower eps")
    chosen = rng.choice(sorted(feasible), size=n_events, replace=False)
    crossings = {int(k): rng.uniform(*feasible[int(k)]) for k in chosen}

    separation = 0.5 * lane_width
    tracks = []
    for k in range(k_lo, k_hi + 1):
        entry = t0 + k * headway
        ta, tb = entry - margin_t, entry + traversal + margin_t
        n = int(math.ceil((tb - ta) / dt)) + 1
        t = ta + dt * np.arange(n)
        x = (t - entry) * v_fps
        if k in crossings:
            y = _ramp_linear(t, crossings[k], tau_ramp, lane_width)
        else:
            y = np.zeros_like(t)
        lane = (y >= separation).astype(int)
        tracks.append(VehicleTrack(f"{prefix}{k - k_lo:04d}", t, x, y, lane))
    return SyntheticBlock(
        tracks=tracks, t0=t0, T=T, section=(0.0, length_ft), rho=rho, v=v,
        eps=eps_real, theta_deg=theta_deg, n_events=n_events,
        lane_width=lane_width, separation=separation)


def linear_corpus(*, rhos, v, eps_law, theta_law, length_ft, T_target,
                  dy_threshold, rng, lane_width=12.0, dt=0.5,
                  gap=200.0):
    """One block per density, separated in time. eps_law and theta_law map
    rho to the planted intensity and angle (degrees). Returns the blocks;
    their tracks share a namespace, ids prefixed per block."""
    blocks = []
    t0 = 0.0
    for i, rho in enumerate(rhos):
        blk = linear_block(
            rho=rho, v=v, eps=eps_law(rho), theta_deg=theta_law(rho),
            length_ft=length_ft, T_target=T_target, dy_threshold=dy_threshold,
            rng=rng, lane_width=lane_width, dt=dt, t0=t0, prefix=f"b{i:02d}v")
        blocks.append(blk)
        t0 = blk.t0 + blk.T + gap
    return blocks


def smoothstep_vehicles(*, n, v, tau_ramp, rng, lane_width=12.0, dt=0.25,
                        length_ft=4000.0, prefix="sv") -> list:
    """Independent vehicles, one smoothstep lane change each, crossing
    somewhere in the middle of a long straight run."""
    if tau_ramp < 8.0 * dt:
        raise DomainError("tau_ramp too short for the sample step")
    v_fps = _fps(v)
    traversal = length_ft / v_fps
    separation = 0.5 * lane_width
    tracks = []
    for i in range(n):
        t_c = float(rng.uniform(0.35, 0.65)) * traversal
        nsmp = int(math.ceil(traversal / dt)) + 1
        t = dt * np.arange(nsmp)
        x = v_fps * t
        y = _ramp_smoothstep(t, t_c, tau_ramp, lane_width)
        lane = (y >= separation).astype(int)
        tracks.append(VehicleTrack(f"{prefix}{i:03d}", t, x, y, lane))
    return tracks
