"""Calibration of lane-changing intensity from vehicle trajectories.

Trajectory files use the survey convention: feet and seconds, columns
vehicle_id,t,x,y,lane with x the longitudinal and y the lateral
coordinate. Everything aggregated for the model (densities, speeds,
flows) is converted to veh/mi, mi/h, veh/h exactly once on output.

A lane-change event is tied to a crossing of a lane separation line.
Its window is the minimal time span, centered on the crossing instant,
over which the lateral displacement accumulates to dy_threshold; half
the span lies before the crossing and half after (configurable split),
extended asymmetrically when trajectory data ends on one side. A
crossing whose available displacement never reaches the threshold is
dropped and counted.

Interval quantities follow the generalized definitions: density is
vehicle-time over (interval x section) area, speed is distance over
vehicle-time, flow their product; intensity is the share of
vehicle-time spent inside detected lane-change windows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, DomainError, EmptySampleError
from .fd import FundamentalDiagram
from .intensity import IntensityModel
from .units import FEET_PER_MILE, SECONDS_PER_HOUR

TRAJECTORY_COLUMNS = ["vehicle_id", "t", "x", "y", "lane"]


@dataclass(frozen=True, eq=False)
class VehicleTrack:
    """One vehicle's samples, time-sorted. t in seconds, x/y in feet."""

    vehicle_id: str
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    lane: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.lane) == n) or n == 0:
            raise DomainError(f"vehicle {self.vehicle_id}: ragged or empty track")
        if np.any(np.diff(self.t) <= 0.0):
            raise DomainError(
                f"vehicle {self.vehicle_id}: sample times not strictly increasing")

    def x_at(self, t: float) -> float:
        return float(np.interp(t, self.t, self.x))

    def y_at(self, t: float) -> float:
        return float(np.interp(t, self.t, self.y))


@dataclass(frozen=True)
class LaneChangeEvent:
    vehicle_id: str
    t_cross: float
    t_start: float
    t_end: float
    dx: float      # longitudinal displacement over the window, ft
    dy: float      # signed lateral displacement, |dy| == threshold, ft
    theta: float   # steering angle atan(|dy|/dx), radians

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass
class DetectionResult:
    events: list
    dropped: int = 0  # crossings whose displacement never reached threshold


@dataclass(frozen=True)
class CalibrationSample:
    """Aggregates over one (section x interval) region."""

    t_start: float          # s
    T: float                # s
    rho: float              # veh/mi
    v: float                # mi/h
    q: float                # veh/h (exactly rho * v)
    theta_deg: Optional[float]
    eps: float
    n_events: int = 0


# ---------------------------------------------------------------------------
# ingestion


def read_trajectory_csv(f) -> list:
    """Parse a vehicle_id,t,x,y,lane CSV into per-vehicle tracks."""
    reader = csv.reader(f)
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("empty trajectory file")
    if [h.strip() for h in header] != TRAJECTORY_COLUMNS:
        raise ConfigError(
            f"bad trajectory header {header!r}, expected {TRAJECTORY_COLUMNS}")
    rows = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise ConfigError(f"line {lineno}: expected 5 fields, got {len(row)}")
        try:
            vid = row[0].strip()
            vals = (float(row[1]), float(row[2]), float(row[3]), int(float(row[4])))
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}")
        rows.setdefault(vid, []).append(vals)
    tracks = []
    for vid, samples in rows.items():
        samples.sort(key=lambda s: s[0])
        arr = np.array([s[:3] for s in samples], dtype=float)
        lanes = np.array([s[3] for s in samples], dtype=int)
        tracks.append(VehicleTrack(vid, arr[:, 0].copy(), arr[:, 1].copy(),
                                   arr[:, 2].copy(), lanes))
    tracks.sort(key=lambda tr: tr.vehicle_id)
    return tracks


def write_trajectory_csv(f, tracks) -> None:
    f.write(",".join(TRAJECTORY_COLUMNS) + "\n")
    for tr in tracks:
        for i in range(len(tr.t)):
            f.write(f"{tr.vehicle_id},{tr.t[i]:.12g},{tr.x[i]:.12g},"
                    f"{tr.y[i]:.12g},{int(tr.lane[i])}\n")


# ---------------------------------------------------------------------------
# lane-change detection


def _smooth(y: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return y
    if window % 2 == 0:
        raise DomainError(f"smoothing window must be odd, got {window}")
    pad = window // 2
    padded = np.concatenate([np.full(pad, y[0]), y, np.full(pad, y[-1])])
    kernel = np.full(window, 1.0 / window)
    return np.convolve(padded, kernel, mode="valid")


def _crossings(t: np.ndarray, y: np.ndarray, sep: float) -> list:
    """Interpolated instants where y crosses the separation line.

    Samples sitting exactly on the line inherit the side they came from,
    so dwelling on the line is a single crossing, recorded when the
    trajectory departs to the other side.
    """
    out = []
    side = 0
    for i in range(len(y)):
        s = 1 if y[i] > sep else (-1 if y[i] < sep else 0)
        if s == 0:
            continue
        if side != 0 and s != side:
            j = i - 1
            while y[j] == sep and j > 0:
                j -= 1
            if y[i] == y[j]:
                tc = t[i]
            else:
                tc = t[j] + (sep - y[j]) * (t[i] - t[j]) / (y[i] - y[j])
            out.append((float(tc), s))
        side = s
    return out


def _window_bounds(tau: float, t_c: float, split: float,
                   pre_lim: float, post_lim: float):
    pre = split * tau
    post = (1.0 - split) * tau
    if pre > pre_lim:
        post = min(post + (pre - pre_lim), post_lim)
        pre = pre_lim
    elif post > post_lim:
        pre = min(pre + (post - post_lim), pre_lim)
        post = post_lim
    return t_c - pre, t_c + post


def _min_window(track: VehicleTrack, y: np.ndarray, t_c: float, direction: int,
                dy_threshold: float, split: float):
    """Smallest centered window with signed displacement >= threshold.

    Returns (t_start, t_end) or None when the track never accumulates the
    threshold around this crossing. Displacement is piecewise linear in
    the window size, so the minimal size is found exactly by walking the
    candidate kinks (window endpoints hitting sample instants or data
    edges) and solving linearly in between.
    """
    t = track.t
    pre_lim = t_c - t[0]
    post_lim = t[-1] - t_c
    tau_max = pre_lim + post_lim

    def disp(tau: float) -> float:
        a, b = _window_bounds(tau, t_c, split, pre_lim, post_lim)
        return direction * float(np.interp(b, t, y) - np.interp(a, t, y))

    cands = {0.0, tau_max}
    for tk in t:
        if tk < t_c:
            cands.add(min((t_c - tk) / split, tau_max))
            cands.add(min((t_c - tk) + post_lim, tau_max))  # post-clamped phase
        elif tk > t_c:
            cands.add(min((tk - t_c) / (1.0 - split), tau_max))
            cands.add(min((tk - t_c) + pre_lim, tau_max))   # pre-clamped phase
    cands.add(min(pre_lim / split, tau_max) if split > 0 else tau_max)
    cands.add(min(post_lim / (1.0 - split), tau_max) if split < 1 else tau_max)
    taus = sorted(cands)

    prev_tau, prev_d = taus[0], disp(taus[0])
    if prev_d >= dy_threshold:
        return _window_bounds(prev_tau, t_c, split, pre_lim, post_lim)
    for tau in taus[1:]:
        d = disp(tau)
        if d >= dy_threshold:
            if d > prev_d:  # linear interpolation to the exact threshold
                frac = (dy_threshold - prev_d) / (d - prev_d)
                tau = prev_tau + frac * (tau - prev_tau)
            return _window_bounds(tau, t_c, split, pre_lim, post_lim)
        prev_tau, prev_d = tau, d
    return None


def detect_lane_changes(tracks, separations, dy_threshold, *,
                        split: float = 0.5, smooth_window: int = 0) -> DetectionResult:
    """Extract one event per separation-line crossing per vehicle."""
    if not (0.0 < split < 1.0):
        raise DomainError(f"split must lie in (0, 1), got {split}")
    if not (dy_threshold > 0.0):
        raise DomainError(f"dy_threshold must be positive, got {dy_threshold}")
    events = []
    dropped = 0
    for tr in tracks:
        y = _smooth(tr.y, smooth_window) if smooth_window else tr.y
        for sep in separations:
            for t_c, direction in _crossings(tr.t, y, sep):
                win = _min_window(tr, y, t_c, direction, dy_threshold, split)
                if win is None:
                    dropped += 1
                    continue
                a, b = win
                dx = tr.x_at(b) - tr.x_at(a)
                dy = float(np.interp(b, tr.t, y) - np.interp(a, tr.t, y))
                theta = math.atan2(abs(dy), max(dx, 0.0))
                events.append(LaneChangeEvent(
                    vehicle_id=tr.vehicle_id, t_cross=t_c, t_start=a,
                    t_end=b, dx=dx, dy=dy, theta=theta))
    events.sort(key=lambda e: (e.t_cross, e.vehicle_id))
    return DetectionResult(events=events, dropped=dropped)


# ---------------------------------------------------------------------------
# interval aggregation


def _segment_inside(t1, t2, x1, x2, xa, xb):
    """Sub-interval of [t1, t2] during which linear x(t) lies in [xa, xb]."""
    if x1 == x2:
        return (t1, t2) if xa <= x1 <= xb else None
    slope = (x2 - x1) / (t2 - t1)
    ta_ = t1 + (xa - x1) / slope
    tb_ = t1 + (xb - x1) / slope
    lo, hi = min(ta_, tb_), max(ta_, tb_)
    lo, hi = max(lo, t1), min(hi, t2)
    if hi <= lo:
        return None
    return lo, hi


def _time_in_region(track: VehicleTrack, t_lo, t_hi, xa, xb):
    """(vehicle-time, distance) contributed inside [xa,xb] x [t_lo,t_hi]."""
    tt = 0.0
    td = 0.0
    t, x = track.t, track.x
    for i in range(len(t) - 1):
        t1, t2 = t[i], t[i + 1]
        if t2 <= t_lo or t1 >= t_hi:
            continue
        a, b = max(t1, t_lo), min(t2, t_hi)
        if b <= a:
            continue
        frac = lambda tt_: x[i] + (x[i + 1] - x[i]) * (tt_ - t1) / (t2 - t1)
        seg = _segment_inside(a, b, frac(a), frac(b), xa, xb)
        if seg is None:
            continue
        lo, hi = seg
        tt += hi - lo
        td += abs(frac(hi) - frac(lo))
    return tt, td


def aggregate_interval(tracks, events, section, interval) -> CalibrationSample:
    """One sample over section=(xa, xb) feet and interval=(ta, tb) seconds."""
    xa, xb = section
    ta, tb = interval
    if not (xb > xa) or not (tb > ta):
        raise DomainError("section and interval must have positive extent")
    by_id = {tr.vehicle_id: tr for tr in tracks}

    veh_time = 0.0
    veh_dist = 0.0
    for tr in tracks:
        tt, td = _time_in_region(tr, ta, tb, xa, xb)
        veh_time += tt
        veh_dist += td
    if veh_time <= 0.0:
        raise EmptySampleError(
            f"no vehicle-time in section {section} during interval {interval}")

    lc_time = 0.0
    thetas = []
    n_events = 0
    for ev in events:
        tr = by_id.get(ev.vehicle_id)
        if tr is None:
            continue
        lo, hi = max(ev.t_start, ta), min(ev.t_end, tb)
        if hi > lo:
            tt, _ = _time_in_region(tr, lo, hi, xa, xb)
            lc_time += tt
        if ta <= ev.t_cross < tb and xa <= tr.x_at(ev.t_cross) < xb:
            thetas.append(ev.theta)
            n_events += 1

    rho = veh_time / ((tb - ta) * (xb - xa)) * FEET_PER_MILE
    v = veh_dist / veh_time * SECONDS_PER_HOUR / FEET_PER_MILE
    theta_deg = math.degrees(float(np.mean(thetas))) if thetas else None
    return CalibrationSample(
        t_start=float(ta), T=float(tb - ta), rho=rho, v=v, q=rho * v,
        theta_deg=theta_deg, eps=lc_time / veh_time, n_events=n_events)


def default_span(tracks, section):
    """Default aggregation span: first passage of the section's downstream
    end through last passage of its upstream end."""
    xa, xb = section
    first_b = math.inf
    last_a = -math.inf
    for tr in tracks:
        hit_b = tr.t[tr.x >= xb]
        if hit_b.size:
            first_b = min(first_b, float(hit_b[0]))
        hit_a = tr.t[tr.x >= xa]
        if hit_a.size:
            last_a = max(last_a, float(hit_a[0]))
    if not math.isfinite(first_b) or not math.isfinite(last_a):
        raise EmptySampleError("no vehicle traverses the section")
    return first_b, last_a


def aggregate_series(tracks, events, section, T, stride=None, span=None):
    """Samples over consecutive intervals of length T (seconds).

    stride defaults to T (non-overlapping windows); span defaults to
    default_span(). Intervals with zero vehicle-time are skipped.
    """
    if stride is None:
        stride = T
    if not (T > 0.0) or not (stride > 0.0):
        raise DomainError("T and stride must be positive")
    t0, t1 = span if span is not None else default_span(tracks, section)
    samples = []
    start = t0
    while start + T <= t1 + 1e-9 * max(abs(t1), 1.0):
        try:
            samples.append(aggregate_interval(
                tracks, events, section, (start, start + T)))
        except EmptySampleError:
            pass
        start += stride
    return samples


# ---------------------------------------------------------------------------
# fits


@dataclass(frozen=True)
class FitResult:
    model: str
    a: float
    b: float
    r_squared: float
    n: int
    excluded: int = 0


def _ols(x: np.ndarray, y: np.ndarray):
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise DomainError("fit needs >= 2 distinct regressor values")
    b = float(np.sum((x - xm) * (y - ym))) / sxx
    a = ym - b * xm
    return float(a), b


def _r_squared(y: np.ndarray, y_hat: np.ndarray) -> float:
    ss_res = float(np.sum((y - y_hat) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res <= 1e-300 else 0.0
    return 1.0 - ss_res / ss_tot


def _as_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DomainError("fit needs two equal-length 1-d arrays, n >= 2")
    return x, y


def fit_linear(x, y) -> FitResult:
    """Least squares y = a + b*x."""
    x, y = _as_xy(x, y)
    a, b = _ols(x, y)
    return FitResult("linear", a, b, _r_squared(y, a + b * x), x.size)


def fit_reciprocal(x, y) -> FitResult:
    """Least squares y = a + b/x (x must be positive)."""
    x, y = _as_xy(x, y)
    if np.any(x <= 0.0):
        raise DomainError("reciprocal fit undefined for x <= 0")
    a, b = _ols(1.0 / x, y)
    return FitResult("reciprocal", a, b, _r_squared(y, a + b / x), x.size)


def fit_exponential(x, y) -> FitResult:
    """Least squares on log y: y = a * exp(b*x); y <= 0 samples are
    excluded (their count reported) and R^2 is taken in original space
    over the included samples."""
    x, y = _as_xy(x, y)
    keep = y > 0.0
    excluded = int(np.count_nonzero(~keep))
    x, y = x[keep], y[keep]
    if x.size < 2:
        raise DomainError("exponential fit needs >= 2 samples with y > 0")
    la, b = _ols(x, np.log(y))
    a = math.exp(la)
    return FitResult("exponential", a, b, _r_squared(y, a * np.exp(b * x)),
                     int(x.size), excluded)


# ---------------------------------------------------------------------------
# capacity comparison


@dataclass(frozen=True)
class CapacityComparison:
    q_no_lc: float    # peak of the effective-vehicle curve (1+eps) rho V
    rho_no_lc: float
    q_lc: float       # peak of the actual-vehicle curve rho V
    rho_lc: float

    @property
    def reduction(self) -> float:
        return 1.0 - self.q_lc / self.q_no_lc


def capacity_comparison(fd: FundamentalDiagram, eps_model, rho_range,
                        points: int = 2001, refine: int = 4) -> CapacityComparison:
    """Maximize the flow curves with and without the lane-changing effect
    over a density range, by zooming grid scan (handles the jump that a
    density-triggered intensity puts into the curve)."""
    if isinstance(eps_model, IntensityModel):
        eps_of = lambda r: eps_model.eval(0.0, r)
    else:
        eps_of = eps_model
    lo, hi = rho_range
    if not (hi > lo >= 0.0):
        raise DomainError(f"bad density range {rho_range}")

    def scan(objective):
        a, b = lo, hi
        best_x, best_v = a, -math.inf
        for _ in range(refine):
            grid = np.linspace(a, b, points)
            vals = [objective(float(r)) for r in grid]
            k = int(np.argmax(vals))
            if vals[k] > best_v:
                best_v, best_x = vals[k], float(grid[k])
            h = (b - a) / (points - 1)
            a, b = max(lo, grid[k] - h), min(hi, grid[k] + h)
        return best_x, best_v

    def q_lc(r):
        # densities past the per-eps jam point carry no flow
        e = eps_of(r)
        rb = min(r * (1.0 + e), fd.rho_j)
        return r * fd.speed(rb)

    q_no = lambda r: (1.0 + eps_of(r)) * q_lc(r)
    rho_lc, v_lc = scan(q_lc)
    rho_no, v_no = scan(q_no)
    return CapacityComparison(q_no_lc=v_no, rho_no_lc=rho_no,
                              q_lc=v_lc, rho_lc=rho_lc)


def capacity_comparison_from_samples(samples, fd, eps_model,
                                     **kw) -> CapacityComparison:
    if not samples:
        raise EmptySampleError("no samples to span a density range")
    rhos = [s.rho for s in samples]
    return capacity_comparison(fd, eps_model, (min(rhos), max(rhos)), **kw)


# ---------------------------------------------------------------------------
# CSV output


def write_samples_csv(f, samples) -> None:
    f.write("t_start,T,rho,v,q,theta_deg,eps\n")
    for s in samples:
        th = f"{s.theta_deg:.12g}" if s.theta_deg is not None else ""
        f.write(f"{s.t_start:.12g},{s.T:.12g},{s.rho:.12g},{s.v:.12g},"
                f"{s.q:.12g},{th},{s.eps:.12g}\n")


def write_fit_report_csv(f, fits) -> None:
    f.write("model,param_a,param_b,r_squared,n\n")
    for r in fits:
        f.write(f"{r.model},{r.a:.12g},{r.b:.12g},{r.r_squared:.12g},{r.n}\n")
