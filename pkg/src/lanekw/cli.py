"""Command-line front end.

Four subcommands: fd-export tabulates the flow curves, riemann solves a
single two-state problem, simulate runs a configured road, calibrate
runs the trajectory pipeline. One YAML config format serves all of
them; flags override config fields. `--units` selects the unit system
for flag inputs and CSV/text outputs (config files declare their own).

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
domain error. Diagnostics go to stderr; data goes to --out or stdout.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

import numpy as np

from . import calibrate as cal
from .errors import ConfigError, LaneKWError
from .fd import MaxSensitivityFD, TrafficState, TriangularFD
from .intensity import ConstantIntensity
from .riemann import RAREFACTION, solve, sample
from .scenario import load_config
from .sim import mass_balance_error, run, write_snapshots_csv
from .units import KM_PER_MILE

_G = "%.12g"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class _Units:
    """Scale factors between internal (mi, mi/h, veh/mi) and the selected
    system. Flows are veh/h either way."""

    def __init__(self, name: str):
        self.name = name
        self.f = KM_PER_MILE if name == "metric" else 1.0

    # internal -> output
    def length(self, x): return x * self.f
    def speed(self, v): return v * self.f
    def density(self, r): return r / self.f
    # input -> internal
    def length_in(self, x): return x / self.f
    def speed_in(self, v): return v / self.f
    def density_in(self, r): return r * self.f


@contextlib.contextmanager
def _open_out(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as f:
            yield f


def _resolve_fd(args, bundle, un: _Units):
    flag_keys = ("fd_kind", "v_f", "rho_c", "rho_j", "c_j")
    if any(getattr(args, k, None) is not None for k in flag_keys):
        kind = args.fd_kind or "triangular"
        if kind == "triangular":
            return TriangularFD(
                v_f=un.speed_in(args.v_f if args.v_f is not None else 65.0 * un.f),
                rho_c=un.density_in(args.rho_c if args.rho_c is not None
                                    else un.density(40.0)),
                rho_j=un.density_in(args.rho_j if args.rho_j is not None
                                    else un.density(240.0)))
        if args.c_j is None:
            raise ConfigError("max-sensitivity fd needs --c-j")
        return MaxSensitivityFD(
            v_f=un.speed_in(args.v_f if args.v_f is not None else 65.0 * un.f),
            c_j=un.speed_in(args.c_j),
            rho_j=un.density_in(args.rho_j if args.rho_j is not None
                                else un.density(240.0)))
    if bundle is not None and bundle.fd is not None:
        return bundle.fd
    return TriangularFD(v_f=65.0, rho_c=40.0, rho_j=240.0)


def _add_fd_flags(p):
    p.add_argument("--fd", dest="fd_kind",
                   choices=("triangular", "max-sensitivity"),
                   help="fundamental diagram variant (default triangular)")
    p.add_argument("--v-f", type=float, help="free-flow speed")
    p.add_argument("--rho-c", type=float, help="critical density (triangular)")
    p.add_argument("--rho-j", type=float, help="jam density")
    p.add_argument("--c-j", type=float,
                   help="jam wave speed, negative (max-sensitivity)")


def _fmt_state(s: TrafficState, un: _Units) -> str:
    return f"eps={s.eps:.12g} rho={un.density(s.rho):.12g}"


# ---------------------------------------------------------------------------
# subcommands


def cmd_fd_export(args) -> int:
    un = _Units(args.units)
    bundle = load_config(args.config) if args.config else None
    fd = _resolve_fd(args, bundle, un)
    if args.eps is not None:
        model = ConstantIntensity(args.eps)
    elif bundle is not None and bundle.intensity is not None:
        model = bundle.intensity
    else:
        model = ConstantIntensity(0.0)
    if args.points < 2:
        raise ConfigError(f"--points must be >= 2, got {args.points}")
    rho_max = un.density_in(args.rho_max) if args.rho_max is not None else fd.rho_j
    if not rho_max > 0.0:
        raise ConfigError(f"--rho-max must be positive, got {args.rho_max}")
    x = un.length_in(args.at_x)

    with _open_out(args.out) as f:
        f.write("rho,eps,v,q_lc,q_no_lc,lambda1\n")
        for rho in np.linspace(0.0, rho_max, args.points):
            rho = float(rho)
            eps = model.eval(x, rho)
            # beyond the per-eps jam density the row saturates at zero flow
            rb = min(rho * (1.0 + eps), fd.rho_j)
            v = fd.speed(rb)
            q = rho * v
            lam = fd.dflow(rb)
            f.write(f"{un.density(rho):.12g},{eps:.12g},{un.speed(v):.12g},"
                    f"{q:.12g},{(1.0 + eps) * q:.12g},{un.speed(lam):.12g}\n")
    return 0


def cmd_riemann(args) -> int:
    un = _Units(args.units)
    bundle = load_config(args.config) if args.config else None
    fd = _resolve_fd(args, bundle, un)
    left = TrafficState(eps=args.eps_left, rho=un.density_in(args.rho_left))
    right = TrafficState(eps=args.eps_right, rho=un.density_in(args.rho_right))
    sol = solve(fd, left, right)

    out = sys.stdout
    out.write(f"type: {sol.type_id}\n")
    out.write(f"left: {_fmt_state(left, un)}\n")
    out.write(f"right: {_fmt_state(right, un)}\n")
    out.write(f"boundary_flux: {sol.boundary_flux:.12g}\n")
    for w in sol.waves:
        if w.kind == RAREFACTION and w.speed_hi > w.speed_lo:
            span = f"speed [{un.speed(w.speed_lo):.12g}, {un.speed(w.speed_hi):.12g}]"
        else:
            span = f"speed {un.speed(w.speed_lo):.12g}"
        out.write(f"wave: {w.kind} {span} | {_fmt_state(w.left, un)}"
                  f" -> {_fmt_state(w.right, un)}\n")
    for s in sol.intermediates:
        out.write(f"intermediate: {_fmt_state(s, un)}\n")

    if args.out is not None:
        vmax = fd.max_wave_speed()
        xi_lo = un.speed_in(args.xi_min) if args.xi_min is not None else -1.05 * vmax
        xi_hi = un.speed_in(args.xi_max) if args.xi_max is not None else 1.05 * vmax
        if args.xi_points < 2 or not xi_hi > xi_lo:
            raise ConfigError("bad xi grid")
        with open(args.out, "w") as f:
            f.write("xi,eps,rho,v,q\n")
            for xi in np.linspace(xi_lo, xi_hi, args.xi_points):
                s = sample(sol, float(xi))
                rb = min(s.rho * (1.0 + s.eps), fd.rho_j)
                v = fd.speed(rb)
                f.write(f"{un.speed(float(xi)):.12g},{s.eps:.12g},"
                        f"{un.density(s.rho):.12g},{un.speed(v):.12g},"
                        f"{s.rho * v:.12g}\n")
    return 0


def cmd_simulate(args) -> int:
    if args.config is None:
        raise ConfigError("simulate needs --config")
    bundle = load_config(args.config)
    if bundle.scenario is None:
        raise ConfigError("config has no road/initial/boundaries/sim sections")
    scn = bundle.scenario
    snaps = run(scn)
    with _open_out(args.out) as f:
        write_snapshots_csv(f, scn, snaps, units=args.units)
    err = mass_balance_error(scn, snaps[0], snaps[-1])
    print(f"steps={snaps[-1].steps} t_end={snaps[-1].t:.12g} "
          f"mass_balance_error={err:.3e}", file=sys.stderr)
    return 0


def cmd_calibrate(args) -> int:
    if args.config is None:
        raise ConfigError("calibrate needs --config")
    if args.out is None:
        raise ConfigError("calibrate needs --out DIR")
    bundle = load_config(args.config)
    cs = bundle.calibrate
    if cs is None:
        raise ConfigError("config has no calibrate section")
    un = _Units(args.units)

    tracks = []
    seen = set()
    for path in args.trajectories:
        with open(path) as f:
            batch = cal.read_trajectory_csv(f)
        for tr in batch:
            if tr.vehicle_id in seen:
                raise ConfigError(
                    f"{path}: duplicate vehicle_id {tr.vehicle_id!r} across files")
            seen.add(tr.vehicle_id)
        tracks.extend(batch)

    det = cal.detect_lane_changes(tracks, cs.separations, cs.dy_threshold,
                                  split=cs.split, smooth_window=cs.smooth_window)
    samples = cal.aggregate_series(tracks, det.events, cs.section, cs.T,
                                   stride=cs.stride, span=cs.span)
    print(f"tracks={len(tracks)} events={len(det.events)} "
          f"dropped={det.dropped} samples={len(samples)}", file=sys.stderr)
    if not samples:
        raise LaneKWError("no nonempty aggregation intervals")

    rho = [s.rho for s in samples]
    eps = [s.eps for s in samples]
    theta_pairs = [(s.rho, s.theta_deg) for s in samples if s.theta_deg is not None]
    fits = []
    attempts = [("linear", lambda: cal.fit_linear([p[0] for p in theta_pairs],
                                                  [p[1] for p in theta_pairs])),
                ("reciprocal", lambda: cal.fit_reciprocal(rho, eps)),
                ("exponential", lambda: cal.fit_exponential(rho, eps))]
    for name, go in attempts:
        try:
            fits.append(go())
        except LaneKWError as exc:
            print(f"fit {name} skipped: {exc}", file=sys.stderr)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    conv = [cal.CalibrationSample(
        t_start=s.t_start, T=s.T, rho=un.density(s.rho), v=un.speed(s.v),
        q=s.q, theta_deg=s.theta_deg, eps=s.eps, n_events=s.n_events)
        for s in samples]
    with open(outdir / "samples.csv", "w") as f:
        cal.write_samples_csv(f, conv)
    with open(outdir / "fits.csv", "w") as f:
        cal.write_fit_report_csv(f, fits)
    return 0


# ---------------------------------------------------------------------------
# wiring


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML scenario file")
    common.add_argument("--out", metavar="PATH", help="output CSV (or directory)")
    common.add_argument("--units", choices=("us", "metric"), default="us",
                        help="unit system for flags and outputs (default us)")
    common.add_argument("--seed", type=int, metavar="N",
                        help="RNG seed reserved for fixture generation; the "
                             "shipped subcommands are deterministic")

    p = _Parser(prog="lanekw",
                description="Kinematic wave traffic simulation with "
                            "lane-changing intensity")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    fe = sub.add_parser("fd-export", parents=[common],
                        help="tabulate flow curves over a density grid")
    _add_fd_flags(fe)
    fe.add_argument("--eps", type=float,
                    help="override intensity with this constant")
    fe.add_argument("--rho-max", type=float, help="grid upper bound")
    fe.add_argument("--points", type=int, default=241, help="grid size")
    fe.add_argument("--at-x", type=float, default=0.0,
                    help="location for by-location intensity")
    fe.set_defaults(func=cmd_fd_export)

    rm = sub.add_parser("riemann", parents=[common],
                        help="solve a two-state problem exactly")
    _add_fd_flags(rm)
    rm.add_argument("--eps-left", type=float, required=True)
    rm.add_argument("--rho-left", type=float, required=True)
    rm.add_argument("--eps-right", type=float, required=True)
    rm.add_argument("--rho-right", type=float, required=True)
    rm.add_argument("--xi-min", type=float, help="sampling speed lower bound")
    rm.add_argument("--xi-max", type=float, help="sampling speed upper bound")
    rm.add_argument("--xi-points", type=int, default=201)
    rm.set_defaults(func=cmd_riemann)

    sm = sub.add_parser("simulate", parents=[common],
                        help="run a configured road scenario")
    sm.set_defaults(func=cmd_simulate)

    cb = sub.add_parser("calibrate", parents=[common],
                        help="trajectory pipeline: events, aggregates, fits")
    cb.add_argument("trajectories", nargs="+", metavar="TRAJ_CSV")
    cb.set_defaults(func=cmd_calibrate)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(sys.stderr)
            return 1
        return args.func(args)
    except _UsageError as exc:
        print(f"lanekw: error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"lanekw: config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"lanekw: {exc}", file=sys.stderr)
        return 1
    except LaneKWError as exc:
        print(f"lanekw: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
