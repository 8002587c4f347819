"""Command-line interface: wiring, exit codes, output formats."""

import math

import numpy as np
import pytest

from lanekw.cli import main
from lanekw.synthetic import linear_corpus
from lanekw.calibrate import write_trajectory_csv
from lanekw.units import KM_PER_MILE

SIM_YAML = """\
fd:
  kind: triangular
  v_f: 65
  rho_c: 40
  rho_j: 240
intensity:
  kind: by-location
  breakpoints: [0, 4, 8, 12]
  segments:
    - {kind: constant, eps: 0}
    - {kind: constant, eps: 0.1}
    - {kind: constant, eps: 0}
road:
  length: 12
  cells: 60
initial:
  density: 20
boundaries:
  upstream: {kind: demand, flow: 1800}
  downstream: {kind: free}
sim:
  t_end: 0.02
  output_interval: 0.01
"""


def reformat(text):
    """Re-emit every numeric CSV field at 12 significant digits."""
    lines = text.strip().split("\n")
    out = [lines[0]]
    for line in lines[1:]:
        out.append(",".join(
            f"{float(v):.12g}" if v else "" for v in line.split(",")))
    return "\n".join(out) + "\n"


class TestFdExport:
    def test_table_shape_and_values(self, tmp_path):
        out = tmp_path / "fd.csv"
        assert main(["fd-export", "--eps", "0.1", "--points", "25",
                     "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "rho,eps,v,q_lc,q_no_lc,lambda1"
        assert len(lines) == 26
        rho, eps, v, q_lc, q_no_lc, lam = map(float, lines[1].split(","))
        assert (rho, eps, v, q_lc) == (0.0, 0.1, 65.0, 0.0)
        last = list(map(float, lines[-1].split(",")))
        assert last[0] == 240.0  # grid spans the jam density
        assert last[3] == 0.0    # saturated row: no flow at jam
        for line in lines[1:]:
            f = list(map(float, line.split(",")))
            # csv carries 12 significant digits, not full precision
            assert f[4] == pytest.approx(1.1 * f[3], rel=1e-10)

    def test_round_trip_stable(self, tmp_path):
        out = tmp_path / "fd.csv"
        main(["fd-export", "--eps", "0.07", "--points", "97", "--out", str(out)])
        text = out.read_text()
        assert reformat(text) == text

    def test_metric_output(self, tmp_path):
        out = tmp_path / "fd.csv"
        assert main(["fd-export", "--units", "metric", "--points", "3",
                     "--out", str(out)]) == 0
        rows = [l.split(",") for l in out.read_text().strip().split("\n")[1:]]
        # default fd: jam 240 veh/mi -> declared grid ends at veh/km
        assert float(rows[-1][0]) == pytest.approx(240.0 / KM_PER_MILE, rel=1e-12)
        assert float(rows[0][2]) == pytest.approx(65.0 * KM_PER_MILE, rel=1e-12)

    def test_fd_flags(self, tmp_path):
        out = tmp_path / "fd.csv"
        assert main(["fd-export", "--fd", "max-sensitivity", "--c-j", "-12",
                     "--points", "5", "--out", str(out)]) == 0
        assert main(["fd-export", "--fd", "max-sensitivity",
                     "--points", "5", "--out", str(out)]) == 1  # missing --c-j
        assert main(["fd-export", "--v-f", "-3", "--out", str(out)]) == 2


class TestRiemann:
    def test_stdout_report(self, capsys):
        assert main(["riemann", "--eps-left", "0", "--rho-left", "20",
                     "--eps-right", "0.1", "--rho-right", "20"]) == 0
        got = capsys.readouterr().out
        assert "type: 1" in got
        assert "boundary_flux: 1300" in got
        assert "wave: standing speed 0" in got

    def test_profile_csv(self, tmp_path):
        out = tmp_path / "prof.csv"
        assert main(["riemann", "--eps-left", "0", "--rho-left", "240",
                     "--eps-right", "0", "--rho-right", "0",
                     "--xi-points", "31", "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "xi,eps,rho,v,q"
        assert len(lines) == 32
        xi = [float(l.split(",")[0]) for l in lines[1:]]
        assert xi[0] == pytest.approx(-1.05 * 65.0)
        assert xi[-1] == pytest.approx(1.05 * 65.0)
        # jam release: far left still jammed, far right empty
        first = list(map(float, lines[1].split(",")))
        last = list(map(float, lines[-1].split(",")))
        assert first[2] == 240.0 and last[2] == 0.0

    def test_domain_error_exit_code(self):
        assert main(["riemann", "--eps-left", "-1", "--rho-left", "20",
                     "--eps-right", "0", "--rho-right", "20"]) == 2

    def test_missing_flag_exit_code(self):
        assert main(["riemann", "--eps-left", "0"]) == 1


class TestSimulate:
    def test_csv_output(self, tmp_path, capsys):
        cfg = tmp_path / "scn.yaml"
        cfg.write_text(SIM_YAML)
        out = tmp_path / "run.csv"
        assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "t,x,rho,eps,v,q"
        assert len(lines) == 1 + 3 * 60  # t = 0, 0.01, 0.02
        err = capsys.readouterr().err
        assert "steps=" in err and "mass_balance_error=" in err

    def test_round_trip_stable(self, tmp_path):
        cfg = tmp_path / "scn.yaml"
        cfg.write_text(SIM_YAML)
        out = tmp_path / "run.csv"
        main(["simulate", "--config", str(cfg), "--out", str(out)])
        text = out.read_text()
        assert reformat(text) == text

    def test_deterministic(self, tmp_path):
        cfg = tmp_path / "scn.yaml"
        cfg.write_text(SIM_YAML)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["simulate", "--config", str(cfg), "--out", str(a)])
        main(["simulate", "--config", str(cfg), "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()

    def test_needs_config(self):
        assert main(["simulate"]) == 1

    def test_config_without_road(self, tmp_path):
        cfg = tmp_path / "scn.yaml"
        cfg.write_text("fd: {kind: triangular, v_f: 65, rho_c: 40, rho_j: 240}\n")
        assert main(["simulate", "--config", str(cfg)]) == 1

    def test_missing_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.yaml")]) == 1


class TestCalibrate:
    def write_corpus(self, tmp_path, rng):
        blocks = linear_corpus(
            rhos=[40.0, 70.0, 100.0], v=60.0,
            eps_law=lambda r: 0.15 * math.exp(-0.006 * r),
            theta_law=lambda r: 1.8 + 0.01 * r,
            length_ft=1000.0, T_target=150.0, dy_threshold=6.0, rng=rng)
        tracks = [tr for blk in blocks for tr in blk.tracks]
        half = len(tracks) // 2
        f1, f2 = tmp_path / "t1.csv", tmp_path / "t2.csv"
        with open(f1, "w") as f:
            write_trajectory_csv(f, tracks[:half])
        with open(f2, "w") as f:
            write_trajectory_csv(f, tracks[half:])
        cfg = tmp_path / "cal.yaml"
        cfg.write_text(
            "calibrate:\n"
            "  separations: [%g]\n"
            "  dy_threshold: 6.0\n"
            "  section: [0.0, 1000.0]\n"
            "  T: 60.0\n" % blocks[0].separation)
        return blocks, [str(f1), str(f2)], str(cfg)

    def test_end_to_end(self, tmp_path, rng, capsys):
        blocks, files, cfg = self.write_corpus(tmp_path, rng)
        outdir = tmp_path / "res"
        assert main(["calibrate", "--config", cfg, "--out", str(outdir),
                     *files]) == 0
        err = capsys.readouterr().err
        assert "tracks=" in err and "samples=" in err
        samples = (outdir / "samples.csv").read_text().strip().split("\n")
        assert samples[0] == "t_start,T,rho,v,q,theta_deg,eps"
        assert len(samples) > 3
        fits = (outdir / "fits.csv").read_text().strip().split("\n")
        assert fits[0] == "model,param_a,param_b,r_squared,n"
        models = [l.split(",")[0] for l in fits[1:]]
        assert models == ["linear", "reciprocal", "exponential"]

    def test_duplicate_vehicle_ids(self, tmp_path, rng):
        _, files, cfg = self.write_corpus(tmp_path, rng)
        assert main(["calibrate", "--config", cfg,
                     "--out", str(tmp_path / "res"),
                     files[0], files[0]]) == 1

    def test_needs_out_dir(self, tmp_path, rng):
        _, files, cfg = self.write_corpus(tmp_path, rng)
        assert main(["calibrate", "--config", cfg, *files]) == 1


class TestTopLevel:
    def test_no_command(self, capsys):
        assert main([]) == 1

    def test_unknown_command(self):
        assert main(["frobnicate"]) == 1
