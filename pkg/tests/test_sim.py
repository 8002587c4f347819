"""Godunov simulator: stability, conservation, boundaries, output."""

import io
import math

import numpy as np
import pytest

from lanekw import (
    BlowupError,
    ConstantIntensity,
    DemandBC,
    DomainError,
    PiecewiseLocationIntensity,
    ReverseLambdaIntensity,
    RoadScenario,
    StateBC,
    SupplyBC,
    TrafficState,
    TriangularFD,
    initial_state,
    mass_balance_error,
    piecewise_constant,
    run,
    stable_dt,
    step,
    write_snapshots_csv,
)
from lanekw import kernels
from lanekw.sim import FREE_OUTFLOW


def make_scn(tri, **kw):
    base = dict(
        length=12.0, cells=120, fd=tri, intensity=ConstantIntensity(0.0),
        initial_density=30.0, upstream=DemandBC(1950.0))
    base.update(kw)
    return RoadScenario(**base)


class TestScenario:
    def test_stable_dt(self, tri):
        scn = make_scn(tri)  # dx = 0.1
        assert stable_dt(scn) == pytest.approx(0.9 * 0.1 / 65.0, rel=1e-14)

    def test_geometry(self, tri):
        scn = make_scn(tri)
        assert scn.dx == pytest.approx(0.1)
        x = scn.cell_centers()
        assert x[0] == pytest.approx(0.05)
        assert x[-1] == pytest.approx(11.95)

    def test_validation(self, tri):
        with pytest.raises(DomainError):
            make_scn(tri, cells=0)
        with pytest.raises(DomainError):
            make_scn(tri, cfl=0.0)
        with pytest.raises(DomainError):
            make_scn(tri, cfl=1.2)
        with pytest.raises(DomainError):
            make_scn(tri, t_end=-1.0)
        with pytest.raises(DomainError):
            make_scn(tri, t_end=1.0, output_interval=0.0)

    def test_initial_state_forms(self, tri):
        rho0 = initial_state(make_scn(tri, initial_density=25.0)).rho
        assert np.all(rho0 == 25.0)
        rho0 = initial_state(
            make_scn(tri, initial_density=lambda x: 10.0 + x)).rho
        assert rho0[0] == pytest.approx(10.05)
        arr = np.linspace(5.0, 50.0, 120)
        rho0 = initial_state(make_scn(tri, initial_density=arr)).rho
        assert np.array_equal(rho0, arr)
        with pytest.raises(DomainError):
            initial_state(make_scn(tri, initial_density=np.zeros(7)))

    def test_initial_state_rejects_overjam(self, tri):
        with pytest.raises(BlowupError):
            initial_state(make_scn(tri, initial_density=250.0))
        with pytest.raises(BlowupError):
            initial_state(make_scn(
                tri, initial_density=230.0,
                intensity=ConstantIntensity(0.1)))

    def test_density_dependent_initial_eps(self, tri):
        scn = make_scn(
            tri, initial_density=lambda x: 30.0 if x < 6.0 else 100.0,
            intensity=ReverseLambdaIntensity(rho_c=40.0, rho_j=240.0))
        st = initial_state(scn)
        assert st.eps[0] == 0.0
        model = ReverseLambdaIntensity(rho_c=40.0, rho_j=240.0)
        assert st.eps[-1] == model.eval(0.0, 100.0)


class TestStep:
    def test_uniform_flow_is_steady(self, tri):
        scn = make_scn(tri, initial_density=30.0, upstream=DemandBC(1950.0))
        st = initial_state(scn)
        dt = stable_dt(scn)
        for _ in range(50):
            st = step(scn, st, dt)
        assert np.array_equal(st.rho, np.full(120, 30.0))
        assert st.inflow == pytest.approx(1950.0 * st.t, rel=1e-12)
        assert st.outflow == pytest.approx(st.inflow, rel=1e-12)

    def test_jam_release_fluxes(self, tri):
        scn = make_scn(
            tri, length=0.2, cells=2, initial_density=[240.0, 0.0],
            upstream=DemandBC(0.0))
        st = step(scn, initial_state(scn), 0.001)
        # interface flux min(demand(jam), supply(empty)) = capacity
        assert st.rho[0] == pytest.approx(240.0 - 0.01 * 2600.0, rel=1e-12)
        assert st.rho[1] == pytest.approx(0.01 * 2600.0, rel=1e-12)
        assert st.inflow == 0.0
        assert st.outflow == 0.0

    def test_dt_validation(self, tri):
        scn = make_scn(tri)
        st = initial_state(scn)
        with pytest.raises(DomainError):
            step(scn, st, stable_dt(scn) * 1.01)
        with pytest.raises(DomainError):
            step(scn, st, 0.0)

    def test_state_bc_equals_demand_bc(self, tri):
        ghost = TrafficState(eps=0.0, rho=30.0)
        a = make_scn(tri, upstream=StateBC(ghost), initial_density=10.0)
        b = make_scn(tri, upstream=DemandBC(1950.0), initial_density=10.0)
        sa, sb = initial_state(a), initial_state(b)
        dt = stable_dt(a)
        for _ in range(30):
            sa = step(a, sa, dt)
            sb = step(b, sb, dt)
        assert np.array_equal(sa.rho, sb.rho)

    def test_downstream_state_bc_limits_outflow(self, tri):
        ghost = TrafficState(eps=0.0, rho=220.0)  # supply = 13*(240-220)
        scn = make_scn(tri, length=1.0, cells=10, initial_density=30.0,
                       upstream=DemandBC(1950.0), downstream=StateBC(ghost))
        st = step(scn, initial_state(scn), 0.001)
        assert st.outflow == pytest.approx(260.0 * 0.001, rel=1e-12)

    def test_supply_bc_callable(self, tri):
        scn = make_scn(tri, length=1.0, cells=10, initial_density=30.0,
                       downstream=SupplyBC(lambda t: 0.0))
        st = step(scn, initial_state(scn), 0.001)
        assert st.outflow == 0.0
        assert st.rho[-1] > 30.0


class TestConservation:
    def test_ledger_closes(self, tri):
        mid = PiecewiseLocationIntensity(
            breakpoints=(0.0, 4.0, 8.0, 12.0),
            segments=(ConstantIntensity(0.0), ConstantIntensity(0.1),
                      ConstantIntensity(0.0)))
        scn = make_scn(tri, cells=200, intensity=mid,
                       upstream=DemandBC(1800.0), initial_density=20.0)
        st = initial_state(scn)
        first = st
        dt = stable_dt(scn)
        for _ in range(400):
            st = step(scn, st, dt)
        err = mass_balance_error(scn, first, st)
        assert err <= 1e-9 * max(st.total_vehicles(scn.dx), 1.0)

    def test_backends_agree(self, tri):
        if "cython" not in kernels.available():
            pytest.skip("compiled backend not built")
        scn = make_scn(tri, cells=60, upstream=DemandBC(2400.0),
                       initial_density=lambda x: 200.0 if 5.0 < x < 7.0 else 20.0)
        dt = stable_dt(scn)
        sp = sc = initial_state(scn)
        for _ in range(200):
            sp = step(scn, sp, dt, backend="python")
            sc = step(scn, sc, dt, backend="cython")
        assert np.array_equal(sp.rho, sc.rho)

    def test_runs_are_deterministic(self, tri):
        scn = make_scn(tri, cells=60, t_end=0.05,
                       upstream=DemandBC(2400.0),
                       initial_density=lambda x: 200.0 if 5.0 < x < 7.0 else 20.0)
        a = run(scn)[-1]
        b = run(scn)[-1]
        assert np.array_equal(a.rho, b.rho)
        assert a.t == b.t and a.inflow == b.inflow


class TestRun:
    def test_zero_horizon(self, tri):
        out = run(make_scn(tri, t_end=0.0))
        assert len(out) == 1
        assert out[0].t == 0.0

    def test_snapshot_schedule(self, tri):
        scn = make_scn(tri, t_end=0.004, output_interval=0.001)
        out = run(scn)
        assert len(out) == 5
        times = [s.t for s in out]
        for got, want in zip(times, [0.0, 0.001, 0.002, 0.003, 0.004]):
            assert got == pytest.approx(want, abs=1e-12)
        assert out[-1].t == pytest.approx(0.004, abs=1e-12)

    def test_inflow_ledger_matches_schedule(self, tri):
        flow = piecewise_constant([(0.0, 1000.0), (0.01, 2000.0)])
        assert flow(0.0) == 1000.0
        assert flow(0.009999) == 1000.0
        assert flow(0.01) == 2000.0
        assert flow(-1.0) == 1000.0
        scn = make_scn(tri, length=2.0, cells=20, t_end=0.02,
                       output_interval=0.01, initial_density=0.0,
                       upstream=DemandBC(flow))
        last = run(scn)[-1]
        # snapshots align steps with the schedule breakpoint
        assert last.inflow == pytest.approx(
            1000.0 * 0.01 + 2000.0 * 0.01, rel=1e-9)

    def test_free_outflow_default(self, tri):
        assert FREE_OUTFLOW.value(123.0) == math.inf


class TestCsv:
    def test_header_and_us_values(self, tri):
        scn = make_scn(tri, length=0.2, cells=2, initial_density=[30.0, 100.0],
                       intensity=ConstantIntensity(0.1))
        snap = initial_state(scn)
        buf = io.StringIO()
        write_snapshots_csv(buf, scn, [snap])
        lines = buf.getvalue().strip().split("\n")
        assert lines[0] == "t,x,rho,eps,v,q"
        assert len(lines) == 3
        t, x, rho, eps, v, q = map(float, lines[1].split(","))
        assert (t, x, rho, eps) == (0.0, 0.05, 30.0, 0.1)
        assert v == 65.0
        assert q == pytest.approx(1950.0)

    def test_metric_conversion(self, tri):
        from lanekw.units import KM_PER_MILE

        scn = make_scn(tri, length=0.2, cells=2, initial_density=[30.0, 100.0])
        buf = io.StringIO()
        write_snapshots_csv(buf, scn, [initial_state(scn)], units="metric")
        row = buf.getvalue().strip().split("\n")[1].split(",")
        assert float(row[1]) == pytest.approx(0.05 * KM_PER_MILE, rel=1e-11)
        assert float(row[2]) == pytest.approx(30.0 / KM_PER_MILE, rel=1e-11)
        assert float(row[4]) == pytest.approx(65.0 * KM_PER_MILE, rel=1e-11)
        assert float(row[5]) == pytest.approx(1950.0, rel=1e-11)

    def test_bad_units_rejected(self, tri):
        scn = make_scn(tri, length=0.2, cells=2)
        with pytest.raises(DomainError):
            write_snapshots_csv(io.StringIO(), scn, [initial_state(scn)],
                                units="imperial")
