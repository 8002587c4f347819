import numpy as np
import pytest

from lanekw.fd import MaxSensitivityFD, TrafficState, TriangularFD
from lanekw.riemann import (RAREFACTION, SHOCK, STANDING, boundary_flux,
                            sample, solve)

EPS_GRID = (0.0, 0.05, 0.1, 0.2)


@pytest.fixture
def tri():
    return TriangularFD(v_f=65.0, rho_c=40.0, rho_j=240.0)


@pytest.fixture
def ms():
    return MaxSensitivityFD(v_f=65.0, c_j=-12.0, rho_j=240.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def both_fds():
    return [TriangularFD(v_f=65.0, rho_c=40.0, rho_j=240.0),
            MaxSensitivityFD(v_f=65.0, c_j=-12.0, rho_j=240.0)]


def density_grid(fd, eps, n):
    """Densities spanning free and congested branches at this eps."""
    return np.linspace(0.0, fd.jam_density(eps), n)


def check_solution(fd, sol, rel=1e-9):
    """Every structural invariant a Riemann fan must satisfy."""
    cap = fd.capacity(0.0)
    ordered = [sol.left] + [w.right for w in sol.waves]
    assert ordered[-1] == sol.right or _close_state(ordered[-1], sol.right, fd)

    prev_hi = -np.inf
    for w in sol.waves:
        assert w.speed_lo <= w.speed_hi + 1e-12
        assert prev_hi <= w.speed_lo + 1e-9, "waves out of order"
        prev_hi = w.speed_hi

        ql = fd.flow_lc(w.left.eps, w.left.rho)
        qr = fd.flow_lc(w.right.eps, w.right.rho)
        if w.kind == STANDING:
            assert w.speed_lo == 0.0 == w.speed_hi
            assert abs(ql - qr) <= 1e-9 * cap, "standing wave leaks flux"
            lu = w.left.rho <= fd.critical_density(w.left.eps) * (1 + 1e-12)
            ru = w.right.rho <= fd.critical_density(w.right.eps) * (1 + 1e-12)
            lo = w.left.rho >= fd.critical_density(w.left.eps) * (1 - 1e-12)
            ro = w.right.rho >= fd.critical_density(w.right.eps) * (1 - 1e-12)
            assert (lu and ru) or (lo and ro), "standing wave crosses the curve"
        elif w.kind == SHOCK:
            assert w.left.eps == w.right.eps
            rh = (qr - ql) / (w.right.rho - w.left.rho)
            assert abs(w.speed_lo - rh) <= 1e-9 * max(abs(rh), 1.0)
        else:
            assert w.kind == RAREFACTION
            assert w.left.eps == w.right.eps

    # flux formula equivalence, the oracle property
    q_min = boundary_flux(fd, sol.left, sol.right)
    assert abs(sol.boundary_flux - q_min) <= rel * max(q_min, 1.0)
    # sampling is consistent at the ends and at the interface
    vmax = fd.max_wave_speed()
    assert _close_state(sample(sol, -2.0 * vmax), sol.left, fd)
    assert _close_state(sample(sol, 2.0 * vmax), sol.right, fd)
    s0 = sample(sol, 1e-11)
    q0 = fd.flow_lc(s0.eps, s0.rho)
    assert abs(q0 - sol.boundary_flux) <= 1e-8 * max(q0, 1.0)


def _close_state(a, b, fd):
    return (abs(a.eps - b.eps) <= 1e-12
            and abs(a.rho - b.rho) <= 1e-9 * fd.rho_j)


def solve_checked(fd, left, right):
    sol = solve(fd, left, right)
    check_solution(fd, sol)
    return sol


def states(*pairs):
    return [TrafficState(e, r) for e, r in pairs]
