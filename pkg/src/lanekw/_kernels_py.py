"""Vectorized numpy implementation of the hot flux kernels.

Mirror of lanekw._kernels_c; the expressions are kept structurally
identical so the two backends agree to round-off (bit-exact for the
triangular diagram, within an ulp of exp() for the smooth one).

Kernel-level fd parameters: (kind, vf, rc0, cap0, rj, cja) where rc0 and
cap0 are the eps = 0 critical density and capacity, and cja = |c_j| for
the max-sensitivity curve (unused for triangular).
"""

import numpy as np

TRIANGULAR = 0
MAX_SENSITIVITY = 1

_MS_FREEFLOW_CUTOFF = 500.0

name = "python"


def _ms_flow(vf, cja, rj, opeps, rho):
    """rho * V(rho * (1 + eps)) for the max-sensitivity curve."""
    rbar = np.minimum(rho * opeps, rj)
    safe = np.maximum(rbar, 1e-300)
    u = np.minimum((cja / vf) * (rj / safe - 1.0), _MS_FREEFLOW_CUTOFF)
    v = vf * (1.0 - np.exp(1.0 - np.exp(u)))
    v = np.where(rbar <= 0.0, vf, v)
    return rho * v


def demand_supply(kind, vf, rc0, cap0, rj, cja, eps, rho):
    """Per-cell demand and supply arrays."""
    eps = np.asarray(eps)
    rho = np.asarray(rho)
    opeps = 1.0 + eps
    cap = cap0 / opeps
    if kind == TRIANGULAR:
        w = rc0 * vf / (rj - rc0)
        dem = np.minimum(vf * rho, cap)
        sup = np.minimum(cap, w * (np.maximum(rj - rho * opeps, 0.0)) / opeps)
    else:
        gamma = rc0 / opeps
        q = _ms_flow(vf, cja, rj, opeps, rho)
        dem = np.where(rho <= gamma, q, cap)
        sup = np.where(rho <= gamma, cap, q)
    return dem, sup


def godunov_fluxes(kind, vf, rc0, cap0, rj, cja, eps, rho, d_up, s_dn, q):
    """Interface fluxes q[0..n] = min(demand upstream, supply downstream)."""
    dem, sup = demand_supply(kind, vf, rc0, cap0, rj, cja, eps, rho)
    q[0] = min(d_up, sup[0])
    np.minimum(dem[:-1], sup[1:], out=q[1:-1])
    q[-1] = min(dem[-1], s_dn)


def apply_fluxes(rho, q, dtdx, out):
    """out = rho + dtdx * (inflow - outflow) per cell."""
    rho = np.asarray(rho)
    np.subtract(q[:-1], q[1:], out=out)
    np.multiply(out, dtdx, out=out)
    np.add(out, rho, out=out)
