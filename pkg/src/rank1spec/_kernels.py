"""Hot numeric kernels with numba-compiled and pure-numpy twins.

The compiled path is selected at import time; set the environment variable
``RANK1SPEC_NO_NUMBA=1`` (or uninstall numba) to force the numpy fallback.
``benchmarks/bench_kernels.py`` times both paths on a realistic workload.

Status codes returned by the fixed-point kernel:

====  =========================================
0     converged, residual <= tol
1     max_iter exhausted
2     denominator 1 + tau*f within 1e-14 of zero
3     converged but branch constraint violated
====  =========================================
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("RANK1SPEC_NO_NUMBA", "0") not in ("1", "true", "yes")

POLE_TOL = 1e-14


# ---------------------------------------------------------------------------
# loop-form implementations (numba-compatible source)
# ---------------------------------------------------------------------------

def _picard_loop(z, f_init, eta, tol, max_iter,
                 tau, tau_w, c,
                 n0_loc, n0_mass, n0_grid, n0_val):
    # damped fixed-point iteration for f = f0(z + shift(f))
    sgn = 1.0 if z.imag >= 0.0 else -1.0
    f = f_init
    if f.imag * sgn < 0.0:
        f = np.conj(f)
    n_tau = tau.shape[0]
    n_atom = n0_loc.shape[0]
    n_grid = n0_grid.shape[0]
    for it in range(max_iter):
        shift = 0.0 + 0.0j
        for k in range(n_tau):
            den = 1.0 + tau[k] * f
            if abs(den) < POLE_TOL:
                return f, it + 1, 2
            shift += tau[k] * tau_w[k] / den
        w = z - c * shift
        g = 0.0 + 0.0j
        for k in range(n_atom):
            g += n0_mass[k] / (n0_loc[k] - w)
        if n_grid > 1:
            prev = n0_val[0] / (n0_grid[0] - w)
            for j in range(1, n_grid):
                cur = n0_val[j] / (n0_grid[j] - w)
                g += 0.5 * (prev + cur) * (n0_grid[j] - n0_grid[j - 1])
                prev = cur
        if abs(f - g) <= tol:
            if f.imag * sgn < -tol:
                return f, it + 1, 3
            return f, it + 1, 0
        f = (1.0 - eta) * f + eta * g
        if f.imag * sgn < 0.0:
            f = np.conj(f)
    return f, max_iter, 1


def _stieltjes_loop(zs, atom_loc, atom_mass, grid, vals):
    # sum_k m_k/(loc_k - z) + trapezoid integral of vals/(grid - z)
    out = np.empty(zs.shape[0], dtype=np.complex128)
    n_atom = atom_loc.shape[0]
    n_grid = grid.shape[0]
    for i in range(zs.shape[0]):
        z = zs[i]
        acc = 0.0 + 0.0j
        for k in range(n_atom):
            acc += atom_mass[k] / (atom_loc[k] - z)
        if n_grid > 1:
            prev = vals[0] / (grid[0] - z)
            for j in range(1, n_grid):
                cur = vals[j] / (grid[j] - z)
                acc += 0.5 * (prev + cur) * (grid[j] - grid[j - 1])
                prev = cur
        out[i] = acc
    return out


# ---------------------------------------------------------------------------
# vectorized numpy twins
# ---------------------------------------------------------------------------

def _picard_numpy(z, f_init, eta, tol, max_iter,
                  tau, tau_w, c,
                  n0_loc, n0_mass, n0_grid, n0_val):
    sgn = 1.0 if z.imag >= 0.0 else -1.0
    f = f_init
    if f.imag * sgn < 0.0:
        f = np.conj(f)
    tw = tau * tau_w
    has_grid = n0_grid.shape[0] > 1
    for it in range(int(max_iter)):
        den = 1.0 + tau * f
        if den.size and np.min(np.abs(den)) < POLE_TOL:
            return f, it + 1, 2
        w = z - c * np.sum(tw / den)
        g = np.sum(n0_mass / (n0_loc - w)) if n0_loc.size else 0.0 + 0.0j
        if has_grid:
            g += np.trapezoid(n0_val / (n0_grid - w), n0_grid)
        if abs(f - g) <= tol:
            if f.imag * sgn < -tol:
                return f, it + 1, 3
            return f, it + 1, 0
        f = (1.0 - eta) * f + eta * g
        if f.imag * sgn < 0.0:
            f = np.conj(f)
    return f, int(max_iter), 1


def _stieltjes_numpy(zs, atom_loc, atom_mass, grid, vals):
    out = np.zeros(zs.shape[0], dtype=np.complex128)
    if atom_loc.size:
        out += np.sum(atom_mass[None, :] / (atom_loc[None, :] - zs[:, None]), axis=1)
    if grid.shape[0] > 1:
        integrand = vals[None, :] / (grid[None, :] - zs[:, None])
        out += np.trapezoid(integrand, grid, axis=1)
    return out


if USE_NUMBA:
    picard_solve = njit(cache=True)(_picard_loop)
    stieltjes_many = njit(cache=True)(_stieltjes_loop)
else:
    picard_solve = _picard_numpy
    stieltjes_many = _stieltjes_numpy
