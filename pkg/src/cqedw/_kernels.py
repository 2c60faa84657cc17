"""Hot numeric kernels, numba-compiled with a pure-numpy fallback.

The two inner loops that dominate runtime live here: the fixed-step RK4
Lindblad integrator and the isometry descent used by the convex-roof
tangle bound.  Each kernel is written once as a plain function; when numba
is importable (and not disabled) the same source is compiled with
``@njit(cache=True)``.

Set ``CQEDW_PURE_NUMPY=1`` to force the numpy path.  ``benchmarks/
bench_kernels.py`` compares both.
"""
from __future__ import annotations

import os

import numpy as np


def _numba_disabled() -> bool:
    return os.environ.get("CQEDW_PURE_NUMPY", "").strip() not in ("", "0")


def _rk4_lindblad(h, rho, ls, ls_dag, acc, dt, steps):
    """Integrate drho/dt = -i[H,rho] + sum_k (L rho L^+ - 1/2 {L^+L, rho}).

    ``ls`` stacks the collapse operators with sqrt(rate) absorbed,
    ``ls_dag`` their adjoints, ``acc`` = sum_k L^+ L.  All arrays complex128
    and C-contiguous; returns the state after ``steps`` equal steps of ``dt``.
    """

    def rhs(r):
        out = -1j * (h @ r - r @ h)
        out = out - 0.5 * (acc @ r + r @ acc)
        for k in range(ls.shape[0]):
            out = out + ls[k] @ r @ ls_dag[k]
        return out

    for _ in range(steps):
        k1 = rhs(rho)
        k2 = rhs(rho + (0.5 * dt) * k1)
        k3 = rhs(rho + (0.5 * dt) * k2)
        k4 = rhs(rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return rho


def _roof_descent(wtil, v, noise, step0, step_min):
    """Minimize the average three-tangle over decompositions V @ wtil.

    ``wtil`` has shape (r, 8), rows sqrt(lambda_i) * eigvec_i of an 8x8
    density matrix; ``v`` is an (m, r) isometry start point and ``noise``
    an (iters, m, r) stack of complex perturbations.  Random-walk descent:
    propose the QR orthonormalization of v + step * noise[it], accept on
    improvement, shrink the step otherwise.  Returns (best value, best v,
    iterations used).
    """

    def objective(vm):
        phi = vm @ wtil
        total = 0.0
        for k in range(phi.shape[0]):
            a = phi[k]
            p = 0.0
            for q in range(8):
                p += abs(a[q]) ** 2
            if p < 1e-14:
                continue
            d1 = (
                a[0] ** 2 * a[7] ** 2
                + a[1] ** 2 * a[6] ** 2
                + a[2] ** 2 * a[5] ** 2
                + a[4] ** 2 * a[3] ** 2
            )
            d2 = (
                a[0] * a[7] * a[3] * a[4]
                + a[0] * a[7] * a[5] * a[2]
                + a[0] * a[7] * a[6] * a[1]
                + a[3] * a[4] * a[5] * a[2]
                + a[3] * a[4] * a[6] * a[1]
                + a[5] * a[2] * a[6] * a[1]
            )
            d3 = a[0] * a[6] * a[5] * a[3] + a[7] * a[1] * a[2] * a[4]
            total += 4.0 * abs(d1 - 2.0 * d2 + 4.0 * d3) / p
        return total

    best = objective(v)
    step = step0
    used = 0
    for it in range(noise.shape[0]):
        used = it + 1
        q, _ = np.linalg.qr(v + step * noise[it])
        q = np.ascontiguousarray(q)
        f = objective(q)
        if f < best:
            v = q
            best = f
            step = min(step * 1.1, step0)
        else:
            step *= 0.95
            if step < step_min:
                break
    return best, v, used


rk4_lindblad_numpy = _rk4_lindblad
roof_descent_numpy = _roof_descent

NUMBA_ENABLED = False
rk4_lindblad_numba = None
roof_descent_numba = None

if not _numba_disabled():
    try:
        from numba import njit

        rk4_lindblad_numba = njit(cache=True)(_rk4_lindblad)
        roof_descent_numba = njit(cache=True)(_roof_descent)
        NUMBA_ENABLED = True
    except ImportError:
        pass

if NUMBA_ENABLED:
    rk4_lindblad = rk4_lindblad_numba
    roof_descent = roof_descent_numba
else:
    rk4_lindblad = rk4_lindblad_numpy
    roof_descent = roof_descent_numpy


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
