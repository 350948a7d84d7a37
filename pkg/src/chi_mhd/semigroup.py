"""Heat semigroup, forced heat solves and the Duhamel bilinear term.

Every Duhamel integral uses exponential-integrator weights: on each time
step the forcing is interpolated linearly and the decaying exponential is
integrated exactly, mode by mode.  Constant forcing is therefore reproduced
to rounding error and the scheme is second order for smooth forcing.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

from .norms import modulus, pair_norm
from .spectral import Grid, SpectralField, StatePair, VectorField, nonlinear_coeffs
from .trajectory import Trajectory

_SERIES_CUT = 0.1
# Taylor coefficients of the two weights (see exp_weights), enough terms for z < 0.1
_W0_TAYLOR = [(-1) ** n * (n + 1) / math.factorial(n + 2) for n in range(10)]
_W1_TAYLOR = [(-1) ** n / math.factorial(n + 2) for n in range(10)]


def exp_weights(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights ``(w0, w1)`` with

        int_0^h e^{-lam (h - s)} [f0 (1 - s/h) + f1 s/h] ds = h (w0 f0 + w1 f1),

    as functions of ``z = lam h >= 0``.  ``w0 = (1 - e^{-z}(1 + z)) / z^2`` and
    ``w1 = (z - 1 + e^{-z}) / z^2``; both tend to 1/2 as ``z -> 0``.
    """
    z = np.asarray(z, dtype=float)
    w0 = np.empty_like(z)
    w1 = np.empty_like(z)
    small = z < _SERIES_CUT
    zs = z[small]
    w0[small] = np.polynomial.polynomial.polyval(zs, _W0_TAYLOR)
    w1[small] = np.polynomial.polynomial.polyval(zs, _W1_TAYLOR)
    zb = z[~small]
    e = np.exp(-zb)
    w0[~small] = (1.0 - e * (1.0 + zb)) / zb**2
    w1[~small] = (zb - 1.0 + e) / zb**2
    return w0, w1


def duhamel_coeffs(times: np.ndarray, forcing: np.ndarray, rate: np.ndarray, initial: np.ndarray | None = None) -> np.ndarray:
    """Integrate ``dv/dt = -rate v + f`` over the nodes ``times``.

    ``forcing`` has a leading time axis; ``rate`` broadcasts against one
    snapshot.  Returns the solution at every node.
    """
    times = np.asarray(times, dtype=float)
    out = np.empty(forcing.shape, complex)
    out[0] = 0.0 if initial is None else initial
    for m in range(len(times) - 1):
        h = times[m + 1] - times[m]
        z = rate * h
        w0, w1 = exp_weights(z)
        out[m + 1] = np.exp(-z) * out[m] + h * (w0 * forcing[m] + w1 * forcing[m + 1])
    return out


def _check_kappa(kappa: float) -> None:
    if not kappa > 0:
        raise ValueError(f"diffusivity must be positive, got {kappa}")


def heat_propagate(f, kappa: float, t: float):
    """Apply ``e^{t kappa Delta}`` to a SpectralField or VectorField."""
    _check_kappa(kappa)
    if t < 0:
        raise ValueError(f"time must be nonnegative, got {t}")
    return type(f)(f.grid, f.coeffs * np.exp(-kappa * t * f.grid.xi_sq))


def viscosity_rates(grid: Grid, mu: float, nu: float) -> np.ndarray:
    """Decay rates shaped (2, 1, n, n) for a (u, b) coefficient stack."""
    return np.stack([mu * grid.xi_sq, nu * grid.xi_sq])[:, None]


def free_evolution(st: StatePair, mu: float, nu: float, t: float) -> StatePair:
    return StatePair(heat_propagate(st.u, mu, t), heat_propagate(st.b, nu, t))


def heat_solve(v0: SpectralField | VectorField, forcing: Trajectory, kappa: float, s_values=()) -> Trajectory:
    """Forced heat equation ``v' = kappa Lap v + f`` on the forcing's time grid."""
    _check_kappa(kappa)
    if len(forcing) == 0:
        raise ValueError("empty forcing trajectory")
    if forcing.grid != v0.grid:
        raise ValueError("forcing and initial data live on different grids")
    if type(forcing.snapshots[0]) is not type(v0):
        raise TypeError("forcing and initial data must be the same field type")
    if forcing.times[0] != 0.0:
        raise ValueError("forcing time grid must start at 0")
    rate = kappa * v0.grid.xi_sq
    c = duhamel_coeffs(forcing.t, forcing.coeff_stack(), rate, v0.coeffs)
    return Trajectory.from_coeffs(v0.grid, forcing.times, c, forcing.kind, s_values)


def bilinear_forcing(grid: Grid, states: np.ndarray, chunk: int = 64) -> np.ndarray:
    """Nonlinear term at every node of a (M, 2, 2, n, n) stack, evaluated in chunks."""
    out = np.empty(states.shape, complex)
    for i in range(0, len(states), chunk):
        out[i : i + chunk] = nonlinear_coeffs(grid, states[i : i + chunk])
    return out


def duhamel_bilinear_coeffs(grid: Grid, times: np.ndarray, states: np.ndarray, mu: float, nu: float) -> np.ndarray:
    return duhamel_coeffs(times, bilinear_forcing(grid, states), viscosity_rates(grid, mu, nu))


def duhamel_bilinear(traj: Trajectory, mu: float, nu: float, t_eval=None) -> Trajectory:
    """Duhamel integral of the MHD nonlinearity along a given trajectory.

    Returns ``B(t) = int_0^t (e^{mu (t-s) Lap} N_u(s), e^{nu (t-s) Lap} N_b(s)) ds``
    where ``(N_u, N_b)`` is :func:`nonlinear_rhs`; the mild solution is then
    ``x = a + B(x)``.  ``t_eval`` selects a subset of the trajectory's nodes.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    _check_kappa(mu)
    _check_kappa(nu)
    if traj.kind != "state":
        raise TypeError("duhamel_bilinear needs a StatePair trajectory")
    c = duhamel_bilinear_coeffs(traj.grid, traj.t, traj.coeff_stack(), mu, nu)
    times = traj.times
    if t_eval is not None:
        idx = []
        for t in np.atleast_1d(t_eval):
            j = int(np.argmin(np.abs(traj.t - t)))
            if abs(traj.times[j] - t) > 1e-12 * max(1.0, abs(t)):
                raise ValueError(f"t_eval={t} is not a trajectory node")
            idx.append(j)
        times = [times[j] for j in idx]
        c = c[idx]
    return Trajectory.from_coeffs(traj.grid, times, c, "state")


def free_evolution_l2chi0(u0: VectorField, b0: VectorField, mu: float, nu: float, T: float) -> tuple[float, float]:
    """Time-L^2 chi^0 norm of the free evolution and its per-mode Minkowski majorant.

    ``value`` integrates ``||e^{t mu Lap} u0||_{chi0}^2 + ||e^{t nu Lap} b0||_{chi0}^2``
    over ``[0, T]`` adaptively (``T`` may be ``inf``); ``bound`` combines, per
    field, ``sum_k |c_k| sqrt((1 - e^{-2 kappa T |xi|^2}) / (2 kappa |xi|^2))``
    in the p = 2 pair convention.  Always ``value <= bound``, and
    ``bound <= (2 min(mu, nu))^{-1/2} ||(u0, b0)||_{chi^{-1}}`` (p = 2).
    """
    _check_kappa(mu)
    _check_kappa(nu)
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    grid = u0.grid
    nz = grid.xi_sq > 0
    lam2 = grid.xi_sq[nz]
    value_sq = 0.0
    bound_sq = 0.0
    for f, kappa in ((u0, mu), (b0, nu)):
        mod = modulus(f.coeffs, True)[nz]
        keep = mod > 0
        a, l = mod[keep], lam2[keep]
        if a.size == 0:
            continue

        def sq(t, a=a, l=l, kappa=kappa):
            return float(np.dot(a, np.exp(-kappa * t * l))) ** 2

        # split at the slowest decay time so the adaptive rule sees the layer
        t1 = min(T, 1.0 / (kappa * l.min()))
        v, _ = integrate.quad(sq, 0.0, t1, epsabs=0.0, epsrel=1e-13, limit=400)
        if T > t1:
            v2, _ = integrate.quad(sq, t1, T, epsabs=0.0, epsrel=1e-13, limit=400)
            v += v2
        value_sq += v
        decay = 1.0 if math.isinf(T) else -np.expm1(-2.0 * kappa * T * l)
        bound_sq += float(np.dot(a, np.sqrt(decay / (2.0 * kappa * l)))) ** 2
    return math.sqrt(value_sq), math.sqrt(bound_sq)


def free_evolution_rhs(u0: VectorField, b0: VectorField, mu: float, nu: float) -> float:
    """Right side of the free-evolution bound: ``(2 min(mu, nu))^{-1/2} ||(u0, b0)||_{chi^{-1}}`` (p = 2)."""
    return pair_norm(StatePair(u0, b0), -1.0, 2.0) / math.sqrt(2.0 * min(mu, nu))
