"""Two solution paths for 2D incompressible MHD on the torus.

``integrate`` is an integrating-factor RK4 time stepper; ``picard_solve``
iterates the mild (Duhamel) formulation ``x = a + B(x)`` to a fixed point in
``L^2([0, T]; chi^0)``.  ``continuation_solve`` chains Picard segments whose
lengths come from the frequency-splitting existence time.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy import integrate as sint

from . import calibration
from .norms import TrajectoryNorms, modulus, pair_norm
from .semigroup import exp_weights, viscosity_rates
from .spectral import TWO_PI, Grid, StatePair, from_half, nonlinear_half, physical, project_coeffs, to_half
from .trajectory import Trajectory


class SolverAbort(RuntimeError):
    """A run stopped early; ``last_time`` is the last time with a valid state."""

    def __init__(self, message: str, last_time: float, trajectory: Trajectory | None = None):
        super().__init__(f"{message} (last valid t={last_time:.6g})")
        self.last_time = last_time
        self.trajectory = trajectory


class NonFinite(SolverAbort):
    pass


class BlowupGuardTripped(SolverAbort):
    pass


class NotContracting(RuntimeError):
    def __init__(self, message: str, diagnostics: "PicardDiagnostics"):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class SolverConfig:
    n_modes: int = 32
    period: float = TWO_PI
    mu: float = 1.0
    nu: float = 1.0
    dt: float = 1e-3
    T_end: float = 1.0
    snapshot_stride: int = 10
    picard_tol: float = 1e-10
    picard_max_iters: int = 60
    C0: float | None = None
    blowup_guard: float = 1e8

    def __post_init__(self):
        Grid(self.n_modes, self.period)
        for name in ("mu", "nu", "dt", "T_end", "picard_tol", "blowup_guard"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        for name in ("snapshot_stride", "picard_max_iters"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v > 0):
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.C0 is None:
            object.__setattr__(self, "C0", default_C0())
        elif not self.C0 > 0:
            raise ValueError(f"C0 must be positive, got {self.C0}")

    @property
    def grid(self) -> Grid:
        return Grid(self.n_modes, self.period)

    @property
    def min_visc(self) -> float:
        return min(self.mu, self.nu)

    def replace(self, **kw) -> "SolverConfig":
        d = asdict(self)
        d.update(kw)
        return SolverConfig(**d)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_mapping(cls, m: dict) -> "SolverConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = set(m) - set(known)
        if unknown:
            raise ValueError(f"unknown solver keys: {sorted(unknown)}")
        kw = {}
        for k, v in m.items():
            if k in ("n_modes", "snapshot_stride", "picard_max_iters"):
                if isinstance(v, float) and v.is_integer():
                    v = int(v)
            elif v is not None and not isinstance(v, bool):
                v = float(v)
            kw[k] = v
        return cls(**kw)


def default_C0() -> float:
    """Measured bilinear constant with the 1.25 safety factor (C0 > C)."""
    return 1.25 * calibration.FROZEN["bilinear"]


@dataclass
class PicardDiagnostics:
    distances: list = field(default_factory=list)
    ratio: float = float("nan")
    converged: bool = False
    iterations: int = 0
    bilinear_norm: float = float("nan")
    alpha: float = float("nan")
    max_iterate_norm: float = 0.0
    horizon: float = 0.0

    @property
    def ratio_bound(self) -> float:
        """``4 ||B|| alpha`` from the contraction-mapping lemma."""
        return 4.0 * self.bilinear_norm * self.alpha

    def to_json(self) -> dict:
        d = asdict(self)
        d["ratio_bound"] = self.ratio_bound
        return d


# ---------------------------------------------------------------- helpers


def stability_bound(grid: Grid, s: StatePair) -> float:
    """Advective CFL limit ``0.5 / (max|xi| * max(|u| + |b|))``; diffusion is exact."""
    ph = physical(grid, s.coeffs)
    speed = np.max(np.hypot(ph[0, 0], ph[0, 1]) + np.hypot(ph[1, 0], ph[1, 1]))
    kmax = float(grid.xi_abs.max())
    return math.inf if speed == 0 else 0.5 / (kmax * float(speed))


def _check_initial(cfg: SolverConfig, s0: StatePair) -> Grid:
    grid = cfg.grid
    if s0.grid != grid:
        raise ValueError(f"initial state grid {s0.grid} does not match config grid {grid}")
    if not s0.mean_free:
        raise ValueError("initial state must be mean-free")
    if s0.divergence_residual() > 1e-10:
        raise ValueError("initial state must be divergence-free")
    return grid


def _chi0_pair_sq(grid: Grid, states: np.ndarray) -> np.ndarray:
    """``||u||_{chi0}^2 + ||b||_{chi0}^2`` per node of a half-layout (..., 2, 2, n, n/2+1) stack."""
    per_field = np.sum(grid.half.weight(0.0) * modulus(states, True), axis=(-2, -1))
    return np.sum(per_field**2, axis=-1)


def l2chi0_norm(grid: Grid, times: np.ndarray, states: np.ndarray) -> float:
    """``||X||_{L^2([0, T]; chi^0)}`` (p = 2 pair convention) by trapezoid, half layout."""
    return math.sqrt(float(sint.trapezoid(_chi0_pair_sq(grid, states), times)))


# ---------------------------------------------------------------- time stepper


class IFRK4:
    """One integrating-factor RK4 step of size ``h`` on half-layout states.

    Works on any leading batch shape ``(..., 2, 2, n, n/2+1)``.  After the
    step the velocity is re-projected and the zero modes are reset.
    """

    def __init__(self, grid: Grid, mu: float, nu: float, h: float):
        self.grid = grid
        self.h = h
        rate = to_half(grid, viscosity_rates(grid, mu, nu))
        self.e_half = np.exp(-0.5 * h * rate)
        self.e_full = self.e_half**2

    def __call__(self, c: np.ndarray) -> np.ndarray:
        grid, h, eh, ef = self.grid, self.h, self.e_half, self.e_full
        N = lambda x: nonlinear_half(grid, x)  # noqa: E731
        k1 = N(c)
        k2 = N(eh * (c + 0.5 * h * k1))
        k3 = N(eh * c + 0.5 * h * k2)
        k4 = N(ef * c + h * eh * k3)
        out = ef * c + (h / 6.0) * (ef * k1 + 2.0 * eh * (k2 + k3) + k4)
        out[..., 0, :, :, :] = grid.half.project(out[..., 0, :, :, :])
        out[..., 0, 0] = 0.0
        return out


def check_step(cfg: SolverConfig, s0: StatePair) -> None:
    bound = stability_bound(cfg.grid, s0)
    if cfg.dt > bound:
        raise ValueError(f"dt={cfg.dt} exceeds the advective stability bound {bound:.4g}")


def integrate(cfg: SolverConfig, s0: StatePair, T: float | None = None) -> Trajectory:
    """Integrating-factor RK4 on ``dc/dt = -kappa |xi|^2 c + N(c)``.

    The step is ``cfg.dt`` rounded so that an integer number of steps lands on
    the horizon.  Norms are recorded every step; fields every
    ``snapshot_stride`` steps and at the end.
    """
    grid = _check_initial(cfg, s0)
    T = cfg.T_end if T is None else T
    check_step(cfg, s0)
    nsteps = max(1, int(round(T / cfg.dt)))
    h = T / nsteps
    step = IFRK4(grid, cfg.mu, cfg.nu, h)

    traj = Trajectory(grid, config=cfg, kind="state")
    traj.norms = TrajectoryNorms(grid, layout="half")
    c = to_half(grid, s0.coeffs).copy()
    traj.append(0.0, s0, record_norms=False)
    traj.norms.append_coeffs(0.0, (c[0], c[1]), vector=True)
    prev_sq = float(_chi0_pair_sq(grid, c))
    blow = 0.0
    for m in range(1, nsteps + 1):
        t = m * h
        c_new = step(c)
        if not np.all(np.isfinite(c_new)):
            raise NonFinite("non-finite coefficients", (m - 1) * h, traj)
        sq = float(_chi0_pair_sq(grid, c_new))
        blow += 0.5 * h * (prev_sq + sq)
        if not math.isfinite(blow):
            raise NonFinite("non-finite norms", (m - 1) * h, traj)
        if blow > cfg.blowup_guard:
            raise BlowupGuardTripped(f"blow-up integral {blow:.4g} exceeded guard {cfg.blowup_guard:g}", (m - 1) * h, traj)
        c, prev_sq = c_new, sq
        traj.norms.append_coeffs(t, (c[0], c[1]), vector=True)
        if m % cfg.snapshot_stride == 0 or m == nsteps:
            traj.append(t, StatePair.from_coeffs(grid, from_half(grid, c)), record_norms=False)
    return traj


# ---------------------------------------------------------------- mild solution


def free_evolution_stack(grid: Grid, s0: StatePair, mu: float, nu: float, times: np.ndarray) -> np.ndarray:
    """Heat-evolved initial data at each node, half layout (M, 2, 2, n, n/2+1)."""
    rate = to_half(grid, viscosity_rates(grid, mu, nu))
    c0 = to_half(grid, s0.coeffs)
    return c0[None] * np.exp(-rate[None] * np.asarray(times)[:, None, None, None, None])


def picard_map(grid: Grid, times: np.ndarray, a: np.ndarray, X: np.ndarray, mu: float, nu: float, chunk: int = 64) -> np.ndarray:
    """``a + B(X)`` on the node grid (half layout), nonlinearity evaluated chunk-wise."""
    rate = to_half(grid, viscosity_rates(grid, mu, nu))
    out = np.empty_like(a)
    acc = np.zeros(a.shape[1:], complex)
    out[0] = a[0]
    f_prev = None
    for i in range(0, len(times), chunk):
        F = nonlinear_half(grid, X[i : i + chunk])
        for j in range(F.shape[0]):
            m = i + j
            if m > 0:
                hstep = times[m] - times[m - 1]
                z = rate * hstep
                w0, w1 = exp_weights(z)
                acc = np.exp(-z) * acc + hstep * (w0 * f_prev + w1 * F[j])
                out[m] = a[m] + acc
            f_prev = F[j]
    return out


def picard_solve(cfg: SolverConfig, s0: StatePair, T: float | None = None, bilinear_constant: float | None = None):
    """Fixed-point iteration ``X_{n+1} = a + B(X_n)`` from ``X_0 = a``.

    ``a`` is the free heat evolution of ``s0``.  Stops when the
    ``L^2([0, T]; chi^0)`` step ``d_n`` drops to ``picard_tol``; raises
    :class:`NotContracting` if ``d_n`` grows three iterations running.
    The returned trajectory carries ``picard_nodes = (times, X)`` with ``X``
    in the half layout.
    """
    grid = _check_initial(cfg, s0)
    T = cfg.T_end if T is None else T
    if not T > 0:
        raise ValueError(f"horizon must be positive, got {T}")
    nsteps = max(2, int(math.ceil(T / cfg.dt - 1e-9)))
    times = np.linspace(0.0, T, nsteps + 1)
    a = free_evolution_stack(grid, s0, cfg.mu, cfg.nu, times)
    C = calibration.FROZEN["bilinear"] if bilinear_constant is None else bilinear_constant
    diag = PicardDiagnostics(horizon=T, bilinear_norm=C / math.sqrt(cfg.min_visc))
    diag.alpha = l2chi0_norm(grid, times, a)
    diag.max_iterate_norm = diag.alpha
    X = a
    rising = 0
    for it in range(1, cfg.picard_max_iters + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            X_new = picard_map(grid, times, a, X, cfg.mu, cfg.nu)
            d = l2chi0_norm(grid, times, X_new - X)
        diag.iterations = it
        if not math.isfinite(d):
            raise NotContracting("Picard iterates overflowed", diag)
        diag.distances.append(d)
        diag.max_iterate_norm = max(diag.max_iterate_norm, l2chi0_norm(grid, times, X_new))
        X = X_new
        if d <= cfg.picard_tol:
            diag.converged = True
            break
        if len(diag.distances) > 1 and d > diag.distances[-2]:
            rising += 1
            if rising >= 3:
                raise NotContracting(f"Picard steps grew 3 times running (d={d:.3g}); data too large for T={T:g}", diag)
        else:
            rising = 0
    diag.ratio = observed_ratio(diag.distances, cfg.picard_tol)

    traj = Trajectory(grid, config=cfg, kind="state")
    traj.norms = TrajectoryNorms(grid, layout="half")
    for m, t in enumerate(times):
        traj.norms.append_coeffs(t, (X[m, 0], X[m, 1]), vector=True)
        if m % cfg.snapshot_stride == 0 or m == nsteps:
            traj.append(t, StatePair.from_coeffs(grid, from_half(grid, X[m])), record_norms=False)
    traj.picard_nodes = (times, X)
    return traj, diag


def observed_ratio(distances: list, tol: float) -> float:
    """Largest step ratio ``d_{n+1}/d_n`` among steps still above rounding noise."""
    d = np.asarray(distances)
    if len(d) < 2:
        return 0.0
    floor = max(tol, 1e-13 * d[0])
    r = [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0 and d[i + 1] > floor]
    return float(max(r)) if r else 0.0


# ---------------------------------------------------------------- large data


def smallness_threshold(mu: float, nu: float, C0: float) -> float:
    """Global-existence threshold on ``||(u0, b0)||_{chi^{-1}}``: ``min(mu, nu) 2^{-3/2} / C0``."""
    return min(mu, nu) * 2.0**-1.5 / C0


def split_epsilon(mu: float, nu: float, C0: float) -> float:
    """Allowed high-frequency chi^{-1} mass: ``min(mu, nu) 2^{-5/2} / C0``."""
    return min(mu, nu) * 2.0**-2.5 / C0


def split_frequency(s0: StatePair, eps: float):
    """Smallest lattice radius ``rho`` whose exterior chi^{-1} mass is ``<= eps``.

    Returns ``(low, high, rho)`` with ``low`` supported on ``|xi| <= rho``.
    ``rho = 0`` means the whole field is already within ``eps``.
    """
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    g = s0.grid
    a = s0.coeffs
    w = g.weight(-1.0) * (modulus(a[0], True) + modulus(a[1], True))
    ksq = (g.k[0] ** 2 + g.k[1] ** 2).ravel()
    shell = np.bincount(ksq, weights=w.ravel())
    radii_sq = np.nonzero(np.bincount(ksq))[0]
    total = float(shell.sum())
    if total <= eps:
        rho_sq = 0
    else:
        tails = total - np.cumsum(shell[radii_sq])
        j = int(np.argmax(tails <= eps))
        rho_sq = int(radii_sq[j])
    low_mask = (g.k[0] ** 2 + g.k[1] ** 2) <= rho_sq
    rho = (TWO_PI / g.period) * math.sqrt(rho_sq)
    low = StatePair.from_coeffs(g, a * low_mask)
    high = StatePair.from_coeffs(g, a * ~low_mask)
    return low, high, rho


def local_existence_time(mu: float, nu: float, rho: float, C0: float, chi_m1_norm: float) -> float:
    """``(min(mu, nu)^{1/2} / (8 rho C0 ||(u0, b0)||_{chi^{-1}}))^2``; infinite for rho or norm zero."""
    if rho == 0 or chi_m1_norm == 0:
        return math.inf
    return (math.sqrt(min(mu, nu)) / (8.0 * rho * C0 * chi_m1_norm)) ** 2


@dataclass
class Segment:
    t_start: float
    chi_m1: float
    rho: float | None
    T_local: float
    length: float
    small_data: bool
    iterations: int
    ratio: float
    alpha: float
    converged: bool


@dataclass
class ContinuationReport:
    segments: list = field(default_factory=list)
    blowup_integral: float = 0.0
    threshold: float = 0.0
    eps: float = 0.0
    C0: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def continuation_solve(cfg: SolverConfig, s0: StatePair):
    """Restart Picard segments until ``cfg.T_end``.

    Each segment re-measures ``||(u, b)||_{chi^{-1}}`` (pair sum).  Below the
    smallness threshold one segment runs to the end; otherwise the state is
    split at radius ``rho`` and the segment length is the local existence
    time for ``(rho, norm)``.
    """
    grid = _check_initial(cfg, s0)
    C0 = cfg.C0
    thr = smallness_threshold(cfg.mu, cfg.nu, C0)
    eps = split_epsilon(cfg.mu, cfg.nu, C0)
    report = ContinuationReport(threshold=thr, eps=eps, C0=C0)
    traj = Trajectory(grid, config=cfg, kind="state")
    traj.norms = TrajectoryNorms(grid, layout="half")
    traj.append(0.0, s0, record_norms=False)
    c0 = to_half(grid, s0.coeffs)
    traj.norms.append_coeffs(0.0, (c0[0], c0[1]), vector=True)
    t = 0.0
    state = s0
    end_tol = 1e-12 * max(1.0, cfg.T_end)
    while cfg.T_end - t > end_tol:
        N = pair_norm(state, -1.0, 1.0)
        if N <= thr:
            rho, T_loc, small = None, math.inf, True
        else:
            _, _, rho = split_frequency(state, eps)
            T_loc, small = local_existence_time(cfg.mu, cfg.nu, rho, C0, N), False
        length = min(T_loc, cfg.T_end - t)
        try:
            seg, diag = picard_solve(cfg, state, T=length)
        except NotContracting as exc:
            raise NotContracting(f"segment at t={t:.6g} did not contract (discretization anomaly): {exc}", exc.diagnostics) from exc
        if not diag.converged:
            raise NotContracting(f"segment at t={t:.6g} hit picard_max_iters", diag)
        report.segments.append(
            Segment(t, N, rho, T_loc, length, small, diag.iterations, diag.ratio, diag.alpha, diag.converged)
        )
        times, X = seg.picard_nodes
        for m in range(1, len(times)):
            tm = t + times[m]
            traj.norms.append_coeffs(tm, (X[m, 0], X[m, 1]), vector=True)
        t = t + length
        # drop rounding-level divergence picked up across segments
        state = StatePair.from_coeffs(grid, _clean(grid, from_half(grid, X[-1])))
        traj.append(t, state, record_norms=False)
    report.blowup_integral = float(traj.norms.blowup_series()[-1])
    return traj, report


def _clean(grid: Grid, c: np.ndarray) -> np.ndarray:
    c = c.copy()
    c[0] = project_coeffs(grid, c[0])
    c[1] = project_coeffs(grid, c[1])
    c[:, :, 0, 0] = 0.0
    return c
