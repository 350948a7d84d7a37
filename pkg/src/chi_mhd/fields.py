"""Seeded random fields and named initial-data presets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import TWO_PI, Grid, SpectralField, StatePair, VectorField, project_coeffs, taylor_green

# Phases are drawn on this fixed lattice and restricted to the requested one,
# so a given seed yields the same low modes at every resolution.
_MASTER = 256


@dataclass(frozen=True)
class RandomFieldSpec:
    seed: int
    beta: float = 2.5
    amplitude: float = 1.0
    divergence_free: bool = True
    n_modes: int = 32
    period: float = TWO_PI
    vector: bool = True
    k_max: float | None = None

    def __post_init__(self):
        if not self.beta > 1:
            raise ValueError(f"decay exponent beta must exceed 1, got {self.beta}")
        Grid(self.n_modes, self.period)

    @property
    def grid(self) -> Grid:
        return Grid(self.n_modes, self.period)


def _phases(seed: int, ncomp: int, n: int) -> np.ndarray:
    M = max(_MASTER, n)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2 * np.pi, size=(ncomp, M, M))
    # theta(-k) = -theta(k) makes the coefficients Hermitian with exact moduli
    neg = np.roll(theta[..., ::-1, ::-1], 1, axis=(-2, -1))
    theta = theta - neg
    idx = np.fft.fftfreq(n, 1.0 / n).astype(int) % M
    return theta[:, idx][:, :, idx]


def random_field(spec: RandomFieldSpec) -> SpectralField | VectorField:
    """``A |k|^{-beta} e^{i theta_k}`` with Hermitian phases, mean-free, Nyquist-free.

    Vector fields split the amplitude evenly over the two components before
    the optional Leray projection.
    """
    g = spec.grid
    ncomp = 2 if spec.vector else 1
    theta = _phases(spec.seed, ncomp, g.n_modes)
    ksq = (g.k[0] ** 2 + g.k[1] ** 2).astype(float)
    amp = np.zeros(g.shape)
    nz = ksq > 0
    amp[nz] = spec.amplitude * ksq[nz] ** (-0.5 * spec.beta)
    amp[g.nyquist_mask] = 0.0
    if spec.k_max is not None:
        amp[ksq > spec.k_max**2] = 0.0
    c = amp * np.exp(1j * theta) / np.sqrt(ncomp)
    c[..., 0, 0] = 0.0
    if not spec.vector:
        return SpectralField(g, c[0])
    if spec.divergence_free:
        c = project_coeffs(g, c)
    return VectorField(g, c)


def random_state(seed: int, n_modes: int = 32, beta: float = 2.5, amplitude: float = 1.0, **kw) -> StatePair:
    """Divergence-free random (u, b) with independent seeds per field."""
    u = random_field(RandomFieldSpec(2 * seed, beta, amplitude, True, n_modes, **kw))
    b = random_field(RandomFieldSpec(2 * seed + 1, beta, amplitude, True, n_modes, **kw))
    return StatePair(u, b)


def stress_field(seed: int, n_modes: int = 32, vector: bool = True, divergence_free: bool = True) -> SpectralField | VectorField:
    """Random field with seed-drawn decay, band limit, amplitude and mode dropout.

    Meant for stress-testing exact inequalities: sparse or nearly
    single-mode inputs sit close to their equality cases.
    """
    rng = np.random.default_rng([seed, 0x5EED])
    beta = rng.uniform(1.2, 4.0)
    amp = float(np.exp(rng.normal(0.0, 1.5)))
    k_max = float(rng.uniform(1.0, n_modes / 2))
    f = random_field(RandomFieldSpec(seed, beta, amp, divergence_free, n_modes, vector=vector, k_max=k_max))
    keep_p = rng.uniform(0.05, 1.0)
    g = f.grid
    draw = rng.uniform(size=g.shape)
    sym = 0.5 * (draw + g.negate_index(draw))
    mask = sym < keep_p
    c = f.coeffs * mask
    if not np.any(c):
        # keep at least the lowest mode present
        c = f.coeffs * ((np.abs(g.k[0]) <= 1) & (np.abs(g.k[1]) <= 1))
    return type(f)(g, c)


def preset_state(name: str, grid: Grid, *, amplitude: float = 1.0, seed: int = 0, beta: float = 2.5) -> StatePair:
    """Named initial data: ``taylor-green``, ``aligned``, ``random-beta``, ``zero``,
    ``small``, ``large`` and ``tg-plus-b``."""
    zero = VectorField.zeros(grid)
    if name == "taylor-green":
        return StatePair(taylor_green(grid, amplitude), zero)
    if name == "aligned":
        u = random_field(RandomFieldSpec(seed, beta, amplitude, True, grid.n_modes, grid.period))
        return StatePair(u, u)
    if name == "random-beta":
        return random_state(seed, grid.n_modes, beta, amplitude, period=grid.period)
    if name == "zero":
        return StatePair(zero, zero)
    if name == "small":
        return random_state(seed, grid.n_modes, 3.0, 0.02 * amplitude, period=grid.period)
    if name in ("large", "tg-plus-b"):
        b = random_field(RandomFieldSpec(seed, 3.0, 0.5, True, grid.n_modes, grid.period, k_max=4))
        return StatePair(taylor_green(grid, amplitude), b * amplitude)
    raise ValueError(f"unknown preset {name!r}")


PRESETS = ("taylor-green", "aligned", "random-beta", "zero", "small", "large", "tg-plus-b")
