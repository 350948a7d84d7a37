"""Periodic spectral grid, field containers and the dealiased MHD nonlinearity.

Fields are stored as complex Fourier coefficients ``c_k`` in numpy FFT
ordering, with the convention

    f(x) = sum_k c_k exp(i xi_k . x),    xi_k = (2 pi / L) k,

so that ``c = fft2(samples) / n**2`` and Parseval reads
``||f||_{L^2}^2 = L^2 sum_k |c_k|^2``.  Axis 0 of every coefficient array is
the x wavenumber, axis 1 the y wavenumber.

The raw-array kernels (``*_coeffs``) accept arbitrary leading batch axes and
are what the solvers call; the wrapper functions operate on the immutable
container types.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * np.pi


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Square periodic lattice ``[0, L)^2`` with ``n_modes`` modes per axis."""

    n_modes: int
    period: float = TWO_PI

    def __post_init__(self):
        n = self.n_modes
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise TypeError(f"n_modes must be an integer, got {n!r}")
        if n < 8 or n % 2:
            raise ValueError(f"n_modes must be even and >= 8, got {n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_modes, self.n_modes)

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavevectors, shape (2, n, n), components in [-n/2, n/2)."""
        k1 = np.fft.fftfreq(self.n_modes, 1.0 / self.n_modes).astype(np.int64)
        k = np.stack(np.meshgrid(k1, k1, indexing="ij"))
        k.setflags(write=False)
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        xi = (TWO_PI / self.period) * self.k
        xi.setflags(write=False)
        return xi

    @cached_property
    def xi_sq(self) -> np.ndarray:
        out = self.xi[0] ** 2 + self.xi[1] ** 2
        out.setflags(write=False)
        return out

    @cached_property
    def xi_abs(self) -> np.ndarray:
        out = np.sqrt(self.xi_sq)
        out.setflags(write=False)
        return out

    @cached_property
    def inv_xi_sq(self) -> np.ndarray:
        """``1/|xi|^2`` with the zero mode mapped to 0."""
        out = np.zeros(self.shape)
        nz = self.xi_sq > 0
        out[nz] = 1.0 / self.xi_sq[nz]
        out.setflags(write=False)
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3 rule: keep modes with every ``|k_i| < n/3``."""
        cut = self.n_modes / 3.0
        m = (np.abs(self.k[0]) < cut) & (np.abs(self.k[1]) < cut)
        m.setflags(write=False)
        return m

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        h = -self.n_modes // 2
        m = (self.k[0] == h) | (self.k[1] == h)
        m.setflags(write=False)
        return m

    def weight(self, s: float) -> np.ndarray:
        """``|xi|^s`` on nonzero modes, 0 on the zero mode."""
        out = np.zeros(self.shape)
        nz = self.xi_sq > 0
        out[nz] = self.xi_abs[nz] ** s
        return out

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        x1 = self.period * np.arange(self.n_modes) / self.n_modes
        return np.meshgrid(x1, x1, indexing="ij")

    def negate_index(self, a: np.ndarray) -> np.ndarray:
        """Return ``a[..., -k]`` (wavevector reflection) on the last two axes."""
        return np.roll(a[..., ::-1, ::-1], 1, axis=(-2, -1))

    def to_json(self) -> dict:
        return {"n_modes": int(self.n_modes), "period": float(self.period)}

    @cached_property
    def half(self) -> "HalfLayout":
        return HalfLayout(self)


class HalfLayout:
    """Precomputed arrays for the ``ky >= 0`` (rfft) half of the lattice.

    ``multiplicity`` counts how many full-lattice modes each half entry
    stands for under Hermitian symmetry (1 on the ky = 0 and ky = n/2
    columns, 2 elsewhere), so full sums of moduli become weighted half sums.
    """

    def __init__(self, grid: Grid):
        h = grid.n_modes // 2 + 1
        self.xi = np.ascontiguousarray(grid.xi[..., :h])
        self.ixi = 1j * self.xi
        self.xi_sq = np.ascontiguousarray(grid.xi_sq[:, :h])
        self.inv_xi_sq = np.ascontiguousarray(grid.inv_xi_sq[:, :h])
        self.dealias_mask = np.ascontiguousarray(grid.dealias_mask[:, :h])
        self.masked_norm = self.dealias_mask / grid.n_modes**2
        m = np.full(h, 2.0)
        m[0] = 1.0
        m[-1] = 1.0
        self.multiplicity = np.broadcast_to(m, (grid.n_modes, h)).copy()
        self._grid = grid

    def weight(self, s: float) -> np.ndarray:
        """Half-layout ``|xi|^s`` times multiplicity (zero mode excluded)."""
        return self._grid.weight(s)[:, : self.xi_sq.shape[1]] * self.multiplicity

    def project(self, v: np.ndarray) -> np.ndarray:
        dot = (self.xi[0] * v[..., 0, :, :] + self.xi[1] * v[..., 1, :, :]) * self.inv_xi_sq
        out = np.empty(v.shape, complex)
        out[..., 0, :, :] = v[..., 0, :, :] - self.xi[0] * dot
        out[..., 1, :, :] = v[..., 1, :, :] - self.xi[1] * dot
        out[..., 0, 0] = 0.0
        return out


def _check_grid(a: Grid, b: Grid) -> None:
    if a != b:
        raise ValueError(f"grid mismatch: {a} vs {b}")


class _FieldBase:
    grid: Grid
    coeffs: np.ndarray

    @property
    def mean_free(self) -> bool:
        return bool(np.all(self.coeffs[..., 0, 0] == 0))

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        c = self.coeffs
        scale = max(float(np.max(np.abs(c), initial=0.0)), 1e-300)
        return bool(np.max(np.abs(c - np.conj(self.grid.negate_index(c))), initial=0.0) <= rtol * scale)

    def _like(self, coeffs):
        return type(self)(self.grid, coeffs)

    def __add__(self, other):
        _check_grid(self.grid, other.grid)
        return self._like(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_grid(self.grid, other.grid)
        return self._like(self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return self._like(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.coeffs)


@dataclass(frozen=True, eq=False)
class SpectralField(_FieldBase):
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.coeffs)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, complex))

    @classmethod
    def single_mode(cls, grid: Grid, k: tuple[int, int], value: complex) -> "SpectralField":
        c = np.zeros(grid.shape, complex)
        c[k[0] % grid.n_modes, k[1] % grid.n_modes] = value
        return cls(grid, c)


@dataclass(frozen=True, eq=False)
class VectorField(_FieldBase):
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = self.coeffs
        if isinstance(c, (tuple, list)) and all(isinstance(f, SpectralField) for f in c):
            for f in c:
                _check_grid(self.grid, f.grid)
            c = np.stack([f.coeffs for f in c])
        c = _frozen(c)
        if c.shape != (2, *self.grid.shape):
            raise ValueError(f"coefficient shape {c.shape} != (2, {self.grid.shape})")
        object.__setattr__(self, "coeffs", c)

    @property
    def x(self) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[0])

    @property
    def y(self) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[1])

    @property
    def components(self) -> tuple[SpectralField, SpectralField]:
        return self.x, self.y

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((2, *grid.shape), complex))


@dataclass(frozen=True, eq=False)
class StatePair:
    """Velocity ``u`` and magnetic field ``b`` at one instant."""

    u: VectorField
    b: VectorField

    def __post_init__(self):
        _check_grid(self.u.grid, self.b.grid)

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def coeffs(self) -> np.ndarray:
        """Stacked coefficients, shape (2, 2, n, n): (field, component, kx, ky)."""
        return np.stack([self.u.coeffs, self.b.coeffs])

    @classmethod
    def from_coeffs(cls, grid: Grid, a: np.ndarray) -> "StatePair":
        return cls(VectorField(grid, a[0]), VectorField(grid, a[1]))

    @classmethod
    def zeros(cls, grid: Grid) -> "StatePair":
        return cls(VectorField.zeros(grid), VectorField.zeros(grid))

    @property
    def mean_free(self) -> bool:
        return self.u.mean_free and self.b.mean_free

    def divergence_residual(self) -> float:
        """max_k |xi.c_k| / max_k |c_k| over both fields."""
        g = self.grid
        a = self.coeffs
        d = np.abs(g.xi[0] * a[:, 0] + g.xi[1] * a[:, 1]).max()
        scale = np.abs(a).max()
        return 0.0 if scale == 0 else float(d / scale)

    def __add__(self, other):
        return StatePair(self.u + other.u, self.b + other.b)

    def __sub__(self, other):
        return StatePair(self.u - other.u, self.b - other.b)

    def __mul__(self, scalar):
        return StatePair(self.u * scalar, self.b * scalar)

    __rmul__ = __mul__


# ---------------------------------------------------------------- raw kernels


def project_coeffs(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Leray projector on a (..., 2, n, n) coefficient array."""
    xi = grid.xi
    dot = (xi[0] * v[..., 0, :, :] + xi[1] * v[..., 1, :, :]) * grid.inv_xi_sq
    out = np.empty(np.broadcast_shapes(v.shape), complex)
    out[..., 0, :, :] = v[..., 0, :, :] - xi[0] * dot
    out[..., 1, :, :] = v[..., 1, :, :] - xi[1] * dot
    out[..., 0, 0] = 0.0
    return out


def divergence_coeffs(grid: Grid, v: np.ndarray) -> np.ndarray:
    xi = grid.xi
    return 1j * (xi[0] * v[..., 0, :, :] + xi[1] * v[..., 1, :, :])


def physical(grid: Grid, c: np.ndarray) -> np.ndarray:
    """Real samples of (batched) Hermitian coefficient arrays."""
    n2 = grid.n_modes**2
    return sfft.ifft2(c, axes=(-2, -1)).real * n2


def spectral(grid: Grid, f: np.ndarray) -> np.ndarray:
    return sfft.fft2(f, axes=(-2, -1)) / grid.n_modes**2


def to_half(grid: Grid, a: np.ndarray) -> np.ndarray:
    """The ``ky >= 0`` half (rfft layout) of a full coefficient array."""
    return a[..., : grid.n_modes // 2 + 1]


def from_half(grid: Grid, half: np.ndarray) -> np.ndarray:
    """Rebuild a full Hermitian coefficient array from its ``ky >= 0`` half."""
    n = grid.n_modes
    h = n // 2 + 1
    full = np.empty((*half.shape[:-1], n), complex)
    full[..., :h] = half
    rows = (-np.arange(n)) % n
    full[..., h:] = np.conj(half[..., rows, :][..., n - np.arange(h, n)])
    return full


def nonlinear_half(grid: Grid, state: np.ndarray) -> np.ndarray:
    """:func:`nonlinear_coeffs` in the half (rfft) layout, shape (..., 2, 2, n, n/2+1)."""
    n = grid.n_modes
    H = grid.half
    ph = sfft.irfft2(state * H.dealias_mask, s=(n, n), axes=(-2, -1)) * n**2
    u0, u1 = ph[..., 0, 0, :, :], ph[..., 0, 1, :, :]
    b0, b1 = ph[..., 1, 0, :, :], ph[..., 1, 1, :, :]
    prods = np.stack(
        [u0 * u0 - b0 * b0, u0 * u1 - b0 * b1, u1 * u1 - b1 * b1, u0 * b1 - u1 * b0],
        axis=-3,
    )
    P = sfft.rfft2(prods, axes=(-2, -1)) * H.masked_norm
    ix, iy = H.ixi
    out = np.empty(state.shape, complex)
    div0 = ix * P[..., 0, :, :] + iy * P[..., 1, :, :]
    div1 = ix * P[..., 1, :, :] + iy * P[..., 2, :, :]
    # -P div: remove the longitudinal part xi (xi . d) / |xi|^2
    lon = (ix * div0 + iy * div1) * H.inv_xi_sq
    out[..., 0, 0, :, :] = -(div0 + ix * lon)
    out[..., 0, 1, :, :] = -(div1 + iy * lon)
    # in 2D the induction term is the planar curl of the scalar E = u x b
    E = P[..., 3, :, :]
    out[..., 1, 0, :, :] = iy * E
    out[..., 1, 1, :, :] = -ix * E
    return out


def nonlinear_coeffs(grid: Grid, state: np.ndarray) -> np.ndarray:
    """Dealiased MHD nonlinearity for state coefficients of shape (..., 2, 2, n, n).

    Returns (N_u, N_b) stacked the same way, with
    N_u = -P div(u(x)u - b(x)b) and N_b = -div(u(x)b) + div(b(x)u).
    Inputs are truncated to the 2/3 band before the products, so every kept
    output mode equals the exact lattice convolution.  The state must be
    Hermitian (real fields); only the ``ky >= 0`` half is read.
    """
    return from_half(grid, nonlinear_half(grid, to_half(grid, state)))


def advect_coeffs(grid: Grid, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Dealiased ``(v . grad) w`` for (2, n, n) coefficient arrays.

    Both inputs are truncated to the 2/3 band first, so paired with a
    band-limited test field the result is the exact lattice convolution.
    """
    m = grid.dealias_mask
    vp = physical(grid, v * m)
    grad = physical(grid, 1j * grid.xi[None, :] * (w * m)[:, None])  # [i, j] = d_j w_i
    prod = np.einsum("jxy,ijxy->ixy", vp, grad)
    return spectral(grid, prod) * m


def inner(grid: Grid, f: np.ndarray, g: np.ndarray) -> float:
    """Real L^2 inner product of two coefficient arrays of equal shape."""
    return float(grid.period**2 * np.sum((np.conj(f) * g).real))


# ---------------------------------------------------------------- public ops


def leray_project(v: VectorField) -> VectorField:
    return VectorField(v.grid, project_coeffs(v.grid, v.coeffs))


def divergence(v: VectorField) -> SpectralField:
    return SpectralField(v.grid, divergence_coeffs(v.grid, v.coeffs))


def nonlinear_rhs(s: StatePair) -> tuple[VectorField, VectorField]:
    out = nonlinear_coeffs(s.grid, s.coeffs)
    return VectorField(s.grid, out[0]), VectorField(s.grid, out[1])


def to_physical(f: SpectralField | VectorField) -> np.ndarray:
    """Samples on the uniform grid; real-valued when ``f`` is Hermitian."""
    z = sfft.ifft2(f.coeffs, axes=(-2, -1)) * f.grid.n_modes**2
    return z.real if f.is_hermitian() else z


def from_physical(grid: Grid, samples: np.ndarray) -> SpectralField | VectorField:
    samples = np.asarray(samples)
    if samples.shape == grid.shape:
        return SpectralField(grid, spectral(grid, samples))
    if samples.shape == (2, *grid.shape):
        return VectorField(grid, spectral(grid, samples))
    raise ValueError(f"sample shape {samples.shape} does not match grid {grid.shape}")


def taylor_green(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """``amplitude * (sin x cos y, -cos x sin y)`` (lowest wavenumber of the box)."""
    c = np.zeros((2, *grid.shape), complex)
    q = 0.25j * amplitude
    for kx in (1, -1):
        for ky in (1, -1):
            c[0, kx, ky] = -q * kx
            c[1, kx, ky] = q * ky
    return VectorField(grid, c)
