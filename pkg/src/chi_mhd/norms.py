"""Fourier-Lebesgue (chi^s) norms on the periodic lattice, their time-mixed versions, and a
radial quadrature for the continuum whole-plane examples.

The zero mode is excluded from every ``chi^s`` sum.  Vector fields use the
Euclidean magnitude of the complex coefficient pair at each wavevector.  For
a state ``(u, b)`` a pair norm with exponent ``p`` is
``(||u||^p + ||b||^p)^(1/p)``; ``p = 1`` is the plain sum.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate

from .spectral import Grid, SpectralField, StatePair, VectorField

#: chi^s exponents carried in every NormReport, keyed by their CSV label.
CHI_LABELS = {"chi_m1": -1.0, "chi_mhalf": -0.5, "chi0": 0.0, "chi1": 1.0}

CSV_COLUMNS = (
    "t", "l2_u", "l2_b", "h1_u", "h1_b",
    "chi_m1", "chi_mhalf", "chi0", "chi1", "energy", "blowup_integral",
)


def modulus(c: np.ndarray, vector: bool) -> np.ndarray:
    """Per-mode magnitude; ``vector`` contracts the component axis (-3)."""
    if vector:
        return np.sqrt(np.abs(c[..., 0, :, :]) ** 2 + np.abs(c[..., 1, :, :]) ** 2)
    return np.abs(c)


def _field_modulus(f: SpectralField | VectorField) -> np.ndarray:
    return modulus(f.coeffs, isinstance(f, VectorField))


def weighted_sum(grid: Grid, mod: np.ndarray, s: float) -> np.ndarray:
    """``sum_{k != 0} |xi_k|^s mod_k`` over the last two axes."""
    return np.sum(grid.weight(s) * mod, axis=(-2, -1))


def chi_norm(f: SpectralField | VectorField, s: float) -> float:
    if s < 0 and not f.mean_free:
        raise ValueError("chi^s with s < 0 needs a mean-free field")
    return float(weighted_sum(f.grid, _field_modulus(f), s))


def pair_combine(a: float, b: float, p: float) -> float:
    if not p > 0:
        raise ValueError(f"pair exponent must be positive, got {p}")
    if math.isinf(p):
        return max(a, b)
    return (a**p + b**p) ** (1.0 / p)


def pair_norm(st: StatePair, s: float, p: float = 1.0) -> float:
    if not p > 0:
        raise ValueError(f"pair exponent must be positive, got {p}")
    return pair_combine(chi_norm(st.u, s), chi_norm(st.b, s), p)


def l2_norm(f: SpectralField | VectorField) -> float:
    return float(f.grid.period * np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))


def h1_seminorm(f: SpectralField | VectorField) -> float:
    g = f.grid
    return float(g.period * np.sqrt(np.sum(g.xi_sq * np.abs(f.coeffs) ** 2)))


def energy(st: StatePair) -> float:
    """``||(u, b)||_{L^2}^2``."""
    return l2_norm(st.u) ** 2 + l2_norm(st.b) ** 2


@dataclass(frozen=True)
class NormReport:
    """Norms of one state. ``u`` and ``b`` map labels (``CHI_LABELS`` keys,
    ``"l2"``, ``"h1"``) to values."""

    u: dict
    b: dict

    @classmethod
    def from_state(cls, st: StatePair) -> "NormReport":
        def one(f):
            d = {k: chi_norm(f, s) for k, s in CHI_LABELS.items()}
            d["l2"] = l2_norm(f)
            d["h1"] = h1_seminorm(f)
            return d

        return cls(one(st.u), one(st.b))

    def pair(self, label: str, p: float = 1.0) -> float:
        return pair_combine(self.u[label], self.b[label], p)

    @property
    def energy(self) -> float:
        return self.u["l2"] ** 2 + self.b["l2"] ** 2


class TrajectoryNorms:
    """Running norm series of a trajectory.

    Tracks, per field and per tracked ``s``, the chi^s series, the L^2 and
    H^1 series, and the per-mode running supremum of the coefficient
    magnitude (which serves every tilde norm, as ``|xi|^s`` is constant in
    time).  Fields are ``("u", "b")`` for state trajectories and ``("f",)``
    otherwise.
    """

    def __init__(
        self,
        grid: Grid,
        fields: Sequence[str] = ("u", "b"),
        s_values: Iterable[float] = (),
        layout: str = "full",
    ):
        if layout not in ("full", "half"):
            raise ValueError(f"unknown layout {layout!r}")
        self.grid = grid
        self.layout = layout
        self.fields = tuple(fields)
        self.s_values = tuple(sorted(set(CHI_LABELS.values()) | {float(s) for s in s_values}))
        self._weights = np.stack([self.mode_weight(s) for s in self.s_values])
        if layout == "half":
            self._mult = grid.half.multiplicity
            self._xi_sq_mult = grid.half.xi_sq * self._mult
        else:
            self._mult = None
            self._xi_sq_mult = grid.xi_sq
        self.times: list[float] = []
        self._chi = {f: [] for f in self.fields}
        self._l2 = {f: [] for f in self.fields}
        self._h1 = {f: [] for f in self.fields}
        shape = self._weights.shape[1:]
        self.sup_modulus = {f: np.zeros(shape) for f in self.fields}

    def mode_weight(self, s: float) -> np.ndarray:
        """``|xi|^s`` in this accumulator's layout (half layout folds in multiplicity)."""
        return self.grid.half.weight(s) if self.layout == "half" else self.grid.weight(s)

    def __len__(self) -> int:
        return len(self.times)

    def append_coeffs(self, t: float, coeffs: Sequence[np.ndarray], vector: bool) -> None:
        """Record one snapshot given one coefficient array per field."""
        if self.times and not t > self.times[-1]:
            raise ValueError(f"time {t} does not increase past {self.times[-1]}")
        L = self.grid.period
        for name, c in zip(self.fields, coeffs, strict=True):
            mod = modulus(c, vector)
            self._chi[name].append(np.sum(self._weights * mod, axis=(-2, -1)))
            sq = mod**2
            l2sq = np.sum(sq) if self._mult is None else np.sum(self._mult * sq)
            self._l2[name].append(L * math.sqrt(float(l2sq)))
            self._h1[name].append(L * math.sqrt(float(np.sum(self._xi_sq_mult * sq))))
            np.maximum(self.sup_modulus[name], mod, out=self.sup_modulus[name])
        self.times.append(float(t))

    def append(self, t: float, obj: StatePair | SpectralField | VectorField) -> None:
        if isinstance(obj, StatePair):
            self.append_coeffs(t, (obj.u.coeffs, obj.b.coeffs), vector=True)
        else:
            self.append_coeffs(t, (obj.coeffs,), vector=isinstance(obj, VectorField))

    # -- series access

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    def chi_series(self, s: float, name: str) -> np.ndarray:
        try:
            j = self.s_values.index(float(s))
        except ValueError:
            raise KeyError(f"chi^{s} is not tracked (tracked: {self.s_values})") from None
        return np.array([row[j] for row in self._chi[name]])

    def l2_series(self, name: str) -> np.ndarray:
        return np.asarray(self._l2[name])

    def h1_series(self, name: str) -> np.ndarray:
        return np.asarray(self._h1[name])

    def pair_series(self, s: float, p: float = 1.0) -> np.ndarray:
        """Pointwise-in-time pair chi^s norm with exponent ``p``."""
        parts = [self.chi_series(s, f) for f in self.fields]
        if math.isinf(p):
            return np.max(parts, axis=0)
        return np.sum([x**p for x in parts], axis=0) ** (1.0 / p)

    def energy_series(self) -> np.ndarray:
        return np.sum([self.l2_series(f) ** 2 for f in self.fields], axis=0)

    def cumulative(self, values: np.ndarray) -> np.ndarray:
        """Composite-trapezoid running integral of a series over ``t``."""
        return integrate.cumulative_trapezoid(values, self.t, initial=0.0)

    def integral_series(self, p: float, s: float) -> np.ndarray:
        """Running ``int_0^t ||(fields)||^p_{chi^s}`` with the sum-of-p-th-powers convention."""
        return self.cumulative(np.sum([self.chi_series(s, f) ** p for f in self.fields], axis=0))

    def blowup_series(self) -> np.ndarray:
        """Running ``int_0^t ||(u, b)||_{chi^0}^2``."""
        return self.integral_series(2.0, 0.0)

    def report(self, m: int) -> NormReport:
        def one(f):
            d = {k: self._chi[f][m][self.s_values.index(s)] for k, s in CHI_LABELS.items()}
            d["l2"] = self._l2[f][m]
            d["h1"] = self._h1[f][m]
            return {k: float(v) for k, v in d.items()}

        if len(self.fields) == 2:
            return NormReport(one(self.fields[0]), one(self.fields[1]))
        zero = {k: 0.0 for k in (*CHI_LABELS, "l2", "h1")}
        return NormReport(one(self.fields[0]), zero)

    def to_csv(self, header_note: str = "") -> str:
        """One row per snapshot, columns ``CSV_COLUMNS``; pair chi columns use p = 1."""
        buf = io.StringIO()
        note = f"# period={self.grid.period!r} n_modes={self.grid.n_modes} chi columns: pair sum (p=1), zero mode excluded; energy=||(u,b)||_L2^2; blowup_integral=int ||(u,b)||_chi0^2 dt (p=2)"
        buf.write(note + (f"; {header_note}" if header_note else "") + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        blow = self.blowup_series() if len(self) > 1 else np.zeros(len(self))
        en = self.energy_series()
        for m, t in enumerate(self.times):
            r = self.report(m)
            row = [t, r.u["l2"], r.b["l2"], r.u["h1"], r.b["h1"]]
            row += [r.pair(k, 1.0) for k in CHI_LABELS]
            row += [en[m], blow[m]]
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()


def _resolve_field(tn: TrajectoryNorms, which: str | None) -> tuple[str, ...]:
    if which in (None, "pair"):
        return tn.fields
    if which not in tn.fields:
        raise KeyError(f"unknown field {which!r}")
    return (which,)


def time_lp_norm(tn: TrajectoryNorms, p: float, s: float, which: str | None = None) -> float:
    """``(int ||f(t)||^p_{chi^s} dt)^{1/p}`` by composite trapezoid.

    Over several fields the p-th powers add (so the result is the pair norm
    with exponent ``p``); for ``p = inf`` the result is the max over
    snapshots of the pointwise field sum.
    """
    if len(tn) == 0:
        raise ValueError("empty trajectory")
    if not p >= 1:
        raise ValueError(f"p must lie in [1, inf], got {p}")
    names = _resolve_field(tn, which)
    series = [tn.chi_series(s, f) for f in names]
    if math.isinf(p):
        return float(np.max(np.sum(series, axis=0)))
    if len(tn) < 2:
        raise ValueError("finite p needs at least two snapshots")
    total = sum(float(integrate.trapezoid(x**p, tn.t)) for x in series)
    return total ** (1.0 / p)


def tilde_linf_norm(tn: TrajectoryNorms, s: float, which: str | None = None) -> float:
    """``sum_k |xi_k|^s sup_m |c(t_m, k)|``, summed over the selected fields."""
    if len(tn) == 0:
        raise ValueError("empty trajectory")
    w = tn.mode_weight(s)
    return float(sum(np.sum(w * tn.sup_modulus[f]) for f in _resolve_field(tn, which)))


class DivergentIntegral(ArithmeticError):
    pass


def continuum_radial_chi_norm(
    profile: Callable[[float], float],
    s: float,
    r_min: float,
    r_max: float = math.inf,
    *,
    tail_tol: float = 1e-10,
    max_doublings: int = 200,
) -> float:
    """``2 pi int_{r_min}^{r_max} r^{s+1} phi(r) dr`` for a radial profile on R^2.

    For ``r_max = inf`` the range is extended by doubling; the remaining tail
    is extrapolated geometrically from the last two pieces and the loop stops
    once that estimate falls below ``tail_tol``.  Pieces that fail to shrink
    signal divergence.
    """
    if r_min < 0:
        raise ValueError("r_min must be nonnegative")

    def f(r):
        return r ** (s + 1) * profile(r)

    def piece(a, b):
        v, _ = integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=200)
        return v

    if math.isfinite(r_max):
        if not r_max > r_min:
            raise ValueError("need r_max > r_min")
        return 2 * math.pi * piece(r_min, r_max)

    R = max(2.0 * r_min, 1.0)
    total = piece(r_min, R)
    prev = None
    stalled = 0
    for _ in range(max_doublings):
        p = piece(R, 2 * R)
        total += p
        R *= 2
        if not math.isfinite(total):
            raise DivergentIntegral("integral overflowed")
        if prev is not None and abs(prev) > 0:
            q = abs(p) / abs(prev)
            if q >= 0.999:
                stalled += 1
                if stalled >= 3:
                    raise DivergentIntegral(f"tail pieces do not decay (ratio {q:.4f} at r={R:g})")
                prev = p
                continue
            stalled = 0
            tail = p * q / (1.0 - q)
            if abs(tail) < tail_tol:
                return 2 * math.pi * (total + tail)
        elif p == 0.0 and prev == 0.0:
            return 2 * math.pi * total
        prev = p
    raise DivergentIntegral(f"tail did not fall below {tail_tol} by r={R:g}")
