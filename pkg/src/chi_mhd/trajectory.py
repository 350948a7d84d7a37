"""Time-indexed field sequences and their portable checkpoint format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .norms import TrajectoryNorms
from .spectral import Grid, SpectralField, StatePair, VectorField

CHECKPOINT_FORMAT = "chi-mhd-checkpoint/1"


def _kind(obj) -> str:
    if isinstance(obj, StatePair):
        return "state"
    if isinstance(obj, VectorField):
        return "vector"
    if isinstance(obj, SpectralField):
        return "scalar"
    raise TypeError(f"unsupported snapshot type {type(obj).__name__}")


def _wrap(grid: Grid, kind: str, c: np.ndarray):
    if kind == "state":
        return StatePair.from_coeffs(grid, c)
    if kind == "vector":
        return VectorField(grid, c)
    return SpectralField(grid, c)


@dataclass
class Trajectory:
    """Snapshots at strictly increasing times plus their norm accumulator.

    ``norms`` may be sampled more finely than ``snapshots`` (the time stepper
    records norms every step but stores fields every ``snapshot_stride``).
    """

    grid: Grid
    times: list[float] = field(default_factory=list)
    snapshots: list[Any] = field(default_factory=list)
    norms: TrajectoryNorms | None = None
    config: Any = None
    kind: str | None = None

    @classmethod
    def from_snapshots(cls, times: Sequence[float], snapshots: Sequence, s_values=(), config=None) -> "Trajectory":
        if not snapshots:
            raise ValueError("empty trajectory")
        grid = snapshots[0].grid
        kind = _kind(snapshots[0])
        tr = cls(grid, config=config, kind=kind)
        tr.norms = TrajectoryNorms(grid, ("u", "b") if kind == "state" else ("f",), s_values)
        for t, s in zip(times, snapshots, strict=True):
            tr.append(t, s)
        return tr

    @classmethod
    def from_coeffs(cls, grid: Grid, times: Sequence[float], coeffs: np.ndarray, kind: str, s_values=(), config=None) -> "Trajectory":
        """Build from a stacked coefficient array whose leading axis is time."""
        tr = cls(grid, config=config, kind=kind)
        tr.norms = TrajectoryNorms(grid, ("u", "b") if kind == "state" else ("f",), s_values)
        for t, c in zip(times, coeffs, strict=True):
            tr.append(t, _wrap(grid, kind, c))
        return tr

    def append(self, t: float, snap, record_norms: bool = True) -> None:
        if self.kind is None:
            self.kind = _kind(snap)
        if self.times and not t > self.times[-1]:
            raise ValueError(f"snapshot time {t} does not increase past {self.times[-1]}")
        self.times.append(float(t))
        self.snapshots.append(snap)
        if record_norms and self.norms is not None:
            self.norms.append(t, snap)

    def __len__(self) -> int:
        return len(self.snapshots)

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times)

    @property
    def final(self):
        return self.snapshots[-1]

    def coeff_stack(self) -> np.ndarray:
        """Snapshot coefficients stacked along a leading time axis."""
        return np.stack([s.coeffs for s in self.snapshots])

    def at(self, t: float, atol: float = 1e-12):
        j = int(np.argmin(np.abs(self.t - t)))
        if abs(self.times[j] - t) > atol:
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[j]

    # -- checkpoints: JSON header + flat little-endian complex128 array

    def save(self, stem: str | Path, meta: dict | None = None) -> tuple[Path, Path]:
        stem = Path(stem)
        data = np.ascontiguousarray(self.coeff_stack(), dtype="<c16")
        header = {
            "format": CHECKPOINT_FORMAT,
            "grid": self.grid.to_json(),
            "kind": self.kind,
            "times": [float(t) for t in self.times],
            "shape": list(data.shape),
            "dtype": "<c16",
            "data_file": stem.name + ".bin",
            "config": _config_json(self.config),
            "meta": meta or {},
        }
        jpath, bpath = stem.with_suffix(".json"), stem.parent / (stem.name + ".bin")
        bpath.write_bytes(data.tobytes())
        jpath.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
        return jpath, bpath

    @classmethod
    def load(cls, header_path: str | Path) -> "Trajectory":
        header_path = Path(header_path)
        h = json.loads(header_path.read_text())
        if h.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"unrecognised checkpoint format {h.get('format')!r}")
        raw = (header_path.parent / h["data_file"]).read_bytes()
        data = np.frombuffer(raw, dtype=h["dtype"]).reshape(h["shape"])
        grid = Grid(int(h["grid"]["n_modes"]), float(h["grid"]["period"]))
        return cls.from_coeffs(grid, h["times"], data.astype(complex), h["kind"])


def _config_json(cfg) -> dict | None:
    if cfg is None:
        return None
    if hasattr(cfg, "to_json"):
        return cfg.to_json()
    return dict(cfg)
