"""Command line entry point ``chi-mhd``.

    chi-mhd simulate   --config run.toml [--out DIR] [--preset NAME] [--continuation]
    chi-mhd picard     --config run.toml [--out DIR]
    chi-mhd verify     [lemmas|theorem1|theorem2|all] [--seeds A..B]
    chi-mhd weakstrong [--delta REAL]
    chi-mhd sweep      --param NAME --values v1,v2,...
    chi-mhd --manifest out/manifest.json      (rerun a recorded command)

Configuration files are flat TOML; command-line flags override file keys.
Exit codes: 0 success, 1 a check failed, 2 configuration error, 3 solver abort.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import verification as V
from .fields import PRESETS, preset_state
from .norms import NormReport
from .solver import NotContracting, SolverAbort, SolverConfig, continuation_solve, integrate, picard_solve
from .trajectory import Trajectory

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2, 3

SOLVER_KEYS = tuple(f.name for f in fields(SolverConfig))
DATA_DEFAULTS = {"preset": "taylor-green", "amplitude": 1.0, "seed": 0, "beta": 2.5}
RUN_DEFAULTS = {"out": "out", "seeds": "0..9", "suite": "lemmas", "delta": 1e-3, "param": None, "values": None, "continuation": False}
COMMANDS = ("simulate", "picard", "verify", "weakstrong", "sweep")


class ConfigError(ValueError):
    pass


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict
    outputs: list = field(default_factory=list)
    seeds: list = field(default_factory=list)
    timestamp: str = ""

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "seeds": self.seeds,
            "timestamp": self.timestamp,
        }


# ---------------------------------------------------------------- config


def parse_seeds(spec) -> list[int]:
    """``"A..B"`` (inclusive), ``"A,B,C"``, a single integer, or a list."""
    if isinstance(spec, (list, tuple)):
        return [int(s) for s in spec]
    if isinstance(spec, int):
        return [spec]
    s = str(spec).strip()
    try:
        if ".." in s:
            a, b = s.split("..", 1)
            a, b = int(a), int(b)
            if b < a:
                raise ConfigError(f"empty seed range {s!r}")
            return list(range(a, b + 1))
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse seeds {spec!r}; use A..B or a comma list") from None


def parse_values(spec) -> list[float]:
    if isinstance(spec, (list, tuple)):
        vals = spec
    else:
        vals = [v for v in str(spec).split(",") if v.strip()]
    try:
        out = [float(v) for v in vals]
    except ValueError:
        raise ConfigError(f"cannot parse sweep values {spec!r}") from None
    if not out:
        raise ConfigError("sweep needs at least one value")
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    for k, v in data.items():
        if isinstance(v, dict):
            raise ConfigError(f"config must be flat; section [{k}] is not allowed")
    return data


def resolve(command: str, file_cfg: dict, overrides: dict) -> dict:
    """Merge defaults, file keys and flags; validate; return the full config."""
    known = set(SOLVER_KEYS) | set(DATA_DEFAULTS) | set(RUN_DEFAULTS)
    unknown = sorted(set(file_cfg) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    merged = {**DATA_DEFAULTS, **RUN_DEFAULTS}
    if command == "weakstrong":
        merged["preset"] = "tg-plus-b"
    merged.update(file_cfg)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    solver = {k: merged.pop(k) for k in SOLVER_KEYS if k in merged}
    try:
        cfg = SolverConfig.from_mapping(solver)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if merged["preset"] not in PRESETS:
        raise ConfigError(f"unknown preset {merged['preset']!r}; choose from {list(PRESETS)}")
    try:
        merged["amplitude"] = float(merged["amplitude"])
        merged["beta"] = float(merged["beta"])
        merged["seed"] = int(merged["seed"])
        merged["delta"] = float(merged["delta"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad data parameter: {exc}") from None
    if not merged["beta"] > 1:
        raise ConfigError(f"beta must exceed 1, got {merged['beta']}")
    if not merged["delta"] >= 0:
        raise ConfigError(f"delta must be nonnegative, got {merged['delta']}")
    merged["seeds"] = parse_seeds(merged["seeds"])
    if command == "verify" and merged["suite"] not in V.SUITES:
        raise ConfigError(f"unknown suite {merged['suite']!r}; choose from {sorted(V.SUITES)}")
    if command == "sweep":
        if not merged["param"]:
            raise ConfigError("sweep needs --param")
        if merged["param"] not in SOLVER_KEYS + ("amplitude", "beta", "seed"):
            raise ConfigError(f"cannot sweep {merged['param']!r}")
        merged["values"] = parse_values(merged["values"] if merged["values"] is not None else "")
        for v in merged["values"]:
            _point_config(cfg, merged, v)
    merged["solver"] = cfg.to_json()
    return merged


def _point_config(cfg: SolverConfig, merged: dict, value: float):
    name = merged["param"]
    data = {k: merged[k] for k in ("preset", "amplitude", "seed", "beta")}
    if name in SOLVER_KEYS:
        v = int(value) if name in ("n_modes", "snapshot_stride", "picard_max_iters") else value
        try:
            return cfg.replace(**{name: v}), data
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"sweep value {name}={value}: {exc}") from None
    data[name] = int(value) if name == "seed" else value
    if name == "beta" and not value > 1:
        raise ConfigError("beta must exceed 1")
    return cfg, data


def workers() -> int:
    try:
        cap = int(os.environ.get("CHI_MHD_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


# ---------------------------------------------------------------- outputs


def _dump(obj) -> str:
    return json.dumps(V._jsonable(obj), indent=2, sort_keys=True) + "\n"


class Outputs:
    """Collects files and writes them only once the command has succeeded."""

    def __init__(self, out: Path):
        self.out = out
        self.files: dict[str, bytes] = {}

    def text(self, name: str, content: str) -> None:
        self.files[name] = content.encode()

    def traj(self, name: str, traj: Trajectory, meta: dict) -> None:
        import tempfile

        with tempfile.TemporaryDirectory() as tmp:
            j, b = traj.save(Path(tmp) / name, meta)
            self.files[j.name] = j.read_bytes()
            self.files[b.name] = b.read_bytes()

    def flush(self) -> list[str]:
        self.out.mkdir(parents=True, exist_ok=True)
        for name, data in self.files.items():
            (self.out / name).write_bytes(data)
        return sorted(self.files)


def _initial(cfg: SolverConfig, data: dict):
    return preset_state(data["preset"], cfg.grid, amplitude=data["amplitude"], seed=data["seed"], beta=data["beta"])


def _summary(traj: Trajectory, cfg: SolverConfig) -> dict:
    tn = traj.norms
    final = tn.report(len(tn) - 1)
    return {
        "T": tn.times[-1],
        "steps": len(tn) - 1,
        "final_norms": {"u": final.u, "b": final.b, "energy": final.energy},
        "initial_energy": tn.report(0).energy,
        "energy_residual": V.check_energy_equality(traj, cfg.mu, cfg.nu).meta.get("max_rel_residual", 0.0),
        "blowup_integral": V.blowup_integral(traj),
    }


# ---------------------------------------------------------------- commands


def cmd_simulate(r: dict, out: Outputs) -> int:
    cfg = SolverConfig.from_mapping(r["solver"])
    s0 = _initial(cfg, r)
    summary: dict = {"preset": r["preset"]}
    if r["continuation"]:
        traj, report = continuation_solve(cfg, s0)
        summary["continuation"] = report.to_json()
    else:
        traj = integrate(cfg, s0)
    summary.update(_summary(traj, cfg))
    out.text("norms.csv", traj.norms.to_csv(f"preset={r['preset']}"))
    out.traj("checkpoint", traj, {"preset": r["preset"]})
    out.text("summary.json", _dump(summary))
    return EXIT_OK


def cmd_picard(r: dict, out: Outputs) -> int:
    cfg = SolverConfig.from_mapping(r["solver"])
    s0 = _initial(cfg, r)
    traj, diag = picard_solve(cfg, s0)
    d = diag.to_json()
    d["preset"] = r["preset"]
    out.text("picard.json", _dump(d))
    out.text("norms.csv", traj.norms.to_csv(f"preset={r['preset']} picard fixed point"))
    return EXIT_OK if diag.converged else EXIT_CHECK


def cmd_verify(r: dict, out: Outputs) -> int:
    report = V.run_suite(r["suite"], r["seeds"], r["solver"]["n_modes"], workers())
    out.text("report.json", _dump(report))
    return EXIT_OK if report["pass"] else EXIT_CHECK


def cmd_weakstrong(r: dict, out: Outputs) -> int:
    cfg = SolverConfig.from_mapping(r["solver"])
    s0 = _initial(cfg, r)
    pert = V.suite_perturbation(r["seed"], cfg.n_modes, r["delta"])
    res = V.weak_strong_experiment(cfg, s0, pert)
    env = res.envelope
    buf = io.StringIO()
    buf.write(
        f"# period={cfg.period!r} n_modes={cfg.n_modes} delta={r['delta']!r} constant={res.meta['constant']!r}; "
        "lhs=||(w,g)||_L2^2 + min(mu,nu)/2 int ||grad(w,g)||^2; rhs=||(w0,g0)||_L2^2 exp(C int ||(u,b)||_chi0^2) (p=2)\n"
    )
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "lhs", "rhs", "blowup_integral"])
    for row in zip(env["t"], env["lhs"], env["rhs"], env["blowup_integral"]):
        w.writerow([repr(float(x)) for x in row])
    out.text("weakstrong.csv", buf.getvalue())
    out.text("weakstrong.json", _dump(res.to_json()))
    return EXIT_OK if res.passed else EXIT_CHECK


SWEEP_COLUMNS = ("value", "final_energy", "energy_residual", "blowup_integral", "final_chi_m1", "final_chi0")


def cmd_sweep(r: dict, out: Outputs) -> int:
    base = SolverConfig.from_mapping(r["solver"])
    points = [_point_config(base, r, v) for v in r["values"]]

    def run(point):
        cfg, data = point
        traj = integrate(cfg, _initial(cfg, data))
        return traj, _summary(traj, cfg)

    with ThreadPoolExecutor(workers()) as ex:
        results = list(ex.map(run, points))
    buf = io.StringIO()
    buf.write(f"# sweep over {r['param']}; chi columns pair sum (p=1) at the final time; energy=||(u,b)||_L2^2\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((r["param"],) + SWEEP_COLUMNS[1:])
    for i, (v, (traj, s)) in enumerate(zip(r["values"], results)):
        rep = NormReport(s["final_norms"]["u"], s["final_norms"]["b"])
        w.writerow([repr(float(x)) for x in (v, s["final_norms"]["energy"], s["energy_residual"], s["blowup_integral"], rep.pair("chi_m1"), rep.pair("chi0"))])
        out.text(f"run_{i:03d}.csv", traj.norms.to_csv(f"{r['param']}={v!r}"))
    out.text("sweep.csv", buf.getvalue())
    return EXIT_OK


HANDLERS = {"simulate": cmd_simulate, "picard": cmd_picard, "verify": cmd_verify, "weakstrong": cmd_weakstrong, "sweep": cmd_sweep}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chi-mhd", description="Pseudo-spectral 2D MHD lab with Fourier-Lebesgue (chi^s) norm checks.")
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("suite", nargs="?", help="verify suite: lemmas | theorem1 | theorem2 | all")
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--seeds")
    p.add_argument("--preset")
    p.add_argument("--continuation", action="store_true", default=None)
    p.add_argument("--delta", type=float)
    p.add_argument("--param")
    p.add_argument("--values")
    p.add_argument("--manifest", help="rerun the command recorded in a manifest")
    for k in SOLVER_KEYS:
        p.add_argument(f"--{k.replace('_', '-')}", dest=k, type=float if k not in ("n_modes", "snapshot_stride", "picard_max_iters") else int)
    return p


def _prepare(args) -> tuple[str, dict, dict]:
    if args.manifest:
        try:
            m = json.loads(Path(args.manifest).read_text())
            command, resolved = m["command"], m["config"]
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"unreadable manifest {args.manifest}: {exc}") from None
        if command not in HANDLERS:
            raise ConfigError(f"manifest names unknown command {command!r}")
        file_cfg = {k: v for k, v in resolved.items() if k != "solver"}
        file_cfg.update(resolved["solver"])
        if args.out:
            file_cfg["out"] = args.out
        return command, resolve(command, file_cfg, {}), {"manifest": str(args.manifest)}
    if args.command is None:
        raise ConfigError("a command is required")
    if args.suite is not None and args.command != "verify":
        raise ConfigError(f"unexpected positional argument {args.suite!r}")
    overrides = {k: getattr(args, k) for k in ("out", "seeds", "preset", "continuation", "delta", "param", "values", *SOLVER_KEYS)}
    overrides["suite"] = args.suite
    resolved = resolve(args.command, load_config(args.config), overrides)
    return args.command, resolved, {"config": args.config}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        command, resolved, inputs = _prepare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Outputs(Path(resolved["out"]))
    try:
        code = HANDLERS[command](resolved, out)
    except SolverAbort as exc:
        print(f"solver abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except NotContracting as exc:
        print(f"solver abort: NotContracting: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ValueError as exc:
        # e.g. a step above the stability bound for the chosen data
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    manifest = RunManifest(
        command=command,
        config=resolved,
        inputs=inputs,
        outputs=sorted(out.files),
        seeds=resolved["seeds"],
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    out.text("manifest.json", _dump(manifest.to_json()))
    out.flush()
    print(f"{command}: exit {code}; outputs in {out.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
