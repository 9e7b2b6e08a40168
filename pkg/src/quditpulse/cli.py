"""Command-line front end: reproducible experiment recipes.

Each subcommand takes a single JSON config (``--config``, either a file
path or ``preset:<name>`` for a shipped preset), optional ``--set
path.to.key=value`` overrides, and writes its artifacts plus a
``manifest.json`` into ``--out``.  Every run is pure given (config, seed):
re-running reproduces output files byte for byte.

Exit codes: 0 success, 2 config error, 3 non-converged optimization,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import NS_PER_US, basis_state, population_trace
from .gates import HadamardBounds, find_hadamard, plan_grover, state_after_hadamard
from .hamiltonian import DriveTone, SegmentSpec
from .sampling import (
    CycleConfig,
    detuning_map,
    grover_map_grids,
    map_to_csv,
    run_cycles,
)
from .spin_model import QuditSpec, default_tb_qudit
from .waveform import AwgConfig, export_waveform, synthesize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOT_CONVERGED = 3
EXIT_IO = 4


class ConfigError(Exception):
    """Invalid configuration; the message includes the offending JSON path."""


# ---------------------------------------------------------------------------
# config loading, overrides and validation

NUM = (int, float)

_GRID = object  # {"start","stop","num"|"step"} or explicit array; see parse_grid
_TONE = {"transition": int, "rabi_mhz": NUM, "detuning_mhz": NUM, "phase_rad": NUM}
_SEGMENT = {"tones": [_TONE], "duration_ns": NUM}
_BOUNDS = object  # number | {"min","max"} | per-transition list; parsed separately
_HADAMARD = {
    "n_levels": int,
    "initial_level": int,
    "target_levels": [int],
    "rabi_mhz": _BOUNDS,
    "detuning_mhz": _BOUNDS,
    "duration_ns": _BOUNDS,
    "phase_weight": NUM,
    "grid_points": int,
    "residual_threshold": NUM,
    "trace_grid_ns": _GRID,
}

SCHEMAS = {
    "rabi": {
        "transition": int,
        "rabi_mhz": NUM,
        "detuning_mhz": NUM,
        "t_grid_ns": _GRID,
        "detuning_grid_mhz": _GRID,
        "amplitude_grid": _GRID,
        "kappa_mhz_per_unit": NUM,
    },
    "hadamard": _HADAMARD,
    "grover": {
        "searched_level": int,
        "hadamard": _HADAMARD,
        "dynamics_grid_ns": _GRID,
        "map": {
            "span_mhz": NUM,
            "step_mhz": NUM,
            "duration": str,
            "vary_hadamard": bool,
            "shots_per_pixel": int,
            "detection_prob": NUM,
            "quasistatic_detuning_sigma_mhz": NUM,
        },
    },
    "sample": {
        "n_levels": int,
        "initial_level": int,
        "sequence": [_SEGMENT],
        "shots": int,
        "detection_prob": NUM,
        "quasistatic_detuning_sigma_mhz": NUM,
    },
    "waveform": {
        "qudit": {"n_levels": int, "transition_freqs_ghz": [NUM]},
        "sequence": [_SEGMENT],
        "sample_rate_gsps": NUM,
        "kappa_mhz_per_unit": NUM,
        "output_format": str,
    },
}


def _validate(cfg, schema, path="$"):
    """Reject unknown keys and wrong container/leaf types, by JSON path."""
    if isinstance(schema, dict):
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: expected an object")
        for key, value in cfg.items():
            if key not in schema:
                raise ConfigError(
                    f"{path}.{key}: unknown key (allowed: {sorted(schema)})"
                )
            _validate(value, schema[key], f"{path}.{key}")
    elif isinstance(schema, list):
        if not isinstance(cfg, list):
            raise ConfigError(f"{path}: expected an array")
        for i, item in enumerate(cfg):
            _validate(item, schema[0], f"{path}[{i}]")
    elif schema is object:
        pass
    elif schema is int:
        if isinstance(cfg, bool) or not isinstance(cfg, int):
            raise ConfigError(f"{path}: expected an integer")
    elif schema is bool:
        if not isinstance(cfg, bool):
            raise ConfigError(f"{path}: expected a boolean")
    elif schema is str:
        if not isinstance(cfg, str):
            raise ConfigError(f"{path}: expected a string")
    else:  # numeric leaf
        if isinstance(cfg, bool) or not isinstance(cfg, NUM):
            raise ConfigError(f"{path}: expected a number")


def load_config(source: str) -> dict:
    if source.startswith("preset:"):
        name = source[len("preset:"):]
        ref = resources.files("quditpulse").joinpath("presets", name + ".json")
        try:
            text = ref.read_text()
        except (FileNotFoundError, OSError) as e:
            raise ConfigError(f"unknown preset {name!r}: {e}") from e
    else:
        try:
            text = Path(source).read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {source}: {e}") from e
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {source} is not valid JSON: {e}") from e
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {source} must be a JSON object")
    return cfg


def apply_overrides(cfg: dict, overrides) -> dict:
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set needs path.to.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        keys = dotted.split(".")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        for k in keys[:-1]:
            node = node.setdefault(k, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--set {dotted}: {k} is not an object")
        node[keys[-1]] = value
    return cfg


def parse_grid(spec, path) -> np.ndarray:
    """Time/frequency grid: {"start","stop","num"|"step"} or explicit list."""
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if not isinstance(spec, dict):
        raise ConfigError(f"{path}: expected a grid object or array")
    extra = spec.keys() - {"start", "stop", "num", "step"}
    if extra:
        raise ConfigError(f"{path}: unknown grid keys {sorted(extra)}")
    missing = {"start", "stop"} - spec.keys()
    if missing:
        raise ConfigError(f"{path}: grid needs {sorted(missing)}")
    if "num" in spec:
        return np.linspace(spec["start"], spec["stop"], int(spec["num"]))
    if "step" in spec:
        step = float(spec["step"])
        if step <= 0:
            raise ConfigError(f"{path}.step: must be > 0")
        n = int(round((spec["stop"] - spec["start"]) / step))
        return spec["start"] + step * np.arange(n + 1)
    raise ConfigError(f"{path}: grid needs 'num' or 'step'")


def _parse_one_bound(v, path):
    if isinstance(v, NUM) and not isinstance(v, bool):
        return float(v)
    if isinstance(v, dict):
        extra = v.keys() - {"min", "max"}
        if extra or v.keys() != {"min", "max"}:
            raise ConfigError(f"{path}: interval needs exactly 'min' and 'max'")
        return (float(v["min"]), float(v["max"]))
    raise ConfigError(f"{path}: expected a number or {{min, max}} interval")


def parse_bounds(v, path):
    """number (pinned) | {min,max} (interval) | per-transition list of those."""
    if isinstance(v, list):
        return [_parse_one_bound(e, f"{path}[{i}]") for i, e in enumerate(v)]
    return _parse_one_bound(v, path)


def _segments(cfg_list, path) -> list[SegmentSpec]:
    try:
        return [SegmentSpec.from_json_dict(d) for d in cfg_list]
    except (KeyError, ValueError, TypeError) as e:
        raise ConfigError(f"{path}: {e}") from e


def _require(cfg, key, path="$"):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}: required key missing")
    return cfg[key]


# ---------------------------------------------------------------------------
# manifest

@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict
    seed: int
    version: str
    outputs: list
    duration_s: float


def write_manifest(out_dir: Path, manifest: RunManifest) -> Path:
    path = out_dir / "manifest.json"
    with open(path, "w") as f:
        json.dump(asdict(manifest), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _write_json(out_dir: Path, name: str, payload: dict) -> str:
    with open(out_dir / name, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return name


def _write_grid_csv(out_dir, name, t_ns, columns, col_labels) -> str:
    header = "t_ns," + ",".join("%.12g" % c for c in col_labels)
    rows = np.column_stack([t_ns, columns])
    np.savetxt(out_dir / name, rows, fmt="%.12g", delimiter=",",
               header=header, comments="")
    return name


# ---------------------------------------------------------------------------
# subcommands; each returns (output names, exit code)

def cmd_rabi(cfg, args, out_dir: Path):
    rabi = float(_require(cfg, "rabi_mhz"))
    transition = int(cfg.get("transition", 1))
    t_ns = parse_grid(_require(cfg, "t_grid_ns"), "$.t_grid_ns")
    outputs = []

    def p1(rabi_mhz, det_mhz):
        seg = SegmentSpec(
            tones=(DriveTone(transition=1, rabi_mhz=rabi_mhz,
                             detuning_mhz=det_mhz),),
            duration_ns=float(t_ns[-1]),
        )
        return population_trace(seg, basis_state(2, 0), t_ns)

    if "detuning_grid_mhz" in cfg:
        deltas = parse_grid(cfg["detuning_grid_mhz"], "$.detuning_grid_mhz")
        cols = np.column_stack([p1(rabi, d).populations[:, 1] for d in deltas])
        outputs.append(_write_grid_csv(out_dir, "rabi_map.csv", t_ns, cols, deltas))
    elif "amplitude_grid" in cfg:
        amps = parse_grid(cfg["amplitude_grid"], "$.amplitude_grid")
        kappa = float(cfg.get("kappa_mhz_per_unit", 10.0))
        cols = np.column_stack(
            [p1(kappa * a, float(cfg.get("detuning_mhz", 0.0))).populations[:, 1]
             for a in amps]
        )
        outputs.append(_write_grid_csv(out_dir, "rabi_map.csv", t_ns, cols, amps))
    else:
        trace = p1(rabi, float(cfg.get("detuning_mhz", 0.0)))
        trace.to_csv(out_dir / "trace.csv")
        outputs.append("trace.csv")
    # the transition index only labels which physical line is driven
    _write_json(out_dir, "rabi.json",
                {"transition": transition, "rabi_mhz": rabi,
                 "detuning_mhz": float(cfg.get("detuning_mhz", 0.0))})
    outputs.append("rabi.json")
    return outputs, EXIT_OK


def _run_hadamard(cfg, path="$"):
    n_levels = int(_require(cfg, "n_levels", path))
    bounds = HadamardBounds(
        rabi_mhz=parse_bounds(cfg.get("rabi_mhz", {"min": 0.5, "max": 8.0}),
                              f"{path}.rabi_mhz"),
        detuning_mhz=parse_bounds(
            cfg.get("detuning_mhz", {"min": -8.0, "max": 8.0}),
            f"{path}.detuning_mhz"),
        duration_ns=parse_bounds(
            cfg.get("duration_ns", {"min": 1.0, "max": 500.0}),
            f"{path}.duration_ns"),
    )
    try:
        return find_hadamard(
            n_levels=n_levels,
            initial_level=int(_require(cfg, "initial_level", path)),
            target_levels=_require(cfg, "target_levels", path),
            bounds=bounds,
            phase_weight=float(cfg.get("phase_weight", 1.0)),
            grid_points=int(cfg.get("grid_points", 8)),
            residual_threshold=float(cfg.get("residual_threshold", 1e-3)),
        ), n_levels
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e


def cmd_hadamard(cfg, args, out_dir: Path):
    solution, n_levels = _run_hadamard(cfg)
    outputs = [_write_json(out_dir, "hadamard.json", solution.to_json_dict())]
    grid = cfg.get(
        "trace_grid_ns",
        {"start": 0.0, "stop": 2.0 * solution.segment.duration_ns, "num": 501},
    )
    t_ns = parse_grid(grid, "$.trace_grid_ns")
    trace = population_trace(solution.segment, basis_state(n_levels,
                             solution.initial_level), t_ns)
    trace.to_csv(out_dir / "trace.csv")
    outputs.append("trace.csv")
    return outputs, EXIT_OK if solution.converged else EXIT_NOT_CONVERGED


def cmd_grover(cfg, args, out_dir: Path):
    searched = int(_require(cfg, "searched_level"))
    solution, n_levels = _run_hadamard(_require(cfg, "hadamard"), "$.hadamard")
    if not 0 <= searched < n_levels:
        raise ConfigError(f"$.searched_level: {searched} out of range")
    outputs = [_write_json(out_dir, "hadamard.json", solution.to_json_dict())]
    if not solution.converged:
        return outputs, EXIT_NOT_CONVERGED
    try:
        plan = plan_grover(searched, solution, n_levels)
    except ValueError as e:
        raise ConfigError(f"$.searched_level: {e}") from e
    outputs.append(_write_json(out_dir, "plan.json", plan.to_json_dict()))

    grid = cfg.get(
        "dynamics_grid_ns",
        {"start": 0.0, "stop": 3.0 * plan.predicted_half_period_ns, "num": 801},
    )
    t_ns = parse_grid(grid, "$.dynamics_grid_ns")
    psi_in = state_after_hadamard(solution, n_levels, plan.selection_segment.tones)
    trace = population_trace(plan.selection_segment, psi_in, t_ns)
    trace.to_csv(out_dir / "dynamics.csv")
    outputs.append("dynamics.csv")

    if "map" in cfg:
        mcfg = cfg["map"]
        d1, d2 = grover_map_grids(
            plan,
            span_mhz=float(mcfg.get("span_mhz", 4.0)),
            step_mhz=float(mcfg.get("step_mhz", 0.2)),
        )
        which = mcfg.get("duration", "measured")
        if which == "measured":
            duration = plan.measured_half_period_ns
        elif which == "predicted":
            duration = plan.predicted_half_period_ns
        else:
            raise ConfigError("$.map.duration: must be 'measured' or 'predicted'")
        shots = int(mcfg.get("shots_per_pixel", 0))
        mc = None
        if shots > 0:
            mc = CycleConfig(
                shots=shots,
                seed=args.seed,
                detection_prob=float(mcfg.get("detection_prob", 1.0)),
                quasistatic_detuning_sigma_mhz=float(
                    mcfg.get("quasistatic_detuning_sigma_mhz", 0.0)),
            )
        values = detuning_map(
            hadamard_segment=solution.segment,
            selection_template=plan.selection_segment,
            delta1_grid_mhz=d1,
            delta2_grid_mhz=d2,
            duration_ns=duration,
            searched_level=searched,
            initial_level=solution.initial_level,
            n_levels=n_levels,
            config=mc,
            vary_hadamard=bool(mcfg.get("vary_hadamard", True)),
            workers=args.workers,
        )
        map_to_csv(values, d1, d2, out_dir / "map.csv")
        outputs.append("map.csv")
    return outputs, EXIT_OK


def cmd_sample(cfg, args, out_dir: Path):
    n_levels = int(_require(cfg, "n_levels"))
    initial = int(_require(cfg, "initial_level"))
    if not 0 <= initial < n_levels:
        raise ConfigError(f"$.initial_level: {initial} out of range")
    sequence = _segments(_require(cfg, "sequence"), "$.sequence")
    try:
        cycle = CycleConfig(
            shots=int(cfg.get("shots", 1000)),
            seed=args.seed,
            detection_prob=float(cfg.get("detection_prob", 1.0)),
            quasistatic_detuning_sigma_mhz=float(
                cfg.get("quasistatic_detuning_sigma_mhz", 0.0)),
        )
        counts = run_cycles(sequence, initial, n_levels, cycle)
    except ValueError as e:
        raise ConfigError(f"$: {e}") from e
    if args.format == "json":
        name = _write_json(out_dir, "counts.json",
                           {"counts": counts.counts.tolist(),
                            "attempted": counts.attempted})
    else:
        counts.to_csv(out_dir / "counts.csv")
        name = "counts.csv"
    return [name], EXIT_OK


def cmd_waveform(cfg, args, out_dir: Path):
    if "qudit" in cfg:
        try:
            qudit = QuditSpec.from_json_dict(cfg["qudit"])
        except (KeyError, ValueError) as e:
            raise ConfigError(f"$.qudit: {e}") from e
    else:
        qudit = default_tb_qudit()
    sequence = _segments(_require(cfg, "sequence"), "$.sequence")
    awg = AwgConfig(
        sample_rate_gsps=float(cfg.get("sample_rate_gsps", 24.0)),
        kappa_mhz_per_unit=float(cfg.get("kappa_mhz_per_unit", 10.0)),
    )
    try:
        wave = synthesize(sequence, qudit, awg)
    except ValueError as e:
        raise ConfigError(f"$.sequence: {e}") from e
    fmt = cfg.get("output_format", "csv")
    if fmt not in ("csv", "f32le"):
        raise ConfigError("$.output_format: must be 'csv' or 'f32le'")
    name = "waveform.csv" if fmt == "csv" else "waveform.f32le"
    export_waveform(wave, out_dir / name, format=fmt)
    _write_json(out_dir, "waveform.json", {
        "sample_rate_gsps": awg.sample_rate_gsps,
        "kappa_mhz_per_unit": awg.kappa_mhz_per_unit,
        "n_samples": int(wave.samples.size),
        "duration_ns": wave.duration_ns,
        "segments": [s.to_json_dict() for s in sequence],
    })
    return [name, "waveform.json"], EXIT_OK


COMMANDS = {
    "rabi": cmd_rabi,
    "hadamard": cmd_hadamard,
    "grover": cmd_grover,
    "sample": cmd_sample,
    "waveform": cmd_waveform,
}

_CONFIG_HELP = {
    "rabi": (
        "keys: transition (int, label only), rabi_mhz (required), "
        "detuning_mhz, t_grid_ns (required grid), detuning_grid_mhz (grid, "
        "emits the 2D population-vs-(t, delta) map), amplitude_grid (grid of "
        "AWG amplitudes, Rabi = kappa * amplitude), kappa_mhz_per_unit. "
        "Grids are {start, stop, num|step} or explicit arrays."
    ),
    "hadamard": (
        "keys: n_levels, initial_level, target_levels (all required), "
        "rabi_mhz / detuning_mhz / duration_ns (number = pinned, "
        "{min, max} = search interval, or a per-transition list), "
        "phase_weight, grid_points, residual_threshold, trace_grid_ns."
    ),
    "grover": (
        "keys: searched_level (required), hadamard (object, same keys as the "
        "hadamard command), dynamics_grid_ns, map {span_mhz, step_mhz, "
        "duration: measured|predicted, vary_hadamard, shots_per_pixel, "
        "detection_prob, quasistatic_detuning_sigma_mhz}."
    ),
    "sample": (
        "keys: n_levels, initial_level, sequence (required list of "
        "{tones: [{transition, rabi_mhz, detuning_mhz, phase_rad}], "
        "duration_ns}), shots, detection_prob, "
        "quasistatic_detuning_sigma_mhz."
    ),
    "waveform": (
        "keys: sequence (required, as in sample), qudit {n_levels, "
        "transition_freqs_ghz}, sample_rate_gsps, kappa_mhz_per_unit, "
        "output_format: csv|f32le."
    ),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditpulse",
        description="Design and simulate multichromatic pulse sequences "
                    "on a multi-level spin qudit.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "rabi": "Two-level oscillation traces and detuning/power maps.",
        "hadamard": "Search pulse parameters for an equal superposition.",
        "grover": "Plan and simulate amplitude amplification of one level.",
        "sample": "Monte Carlo shot sampling of a pulse sequence.",
        "waveform": "Synthesize the lab-frame AWG sample stream.",
    }
    for name, desc in descriptions.items():
        p = sub.add_parser(
            name, help=desc,
            description=desc + "  Config " + _CONFIG_HELP[name],
        )
        p.add_argument("--config", required=True,
                       help="JSON config file, or preset:<name>")
        p.add_argument("--set", action="append", metavar="PATH=VALUE",
                       dest="overrides",
                       help="override a config key, e.g. --set rabi_mhz=3.1 "
                            "(value parsed as JSON; repeatable)")
        p.add_argument("--seed", type=int, default=0,
                       help="RNG seed for stochastic commands (default 0)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--workers", type=int,
                       default=max(1, os.cpu_count() or 1),
                       help="parallel workers for sweeps; results are "
                            "identical for any count")
        p.add_argument("--format", choices=("csv", "json"), default="csv",
                       help="tabular artifact format (default csv)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = apply_overrides(load_config(args.config), args.overrides)
        _validate(cfg, SCHEMAS[args.command])
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs, code = COMMANDS[args.command](cfg, args, out_dir)
        manifest = RunManifest(
            command=args.command,
            config=cfg,
            seed=args.seed,
            version=__version__,
            outputs=sorted(outputs),
            duration_s=round(time.perf_counter() - start, 6),
        )
        write_manifest(out_dir, manifest)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return EXIT_IO
    for name in outputs:
        print(name)
    if code == EXIT_NOT_CONVERGED:
        print("warning: optimization did not converge", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
