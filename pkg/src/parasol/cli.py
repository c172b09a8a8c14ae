"""Configuration ingestion, run orchestration, and bit-stable artifact output.

Configs are JSON with four sections (problem, solver, experiment, output);
unknown keys are rejected with the offending key path.  Every run writes a
manifest carrying the fully resolved config and its hash, and CSV floats are
emitted with 17 significant digits so identical config + seed reproduces
byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import process_axioms_check, pullback_sweep
from .basis import Basis, SpectralField
from .clock import roundtrip_check
from .errors import ConfigError
from .ordering import barrier_check, compare_ordered, sandwich_scan
from .problems import (
    Diffusion,
    Forcing,
    ProblemSpec,
    Reaction,
    SpatialFunctional,
    certify_spec,
    check_modulus,
    monotonicity_shift,
    phi_closed_form,
    solve_phi,
)
from .solver import mild_solve

EXPERIMENTS = ("solve", "roundtrip", "compare", "attractor", "check", "phi")

_DEFAULTS = {
    "problem": {
        "lambda": 5.0,
        "sigma": 0.0,
        "f": {"kind": "cubic"},
        "a": {"kind": "saturating", "m": 1.0, "M": 2.0},
        "l": {"kind": "l2_norm_sq"},
        "h": {"kind": "sine", "amplitude": 0.2, "frequency": 1.0},
    },
    "solver": {"method": "march", "dt": 1e-3, "tol": 1e-9, "t_end": 1.0, "n_modes": 64},
    "experiment": {"name": "solve"},
    "output": {"directory": "out", "format": "csv", "seed": 0, "columns": "values"},
}

_ALLOWED = {
    "problem": {"lambda", "sigma", "f", "a", "l", "h"},
    "solver": {"method", "dt", "tol", "t_end", "n_modes"},
    "output": {"directory", "format", "seed", "columns"},
}

# experiment-specific keys, beyond "name"
_EXPERIMENT_KEYS = {
    "solve": {"w0"},
    "roundtrip": {"w0"},
    "compare": {"w0", "offset_fraction", "t_end", "swapped"},
    "attractor": {"target_t", "radius", "n_samples", "n_sigma"},
    "check": {"scan_radius", "grid_points", "modulus_p", "modulus_beta"},
    "phi": {"c", "C1"},
}


@dataclass
class RunConfig:
    """Validated, fully resolved run configuration."""

    problem: dict
    solver: dict
    experiment: dict
    output: dict

    def to_dict(self):
        return {
            "problem": self.problem,
            "solver": self.solver,
            "experiment": self.experiment,
            "output": self.output,
        }

    def build_spec(self) -> ProblemSpec:
        p = self.problem
        make = lambda section, cls: cls(
            kind=section["kind"],
            params={k: v for k, v in section.items() if k != "kind"},
        )
        return ProblemSpec(
            lam=float(p["lambda"]),
            sigma=float(p["sigma"]),
            f=make(p["f"], Reaction),
            a=make(p["a"], Diffusion),
            l=SpatialFunctional(p["l"]["kind"]),
            h=make(p["h"], Forcing),
        )

    def build_basis(self) -> Basis:
        return Basis(int(self.solver["n_modes"]))


def _merge_section(name, given, defaults, allowed):
    out = dict(defaults)
    for key, val in given.items():
        if key not in allowed:
            raise ConfigError(f"{name}.{key}", "unknown key")
        out[key] = val
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON config, filling documented defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno}", f"not valid JSON: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in raw:
        if key not in _DEFAULTS:
            raise ConfigError(key, "unknown section")

    problem = _merge_section("problem", raw.get("problem", {}), _DEFAULTS["problem"], _ALLOWED["problem"])
    solver = _merge_section("solver", raw.get("solver", {}), _DEFAULTS["solver"], _ALLOWED["solver"])
    output = _merge_section("output", raw.get("output", {}), _DEFAULTS["output"], _ALLOWED["output"])

    exp_raw = dict(raw.get("experiment", {}))
    name = exp_raw.pop("name", _DEFAULTS["experiment"]["name"])
    if name not in EXPERIMENTS:
        raise ConfigError("experiment.name", f"must be one of {EXPERIMENTS}")
    for key in exp_raw:
        if key not in _EXPERIMENT_KEYS[name]:
            raise ConfigError(f"experiment.{key}", f"unknown key for experiment {name!r}")
    experiment = {"name": name, **exp_raw}

    if solver["method"] not in ("march", "picard"):
        raise ConfigError("solver.method", "must be 'march' or 'picard'")
    for key, lower in (("dt", 0.0), ("tol", 0.0)):
        if not float(solver[key]) > lower:
            raise ConfigError(f"solver.{key}", "must be positive")
    if int(solver["n_modes"]) < 1:
        raise ConfigError("solver.n_modes", "must be a positive integer")
    if output["format"] not in ("csv", "json", "both"):
        raise ConfigError("output.format", "must be csv, json or both")
    if output["columns"] not in ("values", "coeffs"):
        raise ConfigError("output.columns", "must be values or coeffs")

    cfg = RunConfig(problem=problem, solver=solver, experiment=experiment, output=output)
    try:
        cfg.build_spec()   # ProblemSpec revalidates the physical parameters
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("problem", str(exc))
    return cfg


def emit_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


# -- artifact writers ----------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(path: Path, traj, columns: str = "values"):
    """CSV schema: t (or tau), alpha, then node values or coefficients."""
    n = traj.coeffs.shape[1]
    label = "v" if columns == "values" else "c"
    header = [traj.time_variable, "alpha"] + [f"{label}{k:03d}" for k in range(1, n + 1)]
    data = traj.values_matrix() if columns == "values" else traj.coeffs
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(len(traj)):
            row = [_fmt(traj.times[i]), _fmt(traj.alpha[i])] + [_fmt(v) for v in data[i]]
            fh.write(",".join(row) + "\n")


def _write_json(path: Path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _initial_state(cfg: RunConfig, basis: Basis, spec: ProblemSpec) -> SpectralField:
    w0_cfg = cfg.experiment.get("w0", {"kind": "eigenmode", "mode": 1, "amplitude": 0.5})
    kind = w0_cfg.get("kind", "eigenmode")
    if kind == "eigenmode":
        return basis.eigenmode(int(w0_cfg.get("mode", 1)), float(w0_cfg.get("amplitude", 0.5)))
    if kind == "coeffs":
        c = np.zeros(basis.n_modes)
        vals = np.asarray(w0_cfg["values"], dtype=float)
        c[: len(vals)] = vals[: basis.n_modes]
        return basis.field(c)
    if kind == "phi_fraction":
        cert = certify_spec(spec)
        phi = phi_closed_form(cert.nu * cert.C0, cert.C1)
        return basis.from_values(float(w0_cfg.get("fraction", 0.5)) * phi(basis.collocation_nodes))
    raise ConfigError("experiment.w0.kind", f"unknown initial state kind {kind!r}")


# -- experiments -----------------------------------------------------------------


def _run_solve(cfg, spec, basis, outdir):
    w0 = _initial_state(cfg, basis, spec)
    traj = mild_solve(
        w0, spec, float(cfg.solver["t_end"]),
        method=cfg.solver["method"], dt=float(cfg.solver["dt"]), tol=float(cfg.solver["tol"]),
    )
    files = {}
    if cfg.output["format"] in ("csv", "both"):
        write_trajectory_csv(outdir / "trajectory.csv", traj, cfg.output["columns"])
        files["trajectory"] = "trajectory.csv"
    summary = {
        "status": traj.status,
        "blowup_time": traj.blowup_time,
        "n_nodes": len(traj),
        "final_time": float(traj.times[-1]),
        "norms_h_half": [float(v) for v in traj.norms(0.5)[:: max(1, len(traj) // 200)]],
    }
    _write_json(outdir / "summary.json", summary)
    files["summary"] = "summary.json"
    return files


def _run_roundtrip(cfg, spec, basis, outdir):
    w0 = _initial_state(cfg, basis, spec)
    report = roundtrip_check(
        w0, spec, float(cfg.solver["t_end"]),
        dt=float(cfg.solver["dt"]), method=cfg.solver["method"],
    )
    _write_json(outdir / "roundtrip.json", report.to_dict())
    return {"report": "roundtrip.json"}


def _run_compare(cfg, spec, basis, outdir):
    exp = cfg.experiment
    cert = certify_spec(spec)
    phi = phi_closed_form(cert.nu * cert.C0, cert.C1)
    phi_field = basis.from_values(phi(basis.collocation_nodes))
    w0_mid = _initial_state(cfg, basis, spec)
    frac = float(exp.get("offset_fraction", 0.1))
    report = compare_ordered(
        spec,
        w0_mid - frac * phi_field,
        w0_mid,
        w0_mid + frac * phi_field,
        t_end=float(exp.get("t_end", cfg.solver["t_end"])),
        dt=float(cfg.solver["dt"]),
        swapped=bool(exp.get("swapped", False)),
    )
    _write_json(outdir / "comparison.json", report.to_dict())
    files = {"report": "comparison.json"}
    if cfg.output["format"] in ("csv", "both"):
        mid = report.runs["middle"]
        lowv = report.runs["lower"].values_matrix()
        midv = mid.values_matrix()
        highv = report.runs["upper"].values_matrix()
        n = min(len(lowv), len(midv), len(highv))
        with open(outdir / "margins.csv", "w") as fh:
            fh.write("t,min_mid_minus_low,min_high_minus_mid\n")
            for i in range(n):
                fh.write(
                    f"{_fmt(mid.times[i])},{_fmt((midv[i]-lowv[i]).min())},{_fmt((highv[i]-midv[i]).min())}\n"
                )
        files["margins"] = "margins.csv"
    return files


def _run_attractor(cfg, spec, basis, outdir):
    exp = cfg.experiment
    cert = certify_spec(spec)
    target = float(exp.get("target_t", 0.0))
    n_sigma = int(exp.get("n_sigma", 9))
    report = pullback_sweep(
        spec, cert, target,
        radius=float(exp.get("radius", 1.0)),
        n_samples=int(exp.get("n_samples", 64)),
        sigma_schedule=[target - 2.0**j for j in range(n_sigma)],
        basis=basis,
        dt=float(cfg.solver["dt"]),
        seed=int(cfg.output["seed"]),
    )
    _write_json(outdir / "attractor.json", report.to_dict())
    files = {"report": "attractor.json"}
    if cfg.output["format"] in ("csv", "both"):
        for j, snap in enumerate(report.snapshots):
            path = outdir / f"snapshot_{j:02d}.csv"
            with open(path, "w") as fh:
                fh.write(",".join(f"c{k:03d}" for k in range(1, snap.shape[1] + 1)) + "\n")
                for row in snap:
                    fh.write(",".join(_fmt(v) for v in row) + "\n")
        files["snapshots"] = f"snapshot_00.csv .. snapshot_{len(report.snapshots)-1:02d}.csv"
    return files


def _run_check(cfg, spec, basis, outdir):
    exp = cfg.experiment
    cert = certify_spec(
        spec,
        scan_radius=float(exp.get("scan_radius", 10.0)),
        grid_points=int(exp.get("grid_points", 100001)),
    )
    p = float(exp.get("modulus_p", 2.0))
    beta = float(exp.get("modulus_beta", 0.25))
    converged, estimate = check_modulus(p, beta)
    shift = monotonicity_shift(spec.f, 2.0)
    payload = {
        "structural": cert.to_dict(),
        "modulus": {"p": p, "beta": beta, "converged": converged, "estimate": estimate},
        "monotonicity_shift_r2": shift,
    }
    _write_json(outdir / "check.json", payload)
    return {"report": "check.json"}


def _run_phi(cfg, spec, basis, outdir):
    exp = cfg.experiment
    if "c" in exp:
        c, C1 = float(exp["c"]), float(exp.get("C1", 1.0))
    else:
        cert = certify_spec(spec)
        c, C1 = cert.nu * cert.C0, cert.C1
    spectral, closed = solve_phi(basis, c, C1)
    nodes = basis.collocation_nodes
    spec_vals = spectral.values()
    closed_vals = closed(nodes)
    files = {}
    if cfg.output["format"] in ("csv", "both"):
        with open(outdir / "phi.csv", "w") as fh:
            fh.write("x,phi_spectral,phi_closed_form\n")
            for xj, a_, b_ in zip(nodes, spec_vals, closed_vals):
                fh.write(f"{_fmt(xj)},{_fmt(a_)},{_fmt(b_)}\n")
        files["phi"] = "phi.csv"
    _write_json(outdir / "phi.json", {
        "c": c, "C1": C1,
        "midpoint_closed_form": float(closed(np.array(0.5))),
        "max_node_disagreement": float(np.max(np.abs(spec_vals - closed_vals))),
    })
    files["report"] = "phi.json"
    return files


_RUNNERS = {
    "solve": _run_solve,
    "roundtrip": _run_roundtrip,
    "compare": _run_compare,
    "attractor": _run_attractor,
    "check": _run_check,
    "phi": _run_phi,
}


def run(cfg: RunConfig) -> dict:
    """Dispatch the configured experiment and write artifacts + manifest."""
    outdir = Path(cfg.output["directory"])
    outdir.mkdir(parents=True, exist_ok=True)
    spec = cfg.build_spec()
    basis = cfg.build_basis()
    started = time.time()
    files = _RUNNERS[cfg.experiment["name"]](cfg, spec, basis, outdir)
    resolved = emit_config(cfg)
    manifest = {
        "config": cfg.to_dict(),
        "config_sha256": hashlib.sha256(resolved.encode()).hexdigest(),
        "tool_version": __version__,
        "wall_time_s": time.time() - started,
        "files": files,
    }
    _write_json(outdir / "manifest.json", manifest)
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="parasol",
        description="nonlocal parabolic simulation laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--seed", type=int, help="sampling seed override")
        p.add_argument("--modes", type=int, help="basis size override")
        p.add_argument("--dt", type=float, help="time step override")
        p.add_argument("--t-end", type=float, dest="t_end", help="final time override")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(Path(args.config).read_text())
        cfg.experiment["name"] = args.command
        if args.out is not None:
            cfg.output["directory"] = args.out
        if args.seed is not None:
            cfg.output["seed"] = args.seed
        if args.modes is not None:
            cfg.solver["n_modes"] = args.modes
        if args.dt is not None:
            cfg.solver["dt"] = args.dt
        if args.t_end is not None:
            cfg.solver["t_end"] = args.t_end
        run(cfg)
    except ConfigError as exc:
        json.dump({"error": {"type": "config", "key": exc.key, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 2
    except Exception as exc:  # solver/runtime failures -> machine readable
        json.dump({"error": {"type": type(exc).__name__, "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
