"""Command-line front end: experiment configs in, CSV/JSON artifacts out.

Subcommands:
  run     build the model, run the ensemble, write artifacts, print summary
  oracle  exact small-model values (partition functions, expectations)
  report  recompute diagnostics from weights.csv and verify against report.json

Configs are single JSON documents with strict keys (unknown keys are errors:
silent typos corrupt experiments). Exit codes: 0 ok, 2 config error, 3 size
guard, 4 I/O error. The environment variable ISING_AIS_OUTPUT_ROOT sets the
default root for output directories.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import ais, diagnostics, model, oracle

OUTPUT_ROOT_ENV = "ISING_AIS_OUTPUT_ROOT"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIZE_GUARD = 3
EXIT_IO = 4

REPORT_VERIFY_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid experiment configuration (with a field-level message)."""


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    beta: float
    num_levels: int
    num_paths: int
    burnin_steps: int
    steps_per_level: int
    base_seed: int
    output_dir: str | None

    def to_doc(self) -> dict:
        doc = {
            "model": self.model,
            "beta": self.beta,
            "num_levels": self.num_levels,
            "num_paths": self.num_paths,
            "burnin_steps": self.burnin_steps,
            "steps_per_level": self.steps_per_level,
            "base_seed": self.base_seed,
        }
        if self.output_dir is not None:
            doc["output_dir"] = self.output_dir
        return doc


def _check_keys(doc: dict, required: set[str], optional: set[str], ctx: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError(f"{ctx} must be a JSON object")
    unknown = set(doc) - required - optional
    if unknown:
        raise ConfigError(f"{ctx}: unknown keys {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"{ctx}: missing keys {sorted(missing)}")


def _get_int(doc: dict, key: str, ctx: str, minimum: int) -> int:
    v = doc[key]
    if not isinstance(v, int) or isinstance(v, bool):
        raise ConfigError(f"{ctx}.{key} must be an integer")
    if v < minimum:
        raise ConfigError(f"{ctx}.{key} must be >= {minimum}")
    return v


def _get_real(doc: dict, key: str, ctx: str) -> float:
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"{ctx}.{key} must be a finite number")
    return float(v)


def _get_sign(v, ctx: str) -> int:
    if v not in (-1, 1) or isinstance(v, bool):
        raise ConfigError(f"{ctx} must be -1 or 1")
    return int(v)


def _parse_boundary(doc, family: str) -> dict:
    ctx = "model.boundary"
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"{ctx} must be an object with a 'kind' key")
    kind = doc["kind"]
    if kind == "sides":
        if family != "square":
            raise ConfigError(f"{ctx}: 'sides' only applies to the square family")
        _check_keys(doc, {"kind", "left", "right", "top", "bottom"}, set(), ctx)
        return {
            "kind": "sides",
            "left": _get_sign(doc["left"], f"{ctx}.left"),
            "right": _get_sign(doc["right"], f"{ctx}.right"),
            "top": _get_sign(doc["top"], f"{ctx}.top"),
            "bottom": _get_sign(doc["bottom"], f"{ctx}.bottom"),
        }
    if kind == "quadrants":
        _check_keys(doc, {"kind", "signs"}, set(), ctx)
        signs = doc["signs"]
        if not isinstance(signs, list) or len(signs) != 4:
            raise ConfigError(f"{ctx}.signs must be a list of four ±1 values")
        return {"kind": "quadrants", "signs": [_get_sign(v, f"{ctx}.signs") for v in signs]}
    if kind == "arcs":
        if family != "disk":
            raise ConfigError(f"{ctx}: 'arcs' only applies to the disk family")
        _check_keys(doc, {"kind", "arcs"}, set(), ctx)
        arcs = doc["arcs"]
        if not isinstance(arcs, list) or not arcs:
            raise ConfigError(f"{ctx}.arcs must be a non-empty list of [start, end, sign]")
        out = []
        for k, arc in enumerate(arcs):
            if not isinstance(arc, list) or len(arc) != 3:
                raise ConfigError(f"{ctx}.arcs[{k}] must be [start, end, sign]")
            start, end = float(arc[0]), float(arc[1])
            out.append([start, end, _get_sign(arc[2], f"{ctx}.arcs[{k}]")])
        return {"kind": "arcs", "arcs": out}
    raise ConfigError(f"{ctx}.kind must be one of 'sides', 'quadrants', 'arcs'")


def _parse_model(doc) -> dict:
    ctx = "model"
    if not isinstance(doc, dict) or "family" not in doc:
        raise ConfigError(f"{ctx} must be an object with a 'family' key")
    family = doc["family"]
    if family == "square":
        _check_keys(doc, {"family", "n1", "n2", "boundary"}, set(), ctx)
        return {
            "family": "square",
            "n1": _get_int(doc, "n1", ctx, 1),
            "n2": _get_int(doc, "n2", ctx, 1),
            "boundary": _parse_boundary(doc["boundary"], "square"),
        }
    if family == "disk":
        _check_keys(doc, {"family", "mesh_size", "mesh_seed", "boundary"}, set(), ctx)
        mesh_size = _get_real(doc, "mesh_size", ctx)
        if not (0 < mesh_size < 1):
            raise ConfigError(f"{ctx}.mesh_size must lie in (0, 1)")
        return {
            "family": "disk",
            "mesh_size": mesh_size,
            "mesh_seed": _get_int(doc, "mesh_seed", ctx, 0),
            "boundary": _parse_boundary(doc["boundary"], "disk"),
        }
    raise ConfigError(f"{ctx}.family must be 'square' or 'disk'")


def parse_config(doc: dict) -> ExperimentConfig:
    required = {"model", "beta", "num_levels", "num_paths", "burnin_steps", "base_seed"}
    optional = {"steps_per_level", "output_dir"}
    _check_keys(doc, required, optional, "config")
    beta = _get_real(doc, "beta", "config")
    if beta <= 0:
        raise ConfigError("config.beta must be > 0")
    output_dir = doc.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        raise ConfigError("config.output_dir must be a string")
    return ExperimentConfig(
        model=_parse_model(doc["model"]),
        beta=beta,
        num_levels=_get_int(doc, "num_levels", "config", 1),
        num_paths=_get_int(doc, "num_paths", "config", 1),
        burnin_steps=_get_int(doc, "burnin_steps", "config", 0),
        steps_per_level=_get_int({"steps_per_level": doc.get("steps_per_level", 1)},
                                 "steps_per_level", "config", 1),
        base_seed=_get_int(doc, "base_seed", "config", 0),
        output_dir=output_dir,
    )


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)


def build_model(cfg: ExperimentConfig):
    """Construct (graph, geometry, boundary) from a validated config."""
    m = cfg.model
    try:
        if m["family"] == "square":
            bnd = m["boundary"]
            if bnd["kind"] == "sides":
                bc = {k: bnd[k] for k in ("left", "right", "top", "bottom")}
            else:
                bc = bnd["signs"]
            return model.build_square_lattice(m["n1"], m["n2"], bc, cfg.beta)
        bnd = m["boundary"]
        if bnd["kind"] == "quadrants":
            arc_bc = model.quadrant_arcs(bnd["signs"])
        else:
            arc_bc = [((s, e), sign) for s, e, sign in bnd["arcs"]]
        return model.build_disk_triangulation(m["mesh_size"], arc_bc, m["mesh_seed"], cfg.beta)
    except ValueError as exc:
        raise ConfigError(f"model build failed: {exc}") from exc


def _resolve_output_dir(cfg: ExperimentConfig, config_path) -> Path:
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "."))
    if cfg.output_dir is not None:
        out = Path(cfg.output_dir)
        return out if out.is_absolute() else root / out
    return root / Path(config_path).stem


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    graph, geometry, _ = build_model(cfg)
    run_cfg = ais.AisConfig(
        num_paths=cfg.num_paths,
        burnin_steps=cfg.burnin_steps,
        steps_per_level=cfg.steps_per_level,
        schedule=ais.Schedule.equally_spaced(cfg.num_levels),
        base_seed=cfg.base_seed,
    )
    paths = ais.run_ensemble(graph, run_cfg, workers=args.workers)
    history = np.vstack([p.log_weight_history for p in paths])
    log_weights = history[:, -1]

    out_dir = _resolve_output_dir(cfg, args.config)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "graph.json").write_text(model.graph_to_json(graph, geometry) + "\n")
    diagnostics.write_weights_csv(out_dir / "weights.csv", log_weights)
    if args.history:
        diagnostics.write_history_csv(out_dir / "history.csv", history)

    report_doc: dict = {
        "config": cfg.to_doc(),
        "num_paths": cfg.num_paths,
        "num_levels": cfg.num_levels,
        "n_interior": graph.n_interior,
        "n_edges": graph.n_edges,
    }
    if cfg.num_paths >= 2:
        report = diagnostics.build_report(paths)
        iterations = cfg.num_levels / report.efficiency
        diagnostics.write_variance_curve_csv(
            out_dir / "variance_curve.csv", run_cfg.schedule.thetas, report.variance_curve
        )
        spin_map = diagnostics.mean_spin_map(paths)
        _write_spin_map(out_dir / "mean_spin_map.csv", spin_map, geometry)
        report_doc.update(
            {
                "diagnostics_available": True,
                "efficiency": report.efficiency,
                "iterations_per_effective_sample": iterations,
                "variance_curve_final": float(report.variance_curve[-1]),
                "observables": {
                    name: {
                        "value": est.value,
                        "std_error": est.std_error,
                        "degenerate": est.degenerate,
                    }
                    for name, est in report.observables.items()
                },
            }
        )
        print(f"efficiency={report.efficiency:.6g}")
        print(f"iterations_per_effective_sample={iterations:.6g}")
    else:
        report_doc.update(
            {
                "diagnostics_available": False,
                "reason": "diagnostics need num_paths >= 2",
                "efficiency": None,
                "iterations_per_effective_sample": None,
            }
        )
        print("diagnostics unavailable (num_paths < 2)")
    diagnostics.write_report_json(out_dir / "report.json", report_doc)
    print(f"artifacts written to {out_dir}")
    return EXIT_OK


def _write_spin_map(path, spin_map, geometry) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        writer = _csv.writer(fh)
        if geometry is not None:
            writer.writerow(["vertex_id", "x", "y", "mean_spin"])
            for i, value in enumerate(spin_map):
                writer.writerow(
                    [
                        i,
                        format(geometry.coords[i, 0], ".17g"),
                        format(geometry.coords[i, 1], ".17g"),
                        format(value, ".17g"),
                    ]
                )
        else:
            writer.writerow(["vertex_id", "mean_spin"])
            for i, value in enumerate(spin_map):
                writer.writerow([i, format(value, ".17g")])


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    graph, _, _ = build_model(cfg)
    dist0 = oracle.enumerate_pV(graph, 0.0)
    dist1 = oracle.enumerate_pV(graph, 1.0)
    mags = oracle.state_magnetizations(graph.n_interior)
    doc = {
        "n_interior": graph.n_interior,
        "n_edges": graph.n_edges,
        "log_z_theta0": dist0.log_z,
        "log_z_theta1": dist1.log_z,
        "mean_weight_exact": float(np.exp(dist1.log_z - dist0.log_z)),
        "magnetization_mean_exact": float(dist1.probs @ mags),
        "magnetization_positive_prob_exact": float(np.sum(dist1.probs[mags > 0])),
    }
    if args.detailed_balance:
        transition = oracle.exact_sw_transition(graph, 1.0)
        balance = dist1.probs[:, None] * transition
        scale = np.maximum(np.abs(balance), np.abs(balance.T))
        residual = np.abs(balance - balance.T) / np.where(scale > 0, scale, 1.0)
        stationarity = np.abs(dist1.probs @ transition - dist1.probs)
        doc["detailed_balance"] = {
            "max_relative_balance_residual": float(residual.max()),
            "max_stationarity_residual": float(stationarity.max()),
        }
    print(json.dumps(doc, indent=2))
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    report_path = run_dir / "report.json"
    weights_path = run_dir / "weights.csv"
    if not report_path.exists() or not weights_path.exists():
        raise OSError(f"missing artifacts in {run_dir} (need report.json and weights.csv)")
    report = diagnostics.read_report_json(report_path)
    _, log_weights = diagnostics.read_weights_csv(weights_path)

    if not report.get("diagnostics_available", False):
        print("report says diagnostics unavailable; nothing to verify")
        return EXIT_OK

    efficiency = diagnostics.sample_efficiency(log_weights)
    recorded = report["efficiency"]
    mismatches = []
    if abs(efficiency - recorded) > REPORT_VERIFY_TOL:
        mismatches.append(
            f"efficiency: recomputed {efficiency!r} but report.json has {recorded!r}"
        )

    curve_path = run_dir / "variance_curve.csv"
    if curve_path.exists():
        levels, thetas, curve = diagnostics.read_variance_curve_csv(curve_path)
        final_var = float(
            np.var(np.log(diagnostics.normalize_weights(log_weights)), ddof=1)
        )
        if abs(final_var - curve[-1]) > REPORT_VERIFY_TOL:
            mismatches.append(
                f"final variance: recomputed {final_var!r} but curve ends at {curve[-1]!r}"
            )
        print("level,theta,var_log_w_normalized")
        for level, theta, var in zip(levels, thetas, curve):
            print(f"{level},{theta:.6g},{var:.6g}")

    print(f"efficiency={efficiency:.6g} (report: {recorded:.6g})")
    if mismatches:
        for line in mismatches:
            print(f"MISMATCH {line}", file=sys.stderr)
        return 1
    print("report verified")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ising-ais",
        description="Annealed importance sampling for Ising models with mixed boundaries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config", help="path to config JSON")
    p_run.add_argument("--workers", type=int, default=1, help="parallel path workers")
    p_run.add_argument(
        "--history", action="store_true", help="also write the K x L history.csv"
    )
    p_run.set_defaults(func=cmd_run)

    p_oracle = sub.add_parser("oracle", help="exact values for a small model")
    p_oracle.add_argument("config", help="path to config JSON")
    p_oracle.add_argument(
        "--detailed-balance",
        action="store_true",
        help="also compute transition-matrix residuals",
    )
    p_oracle.set_defaults(func=cmd_oracle)

    p_report = sub.add_parser("report", help="verify and print a run's diagnostics")
    p_report.add_argument("run_dir", help="directory written by 'run'")
    p_report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except oracle.SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE_GUARD
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
