"""Command-line scenario runner.

    dotborn run CONFIG.json [--out DIR] [--threads K]
    dotborn bound --a A_OVER_LAMBDA [--kappa K]
    dotborn version

Exit codes: 0 success, 2 solver error, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from contextlib import nullcontext
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from .config import ScenarioConfig, parse_config
from .errors import ConfigError, DotBornError
from .forward import born_iterate, convergence_radius, data_function, first_born_delta
from .geometry import (
    ProbeLayout,
    build_cube,
    build_embedded,
    build_sandwich,
    build_two_cubes,
    enclosing_radius,
    validate,
)
from .green import born_bound, equivalent_radius
from .medium import DEFAULT_MEDIUM
from .operators import incident_field, polarizabilities
from .spectral import (
    COMPLEX_CAP,
    REAL_CAP,
    SpectrumReport,
    pairing_gap,
    spectrum_w,
    spectrum_wc,
    wmax_sweep,
)

log = logging.getLogger("dotborn")

EXIT_OK = 0
EXIT_SOLVER = 2
EXIT_CONFIG = 3

SPECTRUM_SCENARIOS = {"cube_spectrum", "two_cubes", "two_cubes_opposite", "sandwich", "embedded"}
COMPLEX_SCENARIOS = {"two_cubes_opposite", "sandwich", "embedded"}


def tool_version() -> str:
    try:
        return metadata.version("dotborn")
    except metadata.PackageNotFoundError:
        from . import __version__

        return __version__


def fmt(x: float) -> str:
    """17 significant digits, no negative zero."""
    return "%.17g" % (float(x) + 0.0)


def write_spectrum_csv(path: Path, values) -> None:
    vals = np.asarray(values)
    n = vals.size
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("n,re,im,n_over_N\n")
        for i, v in enumerate(vals.tolist(), start=1):
            v = complex(v)
            fh.write(f"{i},{fmt(v.real)},{fmt(v.imag)},{fmt(i / n)}\n")


def write_table_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if x is None else (fmt(x) if isinstance(x, float) else x) for x in row])


def build_grid(cfg: ScenarioConfig):
    H, h = cfg.H_over_lambda, cfg.h_over_lambda
    if cfg.geometry == "cube":
        return build_cube(H, h, cfg.kappa)
    if cfg.geometry == "two_cubes":
        k1, k2 = cfg.kappa_pair()
        return build_two_cubes(H, h, cfg.deltaH_over_H, k1, k2)
    if cfg.geometry == "sandwich":
        return build_sandwich(H, h, cfg.kappa)
    if cfg.geometry == "embedded":
        k_out, k_in = cfg.kappa
        return build_embedded(H, cfg.H_in_over_lambda, h, k_out, k_in)
    raise ConfigError([("geometry", f"unsupported geometry {cfg.geometry!r}")])


def _spectrum_fields(rep: SpectrumReport) -> Dict[str, Any]:
    return {
        "N": rep.n,
        "w_max": rep.w_max,
        "max_abs": rep.max_abs,
        "max_imag_abs": rep.max_imag_abs,
        "trace_defect": rep.trace_defect,
    }


def _grid_fields(grid) -> Dict[str, Any]:
    return {
        "h_over_lambda": grid.h_over_lambda,
        "q_f_alpha0": grid.q_f * grid.medium.alpha0,
        "kd_r_eq": grid.medium.kd * equivalent_radius(grid.h),
        "geometry": grid.tag,
        "grid_digest": grid.digest(),
        "diagnostics": [str(d) for d in validate(grid)],
    }


def _default_outputs(cfg: ScenarioConfig) -> Dict[str, str]:
    out = {"summary_json": f"{cfg.scenario}_summary.json"}
    if cfg.scenario in SPECTRUM_SCENARIOS:
        out["spectrum_csv"] = f"{cfg.scenario}_spectrum.csv"
    if cfg.scenario in ("cube_sweep", "born_run", "forward_data"):
        out["table_csv"] = f"{cfg.scenario}_table.csv"
    return out


def resolve_outputs(cfg: ScenarioConfig, out_dir: Optional[Path]) -> Dict[str, Path]:
    merged = _default_outputs(cfg)
    merged.update(cfg.outputs)
    base = Path(out_dir) if out_dir is not None else Path.cwd()
    return {k: (Path(v) if Path(v).is_absolute() else base / v) for k, v in merged.items()}


def _run_spectrum(cfg, paths):
    grid = build_grid(cfg)
    if cfg.scenario in COMPLEX_SCENARIOS:
        rep = spectrum_wc(grid, cfg.use_self_energy, cap=cfg.cap or COMPLEX_CAP)
    else:
        rep = spectrum_w(grid, cfg.use_self_energy, cap=cfg.cap or REAL_CAP)
    write_spectrum_csv(paths["spectrum_csv"], rep.values)
    out = _spectrum_fields(rep)
    out.update(_grid_fields(grid))
    a = enclosing_radius(grid)
    out["enclosing_radius_over_lambda"] = grid.medium.to_lambda(a)
    out["bound_threshold"] = born_bound(a, grid.medium).threshold
    if cfg.scenario == "two_cubes":
        out["pairing_gap"] = pairing_gap(rep.values)
        k1 = cfg.kappa_pair()[0]
        ref = spectrum_w(build_cube(cfg.H_over_lambda, cfg.h_over_lambda, k1), cfg.use_self_energy)
        out["w_max_isolated"] = ref.w_max
        out["ratio_to_isolated"] = rep.w_max / ref.w_max if ref.w_max else None
    return out


def _run_sweep(cfg, paths):
    H_values = cfg.H_over_lambda if isinstance(cfg.H_over_lambda, tuple) else (cfg.H_over_lambda,)
    points = wmax_sweep(
        H_values,
        cfg.h_over_lambda,
        cfg.kappa,
        cap=cfg.cap or REAL_CAP,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        use_self_energy=cfg.use_self_energy,
    )
    write_table_csv(
        paths["table_csv"],
        ["H_over_lambda", "N", "w_max", "bound", "iterations", "w_max_full", "error"],
        [(p.H, p.n, p.w_max, p.bound, p.iterations, p.w_max_full, p.error) for p in points],
    )
    ok = [p for p in points if p.w_max is not None]
    failures = [p for p in points if p.error]
    return {
        "N": max((p.n for p in ok), default=0),
        "w_max": max((p.w_max for p in ok), default=None),
        "points": [
            {
                "H_over_lambda": p.H,
                "N": p.n,
                "w_max": p.w_max,
                "bound": p.bound,
                "iterations": p.iterations,
                "w_max_full": p.w_max_full,
                "error": p.error,
            }
            for p in points
        ],
        "failed_points": len(failures),
    }


def _probes(cfg, grid, default_source=True):
    sources = cfg.sources
    if not sources and default_source:
        H = cfg.H_over_lambda
        sources = ((0.0, 0.0, -(H / 2 + 0.5)),)
    detectors = cfg.detectors or ()
    return ProbeLayout.from_lambda_units(sources, detectors, cfg.strengths if cfg.sources else None, grid.medium)


def _run_born(cfg, paths):
    grid = build_grid(cfg)
    pol = polarizabilities(grid, cfg.use_self_energy)
    probes = _probes(cfg, grid)
    u_inc = incident_field(grid, probes)
    rho = convergence_radius(grid, pol) if grid.n <= (cfg.cap or COMPLEX_CAP) else None
    rep = born_iterate(grid, pol, u_inc, tol=cfg.tol, max_iter=cfg.max_iter)
    write_table_csv(
        paths["table_csv"],
        ["iteration", "relative_residual", "update_norm"],
        [(i + 1, r, u) for i, (r, u) in enumerate(zip(rep.residuals, rep.update_norms))],
    )
    out = {
        "N": grid.n,
        "converged": rep.converged,
        "iterations": rep.iterations,
        "divergence_flag": rep.divergence_flag,
        "final_residual": rep.residuals[-1] if rep.residuals else None,
        "convergence_radius": rho,
        "predicted_convergent": None if rho is None else rho < 1.0,
    }
    out.update(_grid_fields(grid))
    return out


def _run_forward(cfg, paths):
    grid = build_grid(cfg)
    pol = polarizabilities(grid, cfg.use_self_energy)
    probes = _probes(cfg, grid, default_source=False)
    data = data_function(grid, pol, probes)
    born1 = first_born_delta(grid, probes)
    rows = []
    for l in range(data.g_ds.shape[0]):
        for k in range(data.g_ds.shape[1]):
            rows.append((l, k, data.g_ds[l, k], data.g0_ds[l, k], data.delta[l, k], born1[l, k]))
    write_table_csv(paths["table_csv"], ["detector", "source", "g_ds", "g0_ds", "delta", "first_born_delta"], rows)
    out = {
        "N": grid.n,
        "g_ds": data.g_ds.tolist(),
        "g0_ds": data.g0_ds.tolist(),
        "delta": data.delta.tolist(),
        "first_born_delta": born1.tolist(),
    }
    out.update(_grid_fields(grid))
    return out


def _run_bound(cfg, paths):
    a = DEFAULT_MEDIUM.to_length(cfg.a_over_lambda)
    kappa = cfg.kappa if isinstance(cfg.kappa, float) else None
    v = born_bound(a, DEFAULT_MEDIUM, kappa)
    return {
        "a_over_lambda": cfg.a_over_lambda,
        "kd_a": DEFAULT_MEDIUM.kd * a,
        "threshold": v.threshold,
        "regime": v.regime,
        "satisfied": v.satisfied,
    }


_DISPATCH = {
    "cube_spectrum": _run_spectrum,
    "two_cubes": _run_spectrum,
    "two_cubes_opposite": _run_spectrum,
    "sandwich": _run_spectrum,
    "embedded": _run_spectrum,
    "cube_sweep": _run_sweep,
    "born_run": _run_born,
    "forward_data": _run_forward,
    "bound": _run_bound,
}


def _clean(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(obj, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


def run_scenario(cfg: ScenarioConfig, out_dir: Optional[Path] = None) -> Dict[str, Any]:
    """Run one scenario, write its outputs and return the summary dict."""
    paths = resolve_outputs(cfg, out_dir)
    start = time.perf_counter()
    details = _DISPATCH[cfg.scenario](cfg, paths)
    summary = {
        "scenario": cfg.scenario,
        "config": cfg.raw,
        "config_hash": cfg.config_hash(),
        "version": tool_version(),
        "status": "ok",
    }
    summary.update(details)
    summary["timing_s"] = time.perf_counter() - start
    summary["outputs"] = {k: str(v) for k, v in paths.items()}
    dump_json(summary, paths["summary_json"])
    return _clean(summary)


def run_file(path, out_dir=None) -> int:
    """Load, run and report a scenario file; returns the process exit code."""
    try:
        text = Path(path).read_text(encoding="utf-8")
        cfg = parse_config(text)
    except (OSError, UnicodeDecodeError) as exc:
        print(json.dumps({"status": "config_error", "errors": [["<file>", str(exc)]]}), file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(json.dumps({"status": "config_error", "errors": exc.errors}, indent=2), file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_scenario(cfg, out_dir)
    except ConfigError as exc:
        print(json.dumps({"status": "config_error", "errors": exc.errors}, indent=2), file=sys.stderr)
        return EXIT_CONFIG
    except (DotBornError, np.linalg.LinAlgError, MemoryError) as exc:
        report = {
            "status": "solver_error",
            "scenario": cfg.scenario,
            "config_hash": cfg.config_hash(),
            "error_type": type(exc).__name__,
            "message": str(exc),
        }
        try:
            dump_json(report, resolve_outputs(cfg, out_dir)["summary_json"])
        except OSError:
            pass
        print(json.dumps(report, indent=2), file=sys.stderr)
        return EXIT_SOLVER
    print(json.dumps({k: summary[k] for k in summary if k not in ("config", "points", "g_ds", "g0_ds",
                                                                  "delta", "first_born_delta")}, indent=2))
    return EXIT_OK


def _thread_limit(threads):
    if not threads:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=threads)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dotborn", description="Born-series convergence analysis for diffuse optical tomography")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("config", help="scenario JSON document")
    run.add_argument("--out", type=Path, default=None, help="directory for relative output paths")
    run.add_argument("--threads", type=int, default=None, help="BLAS thread limit")

    bound = sub.add_parser("bound", help="analytic Born convergence bound for a ball of radius a")
    bound.add_argument("--a", type=float, required=True, help="enclosing radius in diffuse wavelengths")
    bound.add_argument("--kappa", type=float, default=None, help="contrast to test against the bound")

    sub.add_parser("version", help="print the tool version")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")

    if args.command == "version":
        print(tool_version())
        return EXIT_OK
    if args.command == "bound":
        if not (math.isfinite(args.a) and args.a > 0):
            print(json.dumps({"status": "config_error", "errors": [["a", "length must be positive"]]}), file=sys.stderr)
            return EXIT_CONFIG
        a = DEFAULT_MEDIUM.to_length(args.a)
        v = born_bound(a, DEFAULT_MEDIUM, args.kappa)
        print(json.dumps(_clean({"a_over_lambda": args.a, "kd_a": DEFAULT_MEDIUM.kd * a, "threshold": v.threshold,
                                 "regime": v.regime, "satisfied": v.satisfied}), indent=2, sort_keys=True))
        return EXIT_OK
    if args.threads is not None and args.threads < 1:
        print(json.dumps({"status": "config_error", "errors": [["--threads", "expected a positive integer"]]}), file=sys.stderr)
        return EXIT_CONFIG
    with _thread_limit(args.threads):
        return run_file(args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
