"""Command line entry points.

Verbs:
  run       execute a scene file, write image + metrics + manifest
  sweep     run every combination of the scene's run.sweep axes
  certify   classicality check on a spectrum pair (or a scene's source)
  validate  Monte Carlo vs quadrature cross-check with pass/fail
  report    render a finished run to CSV / PGM / PNG

Exit codes: 0 success, 2 config error, 3 regime error, 4 validation
failure. Anything else signals a bug.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ._version import __version__
from .errors import ConfigError, RegimeError, ValidationFailure
from .runner import certify_path, run_scene, run_sweep, validate_scene, write_report
from .scenes import load_scene

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_VALIDATION = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostsim",
        description="Ghost-imaging simulator for Gaussian-state sources.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scene and write its artifacts")
    p_run.add_argument("scene", help="scene JSON file")
    p_run.add_argument("-o", "--outdir", help="output directory (default: <scene>-run)")

    p_sweep = sub.add_parser("sweep", help="run every run.sweep combination")
    p_sweep.add_argument("scene", help="scene JSON file with a run.sweep block")
    p_sweep.add_argument(
        "-o", "--outdir", help="output directory (default: <scene>-sweep)"
    )
    p_sweep.add_argument(
        "--workers",
        type=int,
        help="parallel runs (default: GHOSTSIM_WORKERS or min(4, jobs))",
    )

    p_cert = sub.add_parser(
        "certify", help="classicality verdict for a sampled spectrum pair"
    )
    p_cert.add_argument(
        "spectrum", help="CSV/JSON spectrum pair, or a scene JSON to certify its source"
    )
    p_cert.add_argument("-o", "--output", help="also write the verdict record as JSON")

    p_val = sub.add_parser(
        "validate", help="compare the Monte Carlo estimator against quadrature"
    )
    p_val.add_argument("scene", help="scene JSON file (1-D slice mode)")
    p_val.add_argument(
        "-o", "--outdir", help="output directory (default: <scene>-validation)"
    )

    p_rep = sub.add_parser("report", help="render a run directory to CSV/PGM/PNG")
    p_rep.add_argument("manifest", help="manifest.json or the run directory")
    p_rep.add_argument(
        "-o", "--outdir", help="output directory (default: report/ beside the manifest)"
    )
    return parser


def _default_outdir(scene_path: str, suffix: str) -> Path:
    return Path.cwd() / f"{Path(scene_path).stem}-{suffix}"


def _metric_lines(metrics: dict):
    order = ("contrast", "psf_e2_radius", "fov_radius", "inversion")
    for key in order:
        value = metrics.get(key)
        if value is None:
            continue
        if isinstance(value, float):
            yield f"  {key}: {value:.6g}"
        else:
            yield f"  {key}: {value}"


def _cmd_run(args) -> int:
    cfg = load_scene(args.scene)
    outdir = args.outdir or _default_outdir(args.scene, "run")
    result = run_scene(cfg, outdir)
    regime = result.manifest["regime"]["regime"]
    print(f"run complete: {result.outdir} (mode={result.manifest['mode']}, "
          f"regime={regime})")
    for line in _metric_lines(result.metrics):
        print(line)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_scene(args.scene)
    outdir = args.outdir or _default_outdir(args.scene, "sweep")
    manifest = run_sweep(cfg, outdir, workers=args.workers)
    n_runs = len(manifest["outputs"]["runs"])
    fields = ", ".join(manifest["sweep"]["fields"])
    print(f"sweep complete: {n_runs} runs over {fields}")
    print(f"  table: {Path(outdir) / manifest['outputs']['table']}")
    return EXIT_OK


def _cmd_certify(args) -> int:
    record = certify_path(args.spectrum)
    print(f"verdict: {record['verdict']}")
    print(f"  samples: {record['n_samples']}")
    print(f"  peak occupancy: {record['peak_occupancy']:.6g}")
    print(f"  peak cross magnitude: {record['peak_cross_magnitude']:.6g}")
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"  wrote {args.output}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    cfg = load_scene(args.scene)
    outdir = args.outdir or _default_outdir(args.scene, "validation")
    record = validate_scene(cfg, outdir)
    print(
        f"validation passed: {record['n_within']}/{record['n_scan']} scan points "
        f"({record['fraction_within_tolerance']:.1%}) within "
        f"{record['z_tolerance']:g} standard errors"
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    record = write_report(args.manifest, args.outdir)
    print(f"report written to {record['outdir']}:")
    for name in record["files"]:
        print(f"  {name}")
    return EXIT_OK


_DISPATCH = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "certify": _cmd_certify,
    "validate": _cmd_validate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        if exc.hint:
            print(f"hint: {exc.hint}", file=sys.stderr)
        return EXIT_REGIME
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
