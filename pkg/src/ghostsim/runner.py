"""Scene execution and artifact management.

`run_scene` executes one scene (analytic, numeric, or montecarlo mode)
and writes a self-describing output directory: grid files for the image
and background, metrics.json, and a manifest that embeds the normalized
config and its hash, so every artifact can be regenerated from the
manifest alone. `run_sweep` fans a scene out over one or two parameter
axes into per-combination subdirectories plus a CSV table.
`validate_scene` checks the Monte Carlo estimator against the
quadrature reference. `write_report` renders an existing run directory
to CSV, PGM, and PNG.
"""

from __future__ import annotations

import copy
import csv
import itertools
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from ._version import __version__
from .errors import ConfigError, ValidationFailure
from .gridio import read_grid, write_grid, write_image_csv, write_pgm
from .imaging import (
    GhostImage,
    TemporalFactors,
    synthesize_image,
    temporal_factors,
)
from .metrology import summarize_image
from .montecarlo import empirical_ghost_image, make_ensemble
from .propagation import (
    Grid1D,
    KernelKind,
    OpticalPath,
    fresnel_regime,
    propagate_closed_gsm,
    propagate_numeric,
    propagated_envelope_estimate,
    relay_image_map,
    source_kernel,
)
from .scenes import (
    build_detector,
    build_object,
    build_path,
    build_source,
    config_hash,
    default_axes,
    normalize_scene,
)
from .sources import (
    CorrSpectrumPair,
    SourceClass,
    build_spectrum_pair,
    classicality_certify,
)

__all__ = [
    "RunResult",
    "run_scene",
    "run_sweep",
    "validate_scene",
    "write_report",
    "read_spectrum_pair",
    "certify_path",
]

_METRIC_COLUMNS = ("psf_e2_radius", "fov_radius", "inversion", "contrast")
_VALIDATION_FRACTION = 0.95
_VALIDATION_Z = 3.0


@dataclass(frozen=True)
class RunResult:
    """Handle to a completed run: its directory, manifest, and image."""

    outdir: Path
    manifest: dict
    image: GhostImage
    metrics: dict


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _axes_meta(axes):
    return [{"start": float(a[0]), "n": int(a.size)} for a in axes]


def _axes_spacing(axes):
    return [float((a[-1] - a[0]) / (a.size - 1)) for a in axes]


def _write_scan_grid(path, axes, values, kind):
    write_grid(
        path,
        values,
        _axes_spacing(axes),
        {"kind": kind, "axes": _axes_meta(axes)},
    )


def _axes_from_header(header):
    shape = header["shape"]
    spacing = header["spacing"]
    ax_meta = header.get("axes")
    axes = []
    for k, n in enumerate(shape):
        dx = float(spacing[k])
        if ax_meta and len(ax_meta) == len(shape):
            start = float(ax_meta[k]["start"])
        else:
            start = -dx * (n - 1) / 2.0
        axes.append(start + dx * np.arange(int(n)))
    return tuple(axes)


def _free_path(path: OpticalPath) -> OpticalPath:
    """The same traversal with any lens (and its delay bookkeeping) removed."""
    if path.lens is None:
        return path
    return OpticalPath(distance=path.distance, wavenumber=path.wavenumber)


def _closed_kernels(src, path, dim):
    """(kn, kp, autos) closed-form kernels at the object plane."""
    pi = propagate_closed_gsm(src, path, KernelKind.PHASE_INSENSITIVE, ndim=dim)
    if src.source_class is SourceClass.THERMAL:
        return pi, None, pi
    kp = propagate_closed_gsm(src, path, KernelKind.PHASE_SENSITIVE, ndim=dim)
    return None, kp, pi


def _numeric_kernels(src, path, grid):
    """(kn, kp, autos) quadrature-propagated kernels on `grid`."""
    free = _free_path(path)
    pi = propagate_numeric(
        source_kernel(src, KernelKind.PHASE_INSENSITIVE, ndim=1), free, grid=grid
    )
    if src.source_class is SourceClass.THERMAL:
        return pi, None, pi
    kp = propagate_numeric(
        source_kernel(src, KernelKind.PHASE_SENSITIVE, ndim=1), free, grid=grid
    )
    return None, kp, pi


def _coherence_estimate(src, path):
    """Measurement-plane coherence radius, interpolating near to far."""
    far = 2.0 * path.distance / (path.wavenumber * src.beam_radius)
    return math.sqrt(src.coherence_length**2 + far**2)


def _run_analytic(cfg, src, path, dim):
    kn, kp, autos = _closed_kernels(src, path, dim)
    envelope = (kp or kn).closed.envelope_radius
    axes = default_axes(envelope, dim, cfg)
    obj = build_object(cfg, axes)
    det = build_detector(cfg, envelope, sim_axes=None)
    factors = temporal_factors(src, det)
    img = synthesize_image(kn, kp, obj, det, factors, kn_auto_1=autos, kn_auto_2=autos)
    return img, obj, None


def _run_numeric(cfg, src, path):
    envelope = propagated_envelope_estimate(src, path)
    axes = default_axes(envelope, 1, cfg)
    grid = Grid1D(axes[0])
    kn, kp, autos = _numeric_kernels(src, path, grid)
    obj = build_object(cfg, axes)
    det = build_detector(cfg, envelope, sim_axes=axes)
    factors = temporal_factors(src, det)
    img = synthesize_image(kn, kp, obj, det, factors, kn_auto_1=autos, kn_auto_2=autos)
    return img, obj, (kp or kn)


def _run_montecarlo(cfg, src, path):
    if path.lens is not None:
        raise ConfigError(
            "montecarlo mode does not relay through lenses; "
            "drop path.lens or use mode=analytic"
        )
    envelope = propagated_envelope_estimate(src, path)
    axes = default_axes(envelope, 1, cfg)
    grid = Grid1D(axes[0])
    ensemble = make_ensemble(src, grid, cfg["run"]["snapshots"], cfg["run"]["seed"])
    obj = build_object(cfg, axes)
    det = build_detector(cfg, envelope, sim_axes=axes)
    result = empirical_ghost_image(ensemble, path, obj, det)
    # Metric heuristics key off the kernel scales; the estimator does not
    # know them, so record the model values.
    result.image.meta.setdefault("kernel_envelope_radius", envelope)
    result.image.meta.setdefault(
        "kernel_coherence_radius", _coherence_estimate(src, path)
    )
    return result.image, obj, result


def run_scene(cfg: dict, outdir, base_dir=None) -> RunResult:
    """Execute one scene and write its artifacts under `outdir`.

    Returns a RunResult; the directory afterwards holds image.grid,
    image.csv, background.grid, metrics.json, manifest.json, and
    mode-dependent extras (se.grid for montecarlo, kernel.grid for
    numeric, object_plane_image.grid when a lens relays the scan).
    Reruns with the same config and seed reproduce every artifact
    byte for byte except the manifest's timings and created_at.
    """
    t0 = time.perf_counter()
    cfg = normalize_scene(cfg, base_dir=base_dir)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    src = build_source(cfg)
    path = build_path(cfg)
    info = fresnel_regime(src, path)
    mode = cfg["run"]["mode"]

    standard_error = None
    kernel = None
    mc = None
    if mode == "analytic":
        img, obj, _ = _run_analytic(cfg, src, path, cfg["run"]["dim"])
    elif mode == "numeric":
        img, obj, kernel = _run_numeric(cfg, src, path)
    else:
        img, obj, mc = _run_montecarlo(cfg, src, path)
        standard_error = mc.standard_error

    object_image = None
    if path.lens is not None:
        object_image = img
        img = relay_image_map(object_image, path)

    metric_source = object_image if object_image is not None else img
    metrics = summarize_image(metric_source, obj).to_record()
    if mc is not None:
        metrics["n_snapshots"] = mc.n_snapshots
        mean_se = float(np.mean(standard_error))
        metrics["mean_standard_error"] = mean_se if math.isfinite(mean_se) else None
    if path.lens is not None:
        metrics["relay_magnification"] = path.lens.magnification
        metrics["electronic_delay_s"] = path.electronic_delay

    outputs = {}
    img.to_gridfile(outdir / "image.grid")
    outputs["image"] = "image.grid"
    img.to_csv(outdir / "image.csv")
    outputs["image_csv"] = "image.csv"
    _write_scan_grid(outdir / "background.grid", img.axes, img.background, "background")
    outputs["background"] = "background.grid"
    if standard_error is not None:
        _write_scan_grid(
            outdir / "se.grid", img.axes, standard_error, "standard_error"
        )
        outputs["standard_error"] = "se.grid"
    if kernel is not None:
        g = kernel.grid
        write_grid(
            outdir / "kernel.grid",
            kernel.values,
            [g.spacing, g.spacing],
            {
                "kind": "corr_kernel",
                "kernel_kind": kernel.kind.value,
                "axes": _axes_meta((g.points, g.points)),
            },
        )
        outputs["kernel"] = "kernel.grid"
    if object_image is not None:
        object_image.to_gridfile(outdir / "object_plane_image.grid")
        outputs["object_plane_image"] = "object_plane_image.grid"
    _write_json(outdir / "metrics.json", metrics)
    outputs["metrics"] = "metrics.json"

    manifest = {
        "tool": "ghostsim",
        "version": __version__,
        "mode": mode,
        "seed": cfg["run"]["seed"],
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "regime": {
            "regime": info.regime.value,
            "d0": info.d0,
            "collimated_fresnel": info.collimated_fresnel,
            "deep_far_field": info.deep_far_field,
        },
        "outputs": outputs,
        "timings": {"total_s": time.perf_counter() - t0},
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(outdir / "manifest.json", manifest)
    return RunResult(outdir=outdir, manifest=manifest, image=img, metrics=metrics)


def _set_field(cfg, dotted, value):
    parts = dotted.split(".")
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"sweep field {dotted!r}: no {part!r} section in scene")
        node = node[part]
    if not isinstance(node, dict):
        raise ConfigError(f"sweep field {dotted!r} does not name a scalar setting")
    node[parts[-1]] = value


def _resolve_workers(explicit: Optional[int], n_jobs: int) -> int:
    if explicit is None:
        env = os.environ.get("GHOSTSIM_WORKERS", "").strip()
        if env:
            try:
                explicit = int(env)
            except ValueError as exc:
                raise ConfigError(
                    f"GHOSTSIM_WORKERS must be an integer, got {env!r}"
                ) from exc
    if explicit is None:
        explicit = min(4, max(1, n_jobs))
    if explicit < 1:
        raise ConfigError("worker count must be >= 1")
    return min(explicit, max(1, n_jobs))


def _csv_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return value


def run_sweep(cfg: dict, outdir, workers: Optional[int] = None, base_dir=None) -> dict:
    """Run every combination of the scene's run.sweep axes.

    Each combination executes in its own runs/run_NNNN directory; the
    table sweep.csv collects the swept values and headline metrics in
    combination order (first axis outermost). Rows are ordered
    deterministically regardless of the worker count.
    """
    t0 = time.perf_counter()
    cfg = normalize_scene(cfg, base_dir=base_dir)
    sweep_axes = cfg["run"].get("sweep")
    if not sweep_axes:
        raise ConfigError("scene has no run.sweep block to sweep over")
    fields = [axis["field"] for axis in sweep_axes]
    combos = list(itertools.product(*(axis["values"] for axis in sweep_axes)))

    outdir = Path(outdir)
    runs_dir = outdir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)

    jobs = []
    for i, combo in enumerate(combos):
        sub = copy.deepcopy(cfg)
        sub["run"].pop("sweep", None)
        for field_name, value in zip(fields, combo):
            _set_field(sub, field_name, value)
        jobs.append((i, combo, sub))

    def _one(job):
        i, combo, sub = job
        return i, combo, run_scene(sub, runs_dir / f"run_{i:04d}")

    n_workers = _resolve_workers(workers, len(jobs))
    results = [None] * len(jobs)
    if n_workers <= 1:
        for job in jobs:
            i, combo, res = _one(job)
            results[i] = (combo, res)
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            for i, combo, res in pool.map(_one, jobs):
                results[i] = (combo, res)

    table_path = outdir / "sweep.csv"
    with open(table_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", *fields, *_METRIC_COLUMNS])
        for i, (combo, res) in enumerate(results):
            row = [f"run_{i:04d}"]
            row.extend(_csv_cell(float(v)) for v in combo)
            row.extend(_csv_cell(res.metrics.get(col)) for col in _METRIC_COLUMNS)
            writer.writerow(row)

    manifest = {
        "tool": "ghostsim",
        "version": __version__,
        "mode": "sweep",
        "config": cfg,
        "config_sha256": config_hash(cfg),
        "sweep": {"fields": fields, "shape": [len(a["values"]) for a in sweep_axes]},
        "outputs": {
            "table": "sweep.csv",
            "runs": [f"runs/run_{i:04d}" for i in range(len(jobs))],
        },
        "workers": n_workers,
        "timings": {"total_s": time.perf_counter() - t0},
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(outdir / "manifest.json", manifest)
    return manifest


def validate_scene(cfg: dict, outdir, base_dir=None) -> dict:
    """Monte Carlo vs quadrature cross-check on the scene's geometry.

    Draws the scene's snapshot ensemble, forms the empirical image, and
    compares it point by point against the quadrature-propagated
    analytic image with unit temporal factors (the estimator works on
    instantaneous snapshots, so filter decay does not apply). Passes
    when at least 95% of scan points agree within 3 standard errors.
    Writes empirical.grid, reference.grid, se.grid, and validation.json
    before raising ValidationFailure on a miss.
    """
    t0 = time.perf_counter()
    cfg = normalize_scene(cfg, base_dir=base_dir)
    if cfg["run"]["dim"] != 1:
        raise ConfigError("validation runs in 1-D slice mode; set run.dim = 1")
    src = build_source(cfg)
    path = build_path(cfg)
    if path.lens is not None:
        raise ConfigError("validation does not support lens relays")
    info = fresnel_regime(src, path)

    envelope = propagated_envelope_estimate(src, path)
    axes = default_axes(envelope, 1, cfg)
    grid = Grid1D(axes[0])
    ensemble = make_ensemble(src, grid, cfg["run"]["snapshots"], cfg["run"]["seed"])
    obj = build_object(cfg, axes)
    det = build_detector(cfg, envelope, sim_axes=axes)
    empirical = empirical_ghost_image(ensemble, path, obj, det)

    kn, kp, autos = _numeric_kernels(src, path, grid)
    reference = synthesize_image(
        kn, kp, obj, det, TemporalFactors.unit(), kn_auto_1=autos, kn_auto_2=autos
    )

    se = empirical.standard_error
    usable = np.isfinite(se) & (se > 0)
    z = np.zeros_like(se)
    z[usable] = np.abs(
        empirical.image.values[usable] - reference.values[usable]
    ) / se[usable]
    n_scan = int(se.size)
    n_within = int(np.count_nonzero(usable & (z <= _VALIDATION_Z)))
    fraction = n_within / n_scan if n_scan else 0.0
    passed = fraction >= _VALIDATION_FRACTION

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    empirical.image.to_gridfile(outdir / "empirical.grid")
    reference.to_gridfile(outdir / "reference.grid")
    _write_scan_grid(outdir / "se.grid", empirical.image.axes, se, "standard_error")
    record = {
        "pass": passed,
        "fraction_within_tolerance": fraction,
        "required_fraction": _VALIDATION_FRACTION,
        "z_tolerance": _VALIDATION_Z,
        "n_scan": n_scan,
        "n_within": n_within,
        "max_abs_z": float(z[usable].max()) if usable.any() else None,
        "n_snapshots": empirical.n_snapshots,
        "seed": cfg["run"]["seed"],
        "regime": info.regime.value,
        "config_sha256": config_hash(cfg),
        "outputs": {
            "empirical": "empirical.grid",
            "reference": "reference.grid",
            "standard_error": "se.grid",
        },
        "timings": {"total_s": time.perf_counter() - t0},
        "created_at": datetime.now(timezone.utc).isoformat(),
    }
    _write_json(outdir / "validation.json", record)
    if not passed:
        raise ValidationFailure(
            f"only {fraction:.1%} of {n_scan} scan points fell within "
            f"{_VALIDATION_Z:g} standard errors of the reference "
            f"(needed {_VALIDATION_FRACTION:.0%}); see {outdir / 'validation.json'}"
        )
    return record


def write_report(manifest_path, outdir=None) -> dict:
    """Render a run directory's image artifacts to CSV, PGM, and PNG.

    `manifest_path` may be the manifest file or the run directory that
    contains it. Files land in `outdir` (default: report/ next to the
    manifest). Returns {"outdir": ..., "files": [...]}.
    """
    from .plotting import render_image_png, render_kernel_png

    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    if not manifest_path.is_file():
        raise ConfigError(f"manifest not found: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"manifest is not valid JSON: {exc}") from exc
    outputs = manifest.get("outputs", {})
    if "image" not in outputs:
        raise ConfigError(
            "manifest has no image output to report (sweep manifests "
            "list per-run directories instead; report one of those)"
        )
    base = manifest_path.parent
    outdir = Path(outdir) if outdir is not None else base / "report"
    outdir.mkdir(parents=True, exist_ok=True)

    image, header = read_grid(base / outputs["image"])
    axes = _axes_from_header(header)
    background, _ = read_grid(base / outputs["background"])
    standard_error = None
    if "standard_error" in outputs:
        standard_error, _ = read_grid(base / outputs["standard_error"])

    files = []
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    if len(axes) == 1:
        pts = np.column_stack([pts[:, 0], np.zeros(pts.shape[0])])
    write_image_csv(outdir / "image.csv", pts, image.ravel())
    files.append("image.csv")
    write_pgm(
        outdir / "image.pgm",
        np.atleast_2d(image),
        float(background.min()),
        float(image.max()),
    )
    files.append("image.pgm")
    title = f"{manifest.get('mode', 'ghost')} image"
    render_image_png(
        axes,
        image,
        background,
        str(outdir / "image.png"),
        standard_error=standard_error,
        title=title,
    )
    files.append("image.png")
    if "kernel" in outputs:
        kernel, kernel_header = read_grid(base / outputs["kernel"])
        kernel_axes = _axes_from_header(kernel_header)
        render_kernel_png(
            kernel_axes[0],
            kernel,
            str(outdir / "kernel.png"),
            title=f"{kernel_header.get('kernel_kind', 'correlation')} kernel",
        )
        files.append("kernel.png")
    return {"outdir": str(outdir), "files": files}


def read_spectrum_pair(path) -> CorrSpectrumPair:
    """Load a sampled spectrum pair from CSV or JSON.

    CSV: columns freq, gn, gp_re[, gp_im], optional header row.
    JSON: object with arrays "freqs", "gn", "gp_re", optional "gp_im".
    """
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"spectrum file not found: {p}")
    if p.suffix.lower() == ".csv":
        rows = []
        with open(p, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.reader(fh), start=1):
                if not row or not row[0].strip():
                    continue
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError:
                    if lineno == 1:
                        continue  # header row
                    raise ConfigError(
                        f"{p}: line {lineno}: non-numeric spectrum sample"
                    ) from None
        if not rows:
            raise ConfigError(f"{p}: no spectrum samples found")
        widths = {len(r) for r in rows}
        if not widths <= {3, 4} or len(widths) != 1:
            raise ConfigError(
                f"{p}: expected columns freq, gn, gp_re[, gp_im] on every row"
            )
        arr = np.asarray(rows, dtype=float)
        freqs, gn, gp_re = arr[:, 0], arr[:, 1], arr[:, 2]
        gp_im = arr[:, 3] if arr.shape[1] == 4 else np.zeros_like(gp_re)
    else:
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: not valid JSON: {exc}") from exc
        if not isinstance(data, dict) or "freqs" not in data or "gn" not in data:
            raise ConfigError(f"{p}: JSON spectra need 'freqs', 'gn', 'gp_re' arrays")
        freqs = np.asarray(data["freqs"], dtype=float)
        gn = np.asarray(data["gn"], dtype=float)
        gp_re = np.asarray(data.get("gp_re", np.zeros_like(gn)), dtype=float)
        gp_im = np.asarray(data.get("gp_im", np.zeros_like(gn)), dtype=float)
    if not (freqs.shape == gn.shape == gp_re.shape == gp_im.shape):
        raise ConfigError(f"{p}: spectrum arrays have mismatched lengths")
    return CorrSpectrumPair(
        freqs=freqs, gn=gn, gp=gp_re + 1j * gp_im, label=p.name
    )


def certify_path(path) -> dict:
    """Certify a spectrum-pair file, or a scene file's source, in place.

    A JSON file with a "source" section is treated as a scene: its
    source's spectra are sampled and certified. Anything else is read
    as a sampled spectrum pair.
    """
    p = Path(path)
    pair = None
    if p.suffix.lower() == ".json" and p.is_file():
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: not valid JSON: {exc}") from exc
        if isinstance(data, dict) and "source" in data:
            cfg = normalize_scene(data, base_dir=p.parent)
            pair = build_spectrum_pair(build_source(cfg))
    if pair is None:
        pair = read_spectrum_pair(p)
    verdict = classicality_certify(pair)
    mag = np.abs(pair.gp)
    return {
        "file": str(p),
        "label": pair.label,
        "verdict": verdict.value,
        "n_samples": int(pair.freqs.size),
        "peak_occupancy": float(pair.gn.max()),
        "peak_cross_magnitude": float(mag.max()),
    }
