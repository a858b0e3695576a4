"""Scene configuration: JSON schema, normalization, object builders.

A scene file describes one simulated ghost-imaging experiment: the
source, the free-space path (optionally with a relay lens), the object
mask, the detectors, and run options. All quantities are SI; the
wavenumber is given directly so there is no wavelength convention to
trip over.
"""

from __future__ import annotations

import copy
import hashlib
import json
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .gridio import read_grid
from .imaging import DetectorModel, ObjectMask
from .propagation import Grid1D, Lens, OpticalPath
from .sources import GsmSource, SourceClass

__all__ = [
    "SCENE_SCHEMA",
    "load_scene",
    "normalize_scene",
    "canonical_json",
    "config_hash",
    "build_source",
    "build_path",
    "build_object",
    "build_detector",
]

_POS = {"type": "number", "exclusiveMinimum": 0}

SCENE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["source", "path"],
    "additionalProperties": False,
    "properties": {
        "source": {
            "type": "object",
            "required": [
                "photon_flux",
                "beam_radius",
                "coherence_length",
                "coherence_time",
            ],
            "additionalProperties": False,
            "properties": {
                "photon_flux": _POS,
                "beam_radius": _POS,
                "coherence_length": _POS,
                "coherence_time": _POS,
                "class": {
                    "enum": ["thermal", "classical_ps", "quantum_ps"]
                },
                "cross_corr_phase": {"type": "number"},
            },
        },
        "path": {
            "type": "object",
            "required": ["distance", "wavenumber"],
            "additionalProperties": False,
            "properties": {
                "distance": _POS,
                "wavenumber": _POS,
                "lens": {
                    "type": "object",
                    "required": ["focal_length", "d1", "d2"],
                    "additionalProperties": False,
                    "properties": {
                        "focal_length": _POS,
                        "d1": _POS,
                        "d2": _POS,
                    },
                },
                "reference_path_length": _POS,
            },
        },
        "object": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "shape": {
                    "enum": [
                        "uniform",
                        "pinhole",
                        "disk",
                        "double_slit",
                        "letter",
                    ]
                },
                "grid_file": {"type": "string"},
                "value": {"type": "number", "minimum": 0, "maximum": 1},
                "radius": _POS,
                "center": {
                    "type": "array",
                    "items": {"type": "number"},
                    "minItems": 1,
                    "maxItems": 2,
                },
                "slit_width": _POS,
                "separation": _POS,
                "amplitudes": {
                    "type": "array",
                    "items": {"type": "number", "minimum": 0, "maximum": 1},
                    "minItems": 2,
                    "maxItems": 2,
                },
                "char": {"type": "string", "minLength": 1, "maxLength": 1},
                "height": _POS,
                "width": _POS,
            },
        },
        "detector": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "quantum_efficiency": {
                    "type": "number",
                    "exclusiveMinimum": 0,
                    "maximum": 1,
                },
                "integration_time": _POS,
                "scan": {
                    "type": "object",
                    "required": ["extent", "n"],
                    "additionalProperties": False,
                    "properties": {
                        "extent": _POS,
                        "n": {"type": "integer", "minimum": 2},
                    },
                },
                "bucket_radius": _POS,
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": ["analytic", "numeric", "montecarlo"]},
                "dim": {"enum": [1, 2]},
                "grid": {
                    "type": "object",
                    "required": ["extent", "n"],
                    "additionalProperties": False,
                    "properties": {
                        "extent": _POS,
                        "n": {"type": "integer", "minimum": 8},
                    },
                },
                "seed": {"type": "integer", "minimum": 0},
                "snapshots": {"type": "integer", "minimum": 1},
                "sweep": {
                    "type": "array",
                    "minItems": 1,
                    "maxItems": 2,
                    "items": {
                        "type": "object",
                        "required": ["field", "values"],
                        "additionalProperties": False,
                        "properties": {
                            "field": {"type": "string"},
                            "values": {
                                "type": "array",
                                "items": {"type": "number"},
                                "minItems": 1,
                            },
                        },
                    },
                },
            },
        },
    },
}

_CLASS_MAP = {
    "thermal": SourceClass.THERMAL,
    "classical_ps": SourceClass.CLASSICAL_PS,
    "quantum_ps": SourceClass.QUANTUM_PS,
}

_SWEEPABLE_PREFIXES = ("source.", "path.", "detector.", "run.", "object.")


def load_scene(path) -> dict:
    """Read and schema-validate a scene file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"scene file not found: {p}")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scene file is not valid JSON: {exc}") from exc
    return normalize_scene(cfg, base_dir=p.parent)


def normalize_scene(cfg: dict, base_dir=None) -> dict:
    """Validate against the schema and fill in defaults."""
    try:
        jsonschema.validate(cfg, SCENE_SCHEMA)
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(s) for s in exc.absolute_path) or "(root)"
        raise ConfigError(f"scene config invalid at {loc}: {exc.message}") from exc
    out = copy.deepcopy(cfg)
    out["source"].setdefault("class", "thermal")
    out["source"].setdefault("cross_corr_phase", 0.0)
    obj = out.setdefault("object", {"shape": "uniform"})
    has_shape = "shape" in obj
    has_file = "grid_file" in obj
    if has_shape == has_file:
        raise ConfigError("object needs exactly one of 'shape' or 'grid_file'")
    if has_file and base_dir is not None and not Path(obj["grid_file"]).is_absolute():
        obj["grid_file"] = str((Path(base_dir) / obj["grid_file"]).resolve())
    if has_file and not Path(obj["grid_file"]).is_file():
        raise ConfigError(f"object grid file not found: {obj['grid_file']}")
    det = out.setdefault("detector", {})
    det.setdefault("quantum_efficiency", 1.0)
    det.setdefault("integration_time", 1e-12)
    run = out.setdefault("run", {})
    run.setdefault("mode", "analytic")
    run.setdefault("dim", 2 if run["mode"] == "analytic" else 1)
    run.setdefault("seed", 0)
    run.setdefault("snapshots", 2000)
    if run["mode"] in ("numeric", "montecarlo") and run["dim"] != 1:
        raise ConfigError(f"mode={run['mode']} runs in 1-D slice mode; set run.dim = 1")
    for axis in run.get("sweep", []):
        field = axis["field"]
        if not field.startswith(_SWEEPABLE_PREFIXES):
            raise ConfigError(
                f"sweep field {field!r} must start with one of "
                f"{', '.join(_SWEEPABLE_PREFIXES)}"
            )
    return out


def canonical_json(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def build_source(cfg: dict) -> GsmSource:
    s = cfg["source"]
    return GsmSource(
        photon_flux=s["photon_flux"],
        beam_radius=s["beam_radius"],
        coherence_length=s["coherence_length"],
        coherence_time=s["coherence_time"],
        source_class=_CLASS_MAP[s["class"]],
        cross_corr_phase=s["cross_corr_phase"],
    )


def build_path(cfg: dict) -> OpticalPath:
    p = cfg["path"]
    lens = None
    if "lens" in p:
        lens = Lens(
            focal_length=p["lens"]["focal_length"],
            d1=p["lens"]["d1"],
            d2=p["lens"]["d2"],
        )
    return OpticalPath(
        distance=p["distance"],
        wavenumber=p["wavenumber"],
        lens=lens,
        reference_path_length=p.get("reference_path_length"),
    )


def _mask_from_grid_file(path, axes):
    values, header = read_grid(path)
    if values.ndim not in (1, 2):
        raise ConfigError("object grid files must be 1-D or 2-D")
    spacing = header.get("spacing", [])
    if len(spacing) < values.ndim:
        raise ConfigError("object grid file header lacks per-axis spacing")
    file_axes = []
    ax_meta = header.get("axes")
    for k in range(values.ndim):
        n = values.shape[k]
        dx = float(spacing[k])
        if ax_meta and len(ax_meta) == values.ndim and "start" in ax_meta[k]:
            start = float(ax_meta[k]["start"])
        else:
            start = -dx * (n - 1) / 2.0
        file_axes.append(start + dx * np.arange(n))
    mask = ObjectMask(tuple(file_axes), values.astype(complex))
    if axes is not None and (
        len(axes) != mask.ndim
        or any(a.size != b.size or not np.allclose(a, b) for a, b in zip(axes, mask.axes))
    ):
        mask = mask.resample_to(axes)
    return mask


def build_object(cfg: dict, axes) -> ObjectMask:
    """Materialize the object mask on the given simulation axes."""
    o = cfg["object"]
    if "grid_file" in o:
        return _mask_from_grid_file(o["grid_file"], axes)
    shape = o["shape"]
    ndim = len(axes)
    if shape == "uniform":
        return ObjectMask.uniform(axes, value=o.get("value", 1.0))
    if shape in ("pinhole", "disk"):
        if "radius" not in o:
            raise ConfigError(f"object shape {shape!r} needs a radius")
        center = o.get("center", [0.0] * ndim)
        if len(center) != ndim:
            raise ConfigError("object center dimensionality mismatch")
        return ObjectMask.pinhole(axes, center, o["radius"])
    if shape == "double_slit":
        if "slit_width" not in o or "separation" not in o:
            raise ConfigError("double_slit needs slit_width and separation")
        return ObjectMask.double_slit(
            axes,
            slit_width=o["slit_width"],
            separation=o["separation"],
            amplitudes=tuple(o.get("amplitudes", (1.0, 1.0))),
        )
    if shape == "letter":
        if "char" not in o or "height" not in o:
            raise ConfigError("letter needs char and height")
        return ObjectMask.letter(axes, o["char"], o["height"], width=o.get("width"))
    raise ConfigError(f"unknown object shape {shape!r}")


def default_axes(envelope_radius: float, dim: int, cfg: dict):
    """Simulation axes from run.grid, or 8x-envelope defaults."""
    run = cfg.get("run", {})
    grid = run.get("grid")
    if grid is not None:
        extent, n = grid["extent"], grid["n"]
    else:
        extent, n = 8.0 * envelope_radius, 512
    g = Grid1D.centered(n, extent)
    return tuple(g.points for _ in range(dim))


def build_detector(cfg: dict, envelope_radius: float, sim_axes=None) -> DetectorModel:
    """Detector from config; default scan covers 3x the envelope.

    When `sim_axes` is given (numeric and Monte Carlo modes) the scan
    positions are drawn from the simulation grid itself so that scan
    points coincide with kernel samples.
    """
    det = cfg["detector"]
    scan_cfg = det.get("scan", {})
    extent = scan_cfg.get("extent", 3.0 * envelope_radius)
    n = scan_cfg.get("n", 65)
    dim = cfg["run"]["dim"]
    if sim_axes is not None:
        pts = sim_axes[0]
        within = pts[np.abs(pts) <= extent / 2.0]
        if within.size < 2:
            raise ConfigError("scan extent too small for the simulation grid")
        stride = max(1, within.size // n)
        axis = within[::stride]
        axes = (axis,)
    else:
        axes = tuple(Grid1D.centered(n, extent).points for _ in range(dim))
    return DetectorModel(
        quantum_efficiency=det["quantum_efficiency"],
        integration_time=det["integration_time"],
        scan_axes=axes,
        bucket_radius=det.get("bucket_radius"),
    )
