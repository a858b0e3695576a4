"""Quantitative figures of merit extracted from ghost images.

Resolution is the e^-2 radius of the fitted Gaussian point-spread
function (image of a point-like target); field of view is the e^-2
radius of the image envelope under a fully transparent target;
contrast compares the image peak against the featureless background;
orientation is decided by correlating the image against blurred erect
and inverted copies of the target.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .fitting import GaussianFit, fit_gaussian
from .imaging import GhostImage, ObjectMask

__all__ = [
    "Orientation",
    "ImageMetrics",
    "measure_psf",
    "measure_fov",
    "measure_contrast",
    "detect_inversion",
    "summarize_image",
]


class Orientation(enum.Enum):
    ERECT = "Erect"
    INVERTED = "Inverted"


@dataclass(frozen=True)
class ImageMetrics:
    """Bundle of the measurable image properties.

    Fields are None when the corresponding measurement does not apply
    to the scene (e.g. no psf radius without a point-like target).
    Diagnostics carry fit residual norms keyed by measurement name.
    """

    psf_e2_radius: Optional[float] = None
    fov_radius: Optional[float] = None
    inversion: Optional[Orientation] = None
    contrast: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("psf_e2_radius", "fov_radius"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"ImageMetrics.{name} must be positive")
        if self.contrast is not None and self.contrast < 0:
            raise ConfigError("ImageMetrics.contrast must be non-negative")

    def to_record(self):
        """JSON-ready dict for the metrics export."""
        return {
            "psf_e2_radius": self.psf_e2_radius,
            "fov_radius": self.fov_radius,
            "inversion": self.inversion.value if self.inversion else None,
            "contrast": self.contrast,
            "diagnostics": dict(self.diagnostics),
        }


def _fit_image_term(img: GhostImage, coef: float) -> GaussianFit:
    term = img.image_term.ravel()
    peak = term.max()
    if not peak > 0:
        raise ConfigError("image carries no object-bearing signal to fit")
    return fit_gaussian(img.points(), term, coef=coef)


def measure_psf(img: GhostImage) -> float:
    """e^-2 radius of the point-spread function.

    The image must come from a point-like target (support at most a
    grid cell), so that C - C0 traces |K(rho1, rho_c)|^2 directly. Fits
    A exp(-2 |rho - c|^2 / W^2) and returns W.
    """
    return _fit_image_term(img, coef=2.0).radius


def measure_fov(img: GhostImage) -> float:
    """e^-2 radius of the field of view.

    The image must come from a uniformly transparent target extending
    well beyond the beam. The object-bearing term then traces the
    squared beam envelope, so the model A exp(-4 |rho - c|^2 / W^2)
    returns the envelope radius itself.
    """
    return _fit_image_term(img, coef=4.0).radius


def measure_contrast(img: GhostImage) -> float:
    """(max C - C0) / C0, evaluated at the image peak."""
    idx = int(np.argmax(img.values))
    c0 = float(img.background.ravel()[idx])
    if not c0 > 0:
        raise ConfigError("contrast needs a positive recorded background")
    return (float(img.values.ravel()[idx]) - c0) / c0


def _gaussian_blur_weight(points, radius):
    return np.exp(-2.0 * (points**2).sum(axis=-1) / radius**2)


def _blurred_target(img: GhostImage, obj: ObjectMask, invert: bool, blur_radius):
    """Blurred |T|^2 (optionally point-reflected) on the scan grid."""
    t2 = np.abs(obj.values) ** 2
    obj_pts = np.meshgrid(*obj.axes, indexing="ij")
    obj_flat = np.stack([g.ravel() for g in obj_pts], axis=-1)
    if invert:
        obj_flat = -obj_flat
    scan = img.points()
    out = np.zeros(scan.shape[0])
    weights = t2.ravel() * obj.cell_area
    live = weights > 0
    obj_live = obj_flat[live]
    w_live = weights[live]
    if blur_radius is None or blur_radius <= 0:
        blur_radius = 2.0 * max(obj.spacings)
    for i, p in enumerate(scan):
        d2 = ((obj_live - p) ** 2).sum(axis=-1)
        out[i] = float((np.exp(-d2 / blur_radius**2) * w_live).sum())
    env = img.meta.get("kernel_envelope_radius")
    if env:
        out *= _gaussian_blur_weight(scan, env)
    return out


def _pearson(a, b):
    a = a - a.mean()
    b = b - b.mean()
    denom = math.sqrt(float((a * a).sum()) * float((b * b).sum()))
    if denom == 0:
        raise ConfigError("degenerate data in orientation correlation")
    return float((a * b).sum()) / denom


def detect_inversion(img: GhostImage, obj: ObjectMask) -> Orientation:
    """Decide whether the ghost image is erect or point-inverted.

    Correlates the background-subtracted image against blurred copies
    of |T(rho)|^2 and |T(-rho)|^2 (blur scale from the kernel coherence
    width recorded on the image, when present) and returns whichever
    matches better. Requires an asymmetric target: if |T|^2 correlates
    with its own point reflection above 0.9 the answer is undecidable.
    """
    t2 = np.abs(obj.values) ** 2
    flipped = t2[tuple(slice(None, None, -1) for _ in range(t2.ndim))]
    axes_symmetric = all(
        np.allclose(a, -a[::-1], atol=1e-9 * (abs(a).max() or 1.0)) for a in obj.axes
    )
    if not axes_symmetric:
        raise ConfigError("orientation detection needs symmetric object axes")
    if t2.std() > 0 and _pearson(t2.ravel(), flipped.ravel()) >= 0.9:
        raise ConfigError(
            "object is too symmetric under point reflection; orientation undecidable"
        )
    coh = img.meta.get("kernel_coherence_radius")
    blur = math.sqrt(2.0) * coh if coh else None
    term = img.image_term.ravel()
    r_erect = _pearson(term, _blurred_target(img, obj, invert=False, blur_radius=blur))
    r_inv = _pearson(term, _blurred_target(img, obj, invert=True, blur_radius=blur))
    return Orientation.ERECT if r_erect >= r_inv else Orientation.INVERTED


def _target_is_pointlike(obj: ObjectMask) -> bool:
    t2 = np.abs(obj.values) ** 2
    live = t2 > 1e-12
    if not live.any():
        return False
    pts = np.meshgrid(*obj.axes, indexing="ij")
    spans = [float(g[live].max() - g[live].min()) for g in pts]
    return all(s <= 2.01 * dx for s, dx in zip(spans, obj.spacings))


def _target_is_uniform(obj: ObjectMask, envelope: Optional[float]) -> bool:
    t2 = np.abs(obj.values) ** 2
    if not np.allclose(t2, 1.0, atol=1e-9):
        return False
    if envelope is None:
        return True
    half_spans = [min(abs(a[0]), abs(a[-1])) for a in obj.axes]
    return min(half_spans) >= 2.0 * envelope


def summarize_image(img: GhostImage, obj: ObjectMask) -> ImageMetrics:
    """Compute every metric the scene geometry supports."""
    diagnostics = {}
    psf = fov = inversion = contrast = None

    if np.any(img.background > 0):
        contrast = measure_contrast(img)

    envelope = img.meta.get("kernel_envelope_radius")
    if _target_is_pointlike(obj):
        fit = _fit_image_term(img, coef=2.0)
        psf = fit.radius
        diagnostics["psf_rms_log_residual"] = fit.rms_log_residual
    elif _target_is_uniform(obj, envelope):
        fit = _fit_image_term(img, coef=4.0)
        fov = fit.radius
        diagnostics["fov_rms_log_residual"] = fit.rms_log_residual
    else:
        t2 = np.abs(obj.values) ** 2
        flipped = t2[tuple(slice(None, None, -1) for _ in range(t2.ndim))]
        if t2.std() > 0 and _pearson(t2.ravel(), flipped.ravel()) < 0.9:
            inversion = detect_inversion(img, obj)

    return ImageMetrics(
        psf_e2_radius=psf,
        fov_radius=fov,
        inversion=inversion,
        contrast=contrast,
        diagnostics=diagnostics,
    )
