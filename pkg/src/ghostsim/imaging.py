"""Ghost-image synthesis from propagated correlation kernels.

The photocurrent cross correlation between a scanning pinhole detector
and a bucket detector behind an amplitude mask T factors, for Gaussian
sources, into a featureless background plus image-bearing terms driven
by the squared magnitudes of the phase-insensitive and phase-sensitive
cross-correlation kernels:

    C(rho1) = C0(rho1)
              + C_n * integral_A2 |Kn(rho1, rho)|^2 |T(rho)|^2 drho
              + C_p * integral_A2 |Kp(rho1, rho)|^2 |T(rho)|^2 drho

C0 is the product of the mean detected fluxes in the two arms; C_n and
C_p carry the detector efficiency and the temporal overlap between the
post-detection filter and the source correlation time. Absolute
photocurrent units are out of scope: the convention (documented in the
image metadata) fixes C0 = eta^2 * flux product and C_n, C_p = eta^2 *
temporal scale, which preserves every contrast ratio.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .gridio import write_grid, write_image_csv, write_pgm
from .propagation import CorrKernel, KernelKind, PairCoordinate
from .sources import GsmSource, SourceClass

__all__ = [
    "ObjectMask",
    "DetectorModel",
    "TemporalFactors",
    "GhostImage",
    "temporal_factors",
    "background_level",
    "synthesize_image",
]

_AXIS_MATCH_TOL = 1e-9


def _validate_axes(axes):
    axes = tuple(np.asarray(a, dtype=float) for a in axes)
    if len(axes) not in (1, 2):
        raise ConfigError("grids must have 1 or 2 transverse axes")
    for a in axes:
        if a.ndim != 1 or a.size < 1:
            raise ConfigError("each axis must be a 1-D array of positions")
        if a.size > 1:
            steps = np.diff(a)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9):
                raise ConfigError("axes must be uniform and increasing")
    return axes


def _axis_spacing(a):
    return float(a[1] - a[0]) if a.size > 1 else 1.0


@dataclass(frozen=True)
class ObjectMask:
    """Complex amplitude transmission T sampled on a rectangular grid.

    `axes` holds the x axis (and the y axis in 2-D); values are indexed
    values[ix] or values[ix, iy]. The grid spans the full aperture:
    outside it the mask holder is opaque (T = 0), which is how
    resampling fills points beyond the original extent.
    """

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        axes = _validate_axes(self.axes)
        vals = np.asarray(self.values, dtype=complex)
        expected = tuple(a.size for a in axes)
        if vals.shape != expected:
            raise ConfigError(f"mask shape {vals.shape} does not match axes {expected}")
        if not np.all(np.isfinite(vals.view(float))):
            raise ConfigError("mask contains non-finite values")
        if np.abs(vals).max() > 1.0 + 1e-12:
            raise ConfigError("mask transmission must satisfy |T| <= 1")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def spacings(self):
        return tuple(_axis_spacing(a) for a in self.axes)

    @property
    def cell_area(self):
        return math.prod(self.spacings)

    @classmethod
    def uniform(cls, axes, value=1.0):
        axes = _validate_axes(axes)
        shape = tuple(a.size for a in axes)
        return cls(axes, np.full(shape, value, dtype=complex))

    @classmethod
    def pinhole(cls, axes, center, radius):
        """Binary point target: T = 1 inside |rho - center| < radius."""
        axes = _validate_axes(axes)
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if center.size != len(axes):
            raise ConfigError("pinhole center dimensionality mismatch")
        grids = np.meshgrid(*axes, indexing="ij")
        r2 = sum((g - c) ** 2 for g, c in zip(grids, center))
        inside = r2 < radius**2
        if not inside.any():
            raise ConfigError(
                f"pinhole radius {radius:g} covers no grid cell; the nearest "
                f"cell center is {math.sqrt(float(r2.min())):g} away"
            )
        return cls(axes, inside.astype(complex))

    @classmethod
    def disk(cls, axes, radius, center=None):
        if center is None:
            center = np.zeros(len(axes))
        return cls.pinhole(axes, center, radius)

    @classmethod
    def double_slit(cls, axes, slit_width, separation, amplitudes=(1.0, 1.0)):
        """Two slits along x at +-separation/2 (uniform in y if 2-D)."""
        axes = _validate_axes(axes)
        x = axes[0]
        t = np.zeros(x.size, dtype=complex)
        for sign, amp in zip((-1.0, 1.0), amplitudes):
            c = sign * separation / 2.0
            t[np.abs(x - c) < slit_width / 2.0] = amp
        if not np.any(np.abs(t) > 0):
            raise ConfigError("double_slit openings cover no grid cell")
        if len(axes) == 2:
            t = np.repeat(t[:, None], axes[1].size, axis=1)
        return cls(axes, t)

    @classmethod
    def letter(cls, axes, char, height, width=None):
        """Blocky letter target on a 2-D grid (3x5-cell bitmap font).

        Letters make convenient asymmetric targets for orientation
        tests. `height` is the vertical extent; width defaults to
        3/5 of it. Centered on the grid, x across, y up.
        """
        bitmaps = {
            "F": ("111", "100", "110", "100", "100"),
            "E": ("111", "100", "110", "100", "111"),
            "L": ("100", "100", "100", "100", "111"),
            "T": ("111", "010", "010", "010", "010"),
            "C": ("111", "100", "100", "100", "111"),
            "H": ("101", "101", "111", "101", "101"),
        }
        axes = _validate_axes(axes)
        if len(axes) != 2:
            raise ConfigError("letter masks need a 2-D grid")
        key = str(char).upper()
        if key not in bitmaps:
            raise ConfigError(
                f"unsupported letter {char!r}; choose one of {sorted(bitmaps)}"
            )
        rows = bitmaps[key]
        if width is None:
            width = height * len(rows[0]) / len(rows)
        cell_h = height / len(rows)
        cell_w = width / len(rows[0])
        x, y = np.meshgrid(*axes, indexing="ij")
        col = np.floor((x + width / 2.0) / cell_w).astype(int)
        row = np.floor((height / 2.0 - y) / cell_h).astype(int)
        inside = (col >= 0) & (col < len(rows[0])) & (row >= 0) & (row < len(rows))
        vals = np.zeros(x.shape, dtype=complex)
        rr = np.clip(row, 0, len(rows) - 1)
        cc = np.clip(col, 0, len(rows[0]) - 1)
        lit = np.array(
            [[c == "1" for c in r] for r in rows], dtype=bool
        )[rr.ravel(), cc.ravel()].reshape(x.shape)
        vals[inside & lit] = 1.0
        return cls(axes, vals)

    def resample_to(self, axes):
        """Linear resampling onto new axes; T = 0 outside the aperture."""
        axes = _validate_axes(axes)
        if len(axes) != self.ndim:
            raise ConfigError("resample dimensionality mismatch")
        if self.ndim == 1:
            re = np.interp(axes[0], self.axes[0], self.values.real, left=0.0, right=0.0)
            im = np.interp(axes[0], self.axes[0], self.values.imag, left=0.0, right=0.0)
            return ObjectMask(axes, re + 1j * im)
        from scipy.interpolate import RegularGridInterpolator

        shape = tuple(a.size for a in axes)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        parts = []
        for part in ("real", "imag"):
            interp = RegularGridInterpolator(
                self.axes,
                np.ascontiguousarray(getattr(self.values, part)),
                bounds_error=False,
                fill_value=0.0,
            )
            parts.append(interp(pts).reshape(shape))
        return ObjectMask(axes, parts[0] + 1j * parts[1])


@dataclass(frozen=True)
class DetectorModel:
    """Detection geometry and electronics for both arms.

    The pinhole detector scans `scan_axes` as a point sampler; the
    bucket detector integrates the masked beam over the region A2,
    either a centered disk of `bucket_radius` or an explicit boolean
    `bucket_mask` aligned with the object grid (None means the whole
    grid). `integration_time` is the full e^-2 width of the Gaussian
    post-detection filter. `bucket_sufficiently_large` may force the
    flag recorded on images; left None it is derived by comparing the
    bucket radius with 4x the beam envelope at the object plane.
    """

    quantum_efficiency: float
    integration_time: float
    scan_axes: tuple
    bucket_radius: Optional[float] = None
    bucket_mask: Optional[np.ndarray] = None
    bucket_sufficiently_large: Optional[bool] = None

    def __post_init__(self):
        if not (0.0 < self.quantum_efficiency <= 1.0):
            raise ConfigError("quantum_efficiency must lie in (0, 1]")
        if not (self.integration_time > 0 and math.isfinite(self.integration_time)):
            raise ConfigError("integration_time must be positive")
        object.__setattr__(self, "scan_axes", _validate_axes(self.scan_axes))
        if self.bucket_radius is not None and self.bucket_radius <= 0:
            raise ConfigError("bucket_radius must be positive")
        if self.bucket_mask is not None:
            object.__setattr__(
                self, "bucket_mask", np.asarray(self.bucket_mask, dtype=bool)
            )

    @property
    def ndim(self):
        return len(self.scan_axes)

    def bucket_over(self, obj: ObjectMask) -> np.ndarray:
        """Boolean A2 mask on the object grid."""
        if self.bucket_mask is not None:
            if self.bucket_mask.shape != obj.values.shape:
                raise ConfigError("bucket_mask shape does not match the object grid")
            mask = self.bucket_mask
        elif self.bucket_radius is None:
            mask = np.ones(obj.values.shape, dtype=bool)
        else:
            grids = np.meshgrid(*obj.axes, indexing="ij")
            r2 = sum(g**2 for g in grids)
            mask = r2 <= self.bucket_radius**2
        if not mask.any():
            raise ConfigError("bucket region A2 is empty on the object grid")
        return mask

    def effective_bucket_radius(self, obj: ObjectMask) -> float:
        if self.bucket_radius is not None:
            return self.bucket_radius
        # Whole-grid (or explicit-mask) buckets: use the largest
        # centered radius fully inside the covered region.
        half_spans = [
            min(abs(a[0]), abs(a[-1])) + _axis_spacing(a) / 2.0 for a in obj.axes
        ]
        return float(min(half_spans))


@dataclass(frozen=True)
class TemporalFactors:
    """Overlap of the post-detection filters with |R(tau)|^2.

    Each scale is int h(t1) h(t2) |R(t2-t1)|^2 dt1 dt2 normalized by
    the zero-bandwidth limit, i.e. 1/sqrt(1 + Td^2/(4 Tr^2)) for a
    Gaussian |R| of e^-1 width Tr. Both scales tend to 1 for Td << T0.
    """

    cn_scale: float
    cp_scale: float

    def __post_init__(self):
        for name in ("cn_scale", "cp_scale"):
            val = getattr(self, name)
            if not (0.0 <= val <= 1.0):
                raise ConfigError(f"TemporalFactors.{name} must lie in [0, 1]")

    @classmethod
    def unit(cls):
        """Narrowband limit (filters much slower than the source)."""
        return cls(cn_scale=1.0, cp_scale=1.0)


def _filter_overlap(coherence_time, integration_time):
    return 1.0 / math.sqrt(1.0 + integration_time**2 / (4.0 * coherence_time**2))


def temporal_factors(src: GsmSource, det: DetectorModel) -> TemporalFactors:
    """Temporal contrast scales for a source/detector combination.

    The phase-insensitive correlation decays on the coherence time T0;
    the quantum phase-sensitive one decays on T0/sqrt(2), giving the
    characteristic sqrt(1 + Td^2/(2 T0^2)) denominator instead of the
    classical sqrt(1 + Td^2/(4 T0^2)). Thermal sources carry no
    phase-sensitive correlation at all, so their cp_scale is zero.
    """
    t0 = src.coherence_time
    td = det.integration_time
    cn = _filter_overlap(t0, td)
    if src.source_class is SourceClass.THERMAL:
        cp = 0.0
    elif src.source_class is SourceClass.CLASSICAL_PS:
        cp = cn
    else:
        cp = _filter_overlap(t0 / math.sqrt(2.0), td)
    return TemporalFactors(cn_scale=cn, cp_scale=cp)


@dataclass(frozen=True)
class GhostImage:
    """Scan of the photocurrent cross correlation C(rho1).

    `values` and `background` share the scan-grid shape; `cn` and `cp`
    are the image-bearing amplitudes that multiplied the kernel
    integrals. The background never exceeds the full correlation:
    image-bearing terms are non-negative. Monte Carlo estimates are
    exempt from that check (meta key "empirical"): sampling noise puts
    scan points with negligible true signal on either side of the
    estimated background.
    """

    axes: tuple
    values: np.ndarray
    background: np.ndarray
    cn: float = 0.0
    cp: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        axes = _validate_axes(self.axes)
        vals = np.asarray(self.values, dtype=float)
        bg = np.asarray(self.background, dtype=float)
        expected = tuple(a.size for a in axes)
        if vals.shape != expected or bg.shape != expected:
            raise ConfigError("image/background shape does not match the scan axes")
        if np.any(bg < 0):
            raise ConfigError("background must be non-negative")
        if not self.meta.get("empirical") and np.any(vals - bg < -1e-12 * bg):
            raise ConfigError("image fell below its background: image terms must be non-negative")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "background", bg)

    @property
    def ndim(self):
        return len(self.axes)

    @property
    def image_term(self):
        """C - C0, the object-bearing part of the scan."""
        return self.values - self.background

    def points(self):
        """Scan positions as an (N, ndim) array in grid raveling order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    def to_csv(self, path):
        pts = self.points()
        if self.ndim == 1:
            pts = np.column_stack([pts[:, 0], np.zeros(pts.shape[0])])
        write_image_csv(path, pts, self.values.ravel())

    def to_gridfile(self, path):
        meta = {
            "kind": "ghost_image",
            "axes": [
                {"start": float(a[0]), "n": int(a.size)} for a in self.axes
            ],
            **{k: v for k, v in self.meta.items() if isinstance(v, (str, int, float, bool))},
        }
        spacing = [_axis_spacing(a) for a in self.axes]
        write_grid(path, self.values, spacing, meta)

    def to_pgm(self, path):
        lo = float(self.background.min())
        hi = float(self.values.max())
        write_pgm(path, np.atleast_2d(self.values), lo, hi)


def _kernel_weight_1d(kern: CorrKernel, scan, axis):
    """|K(x1, x)|^2 on scan x object-axis, plus per-dim factors in 2-D."""
    if kern.is_closed:
        cg = kern.closed
        x1 = scan[:, None]
        x = axis[None, :]
        comb = x + x1 if cg.coordinate is PairCoordinate.SUM else x - x1
        return np.exp(
            -2.0 * (x1**2 + x**2) / cg.envelope_radius**2
            - comb**2 / cg.coherence_radius**2
        )
    pts = kern.grid.points
    dx = kern.grid.spacing
    idx = []
    for s in scan:
        j = int(np.argmin(np.abs(pts - s)))
        if abs(pts[j] - s) > _AXIS_MATCH_TOL * max(dx, 1.0):
            raise ConfigError(
                "scan positions must coincide with the kernel grid for "
                "grid-sampled kernels"
            )
        idx.append(j)
    if not np.allclose(axis, pts, atol=_AXIS_MATCH_TOL * dx):
        raise ConfigError("object grid does not match the kernel grid after resampling")
    return np.abs(kern.values[idx, :]) ** 2


def _weight_amplitude(kern: CorrKernel):
    return abs(kern.closed.amplitude) ** 2 if kern.is_closed else 1.0


def _image_integral(kern: CorrKernel, obj: ObjectMask, det: DetectorModel, absorb):
    """integral over A2 of |K(rho1, rho)|^2 |T|^2 for every scan point."""
    if not kern.is_closed:
        if obj.ndim != 1:
            raise ConfigError("grid kernels support 1-D slice imaging only")
        target = obj
        if not np.array_equal(obj.axes[0], kern.grid.points):
            target = obj.resample_to((kern.grid.points,))
        f = absorb(target) * target.cell_area
        w = _kernel_weight_1d(kern, det.scan_axes[0], target.axes[0])
        return w @ f.ravel()
    if obj.ndim != det.ndim:
        raise ConfigError("object and scan grids have different dimensionality")
    f = absorb(obj) * obj.cell_area
    amp2 = _weight_amplitude(kern)
    if obj.ndim == 1:
        w = _kernel_weight_1d(kern, det.scan_axes[0], obj.axes[0])
        return amp2 * (w @ f)
    wx = _kernel_weight_1d(kern, det.scan_axes[0], obj.axes[0])
    wy = _kernel_weight_1d(kern, det.scan_axes[1], obj.axes[1])
    return amp2 * (wx @ f @ wy.T)


def _diag_flux(kern: CorrKernel, axes):
    """K(rho, rho) on a grid: the mean flux density profile."""
    if kern.is_closed:
        cg = kern.closed
        if cg.coordinate is not PairCoordinate.DIFFERENCE:
            raise ConfigError("auto-correlation kernels must use the difference coordinate")
        grids = np.meshgrid(*axes, indexing="ij")
        r2 = sum(g**2 for g in grids)
        # The sum coordinate on the diagonal would add exp(-2 r^2/w^2);
        # difference-coordinate kernels have unit coherence factor here.
        return np.abs(cg.amplitude) * np.exp(-2.0 * r2 / cg.envelope_radius**2)
    if len(axes) != 1:
        raise ConfigError("grid auto-correlation kernels are 1-D slice objects")
    pts = kern.grid.points
    diag = np.real(np.diag(kern.values))
    idx = []
    for s in axes[0]:
        j = int(np.argmin(np.abs(pts - s)))
        if abs(pts[j] - s) > _AXIS_MATCH_TOL * max(kern.grid.spacing, 1.0):
            raise ConfigError(
                "requested positions must coincide with the kernel grid for "
                "grid-sampled auto-correlations"
            )
        idx.append(j)
    return diag[idx].copy()


def _envelope_radius(kern: CorrKernel) -> float:
    """e^-2 intensity radius of the beam the kernel describes."""
    if kern.is_closed:
        return kern.closed.envelope_radius
    x = kern.grid.points
    prof = np.clip(np.real(np.diag(kern.values)), 0.0, None)
    total = prof.sum()
    if total <= 0:
        raise ConfigError("kernel diagonal carries no flux")
    var = float((prof * x**2).sum() / total)
    return 2.0 * math.sqrt(var)


def background_level(
    kn_auto_1: CorrKernel, kn_auto_2: CorrKernel, obj: ObjectMask, det: DetectorModel
):
    """Featureless background: product of mean detected fluxes.

    C0(rho1) = eta^2 * K11(rho1, rho1) * integral_A2 K22(rho, rho)
    |T(rho)|^2 drho, evaluated on the scan grid. Both arguments must be
    phase-insensitive auto-correlation kernels of the respective arms.
    """
    for kern in (kn_auto_1, kn_auto_2):
        if kern.kind is not KernelKind.PHASE_INSENSITIVE:
            raise ConfigError("background needs phase-insensitive auto-correlations")
    if not kn_auto_2.is_closed and obj.ndim == 1:
        if not np.array_equal(obj.axes[0], kn_auto_2.grid.points):
            obj = obj.resample_to((kn_auto_2.grid.points,))
    mask = det.bucket_over(obj)
    flux2 = _diag_flux(kn_auto_2, obj.axes)
    bucket_flux = float(
        (flux2 * np.abs(obj.values) ** 2 * mask).sum() * obj.cell_area
    )
    flux1 = _diag_flux(kn_auto_1, det.scan_axes)
    return det.quantum_efficiency**2 * flux1 * bucket_flux


def synthesize_image(
    kn: Optional[CorrKernel],
    kp: Optional[CorrKernel],
    obj: ObjectMask,
    det: DetectorModel,
    temporal: TemporalFactors,
    kn_auto_1: Optional[CorrKernel] = None,
    kn_auto_2: Optional[CorrKernel] = None,
) -> GhostImage:
    """Assemble the ghost image from cross-correlation kernels.

    `kn` and `kp` are the phase-insensitive and phase-sensitive cross
    kernels at the object plane (at least one required). The background
    needs the arm auto-correlations; when omitted they default to `kn`,
    which is exact for thermal and classical phase-sensitive sources
    where the reference duplicates the signal statistics. Sources with
    no phase-insensitive cross correlation must pass them explicitly.
    """
    if kn is None and kp is None:
        raise ConfigError("synthesize_image needs at least one cross-correlation kernel")
    if kn is not None and kn.kind is not KernelKind.PHASE_INSENSITIVE:
        raise ConfigError("kn must be a phase-insensitive kernel")
    if kp is not None and kp.kind is not KernelKind.PHASE_SENSITIVE:
        raise ConfigError("kp must be a phase-sensitive kernel")
    auto1 = kn_auto_1 if kn_auto_1 is not None else kn
    auto2 = kn_auto_2 if kn_auto_2 is not None else kn
    if auto1 is None or auto2 is None:
        raise ConfigError(
            "background needs phase-insensitive auto-correlation kernels; "
            "pass kn_auto_1/kn_auto_2 when kn is absent"
        )

    eta = det.quantum_efficiency
    background = np.asarray(background_level(auto1, auto2, obj, det), dtype=float)
    if background.ndim == 0:
        background = np.full(tuple(a.size for a in det.scan_axes), float(background))

    def absorb(mask_obj):
        return np.abs(mask_obj.values) ** 2 * det.bucket_over(mask_obj)

    values = background.copy()
    cn = cp = 0.0
    if kn is not None:
        cn = eta**2 * temporal.cn_scale
        values = values + cn * _image_integral(kn, obj, det, absorb)
    if kp is not None:
        cp = eta**2 * temporal.cp_scale
        values = values + cp * _image_integral(kp, obj, det, absorb)

    ref = kp if kp is not None else kn
    envelope = _envelope_radius(auto2)
    if det.bucket_sufficiently_large is not None:
        bucket_ok = det.bucket_sufficiently_large
    else:
        bucket_ok = det.effective_bucket_radius(obj) >= 4.0 * envelope
    meta = {
        "source_class": ref.meta.get("source_class", "unknown"),
        "regime": ref.meta.get("regime", "unknown"),
        "normalization": "eta^2 flux product background; eta^2 temporal-scale amplitudes",
        "bucket_sufficiently_large": bool(bucket_ok),
        "envelope_radius": envelope,
        "quantum_efficiency": eta,
        "cn_scale": temporal.cn_scale,
        "cp_scale": temporal.cp_scale,
    }
    if ref.is_closed:
        meta["kernel_envelope_radius"] = ref.closed.envelope_radius
        meta["kernel_coherence_radius"] = ref.closed.coherence_radius
        meta["kernel_coordinate"] = ref.closed.coordinate.value
        meta["slice_mode"] = ref.closed.ndim == 1
    else:
        meta["slice_mode"] = True
    return GhostImage(
        axes=det.scan_axes,
        values=values,
        background=background,
        cn=cn,
        cp=cp,
        meta=meta,
    )
