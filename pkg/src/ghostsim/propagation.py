"""Propagation of correlation kernels through paraxial free space.

Kernels describe the spatial part of either the phase-insensitive
cross correlation <E1^dag(rho1) E2(rho2)> or the phase-sensitive one
<E1(rho1) E2(rho2)> between the two arms at a given plane. Both obey
free-space Fresnel transport with kernel

    h(rho - rho') = (k0 / (i 2 pi L)) exp(i k0 |rho - rho'|^2 / (2 L)),

applied conjugated-then-plain for phase-insensitive kernels and
plain-plain for phase-sensitive ones. Closed Gaussian forms reproduce
the asymptotic near/far-field results; the quadrature path evaluates
the double Fresnel integral on 1-D slice grids.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ConfigError, GridSamplingError, RegimeError
from .sources import GsmSource, SourceClass, crosscorr_ps, sqrt_spectrum_prefactor

SPEED_OF_LIGHT = 299792458.0

NEAR_FIELD_MIN_D0 = 10.0
FAR_FIELD_MAX_D0 = 0.1
DEEP_FAR_FIELD_MAX = 0.1

__all__ = [
    "KernelKind",
    "PairCoordinate",
    "Regime",
    "RegimeInfo",
    "Lens",
    "OpticalPath",
    "Grid1D",
    "ClosedGaussian",
    "CorrKernel",
    "fresnel_regime",
    "source_kernel",
    "propagated_envelope_estimate",
    "propagate_closed_gsm",
    "propagate_numeric",
    "relay_image_map",
]


class KernelKind(enum.Enum):
    PHASE_INSENSITIVE = "phase_insensitive"
    PHASE_SENSITIVE = "phase_sensitive"


class PairCoordinate(enum.Enum):
    """Which two-point combination the coherence factor depends on."""

    DIFFERENCE = "difference"
    SUM = "sum"


class Regime(enum.Enum):
    NEAR_FIELD = "NearField"
    FAR_FIELD = "FarField"
    INTERMEDIATE = "Intermediate"


@dataclass(frozen=True)
class RegimeInfo:
    """Result of the Fresnel-number classification.

    d0 : Fresnel number product k0 a0 rho0 / (2 L)
    collimated_fresnel : k0 a0^2 / (2 L), the beam-size Fresnel number
        gating the deep-far-field (phase-sensitive) closed forms
    deep_far_field : True when collimated_fresnel <= 0.1
    """

    regime: Regime
    d0: float
    collimated_fresnel: float
    deep_far_field: bool


@dataclass(frozen=True)
class Lens:
    """Thin lens in the pinhole arm, imaging over d1 + d2."""

    focal_length: float
    d1: float
    d2: float

    def __post_init__(self):
        for name in ("focal_length", "d1", "d2"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ConfigError(f"Lens.{name} must be a positive finite number")
        lhs = 1.0 / self.d1 + 1.0 / self.d2
        rhs = 1.0 / self.focal_length
        if abs(lhs - rhs) > 1e-9 * rhs:
            raise ConfigError(
                "lens does not satisfy the thin-lens imaging condition "
                f"1/d1 + 1/d2 = 1/f (got {lhs:.12g} vs {rhs:.12g})"
            )

    @property
    def magnification(self):
        return -self.d2 / self.d1


@dataclass(frozen=True)
class OpticalPath:
    """Free-space arm of length `distance` at wavenumber `wavenumber`.

    An optional thin lens (pinhole arm) enables relayed ghost images;
    `reference_path_length` is the physical length of the reference arm
    whose mismatch against d1 + d2 must be compensated electronically.
    The analytic image formulas assume that delay is applied, so it is
    reported, never folded into the kernels.
    """

    distance: float
    wavenumber: float
    lens: Optional[Lens] = None
    reference_path_length: Optional[float] = None

    def __post_init__(self):
        for name in ("distance", "wavenumber"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ConfigError(f"OpticalPath.{name} must be a positive finite number")
        if self.reference_path_length is not None:
            if self.lens is None:
                raise ConfigError(
                    "reference_path_length requires a lens (the delay is "
                    "measured against d1 + d2)"
                )
            if self.reference_path_length <= 0:
                raise ConfigError("reference_path_length must be positive")

    @property
    def wavelength(self):
        return 2.0 * math.pi / self.wavenumber

    @property
    def electronic_delay(self):
        """Delay (L_R - d1 - d2)/c to apply to the reference current."""
        if self.reference_path_length is None or self.lens is None:
            return 0.0
        return (
            self.reference_path_length - self.lens.d1 - self.lens.d2
        ) / SPEED_OF_LIGHT


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-D transverse grid of sample centers, symmetric in 0."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ConfigError("Grid1D needs >= 2 points")
        steps = np.diff(pts)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9):
            raise ConfigError("Grid1D must be uniform and increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def centered(cls, n, extent):
        """n midpoint samples covering a symmetric span of `extent`."""
        if n < 2 or extent <= 0:
            raise ConfigError("Grid1D.centered needs n >= 2 and extent > 0")
        dx = extent / n
        return cls((np.arange(n) - (n - 1) / 2.0) * dx)

    @property
    def n(self):
        return self.points.size

    @property
    def spacing(self):
        return float(self.points[1] - self.points[0])

    @property
    def extent(self):
        return self.spacing * self.n


@dataclass(frozen=True)
class ClosedGaussian:
    """Parameters of a closed Gaussian-Schell kernel.

    K(rho1, rho2) = amplitude
                    * exp(-(|rho1|^2 + |rho2|^2) / envelope_radius^2)
                    * exp(-|rho2 -+ rho1|^2 / (2 coherence_radius^2))

    with the difference (-) or sum (+) combination selected by
    `coordinate`. `ndim` records how many transverse dimensions the
    amplitude normalization refers to (2 for physical beams, 1 for
    slice-mode comparisons against the quadrature propagator).
    """

    amplitude: complex
    envelope_radius: float
    coherence_radius: float
    coordinate: PairCoordinate = PairCoordinate.DIFFERENCE
    ndim: int = 2

    def __post_init__(self):
        if self.envelope_radius <= 0 or self.coherence_radius <= 0:
            raise ConfigError("Gaussian kernel radii must be positive")
        if self.ndim not in (1, 2):
            raise ConfigError("ClosedGaussian.ndim must be 1 or 2")

    def evaluate_slice(self, x1, x2):
        """Sample the 1-D slice K(x1, x2) (other dimension on axis)."""
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if self.coordinate is PairCoordinate.DIFFERENCE:
            c = x2 - x1
        else:
            c = x2 + x1
        return (
            self.amplitude
            * np.exp(-(x1**2 + x2**2) / self.envelope_radius**2)
            * np.exp(-(c**2) / (2.0 * self.coherence_radius**2))
        )


_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class CorrKernel:
    """A two-arm correlation kernel at some plane.

    Exactly one representation is populated: `closed` (analytic
    Gaussian parameters) or `grid` + `values` (1-D slice samples,
    values[i, j] = K(x_i, x_j)). Phase-insensitive grid kernels must be
    Hermitian, phase-sensitive ones symmetric, to 1e-10 of the peak.
    """

    kind: KernelKind
    plane: str = "source"
    closed: Optional[ClosedGaussian] = None
    grid: Optional[Grid1D] = None
    values: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        has_closed = self.closed is not None
        has_grid = self.grid is not None and self.values is not None
        if has_closed == has_grid:
            raise ConfigError("CorrKernel needs exactly one of closed/grid representations")
        if has_grid:
            vals = np.asarray(self.values, dtype=complex)
            n = self.grid.n
            if vals.shape != (n, n):
                raise ConfigError(f"kernel values must be ({n}, {n}) to match the grid")
            scale = float(np.abs(vals).max()) or 1.0
            if self.kind is KernelKind.PHASE_INSENSITIVE:
                err = float(np.abs(vals - vals.conj().T).max())
                if err > _SYMMETRY_TOL * scale:
                    raise ConfigError(
                        f"phase-insensitive kernel is not Hermitian (max asymmetry {err:.3g})"
                    )
            else:
                err = float(np.abs(vals - vals.T).max())
                if err > _SYMMETRY_TOL * scale:
                    raise ConfigError(
                        f"phase-sensitive kernel is not symmetric (max asymmetry {err:.3g})"
                    )
            object.__setattr__(self, "values", vals)

    @property
    def is_closed(self):
        return self.closed is not None

    def sample(self, grid: Grid1D) -> "CorrKernel":
        """Sample a closed kernel onto a 1-D slice grid (ndim = 1)."""
        if not self.is_closed:
            raise ConfigError("kernel is already grid-sampled")
        x = grid.points
        vals = self.closed.evaluate_slice(x[:, None], x[None, :])
        meta = dict(self.meta)
        meta["sampled_from_closed"] = True
        return CorrKernel(
            kind=self.kind, plane=self.plane, grid=grid, values=vals, meta=meta
        )

    def trace_flux(self):
        """Sum of K(x, x) dx: the 1-D slice analogue of arm flux."""
        if self.is_closed:
            raise ConfigError("trace_flux applies to grid kernels")
        return float(np.real(np.trace(self.values)) * self.grid.spacing)


def fresnel_regime(src: GsmSource, path: OpticalPath) -> RegimeInfo:
    """Classify a source/path pair by the Fresnel number product.

    D0 = k0 a0 rho0 / (2 L). NearField for D0 >= 10, FarField for
    D0 <= 0.1, Intermediate otherwise. The beam-size Fresnel number
    k0 a0^2 / (2 L) <= 0.1 additionally gates the phase-sensitive
    deep-far-field closed forms and is reported alongside.
    """
    d0 = (
        path.wavenumber
        * src.beam_radius
        * src.coherence_length
        / (2.0 * path.distance)
    )
    coll = path.wavenumber * src.beam_radius**2 / (2.0 * path.distance)
    if d0 >= NEAR_FIELD_MIN_D0:
        regime = Regime.NEAR_FIELD
    elif d0 <= FAR_FIELD_MAX_D0:
        regime = Regime.FAR_FIELD
    else:
        regime = Regime.INTERMEDIATE
    return RegimeInfo(
        regime=regime,
        d0=float(d0),
        collimated_fresnel=float(coll),
        deep_far_field=bool(coll <= DEEP_FAR_FIELD_MAX),
    )


def _source_closed(src: GsmSource, kind: KernelKind, ndim: int) -> ClosedGaussian:
    amp = src.peak_flux_density
    if kind is KernelKind.PHASE_INSENSITIVE:
        return ClosedGaussian(
            amplitude=complex(amp),
            envelope_radius=src.beam_radius,
            coherence_radius=src.coherence_length,
            coordinate=PairCoordinate.DIFFERENCE,
            ndim=ndim,
        )
    if src.source_class is SourceClass.THERMAL:
        raise RegimeError(
            "thermal sources have no phase-sensitive cross correlation",
            hint="use kind=PHASE_INSENSITIVE or a phase-sensitive source class",
        )
    phase = complex(np.exp(1j * src.cross_corr_phase))
    if src.source_class is SourceClass.CLASSICAL_PS:
        return ClosedGaussian(
            amplitude=amp * phase,
            envelope_radius=src.beam_radius,
            coherence_radius=src.coherence_length,
            coordinate=PairCoordinate.DIFFERENCE,
            ndim=ndim,
        )
    kappa = sqrt_spectrum_prefactor(src)
    return ClosedGaussian(
        amplitude=kappa * phase,
        envelope_radius=src.beam_radius,
        coherence_radius=src.coherence_length / math.sqrt(2.0),
        coordinate=PairCoordinate.DIFFERENCE,
        ndim=ndim,
    )


def source_kernel(src: GsmSource, kind: KernelKind, ndim: int = 1) -> CorrKernel:
    """Source-plane correlation kernel in closed form.

    The phase-insensitive kernel is the Schell-model form shared by all
    three source classes. Phase-sensitive kernels depend on the class:
    thermal raises, classical is the same Gaussian with the cross phase,
    quantum carries the sqrt-spectrum prefactor and a coherence radius
    shrunk by sqrt(2).
    """
    base = _source_closed(src, kind, ndim)
    meta = {
        "source_class": src.source_class.value,
        "regime": "Source",
        "normalization": "sqrt-spectrum/ordinary-frequency",
    }
    return CorrKernel(kind=kind, plane="source", closed=base, meta=meta)


def propagated_envelope_estimate(src: GsmSource, path: OpticalPath) -> float:
    """Intensity e^-2 radius of the beam after free-space travel.

    Uses the Schell-model spreading law: the squared radius grows by
    (2L/k0)^2 (1/a0^2 + 1/rho0^2), which recovers the source radius in
    the near field and the exact far-field width. Good for sizing grids
    in any regime; not a substitute for propagating the kernel.
    """
    spread = (2.0 * path.distance / path.wavenumber) ** 2 * (
        1.0 / src.beam_radius**2 + 1.0 / src.coherence_length**2
    )
    return math.sqrt(src.beam_radius**2 + spread)


def propagate_closed_gsm(
    src: GsmSource, path: OpticalPath, kind: KernelKind, ndim: int = 2
) -> CorrKernel:
    """Closed-form kernel at the end of `path` for a Gaussian source.

    Near field (D0 >= 10): the source-plane kernel unchanged. Far field
    (D0 <= 0.1): the same Gaussian form with the substitutions

        envelope -> 2 L / (k0 * coherence_radius)
        coherence -> 2 L / (k0 * envelope_radius)

    which reproduce (a_L, rho_L) = (2L/k0 rho0, 2L/k0 a0) for
    phase-insensitive and classical phase-sensitive kernels and
    a_L = 2 sqrt(2) L / (k0 rho0) for the quantum one. Phase-sensitive
    far-field kernels switch to the sum coordinate (inverted imaging)
    and additionally require the deep-far-field gate
    k0 a0^2/(2L) <= 0.1. Amplitudes scale with the flux-conserving
    factor (envelope * coherence * k0 / (2 L))^ndim. Intermediate
    regimes are rejected with a pointer at the quadrature path.
    """
    info = fresnel_regime(src, path)
    base = _source_closed(src, kind, ndim)
    meta = {
        "source_class": src.source_class.value,
        "regime": info.regime.value,
        "d0": info.d0,
        "distance": path.distance,
        "wavenumber": path.wavenumber,
        "normalization": "sqrt-spectrum/ordinary-frequency",
    }
    if info.regime is Regime.INTERMEDIATE:
        raise RegimeError(
            f"D0 = {info.d0:.3g} is between the far-field (<= {FAR_FIELD_MAX_D0}) and "
            f"near-field (>= {NEAR_FIELD_MIN_D0}) gates; no closed form applies",
            hint="intermediate regime: rerun with mode=numeric (1-D slice quadrature)",
        )
    if info.regime is Regime.NEAR_FIELD:
        return CorrKernel(kind=kind, plane="source", closed=base, meta=meta)

    if kind is KernelKind.PHASE_SENSITIVE and not info.deep_far_field:
        raise RegimeError(
            f"phase-sensitive far-field forms need k0 a0^2/(2L) <= {DEEP_FAR_FIELD_MAX} "
            f"(got {info.collimated_fresnel:.3g})",
            hint="increase L into the deep far field or rerun with mode=numeric",
        )
    two_l_over_k = 2.0 * path.distance / path.wavenumber
    env_l = two_l_over_k / base.coherence_radius
    coh_l = two_l_over_k / base.envelope_radius
    scale = (base.envelope_radius * base.coherence_radius / two_l_over_k) ** base.ndim
    coordinate = (
        PairCoordinate.DIFFERENCE
        if kind is KernelKind.PHASE_INSENSITIVE
        else PairCoordinate.SUM
    )
    far = ClosedGaussian(
        amplitude=base.amplitude * scale,
        envelope_radius=env_l,
        coherence_radius=coh_l,
        coordinate=coordinate,
        ndim=base.ndim,
    )
    return CorrKernel(kind=kind, plane=f"z={path.distance:g}", closed=far, meta=meta)


def _fresnel_matrix(path: OpticalPath, x_out, x_in, dx_in):
    """1-D Fresnel kernel matrix including the quadrature weight."""
    k0 = path.wavenumber
    L = path.distance
    pref = np.sqrt(k0 / (2.0 * np.pi * L)) * np.exp(-1j * np.pi / 4.0)
    diff = x_out[:, None] - x_in[None, :]
    return pref * np.exp(1j * k0 * diff**2 / (2.0 * L)) * dx_in


def _check_aliasing(path: OpticalPath, grid_in: Grid1D, grid_out: Grid1D):
    span = max(
        grid_out.points[-1] - grid_in.points[0],
        grid_in.points[-1] - grid_out.points[0],
    )
    bound = path.wavelength * path.distance / (2.0 * span)
    if grid_in.spacing > bound:
        raise GridSamplingError(
            f"input grid spacing {grid_in.spacing:.3g} m exceeds the Fresnel-phase "
            f"Nyquist bound lambda L / (2 extent) = {bound:.3g} m for extent "
            f"{span:.3g} m; refine the grid or shrink its extent"
        )


def propagate_numeric(
    kern: CorrKernel,
    path: OpticalPath,
    grid: Optional[Grid1D] = None,
    out_grid: Optional[Grid1D] = None,
) -> CorrKernel:
    """Quadrature propagation of a kernel along `path`, 1-D slice mode.

    Applies the double Fresnel integral with composite-midpoint weights
    on uniform grids: conj(h) x h for phase-insensitive kernels,
    h x h for phase-sensitive ones. `grid` samples a closed kernel
    first (it must be omitted or equal for grid kernels); `out_grid`
    defaults to the input grid. The input spacing must satisfy the
    aliasing guard dx <= lambda L / (2 extent), with extent the largest
    input-to-output separation sampled.
    """
    if path.lens is not None:
        raise ConfigError(
            "propagate_numeric handles free-space paths only; apply lenses "
            "through relay_image_map"
        )
    if kern.is_closed:
        if grid is None:
            raise ConfigError("propagating a closed kernel numerically needs a grid")
        kern = kern.sample(grid)
    elif grid is not None and grid.points.shape != kern.grid.points.shape:
        raise ConfigError("grid argument conflicts with the kernel's own grid")
    grid_in = kern.grid
    grid_out = out_grid if out_grid is not None else grid_in
    _check_aliasing(path, grid_in, grid_out)
    H = _fresnel_matrix(path, grid_out.points, grid_in.points, grid_in.spacing)
    if kern.kind is KernelKind.PHASE_INSENSITIVE:
        out = H.conj() @ kern.values @ H.T
        # Exact Hermiticity can drift at the last bit; restore it.
        out = 0.5 * (out + out.conj().T)
    else:
        out = H @ kern.values @ H.T
        out = 0.5 * (out + out.T)
    meta = dict(kern.meta)
    meta["propagated"] = f"numeric z+={path.distance:g}"
    return CorrKernel(
        kind=kern.kind,
        plane=f"{kern.plane}+{path.distance:g}",
        grid=grid_out,
        values=out,
        meta=meta,
    )


def relay_image_map(img, path: OpticalPath, detector_axes=None):
    """Map a ghost image through the pinhole-arm relay lens.

    C'(rho1) = M^2 C(M rho1) with M = -d2/d1. Without explicit
    `detector_axes` the image is returned on the natural axes
    (object axes divided by |M|), where the map is an exact flip and
    scale; explicit axes are linearly resampled and must keep M*u
    inside the original scan support. Requires the image's bucket to
    have been flagged sufficiently large, as the identity assumes the
    bucket collects the full reference beam.
    """
    from .imaging import GhostImage  # local import to avoid a cycle

    if path.lens is None:
        raise ConfigError("relay_image_map needs a path with a lens")
    if not img.meta.get("bucket_sufficiently_large", False):
        raise RegimeError(
            "relay identity requires a bucket flagged sufficiently large",
            hint="enlarge the bucket to >= 4x the beam envelope radius",
        )
    m = path.lens.magnification
    m2 = m * m
    if detector_axes is None:
        new_axes = tuple(ax / abs(m) for ax in img.axes)
        flip = tuple(slice(None, None, -1) for _ in img.axes)
        # C'(u_i) with u_i = x_i/|M|: M u_i = -x_i, an exact flip of
        # symmetric axes.
        for ax in img.axes:
            if not np.allclose(ax, -ax[::-1], atol=1e-9 * abs(ax).max()):
                raise ConfigError("default relay mapping needs symmetric scan axes")
        values = m2 * img.values[flip]
        background = m2 * img.background[flip]
    else:
        new_axes = tuple(np.asarray(a, dtype=float) for a in detector_axes)
        if len(new_axes) != len(img.axes):
            raise ConfigError("detector_axes dimensionality mismatch")
        targets = []
        for u, ax in zip(new_axes, img.axes):
            t = m * u
            if t.min() < ax.min() - 1e-12 or t.max() > ax.max() + 1e-12:
                raise ConfigError(
                    f"magnification {m:g} pushes the resampled support off-grid"
                )
            targets.append(t)
        if len(img.axes) == 1:
            values = m2 * np.interp(targets[0], img.axes[0], img.values)
            background = m2 * np.interp(targets[0], img.axes[0], img.background)
        else:
            from scipy.interpolate import RegularGridInterpolator

            interp_v = RegularGridInterpolator(img.axes, img.values)
            interp_b = RegularGridInterpolator(img.axes, img.background)
            mesh = np.meshgrid(*targets, indexing="ij")
            pts = np.stack([g.ravel() for g in mesh], axis=-1)
            values = m2 * interp_v(pts).reshape([t.size for t in targets])
            background = m2 * interp_b(pts).reshape([t.size for t in targets])
    meta = dict(img.meta)
    meta["relay_magnification"] = m
    meta["electronic_delay"] = path.electronic_delay
    return GhostImage(
        axes=new_axes,
        values=values,
        background=background,
        cn=img.cn,
        cp=img.cp,
        meta=meta,
    )
