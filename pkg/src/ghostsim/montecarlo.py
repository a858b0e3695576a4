"""Monte Carlo validation of the analytic pipeline, classical sources.

Classical Gaussian-state predictions are checkable by brute force:
draw random field snapshots with the prescribed Gaussian-Schell
statistics, push each one through the same Fresnel quadrature the
kernels use, form the pinhole/bucket photocurrent product, and average.
One snapshot stands for one temporal coherence cell, so the empirical
estimate corresponds to unit temporal contrast factors.

Fields are synthesized spectrally: a stationary unit-variance complex
Gaussian process with the target coherence function is built by
filtering white noise on a periodically embedded grid (extent padded
until wraparound correlation is negligible), then cropped and shaped
by the beam envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, GridSamplingError, RegimeError
from .imaging import DetectorModel, GhostImage, ObjectMask
from .propagation import Grid1D, OpticalPath, _check_aliasing, _fresnel_matrix
from .sources import GsmSource, SourceClass

__all__ = [
    "FieldEnsemble",
    "EmpiricalResult",
    "sample_gsm_field",
    "make_pair",
    "make_ensemble",
    "empirical_ghost_image",
    "moment_factoring_residual",
]

_CHUNK = 2048


@dataclass(frozen=True)
class FieldEnsemble:
    """Snapshot ensemble of signal and reference fields on one grid.

    signal/reference have shape (n_snapshots, grid.n); rows are
    independent coherence cells. Reproducible from (seed, config):
    generation metadata records both.
    """

    grid: Grid1D
    signal: np.ndarray
    reference: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        sig = np.asarray(self.signal, dtype=complex)
        ref = np.asarray(self.reference, dtype=complex)
        if sig.ndim != 2 or sig.shape[1] != self.grid.n:
            raise ConfigError("signal must have shape (n_snapshots, grid.n)")
        if ref.shape != sig.shape:
            raise ConfigError("signal and reference grids must be congruent")
        if sig.shape[0] < 1:
            raise ConfigError("ensemble needs at least one snapshot")
        object.__setattr__(self, "signal", sig)
        object.__setattr__(self, "reference", ref)

    @property
    def n_snapshots(self):
        return int(self.signal.shape[0])


@dataclass(frozen=True)
class EmpiricalResult:
    """Monte Carlo image estimate with per-point standard errors."""

    image: GhostImage
    standard_error: np.ndarray
    n_snapshots: int


def _coherence_eigenvalues(src: GsmSource, grid: Grid1D):
    """Spectral weights of the periodically embedded coherence kernel."""
    rho0 = src.coherence_length
    dx = grid.spacing
    # Pad the embedding so the circular kernel's wraparound tail stays
    # below 1e-13 across every separation the cropped grid realizes.
    pad = 7.8 * rho0
    target = max(8.0 * src.beam_radius, grid.extent + pad)
    m = int(math.ceil(target / dx))
    m = max(m, grid.n)
    k = np.arange(m)
    dist = np.minimum(k, m - k) * dx
    corr = np.exp(-(dist**2) / (2.0 * rho0**2))
    lam = np.fft.fft(corr).real
    lam = np.clip(lam, 0.0, None)
    return lam, m


def sample_gsm_field(src: GsmSource, grid: Grid1D, seed, n_snapshots: int = 1):
    """Random field snapshots with Gaussian-Schell statistics.

    Returns E with shape (n_snapshots, grid.n) (squeezed to (grid.n,)
    for a single snapshot):

        E(x) = sqrt(2 P / (pi a0^2)) exp(-x^2/a0^2) w(x)

    where w is zero-mean circular complex Gaussian, unit variance,
    with <w*(x1) w(x2)> = exp(-(x2-x1)^2 / (2 rho0^2)). The grid must
    resolve the coherence length with at least 4 samples.
    """
    if grid.spacing > src.coherence_length / 4.0:
        raise GridSamplingError(
            f"grid spacing {grid.spacing:.3g} m is too coarse: need at least "
            f"4 samples per coherence length ({src.coherence_length:.3g} m)"
        )
    if n_snapshots < 1:
        raise ConfigError("n_snapshots must be >= 1")
    lam, m = _coherence_eigenvalues(src, grid)
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.empty((n_snapshots, grid.n), dtype=complex)
    amp = math.sqrt(src.peak_flux_density) * np.exp(
        -grid.points**2 / src.beam_radius**2
    )
    root = np.sqrt(lam)
    start = 0
    # The crop is phase-arbitrary for a stationary process; take the
    # leading samples.
    for lo in range(0, n_snapshots, _CHUNK):
        hi = min(lo + _CHUNK, n_snapshots)
        xi = rng.standard_normal((hi - lo, m)) + 1j * rng.standard_normal((hi - lo, m))
        xi *= math.sqrt(0.5)
        w = math.sqrt(m) * np.fft.ifft(root * xi, axis=1)
        out[lo:hi] = amp * w[:, start : start + grid.n]
    return out[0] if n_snapshots == 1 else out


def make_pair(src: GsmSource, fields):
    """Split source snapshots into (signal, reference) arm fields.

    Thermal sources duplicate the field into both arms, realizing the
    maximal phase-insensitive cross correlation. Classical
    phase-sensitive sources send the conjugate field (times the cross
    correlation phase) down the reference arm, which attains the
    classical ceiling of the phase-sensitive cross correlation and, by
    circularity, has none of the phase-insensitive kind. Quantum
    phase-sensitive states exceed that ceiling, so no classical
    ensemble realizes them.
    """
    fields = np.asarray(fields, dtype=complex)
    if src.source_class is SourceClass.THERMAL:
        return fields, fields.copy()
    if src.source_class is SourceClass.CLASSICAL_PS:
        return fields, np.conj(fields) * np.exp(1j * src.cross_corr_phase)
    raise RegimeError(
        "quantum phase-sensitive sources have no classical field ensemble",
        hint="use mode=analytic for quantum sources; Monte Carlo covers classical ones",
    )


def make_ensemble(
    src: GsmSource, grid: Grid1D, n_snapshots: int, seed
) -> FieldEnsemble:
    """Sample a full two-arm ensemble in one call."""
    fields = sample_gsm_field(src, grid, seed, n_snapshots=n_snapshots)
    fields = np.atleast_2d(fields)
    signal, reference = make_pair(src, fields)
    meta = {
        "source_class": src.source_class.value,
        "generator": "pcg64",
        "n_snapshots": int(n_snapshots),
        "grid_n": grid.n,
        "grid_spacing": grid.spacing,
    }
    return FieldEnsemble(
        grid=grid, signal=signal, reference=reference, seed=int(seed), meta=meta
    )


def _scan_indices(grid: Grid1D, scan_axis):
    idx = []
    for s in scan_axis:
        j = int(np.argmin(np.abs(grid.points - s)))
        if abs(grid.points[j] - s) > 1e-9 * max(grid.spacing, 1.0):
            raise ConfigError(
                "scan positions must coincide with the ensemble grid"
            )
        idx.append(j)
    return np.asarray(idx)


def empirical_ghost_image(
    ensemble: FieldEnsemble,
    path: Optional[OpticalPath],
    obj: ObjectMask,
    det: DetectorModel,
) -> EmpiricalResult:
    """Estimate the ghost image by averaging photocurrent products.

    Each snapshot's arm fields are propagated over `path` (None skips
    propagation: fields already at the measurement planes), the bucket
    integral of the masked signal intensity is taken, and the product
    with the pinhole intensity is averaged over snapshots:

        C_hat(rho1) = eta^2 * mean_k [ I1_k(rho1) * B_k ]

    The background estimate eta^2 * mean(I1) * mean(B) and per-point
    standard errors of C_hat accompany the image. A single snapshot
    yields an estimate with infinite standard error. Accumulation is
    chunked serially, so results are bitwise reproducible.
    """
    if det.ndim != 1 or obj.ndim != 1:
        raise ConfigError("Monte Carlo imaging runs in 1-D slice mode")
    grid = ensemble.grid
    if path is not None:
        if path.lens is not None:
            raise ConfigError("Monte Carlo propagation is free-space only")
        _check_aliasing(path, grid, grid)
        H = _fresnel_matrix(path, grid.points, grid.points, grid.spacing)
    else:
        H = None
    target = obj
    if not np.array_equal(obj.axes[0], grid.points):
        target = obj.resample_to((grid.points,))
    mask = det.bucket_over(target)
    absorb = (np.abs(target.values) ** 2 * mask) * grid.spacing
    scan_idx = _scan_indices(grid, det.scan_axes[0])
    eta2 = det.quantum_efficiency**2

    n = ensemble.n_snapshots
    n_scan = scan_idx.size
    sum_prod = np.zeros(n_scan)
    sum_prod2 = np.zeros(n_scan)
    sum_i1 = np.zeros(n_scan)
    sum_b = 0.0
    for lo in range(0, n, _CHUNK):
        sl = slice(lo, min(lo + _CHUNK, n))
        ref = ensemble.reference[sl]
        sig = ensemble.signal[sl]
        if H is not None:
            ref = ref @ H.T
            sig = sig @ H.T
        i1 = np.abs(ref[:, scan_idx]) ** 2
        bucket = (np.abs(sig) ** 2) @ absorb
        prod = i1 * bucket[:, None]
        sum_prod += prod.sum(axis=0)
        sum_prod2 += (prod**2).sum(axis=0)
        sum_i1 += i1.sum(axis=0)
        sum_b += bucket.sum()

    values = eta2 * sum_prod / n
    background = eta2 * (sum_i1 / n) * (sum_b / n)
    if n > 1:
        var = (sum_prod2 - sum_prod**2 / n) / (n - 1)
        se = eta2 * np.sqrt(np.clip(var, 0.0, None) / n)
    else:
        se = np.full(n_scan, np.inf)

    meta = {
        "empirical": True,
        "source_class": ensemble.meta.get("source_class", "unknown"),
        "n_snapshots": n,
        "seed": ensemble.seed,
        "quantum_efficiency": det.quantum_efficiency,
        "normalization": "eta^2 flux product background; unit temporal factors",
        "bucket_sufficiently_large": bool(
            det.bucket_sufficiently_large
            if det.bucket_sufficiently_large is not None
            else False
        ),
        "slice_mode": True,
    }
    image = GhostImage(
        axes=det.scan_axes,
        values=values,
        background=background,
        cn=eta2,
        cp=eta2,
        meta=meta,
    )
    return EmpiricalResult(image=image, standard_error=se, n_snapshots=n)


def moment_factoring_residual(
    ensemble: FieldEnsemble, idx1: int, idx2: int, n_batches: int = 50
):
    """Gaussian moment-factoring spot check at two fixed grid points.

    Returns (residual, standard_error) of

        <I1 I2> - <I1><I2> - |<E1* E2>|^2 - |<E1 E2>|^2

    with E1 the reference field at grid index idx1 and E2 the signal
    field at idx2. The statistic is computed on equal snapshot batches
    and summarized by the batch mean and its standard error; for
    Gaussian fields it converges to zero.
    """
    n = ensemble.n_snapshots
    if n < 2 * n_batches:
        raise ConfigError("too few snapshots for the requested batch count")
    e1 = ensemble.reference[:, idx1]
    e2 = ensemble.signal[:, idx2]
    edges = np.linspace(0, n, n_batches + 1, dtype=int)
    stats = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        a = e1[lo:hi]
        b = e2[lo:hi]
        i1 = np.abs(a) ** 2
        i2 = np.abs(b) ** 2
        stats.append(
            float(
                (i1 * i2).mean()
                - i1.mean() * i2.mean()
                - abs((np.conj(a) * b).mean()) ** 2
                - abs((a * b).mean()) ** 2
            )
        )
    stats = np.asarray(stats)
    return float(stats.mean()), float(stats.std(ddof=1) / math.sqrt(n_batches))
