"""Gaussian profile fitting used by metrology and the source-model checks.

House convention: all fits run as least squares on log-intensity,
restricted to samples above a floor relative to the peak, and are
initialized from second moments of the data treated as a density.
The model is isotropic,

    y = A * exp(-coef * |x - c|^2 / W^2)

so ``W`` is directly the e^-2 radius when ``coef = 2`` (point-spread
fits) and the squared-envelope radius when ``coef = 4`` (field-of-view
fits).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import ConfigError


@dataclass(frozen=True)
class GaussianFit:
    """Result of a radial Gaussian fit.

    amplitude : peak of the fitted model
    center    : (d,) model center
    radius    : W in the model above (units of the input points)
    coef      : exponent coefficient the model was fit with
    rms_log_residual : root-mean-square residual in log space
    n_samples : number of samples that entered the fit
    """

    amplitude: float
    center: np.ndarray
    radius: float
    coef: float
    rms_log_residual: float
    n_samples: int


def _second_moment_init(points, values):
    """Centroid and rms radius of `values` treated as a density."""
    w = np.clip(values, 0.0, None)
    total = w.sum()
    if total <= 0:
        raise ConfigError("cannot initialize fit: no positive samples")
    center = (points * w[:, None]).sum(axis=0) / total
    r2 = ((points - center) ** 2).sum(axis=1)
    var = float((r2 * w).sum() / total)
    return center, np.sqrt(max(var, 0.0))


def fit_gaussian(points, values, coef=2.0, floor=1e-3):
    """Fit an isotropic Gaussian to sampled non-negative data.

    Parameters
    ----------
    points : (n, d) array
        Sample positions, d in {1, 2}.
    values : (n,) array
        Sampled profile; only samples above ``floor * max(values)``
        participate.
    coef : float
        Exponent coefficient of the model (2 for e^-2-radius fits,
        4 for squared-envelope fits).
    floor : float
        Relative inclusion threshold.

    Returns
    -------
    GaussianFit
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] == 1 and points.shape[1] > 2:
        points = points.T
    values = np.asarray(values, dtype=float).ravel()
    if points.shape[0] != values.size:
        raise ConfigError("points/values length mismatch")
    peak = values.max(initial=-np.inf)
    if not np.isfinite(peak) or peak <= 0:
        raise ConfigError("cannot fit Gaussian: profile has no positive peak")
    keep = values > floor * peak
    if keep.sum() < points.shape[1] + 2:
        raise ConfigError("cannot fit Gaussian: too few samples above floor")
    pts = points[keep]
    val = values[keep]
    logv = np.log(val)

    center0, rms = _second_moment_init(pts, val)
    # For the isotropic model, rms^2 ~ (d/ (2*coef)) * W^2.
    d = pts.shape[1]
    w0 = rms * np.sqrt(2.0 * coef / d)
    if not np.isfinite(w0) or w0 <= 0:
        w0 = float(np.ptp(pts, axis=0).max()) / 4.0

    def residual(p):
        loga, cx = p[0], p[1 : 1 + d]
        inv_w2 = p[-1]
        r2 = ((pts - cx) ** 2).sum(axis=1)
        return loga - coef * r2 * inv_w2 - logv

    p0 = np.concatenate(([np.log(peak)], center0, [1.0 / w0**2]))
    sol = least_squares(residual, p0, method="lm", max_nfev=2000)
    inv_w2 = sol.x[-1]
    if inv_w2 <= 0:
        raise ConfigError("Gaussian fit diverged (non-positive curvature)")
    res = residual(sol.x)
    return GaussianFit(
        amplitude=float(np.exp(sol.x[0])),
        center=sol.x[1 : 1 + d].copy(),
        radius=float(1.0 / np.sqrt(inv_w2)),
        coef=float(coef),
        rms_log_residual=float(np.sqrt(np.mean(res**2))),
        n_samples=int(keep.sum()),
    )
