"""Ghost imaging with Gaussian-state sources: kernels, images, metrics.

The package models the standoff-sensing configuration in which a
source beam is split (or entangled) into a signal arm that illuminates
an amplitude mask in front of a bucket detector and a reference arm
observed by a scanning pinhole detector. Cross-correlating the two
photocurrents produces an image whose resolution, field of view,
orientation, and contrast follow from the source's phase-insensitive
and phase-sensitive coherence and how each propagates.
"""

from ._version import __version__
from .errors import (
    ConfigError,
    GhostsimError,
    GridSamplingError,
    RegimeError,
    RegimeWarning,
    ValidationFailure,
)
from .fitting import GaussianFit, fit_gaussian
from .gridio import read_grid, write_grid, write_image_csv, write_pgm
from .imaging import (
    DetectorModel,
    GhostImage,
    ObjectMask,
    TemporalFactors,
    background_level,
    synthesize_image,
    temporal_factors,
)
from .metrology import (
    ImageMetrics,
    Orientation,
    detect_inversion,
    measure_contrast,
    measure_fov,
    measure_psf,
    summarize_image,
)
from .montecarlo import (
    EmpiricalResult,
    FieldEnsemble,
    empirical_ghost_image,
    make_ensemble,
    make_pair,
    moment_factoring_residual,
    sample_gsm_field,
)
from .propagation import (
    ClosedGaussian,
    CorrKernel,
    Grid1D,
    KernelKind,
    Lens,
    OpticalPath,
    PairCoordinate,
    Regime,
    RegimeInfo,
    fresnel_regime,
    propagate_closed_gsm,
    propagate_numeric,
    propagated_envelope_estimate,
    relay_image_map,
    source_kernel,
)
from .runner import RunResult, run_scene, run_sweep, validate_scene, write_report
from .scenes import (
    SCENE_SCHEMA,
    canonical_json,
    config_hash,
    load_scene,
    normalize_scene,
)
from .sources import (
    CorrSpectrumPair,
    GsmSource,
    SourceClass,
    Verdict,
    autocorr_pi,
    brightness,
    build_spectrum_pair,
    classicality_certify,
    crosscorr_ps,
    sqrt_spectrum_prefactor,
)

__all__ = [
    "__version__",
    "GhostsimError",
    "ConfigError",
    "GridSamplingError",
    "RegimeError",
    "ValidationFailure",
    "RegimeWarning",
    "GaussianFit",
    "fit_gaussian",
    "read_grid",
    "write_grid",
    "write_image_csv",
    "write_pgm",
    "GsmSource",
    "SourceClass",
    "Verdict",
    "CorrSpectrumPair",
    "autocorr_pi",
    "brightness",
    "build_spectrum_pair",
    "classicality_certify",
    "crosscorr_ps",
    "sqrt_spectrum_prefactor",
    "Grid1D",
    "Lens",
    "OpticalPath",
    "ClosedGaussian",
    "CorrKernel",
    "KernelKind",
    "PairCoordinate",
    "Regime",
    "RegimeInfo",
    "fresnel_regime",
    "source_kernel",
    "propagated_envelope_estimate",
    "propagate_closed_gsm",
    "propagate_numeric",
    "relay_image_map",
    "SCENE_SCHEMA",
    "load_scene",
    "normalize_scene",
    "canonical_json",
    "config_hash",
    "RunResult",
    "run_scene",
    "run_sweep",
    "validate_scene",
    "write_report",
    "ObjectMask",
    "DetectorModel",
    "TemporalFactors",
    "GhostImage",
    "temporal_factors",
    "background_level",
    "synthesize_image",
    "ImageMetrics",
    "Orientation",
    "measure_psf",
    "measure_fov",
    "measure_contrast",
    "detect_inversion",
    "summarize_image",
    "FieldEnsemble",
    "EmpiricalResult",
    "sample_gsm_field",
    "make_pair",
    "make_ensemble",
    "empirical_ghost_image",
    "moment_factoring_residual",
]
