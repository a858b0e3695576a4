"""Fresnel propagation of correlation kernels: closed forms, quadrature, relay.

The quadrature propagator is checked against exact complex-Gaussian
Fresnel integrals from tests/_oracles.py, evaluated with sum/difference
separation, which shares no code with the package. Closed forms are
asymptotic, so their comparisons run on kernel magnitudes (propagation
phases are deliberately absent from the closed Gaussians; every image
quantity downstream depends on |K|^2 only).
"""

import math

import numpy as np
import pytest

import _oracles as orc
from ghostsim import (
    ClosedGaussian,
    CorrKernel,
    Grid1D,
    GsmSource,
    KernelKind,
    Lens,
    OpticalPath,
    PairCoordinate,
    Regime,
    SourceClass,
    fresnel_regime,
    propagate_closed_gsm,
    propagate_numeric,
    propagated_envelope_estimate,
    relay_image_map,
    source_kernel,
)
from ghostsim.errors import ConfigError, GridSamplingError, RegimeError
from ghostsim.fitting import fit_gaussian
from ghostsim.imaging import GhostImage

K0 = 1e7
P = 1e12


def classical_src(a0=1e-3, rho0=2e-4):
    return GsmSource(P, a0, rho0, 1e-9, SourceClass.CLASSICAL_PS)


def l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# ------------------------------------------------------------ domain types


def test_grid1d_centered_is_symmetric_and_uniform():
    g = Grid1D.centered(8, 1.6e-3)
    assert g.n == 8
    assert g.spacing == pytest.approx(2e-4)
    assert g.extent == pytest.approx(1.6e-3)
    assert np.allclose(g.points, -g.points[::-1])


def test_grid1d_rejects_nonuniform_points():
    with pytest.raises(ConfigError, match="uniform"):
        Grid1D(np.array([0.0, 1.0, 3.0]))


def test_lens_enforces_thin_lens_condition():
    Lens(focal_length=0.5, d1=1.0, d2=1.0)
    with pytest.raises(ConfigError, match="thin-lens"):
        Lens(focal_length=0.5, d1=1.0, d2=1.1)


def test_lens_magnification_sign():
    lens = Lens(focal_length=1.0, d1=1.5, d2=3.0)
    assert lens.magnification == pytest.approx(-2.0)


def test_path_requires_positive_distance_and_wavenumber():
    with pytest.raises(ConfigError):
        OpticalPath(distance=-1.0, wavenumber=K0)
    with pytest.raises(ConfigError):
        OpticalPath(distance=1.0, wavenumber=0.0)


def test_reference_path_length_needs_a_lens():
    with pytest.raises(ConfigError, match="lens"):
        OpticalPath(distance=1.0, wavenumber=K0, reference_path_length=3.0)


def test_electronic_delay_formula():
    lens = Lens(focal_length=1.0, d1=2.0, d2=2.0)
    path = OpticalPath(distance=2.0, wavenumber=K0, lens=lens, reference_path_length=14.0)
    assert path.electronic_delay == pytest.approx(10.0 / 299792458.0, rel=1e-12)


def test_corr_kernel_needs_exactly_one_representation():
    cg = ClosedGaussian(1.0, 1e-3, 1e-4)
    with pytest.raises(ConfigError, match="exactly one"):
        CorrKernel(kind=KernelKind.PHASE_INSENSITIVE, closed=cg, grid=Grid1D.centered(4, 1.0), values=np.zeros((4, 4)))
    with pytest.raises(ConfigError, match="exactly one"):
        CorrKernel(kind=KernelKind.PHASE_INSENSITIVE)


def test_phase_insensitive_grid_kernel_must_be_hermitian():
    g = Grid1D.centered(4, 1.0)
    vals = np.eye(4, dtype=complex)
    vals[0, 1] = 0.5
    with pytest.raises(ConfigError, match="Hermitian"):
        CorrKernel(kind=KernelKind.PHASE_INSENSITIVE, grid=g, values=vals)
    vals[1, 0] = 0.5  # conj-symmetric now
    CorrKernel(kind=KernelKind.PHASE_INSENSITIVE, grid=g, values=vals)


def test_phase_sensitive_grid_kernel_must_be_symmetric():
    g = Grid1D.centered(4, 1.0)
    vals = np.eye(4, dtype=complex)
    vals[0, 1] = 0.5j
    with pytest.raises(ConfigError, match="symmetric"):
        CorrKernel(kind=KernelKind.PHASE_SENSITIVE, grid=g, values=vals)
    vals[1, 0] = 0.5j
    CorrKernel(kind=KernelKind.PHASE_SENSITIVE, grid=g, values=vals)


def test_trace_flux_requires_grid_kernel():
    kern = source_kernel(classical_src(), KernelKind.PHASE_INSENSITIVE)
    with pytest.raises(ConfigError, match="grid"):
        kern.trace_flux()
    sampled = kern.sample(Grid1D.centered(64, 6e-3))
    assert sampled.meta["sampled_from_closed"] is True
    assert sampled.trace_flux() > 0


# ---------------------------------------------------------- fresnel_regime


def test_regime_intermediate_example():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    info = fresnel_regime(src, OpticalPath(0.5, K0))
    assert info.d0 == pytest.approx(1.0, rel=1e-12)
    assert info.regime is Regime.INTERMEDIATE


def test_regime_near_field_example():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    info = fresnel_regime(src, OpticalPath(0.005, K0))
    assert info.d0 == pytest.approx(100.0, rel=1e-12)
    assert info.regime is Regime.NEAR_FIELD


def test_deep_far_field_gate_example():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    info = fresnel_regime(src, OpticalPath(1000.0, K0))
    assert info.collimated_fresnel == pytest.approx(0.005, rel=1e-12)
    assert info.deep_far_field is True
    assert info.regime is Regime.FAR_FIELD


def test_regime_boundaries_are_inclusive():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    at_ten = K0 * 1e-3 * 1e-4 / 20.0
    assert fresnel_regime(src, OpticalPath(at_ten, K0)).regime is Regime.NEAR_FIELD
    at_tenth = K0 * 1e-3 * 1e-4 / 0.2
    assert fresnel_regime(src, OpticalPath(at_tenth, K0)).regime is Regime.FAR_FIELD


# ------------------------------------------------------------ source_kernel


def test_source_kernel_phase_insensitive_parameters():
    src = classical_src()
    kern = source_kernel(src, KernelKind.PHASE_INSENSITIVE)
    cg = kern.closed
    assert cg.envelope_radius == src.beam_radius
    assert cg.coherence_radius == src.coherence_length
    assert cg.coordinate is PairCoordinate.DIFFERENCE
    assert cg.amplitude == pytest.approx(src.peak_flux_density)


def test_source_kernel_thermal_has_no_phase_sensitive_form():
    src = GsmSource(P, 1e-3, 2e-4, 1e-9, SourceClass.THERMAL)
    with pytest.raises(RegimeError, match="thermal"):
        source_kernel(src, KernelKind.PHASE_SENSITIVE)


def test_source_kernel_quantum_coherence_is_sqrt2_narrower():
    src = GsmSource(1e4, 1e-3, 1e-4, 1e-9, SourceClass.QUANTUM_PS)
    kp = source_kernel(src, KernelKind.PHASE_SENSITIVE)
    kn = source_kernel(src, KernelKind.PHASE_INSENSITIVE)
    assert kp.closed.coherence_radius == pytest.approx(
        kn.closed.coherence_radius / math.sqrt(2.0), rel=1e-12
    )
    assert abs(kp.closed.amplitude) > abs(kn.closed.amplitude)


def test_source_kernel_classical_carries_cross_phase():
    src = GsmSource(P, 1e-3, 2e-4, 1e-9, SourceClass.CLASSICAL_PS, cross_corr_phase=0.9)
    kern = source_kernel(src, KernelKind.PHASE_SENSITIVE)
    assert np.angle(kern.closed.amplitude) == pytest.approx(0.9, rel=1e-12)


# ----------------------------------------------------- propagate_closed_gsm


def test_closed_near_field_is_the_identity():
    src = classical_src()
    path = OpticalPath(0.01, K0)  # D0 = 100
    for kind in (KernelKind.PHASE_INSENSITIVE, KernelKind.PHASE_SENSITIVE):
        out = propagate_closed_gsm(src, path, kind)
        base = source_kernel(src, kind, ndim=2).closed
        assert out.closed.amplitude == base.amplitude
        assert out.closed.envelope_radius == base.envelope_radius
        assert out.closed.coherence_radius == base.coherence_radius
        assert out.closed.coordinate is base.coordinate


def test_closed_far_field_thermal_widths():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    kern = propagate_closed_gsm(src, OpticalPath(100.0, K0), KernelKind.PHASE_INSENSITIVE)
    assert kern.closed.envelope_radius == pytest.approx(0.2, rel=1e-12)
    assert kern.closed.coherence_radius == pytest.approx(0.02, rel=1e-12)
    assert kern.closed.coordinate is PairCoordinate.DIFFERENCE


def test_closed_far_field_quantum_envelope_is_sqrt2_wider():
    src = GsmSource(1e4, 1e-3, 1e-4, 1e-9, SourceClass.QUANTUM_PS)
    kern = propagate_closed_gsm(src, OpticalPath(100.0, K0), KernelKind.PHASE_SENSITIVE)
    assert kern.closed.envelope_radius == pytest.approx(0.2 * math.sqrt(2.0), rel=1e-12)
    assert kern.closed.coherence_radius == pytest.approx(0.02, rel=1e-12)
    assert kern.closed.coordinate is PairCoordinate.SUM


def test_closed_far_field_classical_ps_switches_to_sum_coordinate():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9, SourceClass.CLASSICAL_PS)
    kern = propagate_closed_gsm(src, OpticalPath(1000.0, K0), KernelKind.PHASE_SENSITIVE)
    assert kern.closed.coordinate is PairCoordinate.SUM
    kn = propagate_closed_gsm(src, OpticalPath(1000.0, K0), KernelKind.PHASE_INSENSITIVE)
    assert kn.closed.coordinate is PairCoordinate.DIFFERENCE


def test_closed_rejects_intermediate_regime_with_numeric_hint():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    with pytest.raises(RegimeError, match="no closed form") as err:
        propagate_closed_gsm(src, OpticalPath(0.5, K0), KernelKind.PHASE_INSENSITIVE)
    assert "mode=numeric" in err.value.hint


def test_closed_phase_sensitive_far_field_needs_deep_gate():
    # D0 = 0.05 but k0 a0^2/2L = 0.5: far field for the magnitudes, not
    # deep enough for the phase-sensitive closed form.
    src = GsmSource(P, 1e-3, 1e-4, 1e-9, SourceClass.CLASSICAL_PS)
    path = OpticalPath(10.0, K0)
    propagate_closed_gsm(src, path, KernelKind.PHASE_INSENSITIVE)
    with pytest.raises(RegimeError, match="deep far field|a0\\^2"):
        propagate_closed_gsm(src, path, KernelKind.PHASE_SENSITIVE)


def test_closed_far_field_flux_scale_in_slice_mode():
    # amplitude scale (envelope * coherence * k0 / 2L)^ndim
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    path = OpticalPath(100.0, K0)
    k1 = propagate_closed_gsm(src, path, KernelKind.PHASE_INSENSITIVE, ndim=1)
    k2 = propagate_closed_gsm(src, path, KernelKind.PHASE_INSENSITIVE, ndim=2)
    base = source_kernel(src, KernelKind.PHASE_INSENSITIVE).closed
    scale = base.envelope_radius * base.coherence_radius * K0 / (2.0 * path.distance)
    assert abs(k1.closed.amplitude) == pytest.approx(abs(base.amplitude) * scale, rel=1e-12)
    assert abs(k2.closed.amplitude) == pytest.approx(abs(base.amplitude) * scale**2, rel=1e-12)


# ---------------------------------------------- propagate_numeric vs oracle


def test_numeric_matches_exact_oracle_near_field():
    # D0 = 40; the exact propagated kernel comes from independent
    # complex-Gaussian Fresnel integrals in sum/difference coordinates.
    src = classical_src()
    path = OpticalPath(0.025, K0)
    g = Grid1D.centered(1792, 3.6e-3)
    x1 = g.points[:, None]
    x2 = g.points[None, :]

    kn = propagate_numeric(source_kernel(src, KernelKind.PHASE_INSENSITIVE), path, grid=g)
    exact_pi = orc.propagate_gsm_pi_exact(P, 1e-3, 2e-4, K0, 0.025, x1, x2)
    assert l2(kn.values, exact_pi) < 2e-3

    kp = propagate_numeric(source_kernel(src, KernelKind.PHASE_SENSITIVE), path, grid=g)
    exact_ps = orc.propagate_gsm_ps_exact(P, 1e-3, 2e-4, K0, 0.025, x1, x2)
    assert l2(kp.values, exact_ps) < 2e-3


def test_numeric_matches_exact_oracle_far_field():
    src = classical_src(rho0=5e-5)
    path = OpticalPath(60.0, K0)
    gin = Grid1D.centered(512, 4.5e-3)
    gout = Grid1D.centered(512, 1.08)
    y1 = gout.points[:, None]
    y2 = gout.points[None, :]

    kn = propagate_numeric(
        source_kernel(src, KernelKind.PHASE_INSENSITIVE), path, grid=gin, out_grid=gout
    )
    exact_pi = orc.propagate_gsm_pi_exact(P, 1e-3, 5e-5, K0, 60.0, y1, y2)
    assert l2(kn.values, exact_pi) < 1e-3

    kp = propagate_numeric(
        source_kernel(src, KernelKind.PHASE_SENSITIVE), path, grid=gin, out_grid=gout
    )
    exact_ps = orc.propagate_gsm_ps_exact(P, 1e-3, 5e-5, K0, 60.0, y1, y2)
    assert l2(kp.values, exact_ps) < 1e-3


# ------------------------------------------- numeric vs closed, gated regimes


def test_numeric_matches_closed_magnitudes_deep_near_field():
    # D0 = 100: both kinds agree with the source-plane closed form
    # within 1% L2 on magnitudes.
    src = classical_src()
    path = OpticalPath(0.01, K0)
    g = Grid1D.centered(3584, 3.2e-3)
    x1 = g.points[:, None]
    x2 = g.points[None, :]
    for kind in (KernelKind.PHASE_INSENSITIVE, KernelKind.PHASE_SENSITIVE):
        out = propagate_numeric(source_kernel(src, kind), path, grid=g)
        closed = propagate_closed_gsm(src, path, kind, ndim=1)
        want = closed.closed.evaluate_slice(x1, x2)
        assert l2(np.abs(out.values), np.abs(want)) < 0.01


def test_numeric_matches_closed_magnitudes_gated_invariant():
    # 2% L2 bound right at the workable edges of both gates.
    src = classical_src()
    near = OpticalPath(0.025, K0)  # D0 = 40
    g = Grid1D.centered(1792, 3.6e-3)
    for kind in (KernelKind.PHASE_INSENSITIVE, KernelKind.PHASE_SENSITIVE):
        out = propagate_numeric(source_kernel(src, kind), near, grid=g)
        want = propagate_closed_gsm(src, near, kind, ndim=1).closed.evaluate_slice(
            g.points[:, None], g.points[None, :]
        )
        assert l2(np.abs(out.values), np.abs(want)) < 0.02

    srcf = classical_src(rho0=5e-5)
    far = OpticalPath(60.0, K0)  # D0 = 0.0042, deep far field
    gin = Grid1D.centered(512, 4.5e-3)
    gout = Grid1D.centered(512, 1.08)
    for kind in (KernelKind.PHASE_INSENSITIVE, KernelKind.PHASE_SENSITIVE):
        out = propagate_numeric(source_kernel(srcf, kind), far, grid=gin, out_grid=gout)
        want = propagate_closed_gsm(srcf, far, kind, ndim=1).closed.evaluate_slice(
            gout.points[:, None], gout.points[None, :]
        )
        assert l2(np.abs(out.values), np.abs(want)) < 0.02


def test_numeric_far_field_widths_match_substitutions():
    # Thermal, D0 = 0.05: fitted output widths reproduce a_L and rho_L
    # within 2%.
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    path = OpticalPath(10.0, K0)
    a_l = 2.0 * path.distance / (K0 * src.coherence_length)
    rho_l = 2.0 * path.distance / (K0 * src.beam_radius)
    gin = Grid1D.centered(512, 3.4e-3)
    gout = Grid1D.centered(512, 0.06)
    kern = propagate_numeric(
        source_kernel(src, KernelKind.PHASE_INSENSITIVE), path, grid=gin, out_grid=gout
    )
    x = gout.points
    diag = np.abs(np.diag(kern.values))
    fit_env = fit_gaussian(x[:, None], diag, coef=2.0)
    assert fit_env.radius == pytest.approx(a_l, rel=0.02)
    anti = np.abs(kern.values[np.arange(x.size), x.size - 1 - np.arange(x.size)])
    fit_coh = fit_gaussian(2.0 * x[:, None], anti, coef=2.0)
    assert fit_coh.radius / 2.0 == pytest.approx(rho_l, rel=0.02)


def test_numeric_phase_sensitive_far_field_peaks_on_antidiagonal():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9, SourceClass.CLASSICAL_PS)
    path = OpticalPath(10.0, K0)  # D0 = 0.05
    gin = Grid1D.centered(512, 3.4e-3)
    gout = Grid1D.centered(512, 0.06)
    kern = propagate_numeric(
        source_kernel(src, KernelKind.PHASE_SENSITIVE), path, grid=gin, out_grid=gout
    )
    mag = np.abs(kern.values)
    x = gout.points
    j = int(np.argmin(np.abs(x - 0.01)))
    jm = int(np.argmin(np.abs(x + 0.01)))
    assert mag[j, jm] > 100.0 * mag[j, j]
    # and the phase-insensitive kernel keeps its ridge on the diagonal
    kn = propagate_numeric(
        source_kernel(src, KernelKind.PHASE_INSENSITIVE), path, grid=gin, out_grid=gout
    )
    nmag = np.abs(kn.values)
    assert nmag[j, j] > 100.0 * nmag[j, jm]


# --------------------------------------------------------------- invariants


def test_numeric_conserves_flux():
    src = classical_src()
    path = OpticalPath(0.05, K0)  # D0 = 20, within the aliasing bound at n = 1024
    g = Grid1D.centered(1024, 3.6e-3)
    kern = source_kernel(src, KernelKind.PHASE_INSENSITIVE).sample(g)
    out = propagate_numeric(kern, path)
    assert out.trace_flux() == pytest.approx(kern.trace_flux(), rel=0.01)


def test_numeric_conserves_flux_into_far_field():
    src = classical_src(rho0=5e-5)
    path = OpticalPath(60.0, K0)
    gin = Grid1D.centered(512, 4.5e-3)
    gout = Grid1D.centered(512, 1.08)
    kern = source_kernel(src, KernelKind.PHASE_INSENSITIVE).sample(gin)
    out = propagate_numeric(kern, path, out_grid=gout)
    assert out.trace_flux() == pytest.approx(kern.trace_flux(), rel=0.01)


def test_numeric_preserves_symmetry_class():
    src = classical_src()
    path = OpticalPath(0.08, K0)
    g = Grid1D.centered(512, 3.2e-3)
    kn = propagate_numeric(source_kernel(src, KernelKind.PHASE_INSENSITIVE), path, grid=g)
    scale = float(np.abs(kn.values).max())
    assert float(np.abs(kn.values - kn.values.conj().T).max()) <= 1e-8 * scale
    kp = propagate_numeric(source_kernel(src, KernelKind.PHASE_SENSITIVE), path, grid=g)
    scale = float(np.abs(kp.values).max())
    assert float(np.abs(kp.values - kp.values.T).max()) <= 1e-8 * scale


def test_aliasing_guard_rejects_coarse_grids():
    src = classical_src()
    path = OpticalPath(0.0005, K0)  # bound ~ 2.6e-8 m, far below dx
    g = Grid1D.centered(256, 3.2e-3)
    with pytest.raises(GridSamplingError, match="Nyquist"):
        propagate_numeric(source_kernel(src, KernelKind.PHASE_INSENSITIVE), path, grid=g)


def test_aliasing_guard_is_a_config_error():
    assert issubclass(GridSamplingError, ConfigError)


def test_numeric_requires_grid_for_closed_kernels():
    src = classical_src()
    with pytest.raises(ConfigError, match="grid"):
        propagate_numeric(source_kernel(src, KernelKind.PHASE_INSENSITIVE), OpticalPath(0.025, K0))


def test_numeric_rejects_lens_paths():
    src = classical_src()
    lens = Lens(focal_length=1.0, d1=2.0, d2=2.0)
    path = OpticalPath(2.0, K0, lens=lens)
    with pytest.raises(ConfigError, match="relay_image_map"):
        propagate_numeric(
            source_kernel(src, KernelKind.PHASE_INSENSITIVE),
            path,
            grid=Grid1D.centered(64, 3.2e-3),
        )


# ------------------------------------------------ propagated_envelope_estimate


def test_envelope_estimate_limits():
    src = GsmSource(P, 1e-3, 1e-4, 1e-9)
    near = propagated_envelope_estimate(src, OpticalPath(1e-4, K0))
    assert near == pytest.approx(src.beam_radius, rel=1e-4)
    far = propagated_envelope_estimate(src, OpticalPath(100.0, K0))
    a_l = 2.0 * 100.0 / (K0 * 1e-4)
    assert far == pytest.approx(a_l * math.sqrt(1.0 + (1e-4 / 1e-3) ** 2), rel=1e-4)
    assert far > near


# ------------------------------------------------------------ relay_image_map


def relay_test_image(n=41, extent=2e-3, peak=3.0, width=4e-4):
    axes = (np.linspace(-extent / 2, extent / 2, n),)
    x = axes[0]
    bg = np.full(n, 1.0)
    term = peak * np.exp(-2.0 * (x - 2e-4) ** 2 / width**2)
    return GhostImage(
        axes=axes,
        values=bg + term,
        background=bg,
        cn=1.0,
        meta={"bucket_sufficiently_large": True, "source_class": "thermal"},
    )


def test_relay_unit_magnification_flips_image():
    img = relay_test_image()
    lens = Lens(focal_length=1.0, d1=2.0, d2=2.0)
    path = OpticalPath(2.0, K0, lens=lens)
    out = relay_image_map(img, path)
    assert out.meta["relay_magnification"] == pytest.approx(-1.0)
    assert np.allclose(out.axes[0], img.axes[0])
    assert np.allclose(out.values, img.values[::-1], rtol=1e-12)
    assert float(out.values.max()) == pytest.approx(float(img.values.max()), rel=1e-12)


def test_relay_magnification_two_scales_amplitude_and_support():
    img = relay_test_image()
    lens = Lens(focal_length=1.0, d1=1.5, d2=3.0)
    path = OpticalPath(1.5, K0, lens=lens)
    out = relay_image_map(img, path)
    assert out.meta["relay_magnification"] == pytest.approx(-2.0)
    assert out.axes[0][-1] == pytest.approx(img.axes[0][-1] / 2.0, rel=1e-12)
    assert float(out.values.max()) == pytest.approx(4.0 * float(img.values.max()), rel=1e-12)


def test_relay_round_trip_recovers_image():
    img = relay_test_image()
    fwd = OpticalPath(1.5, K0, lens=Lens(focal_length=1.0, d1=1.5, d2=3.0))
    back = OpticalPath(3.0, K0, lens=Lens(focal_length=1.0, d1=3.0, d2=1.5))
    once = relay_image_map(img, fwd)
    twice = relay_image_map(once, back)
    assert np.allclose(twice.axes[0], img.axes[0], rtol=1e-12)
    assert l2(twice.values, img.values) < 1e-6
    assert l2(twice.background, img.background) < 1e-6


def test_relay_explicit_axes_match_default_mapping():
    img = relay_test_image()
    lens = Lens(focal_length=1.0, d1=1.5, d2=3.0)
    path = OpticalPath(1.5, K0, lens=lens)
    default = relay_image_map(img, path)
    explicit = relay_image_map(img, path, detector_axes=(img.axes[0] / 2.0,))
    assert np.allclose(explicit.values, default.values, rtol=1e-9)


def test_relay_identity_maps_exactly_in_2d():
    x = np.linspace(-1e-3, 1e-3, 21)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    bg = np.ones_like(xx)
    term = 2.0 * np.exp(-((xx - 3e-4) ** 2 + (yy + 1e-4) ** 2) / (2e-4) ** 2)
    img = GhostImage(
        axes=(x, x),
        values=bg + term,
        background=bg,
        meta={"bucket_sufficiently_large": True},
    )
    lens = Lens(focal_length=0.5, d1=1.0, d2=1.0)
    out = relay_image_map(img, OpticalPath(1.0, K0, lens=lens))
    assert np.allclose(out.values, img.values[::-1, ::-1], rtol=1e-12)


def test_relay_requires_lens():
    img = relay_test_image()
    with pytest.raises(ConfigError, match="lens"):
        relay_image_map(img, OpticalPath(1.0, K0))


def test_relay_requires_large_bucket_flag():
    img = relay_test_image()
    small = GhostImage(
        axes=img.axes,
        values=img.values,
        background=img.background,
        meta={"bucket_sufficiently_large": False},
    )
    lens = Lens(focal_length=1.0, d1=2.0, d2=2.0)
    with pytest.raises(RegimeError, match="bucket"):
        relay_image_map(small, OpticalPath(2.0, K0, lens=lens))


def test_relay_rejects_offgrid_resampling():
    img = relay_test_image()
    lens = Lens(focal_length=1.0, d1=1.5, d2=3.0)
    path = OpticalPath(1.5, K0, lens=lens)
    with pytest.raises(ConfigError, match="off-grid"):
        relay_image_map(img, path, detector_axes=(img.axes[0],))
