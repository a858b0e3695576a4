"""End-to-end acceptance checks, one numbered criterion per test.

Every test funnels its verdict through check(), which records a single
PASS/FAIL line (echoed in the terminal summary via conftest) and then
asserts, so a red criterion still leaves its measured numbers on the
screen. Tolerances sit next to each comparison. Scales stay at desk
size: analytic scans of <= 2e3 points, quadrature grids <= 1792, and a
Monte Carlo ensemble of 1e4 snapshots.
"""

import math

import numpy as np
import pytest

import conftest
from ghostsim import (
    CorrSpectrumPair,
    DetectorModel,
    FieldEnsemble,
    Grid1D,
    GsmSource,
    KernelKind,
    Lens,
    ObjectMask,
    OpticalPath,
    Orientation,
    SourceClass,
    TemporalFactors,
    Verdict,
    classicality_certify,
    detect_inversion,
    empirical_ghost_image,
    make_ensemble,
    measure_contrast,
    measure_fov,
    measure_psf,
    moment_factoring_residual,
    propagate_closed_gsm,
    propagate_numeric,
    relay_image_map,
    source_kernel,
    synthesize_image,
    temporal_factors,
)

A0 = 1e-3
RHO0 = 1e-4
T0 = 1e-9
K0 = 1e7
L_FAR = 100.0
A_FAR = 2.0 * L_FAR / (K0 * RHO0)  # far-field FOV radius, 0.2
RHO_FAR = 2.0 * L_FAR / (K0 * A0)  # far-field coherence radius, 0.02

MC_GRID = Grid1D.centered(600, 5.5e-3)
MC_N = 10_000


def check(num, label, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {label} | {detail}"
    conftest.record_acceptance(line)
    print(line)
    assert ok, line


def src_of(source_class, P=1e12):
    return GsmSource(P, A0, RHO0, T0, source_class)


def near_image(src, obj, scan, Td=1e-12):
    det = DetectorModel(quantum_efficiency=1.0, integration_time=Td, scan_axes=scan)
    fac = temporal_factors(src, det)
    if src.source_class is SourceClass.THERMAL:
        kn = source_kernel(src, KernelKind.PHASE_INSENSITIVE, ndim=1)
        return synthesize_image(kn, None, obj, det, fac)
    kp = source_kernel(src, KernelKind.PHASE_SENSITIVE, ndim=1)
    kn = source_kernel(src, KernelKind.PHASE_INSENSITIVE, ndim=1)
    return synthesize_image(None, kp, obj, det, fac, kn_auto_1=kn, kn_auto_2=kn)


def far_image(src, obj, scan, Td=1e-12):
    det = DetectorModel(quantum_efficiency=1.0, integration_time=Td, scan_axes=scan)
    fac = temporal_factors(src, det)
    path = OpticalPath(L_FAR, K0)
    kn = propagate_closed_gsm(src, path, KernelKind.PHASE_INSENSITIVE, ndim=1)
    if src.source_class is SourceClass.THERMAL:
        return synthesize_image(kn, None, obj, det, fac)
    kp = propagate_closed_gsm(src, path, KernelKind.PHASE_SENSITIVE, ndim=1)
    return synthesize_image(None, kp, obj, det, fac, kn_auto_1=kn, kn_auto_2=kn)


def point_target(extent, n, radius):
    axes = (np.linspace(-extent / 2, extent / 2, n),)
    return ObjectMask.pinhole(axes, (0.0,), radius)


def open_target(extent, n):
    return ObjectMask.uniform((np.linspace(-extent / 2, extent / 2, n),))


def slit_target(extent, n, width, separation):
    axes = (np.linspace(-extent / 2, extent / 2, n),)
    return ObjectMask.double_slit(axes, width, separation, amplitudes=(1.0, 0.5))


def near_psf(source_class, P=1e12):
    obj = point_target(8e-3, 1601, 6e-6)
    scan = (np.linspace(-4e-4, 4e-4, 81),)
    return measure_psf(near_image(src_of(source_class, P), obj, scan))


def far_psf(source_class, P=1e12):
    obj = point_target(0.04, 41, 1.5e-3)
    scan = (np.linspace(-0.08, 0.08, 81),)
    return measure_psf(far_image(src_of(source_class, P), obj, scan))


def rel_err(got, want):
    return abs(got / want - 1.0)


@pytest.fixture(scope="module")
def thermal_ensemble():
    return make_ensemble(src_of(SourceClass.THERMAL), MC_GRID, MC_N, seed=77)


def test_criterion_1_near_field_thermal_resolution():
    psf = near_psf(SourceClass.THERMAL)
    want = math.sqrt(2.0) * RHO0
    err = rel_err(psf, want)
    check(
        1,
        "near-field thermal PSF e^-2 radius = sqrt(2)*rho0 within 3%",
        err <= 0.03,
        f"psf={psf:.6e} want={want:.6e} rel={err:.2%}",
    )


def test_criterion_2_quantum_near_field_resolution():
    psf_q = near_psf(SourceClass.QUANTUM_PS, P=1e4)
    psf_t = near_psf(SourceClass.THERMAL)
    err_q = rel_err(psf_q, RHO0)
    ratio = psf_q / psf_t
    err_r = rel_err(ratio, 1.0 / math.sqrt(2.0))
    check(
        2,
        "quantum near-field PSF = rho0 within 3%, 1/sqrt(2) x thermal within 2%",
        err_q <= 0.03 and err_r <= 0.02,
        f"psf={psf_q:.6e} rel={err_q:.2%}; ratio={ratio:.4f} rel={err_r:.2%}",
    )


def test_criterion_3_far_field_thermal_fov_and_resolution():
    fov = measure_fov(
        far_image(
            src_of(SourceClass.THERMAL),
            open_target(1.6, 801),
            (np.linspace(-0.3, 0.3, 61),),
        )
    )
    psf = far_psf(SourceClass.THERMAL)
    err_f = rel_err(fov, A_FAR)
    err_p = rel_err(psf, math.sqrt(2.0) * RHO_FAR)
    check(
        3,
        "far-field thermal FOV = 2L/(k0 rho0) and PSF = 2 sqrt(2) L/(k0 a0), each within 3%",
        err_f <= 0.03 and err_p <= 0.03,
        f"fov={fov:.4f} rel={err_f:.2%}; psf={psf:.6f} rel={err_p:.2%}",
    )


def test_criterion_4_quantum_far_field_fov_and_resolution():
    fov_q = measure_fov(
        far_image(
            src_of(SourceClass.QUANTUM_PS, P=1e4),
            open_target(2.4, 1201),
            (np.linspace(-0.45, 0.45, 61),),
        )
    )
    fov_t = measure_fov(
        far_image(
            src_of(SourceClass.THERMAL),
            open_target(1.6, 801),
            (np.linspace(-0.3, 0.3, 61),),
        )
    )
    psf_q = far_psf(SourceClass.QUANTUM_PS, P=1e4)
    psf_t = far_psf(SourceClass.THERMAL)
    err_f = rel_err(fov_q, math.sqrt(2.0) * A_FAR)
    err_r = rel_err(fov_q / fov_t, math.sqrt(2.0))
    err_p = rel_err(psf_q, psf_t)
    check(
        4,
        "quantum far-field FOV = sqrt(2) x classical within 3%, PSF matches classical within 2%",
        err_f <= 0.03 and err_r <= 0.02 and err_p <= 0.02,
        f"fov={fov_q:.4f} rel={err_f:.2%}; fov ratio rel={err_r:.2%}; psf ratio rel={err_p:.2%}",
    )


def test_criterion_5_far_field_orientation():
    obj = slit_target(1.6, 801, 0.08, 0.4)
    scan = (np.linspace(-0.4, 0.4, 81),)
    thermal = detect_inversion(far_image(src_of(SourceClass.THERMAL), obj, scan), obj)
    classical = detect_inversion(
        far_image(src_of(SourceClass.CLASSICAL_PS), obj, scan), obj
    )
    quantum = detect_inversion(
        far_image(src_of(SourceClass.QUANTUM_PS, P=1e4), obj, scan), obj
    )
    ok = (
        thermal is Orientation.ERECT
        and classical is Orientation.INVERTED
        and quantum is Orientation.INVERTED
    )
    check(
        5,
        "far-field asymmetric double slit: thermal Erect, classical-PS and quantum Inverted",
        ok,
        f"thermal={thermal.value} classical-PS={classical.value} quantum={quantum.value}",
    )


def test_criterion_6_near_field_classical_ps_matches_thermal():
    obj = slit_target(8e-3, 801, 2e-4, 1e-3)
    scan = (np.linspace(-1e-3, 1e-3, 81),)
    thermal = near_image(src_of(SourceClass.THERMAL), obj, scan)
    classical = near_image(src_of(SourceClass.CLASSICAL_PS), obj, scan)
    dv = float(np.abs(classical.values - thermal.values).max() / thermal.values.max())
    db = float(
        np.abs(classical.background - thermal.background).max()
        / thermal.background.max()
    )
    check(
        6,
        "near-field classical-PS image identical to thermal within 1e-10",
        dv <= 1e-10 and db <= 1e-10,
        f"max rel diff values={dv:.2e} background={db:.2e}",
    )


def test_criterion_7_classicality_certifier():
    freqs = np.linspace(-3e9, 3e9, 201)
    gn = 0.01 * np.exp(-((freqs / 1e9) ** 2))
    quantum_limit = np.sqrt(gn * (1.0 + gn))
    verdicts = [
        classicality_certify(CorrSpectrumPair(freqs, gn, gn.astype(complex))),
        classicality_certify(CorrSpectrumPair(freqs, gn, quantum_limit.astype(complex))),
        classicality_certify(
            CorrSpectrumPair(freqs, gn, (2.0 * quantum_limit).astype(complex))
        ),
    ]
    want = [Verdict.CLASSICAL, Verdict.QUANTUM_ADMISSIBLE, Verdict.UNPHYSICAL]
    check(
        7,
        "certifier: |gp|=gn boundary Classical, quantum-limit equality at peak 0.01 "
        "QuantumAdmissible, 2x limit Unphysical",
        verdicts == want,
        " / ".join(v.value for v in verdicts),
    )


def test_criterion_8_quadrature_matches_closed_forms():
    def l2(a, b):
        return float(np.linalg.norm(a - b) / np.linalg.norm(b))

    kinds = (KernelKind.PHASE_INSENSITIVE, KernelKind.PHASE_SENSITIVE)
    errs = []

    # near gate edge: D0 = 40
    src = GsmSource(1e12, 1e-3, 2e-4, T0, SourceClass.CLASSICAL_PS)
    near = OpticalPath(0.025, K0)
    g = Grid1D.centered(1792, 3.6e-3)
    for kind in kinds:
        out = propagate_numeric(source_kernel(src, kind), near, grid=g)
        want = propagate_closed_gsm(src, near, kind, ndim=1).closed.evaluate_slice(
            g.points[:, None], g.points[None, :]
        )
        errs.append(l2(np.abs(out.values), np.abs(want)))

    # deep far field: D0 = 0.0042
    srcf = GsmSource(1e12, 1e-3, 5e-5, T0, SourceClass.CLASSICAL_PS)
    far = OpticalPath(60.0, K0)
    gin = Grid1D.centered(512, 4.5e-3)
    gout = Grid1D.centered(512, 1.08)
    for kind in kinds:
        out = propagate_numeric(source_kernel(srcf, kind), far, grid=gin, out_grid=gout)
        want = propagate_closed_gsm(srcf, far, kind, ndim=1).closed.evaluate_slice(
            gout.points[:, None], gout.points[None, :]
        )
        errs.append(l2(np.abs(out.values), np.abs(want)))

    check(
        8,
        "1-D quadrature matches closed-form kernels within 2% L2 at both regime gates",
        max(errs) <= 0.02,
        "L2 " + ", ".join(f"{e:.4f}" for e in errs) + " (near PI/PS, far PI/PS)",
    )


def test_criterion_9_monte_carlo_statistics(thermal_ensemble):
    obj = ObjectMask.double_slit((MC_GRID.points,), 2e-4, 8e-4, amplitudes=(1.0, 0.6))
    pts = MC_GRID.points
    sel = np.where((pts >= -8e-4) & (pts <= 8e-4))[0][::2]
    det = DetectorModel(
        quantum_efficiency=0.8, integration_time=1e-12, scan_axes=(pts[sel],)
    )
    result = empirical_ghost_image(thermal_ensemble, None, obj, det)
    kn = source_kernel(src_of(SourceClass.THERMAL), KernelKind.PHASE_INSENSITIVE, ndim=1)
    analytic = synthesize_image(kn, None, obj, det, TemporalFactors.unit())
    z = (result.image.values - analytic.values) / result.standard_error
    frac = float(np.mean(np.abs(z) <= 3.0))

    i0 = int(np.argmin(np.abs(pts)))
    mean, se = moment_factoring_residual(thermal_ensemble, i0, i0 + 10)
    sigma = abs(mean) / se

    det1 = DetectorModel(
        quantum_efficiency=1.0, integration_time=1e-12, scan_axes=(pts[[i0]],)
    )
    sizes = [100, 1000, 10000]
    ses = []
    for n in sizes:
        sub = FieldEnsemble(
            grid=MC_GRID,
            signal=thermal_ensemble.signal[:n],
            reference=thermal_ensemble.reference[:n],
            seed=thermal_ensemble.seed,
            meta=dict(thermal_ensemble.meta),
        )
        ses.append(float(empirical_ghost_image(sub, None, obj, det1).standard_error[0]))
    slope = float(np.polyfit(np.log(sizes), np.log(ses), 1)[0])

    check(
        9,
        "Monte Carlo N=1e4: >=95% of scan points within 3 SE of analytic, "
        "moment-factoring residual within 3 sigma, SE slope -0.5 +/- 0.1",
        frac >= 0.95 and sigma <= 3.0 and abs(slope + 0.5) <= 0.1,
        f"within-3SE frac={frac:.3f}; residual={sigma:.2f} sigma; slope={slope:.3f}",
    )


def test_criterion_10_relay_identity():
    src = src_of(SourceClass.THERMAL)
    obj = ObjectMask.double_slit(
        (np.linspace(-4e-3, 4e-3, 801),), 2e-4, 1e-3, amplitudes=(1.0, 0.5)
    )
    scan = (np.linspace(-1e-3, 1e-3, 81),)
    det = DetectorModel(quantum_efficiency=1.0, integration_time=1e-12, scan_axes=scan)
    kn = source_kernel(src, KernelKind.PHASE_INSENSITIVE, ndim=1)
    img = synthesize_image(kn, None, obj, det, temporal_factors(src, det))

    errs = []
    for d1, d2 in ((2.0, 2.0), (1.5, 3.0)):
        lens = Lens(1.0, d1, d2)
        path = OpticalPath(d1 + d2, K0, lens=lens)
        m = lens.magnification
        want = m * m * img.values[::-1]  # M^2 C(M rho1) on symmetric axes
        natural = relay_image_map(img, path)
        errs.append(float(np.abs(natural.values - want).max() / np.abs(want).max()))
        resampled = relay_image_map(img, path, detector_axes=(scan[0] / abs(m),))
        errs.append(float(np.abs(resampled.values - want).max() / np.abs(want).max()))

    unit = relay_image_map(img, OpticalPath(4.0, K0, lens=Lens(1.0, 2.0, 2.0)))
    unit_ok = (
        unit.meta["relay_magnification"] == -1.0
        and np.allclose(unit.axes[0], scan[0])
        and detect_inversion(unit, obj) is Orientation.INVERTED
        and detect_inversion(img, obj) is Orientation.ERECT
    )
    check(
        10,
        "relay identity C'(rho1) = M^2 C(M rho1) within 1e-6 for M in {-1,-2}; "
        "d1=d2=2f gives inverted unit magnification",
        max(errs) <= 1e-6 and unit_ok,
        f"max rel err={max(errs):.2e}; 2f-2f M={unit.meta['relay_magnification']:g} "
        f"orientation={detect_inversion(unit, obj).value}",
    )


def test_criterion_11_contrast_ratio_laws():
    obj = point_target(8e-3, 1601, 6e-6)
    scan = (np.linspace(-4e-4, 4e-4, 41),)
    ratios_over = (0.1, 1.0, 2.0, 4.0)

    def contrast(source_class, P, Td):
        return measure_contrast(near_image(src_of(source_class, P), obj, scan, Td=Td))

    c_t0 = contrast(SourceClass.THERMAL, 1e12, 1e-12)
    err_cl = max(
        rel_err(
            contrast(SourceClass.THERMAL, 1e12, r * T0) / c_t0,
            1.0 / math.sqrt(1.0 + r * r / 4.0),
        )
        for r in ratios_over
    )

    # brightness P*T0*rho0^2/a0^2: P=1e9 -> 0.01, P=1e8 -> 0.001
    decade = contrast(SourceClass.QUANTUM_PS, 1e8, 1e-12) / contrast(
        SourceClass.QUANTUM_PS, 1e9, 1e-12
    )
    err_decade = rel_err(decade, 10.0)

    c_q0 = contrast(SourceClass.QUANTUM_PS, 1e9, 1e-12)
    err_q = max(
        rel_err(
            contrast(SourceClass.QUANTUM_PS, 1e9, r * T0) / c_q0,
            1.0 / math.sqrt(1.0 + r * r / 2.0),
        )
        for r in ratios_over
    )

    check(
        11,
        "contrast ratios: classical 1/sqrt(1+Td^2/4T0^2) within 2%, quantum decade "
        "10x for brightness 0.01 -> 0.001 within 5%, quantum 1/sqrt(1+Td^2/2T0^2) within 2%",
        err_cl <= 0.02 and err_decade <= 0.05 and err_q <= 0.02,
        f"classical max rel={err_cl:.2e}; decade={decade:.3f}; quantum max rel={err_q:.2e}",
    )
