use std::f64::consts::PI;

use biphoton::dispersion::*;
use biphoton::spdc::*;
use biphoton::spectral::*;
use biphoton::Error;
use num_complex::Complex64;

fn point(m: &CrystalModel) -> PhaseMatchPoint {
    find_phase_match(m, omega_from_nm(404.25), 58.0, PHASE_MATCH_BRACKET_C).unwrap()
}

fn spec(model: SourceModel, detection: DetectionConfig) -> SourceSpec {
    let crystal = CrystalModel::builtin_ppktp();
    let p = point(&crystal);
    SourceSpec {
        model,
        crystal,
        point: p,
        detection,
        quadrature: Quadrature::default(),
        dispersion: DispersionMode::Exact,
    }
}

fn linearized(mut s: SourceSpec) -> SourceSpec {
    s.dispersion = DispersionMode::Linearized(shift_constants(&s.crystal, s.point).unwrap());
    s
}

fn case_a() -> DetectionConfig {
    DetectionConfig::gaussian(4.3e-6, 9.6e-6)
}

#[test]
fn collinear_zeros_at_sinc_nodes() {
    let s = linearized(spec(SourceModel::AnalyticCollinear, case_a()));
    let DispersionMode::Linearized(c) = s.dispersion else {
        unreachable!()
    };
    let g = Generator::new(s.clone()).unwrap();
    let first_zero = 2.0 * PI / (c.group_mismatch * s.crystal.length);
    for w in [first_zero, -first_zero, 2.0 * first_zero] {
        let v = g.raw_amplitude(w, s.point.t0_c, s.point.omega_p0).unwrap();
        assert!(v.norm() < 1e-12, "{w:e}: {v}");
    }
    let centre = g
        .raw_amplitude(0.0, s.point.t0_c, s.point.omega_p0)
        .unwrap();
    assert!((centre.norm() - 1.0).abs() < 1e-15 && centre.arg() == 0.0);
}

#[test]
fn exact_collinear_zero_and_phase() {
    let s = spec(SourceModel::AnalyticCollinear, case_a());
    let g = Generator::new(s.clone()).unwrap();
    let (t0, wp) = (s.point.t0_c, s.point.omega_p0);
    let half =
        |w: f64| 0.5 * phase_mismatch(&s.crystal, w, t0, wp, 0.0).unwrap() * s.crystal.length;
    // bisection for Δk·L/2 = −π on Ω > 0
    let (mut a, mut b) = (0.0, 1e13);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if half(m) + PI > 0.0 {
            a = m
        } else {
            b = m
        }
    }
    let v = g.raw_amplitude(0.5 * (a + b), t0, wp).unwrap();
    assert!(v.norm() < 1e-9, "{v}");
    let grid = FrequencyGrid::with_span(1.6e13, 256).unwrap();
    let phi = g.wavefunction(&grid, t0, wp).unwrap();
    assert!(phi.values()[grid.zero_index()].arg().abs() < 1e-6);
}

#[test]
fn linearized_collinear_shifts_with_temperature() {
    let s = linearized(spec(SourceModel::AnalyticCollinear, case_a()));
    let DispersionMode::Linearized(c) = s.dispersion else {
        unreachable!()
    };
    let g = Generator::new(s.clone()).unwrap();
    let grid = FrequencyGrid::with_span(2e13, 1024).unwrap();
    let (t0, wp) = (s.point.t0_c, s.point.omega_p0);
    let base = g.wavefunction(&grid, t0, wp).unwrap();
    let dt = 0.01;
    let hot = g.wavefunction(&grid, t0 + dt, wp).unwrap();
    let samples = UniformSamples::on_grid(&grid, base.values());
    let shift = c.c_t * dt;
    let mut worst: f64 = 0.0;
    for (k, w) in grid.omegas().into_iter().enumerate() {
        let x = w + shift;
        if x < grid.min() || x > grid.max() {
            continue;
        }
        worst = worst.max((samples.at(x).unwrap() - hot.values()[k]).norm());
    }
    assert!(worst < 1e-6, "{worst:e}");
}

#[test]
fn gaussian_projection_is_asymmetric() {
    let s = spec(SourceModel::SpatialProjected, case_a());
    let grid = FrequencyGrid::with_span(8e13, 1024).unwrap();
    let phi = wavefunction(&s, &grid, s.point.t0_c, s.point.omega_p0).unwrap();
    let d = phi.density();
    let z = grid.zero_index();
    let upper: f64 = (1..200).map(|k| d[z + k]).sum();
    let lower: f64 = (1..200).map(|k| d[z - k]).sum();
    assert!(
        (upper - lower).abs() > 0.2 * (upper + lower),
        "{upper} {lower}"
    );
    assert!((phi.max_amplitude() - 1.0).abs() < 1e-15);
}

#[test]
fn narrow_transverse_window_reduces_to_collinear() {
    let wide = DetectionConfig::gaussian(5e-3, 5e-3);
    let spatial = spec(SourceModel::SpatialProjected, wide);
    let grid = FrequencyGrid::with_span(1.6e13, 512).unwrap();
    let (t0, wp) = (spatial.point.t0_c, spatial.point.omega_p0);
    let a = wavefunction(&spatial, &grid, t0, wp).unwrap();
    let b = wavefunction(&spec(SourceModel::AnalyticCollinear, wide), &grid, t0, wp)
        .unwrap()
        .max_normalized();
    let l2 = compare(&a, &b, CompareMode::AmplitudeL2).unwrap();
    assert!(l2 < 0.02, "{l2}");
}

#[test]
fn modes_are_unit_normalized() {
    let w = 9.6e-6;
    let n = 400;
    let qmax = 8.0 / w;
    let dq = 2.0 * qmax / n as f64;
    for mode in [
        ModeDescriptor::Gaussian,
        ModeDescriptor::LaguerreGauss { l: 1, p: 0 },
        ModeDescriptor::LaguerreGauss { l: -2, p: 1 },
    ] {
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let q = [-qmax + (i as f64 + 0.5) * dq, -qmax + (j as f64 + 0.5) * dq];
                total += mode_amplitude(mode, q, w, 1e-3, 1.5e7).norm_sqr() * dq * dq;
            }
        }
        assert!((total - 1.0).abs() < 1e-6, "{mode}: {total}");
    }
}

#[test]
fn lg_modes_carry_azimuthal_phase() {
    let m = ModeDescriptor::LaguerreGauss { l: 1, p: 0 };
    let a = mode_amplitude(m, [1e5, 0.0], 1e-5, 0.0, 1.0);
    let b = mode_amplitude(m, [0.0, 1e5], 1e-5, 0.0, 1.0);
    assert!((b / a - Complex64::i()).norm() < 1e-12);
}

/// Direct Cartesian evaluation of the four-dimensional projection integral.
fn cartesian_projection(s: &SourceSpec, omega: f64, n: usize, box_half: f64) -> Complex64 {
    let d = &s.detection;
    let (t0, wp) = (s.point.t0_c, s.point.omega_p0);
    let c = &s.crystal;
    let dk = phase_mismatch(c, omega, t0, wp, 0.0).unwrap();
    let kp = wavenumber(c, Role::Pump, wp, t0).unwrap();
    let ks = wavenumber(c, Role::Signal, 0.5 * wp + omega, t0).unwrap();
    let ki = wavenumber(c, Role::Idler, 0.5 * wp - omega, t0).unwrap();
    let h = 2.0 * box_half / n as f64;
    let axis: Vec<f64> = (0..n).map(|i| -box_half + (i as f64 + 0.5) * h).collect();
    let mut gs = vec![Complex64::new(0.0, 0.0); n * n];
    let mut gi = vec![Complex64::new(0.0, 0.0); n * n];
    for (i, &x) in axis.iter().enumerate() {
        for (j, &y) in axis.iter().enumerate() {
            gs[i * n + j] =
                mode_amplitude(d.signal_mode, [x, y], d.detection_waist, 0.0, ks).conj();
            gi[i * n + j] = mode_amplitude(d.idler_mode, [x, y], d.detection_waist, 0.0, ki).conj();
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..n * n {
        let (sx, sy) = (axis[a / n], axis[a % n]);
        if gs[a].norm() < 1e-30 {
            continue;
        }
        for b in 0..n * n {
            let (ix, iy) = (axis[b / n], axis[b % n]);
            let q = [sx + ix, sy + iy];
            let vp = mode_amplitude(d.pump_mode, q, d.pump_waist, 0.0, kp);
            let delta = -(q[0] * q[0] + q[1] * q[1]) / (2.0 * kp)
                + (sx * sx + sy * sy) / (2.0 * ks)
                + (ix * ix + iy * iy) / (2.0 * ki);
            acc += vp * gs[a] * gi[b] * sinc(0.5 * (dk + delta) * c.length);
        }
    }
    acc * h.powi(4) * Complex64::from_polar(1.0, 0.5 * dk * c.length)
}

#[test]
fn polar_kernel_matches_cartesian_oracle_and_oam_rule() {
    let lg = |l| ModeDescriptor::LaguerreGauss { l, p: 0 };
    let mut s = spec(
        SourceModel::SpatialProjected,
        DetectionConfig {
            signal_mode: lg(1),
            idler_mode: lg(-1),
            ..case_a()
        },
    );
    s.crystal.length = 1e-3;
    let box_half = 7.0 / s.detection.detection_waist;
    let g = Generator::new(s.clone()).unwrap();
    for omega in [0.0, 2e13] {
        let polar = g
            .raw_amplitude(omega, s.point.t0_c, s.point.omega_p0)
            .unwrap();
        let oracle = cartesian_projection(&s, omega, 36, box_half);
        assert!(
            (polar - oracle).norm() < 2e-3 * oracle.norm(),
            "{omega:e}: {polar} vs {oracle}"
        );
    }

    let mut forbidden = s.clone();
    forbidden.detection.idler_mode = ModeDescriptor::Gaussian;
    let allowed = cartesian_projection(&s, 0.0, 36, box_half).norm();
    let oracle_null = cartesian_projection(&forbidden, 0.0, 36, box_half).norm();
    assert!(oracle_null < 1e-10 * allowed, "{oracle_null:e}");
    let grid = FrequencyGrid::with_span(8e13, 64).unwrap();
    let raw = Generator::new(forbidden)
        .unwrap()
        .raw_values(&grid.omegas(), 58.0, s.point.omega_p0)
        .unwrap();
    assert!(raw.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn displacement_sign_conjugates_its_phase() {
    let mut s = spec(SourceModel::SpatialProjected, case_a());
    s.detection.crystal_displacement = 2e-3;
    let mut r = s.clone();
    r.detection.crystal_displacement = -2e-3;
    let (gp, gm) = (
        Generator::new(s.clone()).unwrap(),
        Generator::new(r).unwrap(),
    );
    let (t0, wp) = (s.point.t0_c, s.point.omega_p0);
    for omega in [-1e13, 0.0, 3e12, 1.5e13] {
        let dk = phase_mismatch(&s.crystal, omega, t0, wp, 0.0).unwrap();
        let strip = Complex64::from_polar(1.0, -0.5 * dk * s.crystal.length);
        let a = gp.raw_amplitude(omega, t0, wp).unwrap() * strip;
        let b = gm.raw_amplitude(omega, t0, wp).unwrap() * strip;
        assert!((a - b.conj()).norm() < 1e-12 * a.norm(), "{omega:e}");
        assert!(a.im.abs() > 1e-6 * a.norm());
    }
}

#[test]
fn quadrature_guards() {
    let mut s = spec(SourceModel::SpatialProjected, case_a());
    s.detection.crystal_displacement = 3e-3;
    let grid = FrequencyGrid::with_span(8e13, 1024).unwrap();
    s.quadrature = Quadrature {
        radial_order: 16,
        azimuthal_order: 8,
        q_max: None,
    };
    let r = check_convergence(&s, &grid, s.point.t0_c, s.point.omega_p0);
    assert!(
        matches!(r, Err(Error::QuadratureNotConverged { .. })),
        "{r:?}"
    );

    s.quadrature = Quadrature {
        radial_order: 4,
        azimuthal_order: 8,
        q_max: None,
    };
    assert!(Generator::new(s.clone()).is_err());
    s.quadrature = Quadrature {
        radial_order: 64,
        azimuthal_order: 32,
        q_max: Some(2.0 / 9.6e-6),
    };
    assert!(Generator::new(s.clone()).is_err());
}

#[test]
fn default_quadrature_converges_for_centered_cases() {
    let grid = FrequencyGrid::with_span(8e13, 1024).unwrap();
    let lg = |l| ModeDescriptor::LaguerreGauss { l, p: 0 };
    for det in [
        case_a(),
        DetectionConfig {
            signal_mode: lg(1),
            idler_mode: lg(-1),
            ..case_a()
        },
    ] {
        let s = spec(SourceModel::SpatialProjected, det);
        let r = check_convergence(&s, &grid, s.point.t0_c, s.point.omega_p0).unwrap();
        assert!(r < CONVERGENCE_LIMIT);
    }
}

#[test]
fn evaluation_is_deterministic() {
    let s = spec(SourceModel::SpatialProjected, case_a());
    let grid = FrequencyGrid::with_span(8e13, 128).unwrap();
    let a = wavefunction(&s, &grid, 58.3, s.point.omega_p0).unwrap();
    let b = wavefunction(&s, &grid, 58.3, s.point.omega_p0).unwrap();
    assert!(a
        .values()
        .iter()
        .zip(b.values())
        .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
}
