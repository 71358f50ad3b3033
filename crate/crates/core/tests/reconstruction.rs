use std::f64::consts::PI;

use biphoton::interference::*;
use biphoton::reconstruction::*;
use biphoton::spectral::*;
use biphoton::Error;
use ndarray::Array2;
use num_complex::Complex64;

const C: f64 = SPEED_OF_LIGHT;
const C_T: f64 = -4.86e11;

fn freq() -> FrequencyGrid {
    FrequencyGrid::with_span(8e13, 1024).unwrap()
}

fn paths() -> PathGrid {
    PathGrid::centered(7.9e-4, 6e-3, 512).unwrap()
}

/// Skewed Gaussian with a delay of 2.65 ps and a cubic phase.
fn phi0(w: f64) -> Complex64 {
    let amp =
        (-(w - 2e12).powi(2) / (2.0 * 4e12f64.powi(2))).exp() * (1.0 + 0.3 * (w / 5e12).tanh());
    Complex64::from_polar(amp, -2.65e-12 * w + 1e-39 * w.powi(3))
}

/// Map whose slice at sweep offset δ is Φ0(Ω + c·δ): the regime where the
/// diagonal slice is exact.
fn shifted_map(sweep: SweepGrid, splitter: BeamSplitter, visibility: f64) -> CoincidenceMap {
    let path = paths();
    let mut values = Array2::zeros((sweep.count(), path.count()));
    for (j, d) in sweep.values().into_iter().enumerate() {
        let phi = SpectralWavefunction::from_fn(freq(), WavefunctionMeta::default(), |w| {
            phi0(w + C_T * d)
        })
        .unwrap();
        let f = normalized_interference_term(&phi, &path).unwrap();
        for (i, x) in f.into_iter().enumerate() {
            values[[j, i]] = splitter.rate(visibility * x);
        }
    }
    CoincidenceMap::new(
        path,
        sweep,
        values,
        splitter,
        true,
        MapMeta::simulated(58.0, 4.66e15),
    )
    .unwrap()
}

fn sweep(count: usize, span: f64) -> SweepGrid {
    SweepGrid::centered(SweepAxis::Temperature, span, count).unwrap()
}

fn truth_on(grid: &FrequencyGrid) -> SpectralWavefunction {
    SpectralWavefunction::from_fn(*grid, WavefunctionMeta::default(), phi0).unwrap()
}

#[test]
fn rate_inversion() {
    let s = BeamSplitter::from_angle(0.6);
    let path = PathGrid::centered(0.0, 1e-3, 16).unwrap();
    let sw = sweep(2, 1.0);
    let mut values = Array2::from_elem((2, 16), s.baseline());
    values[[1, 3]] = s.baseline() - 0.25 * s.coupling();
    let map =
        CoincidenceMap::new(path, sw, values, s, true, MapMeta::simulated(58.0, 1.0)).unwrap();
    let f = invert_rate(&map).unwrap();
    assert_eq!(f[[0, 0]], 0.0);
    assert!((f[[1, 3]] - 0.25).abs() < 1e-15);

    let mut dip = map.clone();
    dip.splitter = BeamSplitter::balanced();
    dip.values.fill(0.0);
    assert!(invert_rate(&dip)
        .unwrap()
        .iter()
        .all(|v| (v - 1.0).abs() < 1e-15));

    let mut open = map.clone();
    open.splitter = BeamSplitter::new(1.0, 0.0).unwrap();
    assert!(matches!(
        invert_rate(&open),
        Err(Error::NoInterference { .. })
    ));
    let mut raw = map;
    raw.normalized = false;
    assert!(invert_rate(&raw).is_err());
}

#[test]
fn rate_inversion_undoes_synthesis() {
    let map = shifted_map(sweep(8, 4.0), BeamSplitter::from_angle(0.7), 1.0);
    let f = invert_rate(&map).unwrap();
    for (j, d) in map.sweep_grid.values().into_iter().enumerate() {
        let phi = SpectralWavefunction::from_fn(freq(), WavefunctionMeta::default(), |w| {
            phi0(w + C_T * d)
        })
        .unwrap();
        let f0 = normalized_interference_term(&phi, &map.path_grid).unwrap();
        for (i, v) in f0.into_iter().enumerate() {
            assert!((f[[j, i]] - v).abs() < 1e-12);
        }
    }
}

#[test]
fn gaussian_interference_term_gives_gaussian_spectrum() {
    let w = 1e-4;
    let path = PathGrid::centered(0.0, 2e-3, 512).unwrap();
    let sw = sweep(1, 1.0);
    let row: Vec<f64> = path
        .values()
        .iter()
        .map(|s| (-s * s / (2.0 * w * w)).exp())
        .collect();
    let f = Array2::from_shape_vec((1, 512), row).unwrap();
    let sym = to_symmetrised(&f, &path, &sw, &freq(), false).unwrap();
    let width = C / (2.0 * w);
    let peak = w * (2.0 * PI).sqrt() / (C * PI);
    for (k, om) in freq().omegas().into_iter().enumerate() {
        let expect = peak * (-om * om / (2.0 * width * width)).exp();
        let got = sym.values[[0, k]];
        assert!(
            (got.re - expect).abs() < 1e-10 * peak && got.im.abs() < 1e-10 * peak,
            "{om:e}"
        );
    }
}

#[test]
fn real_even_spectrum_gives_real_even_f_transform() {
    let path = PathGrid::centered(0.0, 6e-3, 512).unwrap();
    let phi = SpectralWavefunction::from_fn(freq(), WavefunctionMeta::default(), |w| {
        Complex64::new((-w * w / 2e25).exp() * (1.0 + (w / 4e12).powi(2)), 0.0)
    })
    .unwrap();
    let f = normalized_interference_term(&phi, &path).unwrap();
    let f = Array2::from_shape_vec((1, 512), f).unwrap();
    let sym = to_symmetrised(&f, &path, &sweep(1, 1.0), &freq(), false).unwrap();
    let max = sym.max_magnitude();
    let g = freq();
    for k in 1..g.count() {
        let z = sym.values[[0, k]];
        assert!(z.im.abs() < 1e-10 * max);
        assert!((z - sym.values[[0, g.count() - k]]).norm() < 1e-10 * max);
    }
    assert!(sym.hermiticity_residual < 1e-10);
}

#[test]
fn truncated_window_is_refused() {
    let path = PathGrid::centered(0.0, 1e-3, 128).unwrap();
    let wide: Vec<f64> = path
        .values()
        .iter()
        .map(|s| (-s * s / (2.0 * 4e-4f64.powi(2))).exp())
        .collect();
    let f = Array2::from_shape_vec((1, 128), wide).unwrap();
    let r = to_symmetrised(&f, &path, &sweep(1, 1.0), &freq(), false);
    assert!(matches!(r, Err(Error::TruncatedWindow(_))), "{r:?}");

    // decays inside the window but the window is under four widths
    let narrow: Vec<f64> = path
        .values()
        .iter()
        .map(|s| (-(s / 1.4e-4).powi(8)).exp())
        .collect();
    let f = Array2::from_shape_vec((1, 128), narrow).unwrap();
    let r = to_symmetrised(&f, &path, &sweep(1, 1.0), &freq(), false);
    assert!(matches!(r, Err(Error::TruncatedWindow(_))), "{r:?}");
}

#[test]
fn linear_shift_round_trip() {
    let map = shifted_map(sweep(64, 36.0), BeamSplitter::balanced(), 1.0);
    let r = reconstruct(&map, C_T, &ReconstructionOptions::new(freq())).unwrap();
    let truth = truth_on(r.phi.grid());
    let rep = compare_all(&r.phi, &truth, CompareOptions::default()).unwrap();
    assert!(rep.amplitude_l2 < 1e-4, "{rep:?}");
    assert!(rep.phase_rms < 1e-4, "{rep:?}");
    assert!(r.diagnostics.hermiticity_residual < 1e-10);
    assert!(r.diagnostics.warnings.is_empty());
    assert!(r.phi.meta.global_phase_fixed);
    let peak = r.phi.values()[r.phi.peak_index()];
    assert!(peak.im.abs() < 1e-15 && (peak.re - 1.0).abs() < 1e-15);
    assert_eq!(r.spectral_density, r.phi.density());
}

#[test]
fn pump_frequency_axis_uses_its_constant() {
    let sw = SweepGrid::centered(SweepAxis::PumpFrequency, 36.0 * C_T / -2.52, 64).unwrap();
    let path = paths();
    let c_wp = -2.52;
    let mut values = Array2::zeros((64, path.count()));
    for (j, d) in sw.values().into_iter().enumerate() {
        let phi = SpectralWavefunction::from_fn(freq(), WavefunctionMeta::default(), |w| {
            phi0(w + c_wp * d)
        })
        .unwrap();
        let f = normalized_interference_term(&phi, &path).unwrap();
        for (i, x) in f.into_iter().enumerate() {
            values[[j, i]] = BeamSplitter::balanced().rate(x);
        }
    }
    let map = CoincidenceMap::new(
        path,
        sw,
        values,
        BeamSplitter::balanced(),
        true,
        MapMeta::simulated(58.0, 4.66e15),
    )
    .unwrap();
    let r = reconstruct(&map, c_wp, &ReconstructionOptions::new(freq())).unwrap();
    let rep = compare_all(&r.phi, &truth_on(r.phi.grid()), CompareOptions::default()).unwrap();
    assert!(rep.amplitude_l2 < 1e-4 && rep.phase_rms < 1e-4, "{rep:?}");
}

#[test]
fn visibility_loss_does_not_change_the_result() {
    let full = shifted_map(sweep(32, 36.0), BeamSplitter::balanced(), 1.0);
    let lossy = shifted_map(sweep(32, 36.0), BeamSplitter::balanced(), 0.63);
    let opts = ReconstructionOptions::new(freq());
    let a = reconstruct(&full, C_T, &opts).unwrap();
    let b = reconstruct(&lossy, C_T, &opts).unwrap();
    let worst = a
        .phi
        .values()
        .iter()
        .zip(b.phi.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn slice_guards() {
    let opts = ReconstructionOptions::new(freq());
    let single = shifted_map(sweep(1, 1.0), BeamSplitter::balanced(), 1.0);
    let e = reconstruct(&single, C_T, &opts).unwrap_err();
    assert!(matches!(e, Error::SingleSlice));
    assert!(e.to_string().contains("single HOM dip is insufficient"));

    let few = shifted_map(sweep(4, 36.0), BeamSplitter::balanced(), 1.0);
    assert!(matches!(
        reconstruct(&few, C_T, &opts),
        Err(Error::InsufficientSweep(_))
    ));

    let short = shifted_map(sweep(16, 8.0), BeamSplitter::balanced(), 1.0);
    let e = reconstruct(&short, C_T, &opts).unwrap_err();
    assert!(matches!(e, Error::InsufficientSweep(_)), "{e:?}");
    assert!(e
        .to_string()
        .starts_with("sweep range insufficient for reconstruction"));

    let far = shifted_map(sweep(16, 36.0), BeamSplitter::balanced(), 1.0);
    assert!(matches!(
        reconstruct(&far, 1e13, &opts),
        Err(Error::InsufficientSweep(_))
    ));
}

#[test]
fn vanishing_center_is_refused() {
    let sw = sweep(16, 36.0);
    let path = paths();
    let mut values = Array2::zeros((16, path.count()));
    for (j, d) in sw.values().into_iter().enumerate() {
        let phi = SpectralWavefunction::from_fn(freq(), WavefunctionMeta::default(), |w| {
            let x = w + C_T * d;
            phi0(x) * (x / 4e12)
        })
        .unwrap();
        let f = normalized_interference_term(&phi, &path).unwrap();
        for (i, x) in f.into_iter().enumerate() {
            values[[j, i]] = BeamSplitter::balanced().rate(x);
        }
    }
    let map = CoincidenceMap::new(
        path,
        sw,
        values,
        BeamSplitter::balanced(),
        true,
        MapMeta::simulated(58.0, 4.66e15),
    )
    .unwrap();
    let r = reconstruct(&map, C_T, &ReconstructionOptions::new(freq()));
    assert!(matches!(r, Err(Error::WeakCenter { .. })), "{r:?}");
}

#[test]
fn center_average_and_splitter_sensitivity() {
    let map = shifted_map(sweep(64, 36.0), BeamSplitter::balanced(), 1.0);
    let mut opts = ReconstructionOptions::new(freq());
    opts.slice.center_average = true;
    opts.splitter_sensitivity = true;
    let r = reconstruct(&map, C_T, &opts).unwrap();
    let rep = compare_all(&r.phi, &truth_on(r.phi.grid()), CompareOptions::default()).unwrap();
    assert!(rep.amplitude_l2 < 1e-3, "{rep:?}");
    let s = r.diagnostics.splitter_sensitivity.unwrap();
    assert!(s.is_finite() && s < 0.05, "{s}");
    assert!(r
        .diagnostics
        .to_text()
        .contains("splitter_sensitivity_amplitude_l2"));
}

#[test]
fn taper_shape() {
    let w = taper_weights(100, 0.1);
    assert_eq!(w.len(), 100);
    assert!(w.iter().all(|&x| x > 0.0 && x <= 1.0));
    assert!(w[10..90].iter().all(|&x| x == 1.0));
    for i in 0..50 {
        assert_eq!(w[i], w[99 - i]);
    }
    assert!(w.windows(2).take(10).all(|p| p[0] < p[1]));
}

#[test]
fn gaussian_delay_density_has_reciprocal_width() {
    let sigma = 3e12;
    let phi = SpectralWavefunction::from_fn(freq(), WavefunctionMeta::default(), |w| {
        Complex64::new((-w * w / (2.0 * sigma * sigma)).exp(), 0.0)
    })
    .unwrap();
    let r = finalize(phi, Diagnostics::default()).unwrap();
    let d = &r.time_delay;
    let integral: f64 = d.density.iter().sum::<f64>() * d.delays.spacing();
    assert!((integral - 1.0).abs() < 1e-12);
    assert!(d.mean().abs() < 1e-20);
    let expect = 1.0 / (sigma * 2f64.sqrt());
    assert!(
        (d.std_dev() - expect).abs() < 1e-6 * expect,
        "{} vs {expect}",
        d.std_dev()
    );
    for (t, p) in d.delays.taus().iter().zip(&d.density) {
        let model = (sigma / PI.sqrt()) * (-(sigma * t).powi(2)).exp();
        assert!((p - model).abs() < 1e-9 * sigma);
    }
}

#[test]
fn parseval_between_spectrum_and_delay_amplitude() {
    let phi = SpectralWavefunction::from_fn(freq(), WavefunctionMeta::default(), phi0).unwrap();
    let padded = zero_pad(&phi, DELAY_PADDING).unwrap();
    let a = forward_transform(&padded).unwrap();
    let lhs = phi.norm_sqr();
    let rhs: f64 =
        a.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * a.grid.spacing() / (2.0 * PI);
    assert!((lhs - rhs).abs() < 1e-6 * lhs);
}

#[test]
fn result_files_round_trip_bit_exact() {
    let map = shifted_map(sweep(64, 36.0), BeamSplitter::balanced(), 1.0);
    let r = reconstruct(&map, C_T, &ReconstructionOptions::new(freq())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = save_result(&r, dir.path()).unwrap();
    assert_eq!(files.len(), 4);
    let phi = load_phi(&dir.path().join("phi.csv")).unwrap();
    assert_eq!(phi.grid(), r.phi.grid());
    assert!(phi
        .values()
        .iter()
        .zip(r.phi.values())
        .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    let (g, density) = load_spectrum(&dir.path().join("spectrum.csv")).unwrap();
    assert_eq!(&g, r.phi.grid());
    assert_eq!(density, r.spectral_density);
    let delay = load_delay(&dir.path().join("delay.csv")).unwrap();
    assert_eq!(delay, r.time_delay);
    let text = std::fs::read_to_string(dir.path().join("diagnostics.txt")).unwrap();
    assert!(text.contains("hermiticity_residual"));
}
