use std::f64::consts::PI;

use biphoton::dispersion::*;
use biphoton::interference::*;
use biphoton::spdc::*;
use biphoton::spectral::*;
use biphoton::Error;
use ndarray::Array2;
use num_complex::Complex64;

const C: f64 = SPEED_OF_LIGHT;

fn gaussian(grid: FrequencyGrid, centre: f64, sigma: f64) -> SpectralWavefunction {
    SpectralWavefunction::from_fn(grid, WavefunctionMeta::default(), |w| {
        Complex64::new((-(w - centre).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0)
    })
    .unwrap()
}

fn freq() -> FrequencyGrid {
    FrequencyGrid::with_span(8e13, 1024).unwrap()
}

fn paths() -> PathGrid {
    PathGrid::centered(0.0, 4e-3, 256).unwrap()
}

/// Map whose row j holds the rate of a Gaussian spectrum centred at the
/// sweep value times `shift`.
fn gaussian_map(splitter: BeamSplitter, shift: f64) -> CoincidenceMap {
    let sweep = SweepGrid::centered(SweepAxis::Temperature, 20.0, 16).unwrap();
    let path = paths();
    let mut values = Array2::zeros((sweep.count(), path.count()));
    for (j, v) in sweep.values().into_iter().enumerate() {
        let phi = gaussian(freq(), shift * v, 4e12);
        let f = normalized_interference_term(&phi, &path).unwrap();
        for (i, x) in f.into_iter().enumerate() {
            values[[j, i]] = splitter.rate(x);
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

#[test]
fn real_even_spectrum_peaks_at_zero_delay() {
    let phi = gaussian(freq(), 0.0, 5e12);
    let path = PathGrid::centered(0.0, 2e-3, 64).unwrap();
    let f = interference_term(&phi, &path).unwrap();
    let energy = phi.norm_sqr();
    let zero = path.values().iter().position(|&s| s == 0.0).unwrap();
    assert!((f[zero] - energy).abs() < 1e-12 * energy);
    assert!(f.iter().all(|&v| v <= f[zero] * (1.0 + 1e-12)));
}

#[test]
fn gaussian_closed_form() {
    let sigma = 5e12;
    let phi = gaussian(freq(), 0.0, sigma);
    let path = PathGrid::centered(0.0, 2e-4, 64).unwrap();
    let f = interference_term(&phi, &path).unwrap();
    for (s, v) in path.values().into_iter().zip(f) {
        let expect = sigma * PI.sqrt() * (-(sigma * s / C).powi(2)).exp();
        assert!((v - expect).abs() < 1e-10 * sigma, "{s:e}: {v} vs {expect}");
    }
}

#[test]
fn one_sided_support_gives_no_interference() {
    let grid = freq();
    let phi = SpectralWavefunction::from_fn(grid, WavefunctionMeta::default(), |w| {
        if w > 1e12 {
            Complex64::new((-(w - 1e13).powi(2) / 1e25).exp(), 0.3)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
    .unwrap();
    let f = interference_term(&phi, &paths()).unwrap();
    assert!(f.iter().all(|&v| v == 0.0));
}

#[test]
fn even_phase_leaves_rate_unchanged() {
    let grid = freq();
    let a = SpectralWavefunction::from_fn(grid, WavefunctionMeta::default(), |w| {
        let amp = (-(w - 3e12).powi(2) / (2.0 * 6e12f64.powi(2))).exp();
        Complex64::from_polar(amp, 1e-13 * w)
    })
    .unwrap();
    let b = SpectralWavefunction::from_fn(grid, WavefunctionMeta::default(), |w| {
        let amp = (-(w - 3e12).powi(2) / (2.0 * 6e12f64.powi(2))).exp();
        let even = 0.8 * (w / 1e13).powi(2) - 0.3 * (w / 1e13).powi(4) + (w / 7e12).cos();
        Complex64::from_polar(amp, 1e-13 * w + even)
    })
    .unwrap();
    let s = BeamSplitter::balanced();
    let fa = normalized_interference_term(&a, &paths()).unwrap();
    let fb = normalized_interference_term(&b, &paths()).unwrap();
    for (x, y) in fa.iter().zip(&fb) {
        assert!((s.rate(*x) - s.rate(*y)).abs() < 1e-12);
    }
}

#[test]
fn interference_is_bounded_by_overlap() {
    let grid = freq();
    let phi = SpectralWavefunction::from_fn(grid, WavefunctionMeta::default(), |w| {
        Complex64::from_polar(
            (-(w - 4e12).powi(2) / 2e25).exp() + 0.3 * (-(w + 9e12).powi(2) / 5e24).exp(),
            2e-13 * w + (w / 1e13).powi(3),
        )
    })
    .unwrap();
    let f = interference_term(&phi, &paths()).unwrap();
    let v = phi.values();
    let f_max: f64 = (1..grid.count())
        .map(|k| (v[k] * v[grid.count() - k]).norm())
        .sum::<f64>()
        * grid.spacing();
    assert!(f.iter().all(|x| x.abs() <= f_max * (1.0 + 1e-12)));
}

#[test]
fn splitter_rules() {
    assert!(BeamSplitter::new(0.8, 0.6).is_ok());
    assert!(BeamSplitter::new(0.8, 0.7).is_err());
    let s = BeamSplitter::from_angle(0.6);
    for f in [-0.7, 0.0, 0.3, 1.0] {
        assert!((s.rate(f) - s.swapped().rate(f)).abs() < 1e-15);
    }
    let open = BeamSplitter::new(1.0, 0.0).unwrap();
    assert_eq!(open.rate(0.9), 1.0);
    assert!(BeamSplitter::balanced().rate(1.0).abs() < 1e-15);
}

#[test]
fn perfect_dip_for_symmetric_real_spectrum() {
    let map = gaussian_map(BeamSplitter::balanced(), 0.0);
    let row = map.row(map.sweep_grid.center_index());
    let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min.abs() < 1e-12, "{min}");
}

fn collinear_generator() -> Generator {
    let crystal = CrystalModel::builtin_ppktp();
    let point =
        find_phase_match(&crystal, omega_from_nm(404.25), 58.0, PHASE_MATCH_BRACKET_C).unwrap();
    Generator::new(SourceSpec {
        model: SourceModel::AnalyticCollinear,
        crystal,
        point,
        detection: DetectionConfig::gaussian(4.3e-6, 9.6e-6),
        quadrature: Quadrature::default(),
        dispersion: DispersionMode::Exact,
    })
    .unwrap()
}

#[test]
fn synthesized_map_basics() {
    let g = collinear_generator();
    let sweep = SweepGrid::centered(SweepAxis::Temperature, 4.0, 8).unwrap();
    let path = PathGrid::centered(7.9e-4, 6e-3, 128).unwrap();
    let open = synthesize_map(
        &g,
        &freq(),
        &path,
        &sweep,
        BeamSplitter::new(1.0, 0.0).unwrap(),
        None,
    )
    .unwrap();
    assert!(open.values.iter().all(|&v| v == 1.0));
    let map = synthesize_map(&g, &freq(), &path, &sweep, BeamSplitter::balanced(), None).unwrap();
    assert!(map.normalized);
    let c = map.meta.c_t.unwrap();
    assert!((c + 4.86e11).abs() < 0.01e11);
    let noise = NoiseSpec {
        baseline_counts: 0.0,
        seed: 1,
    };
    assert!(synthesize_map(
        &g,
        &freq(),
        &path,
        &sweep,
        BeamSplitter::balanced(),
        Some(noise)
    )
    .is_err());
}

#[test]
fn noise_is_seed_deterministic() {
    let map = gaussian_map(BeamSplitter::balanced(), 2e11);
    let n = NoiseSpec {
        baseline_counts: 1e4,
        seed: 7,
    };
    let a = apply_poisson_noise(&map, n).unwrap();
    let b = apply_poisson_noise(&map, n).unwrap();
    assert_eq!(a, b);
    let c = apply_poisson_noise(&map, NoiseSpec { seed: 8, ..n }).unwrap();
    assert_ne!(a.values, c.values);
    assert!(!a.normalized && a.meta.seed == Some(7));
}

#[test]
fn normalizing_noiseless_map_is_identity() {
    let map = gaussian_map(BeamSplitter::from_angle(0.7), 2e11);
    let n = normalize_measured(&map, 5e-4).unwrap();
    let worst = (&n.values - &map.values)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-9, "{worst:e}");
    assert!(n.meta.dip_center_m.unwrap().abs() < 2.0 * map.path_grid.spacing());

    let mut scaled = map.clone();
    scaled.values.mapv_inplace(|v| v * 1234.0);
    scaled.normalized = false;
    let n2 = normalize_measured(&scaled, 5e-4).unwrap();
    let worst = (&n2.values - &map.values)
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn poisson_baseline_normalizes_within_three_percent() {
    let map = gaussian_map(BeamSplitter::balanced(), 2e11);
    let target = map.splitter.baseline();
    let far: Vec<usize> = (0..map.path_grid.count())
        .filter(|&i| map.path_grid.value(i).abs() > 1e-3)
        .collect();
    for seed in 0..100 {
        let noisy = apply_poisson_noise(
            &map,
            NoiseSpec {
                baseline_counts: 1e4,
                seed,
            },
        )
        .unwrap();
        let n = normalize_measured(&noisy, 5e-4).unwrap();
        for j in 0..map.sweep_grid.count() {
            let mean = far.iter().map(|&i| n.values[[j, i]]).sum::<f64>() / far.len() as f64;
            assert!(
                (mean - target).abs() < 0.03 * target,
                "seed {seed} row {j}: {mean}"
            );
        }
        let counts = n.meta.baseline_counts.unwrap();
        assert!((counts / 1e4 - 1.0).abs() < 0.03);
    }
}

#[test]
fn normalization_refusals() {
    let map = gaussian_map(BeamSplitter::balanced(), 0.0);
    assert!(matches!(
        normalize_measured(&map, 1.9e-3),
        Err(Error::DataQuality(_))
    ));
    let noisy = apply_poisson_noise(
        &map,
        NoiseSpec {
            baseline_counts: 3.0,
            seed: 3,
        },
    )
    .unwrap();
    assert!(matches!(
        normalize_measured(&noisy, 5e-4),
        Err(Error::DataQuality(_))
    ));
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let mut map = gaussian_map(BeamSplitter::from_angle(0.66), 2e11);
    map.meta.c_t = Some(-4.8698e11);
    let noisy = apply_poisson_noise(
        &map,
        NoiseSpec {
            baseline_counts: 1e4,
            seed: 11,
        },
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    for m in [&map, &noisy] {
        let p = dir.path().join("map.csv");
        save_map(m, &p).unwrap();
        let back = load_map(&p).unwrap();
        assert_eq!(&back, m);
        assert!(back
            .values
            .iter()
            .zip(m.values.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        save_map(&back, &dir.path().join("again.csv")).unwrap();
        assert_eq!(
            std::fs::read(&p).unwrap(),
            std::fs::read(dir.path().join("again.csv")).unwrap()
        );
    }
}

#[test]
fn csv_without_grid_keys_infers_grids() {
    let map = gaussian_map(BeamSplitter::balanced(), 2e11);
    let mut buf = Vec::new();
    write_map(&map, &mut buf).unwrap();
    let text: String = String::from_utf8(buf)
        .unwrap()
        .lines()
        .filter(|l| !l.contains("_origin") && !l.contains("_spacing") && !l.contains("_count"))
        .map(|l| format!("{l}\n"))
        .collect();
    let back = parse_map(&text, "mem").unwrap();
    assert_eq!(back.values, map.values);
    assert!(
        (back.path_grid.spacing() - map.path_grid.spacing()).abs()
            < 1e-12 * map.path_grid.spacing()
    );
}

#[test]
fn csv_incomplete_header_is_rejected() {
    let map = gaussian_map(BeamSplitter::balanced(), 2e11);
    let mut buf = Vec::new();
    write_map(&map, &mut buf).unwrap();
    let text: String = String::from_utf8(buf)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# r="))
        .map(|l| format!("{l}\n"))
        .collect();
    match parse_map(&text, "mem") {
        Err(Error::MapFormat { msg, .. }) => assert!(msg.contains("missing: r"), "{msg}"),
        other => panic!("{other:?}"),
    }
}
