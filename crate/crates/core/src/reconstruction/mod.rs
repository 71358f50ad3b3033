//! Inverse pipeline: coincidence map → interference term f(ΔS, sweep) →
//! symmetrised wavefunction F(Ω, sweep) → diagonal slice Φ(Ω) → spectral
//! and delay distributions.

mod output;

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

pub use output::{
    load_delay, load_phi, load_spectrum, save_result, write_delay, write_phi, write_spectrum,
};

use crate::dispersion::ShiftConstants;
use crate::error::{Error, Result};
use crate::interference::{BeamSplitter, CoincidenceMap, Provenance};
use crate::spectral::{
    compare, forward_transform, real_direct_sum, zero_pad, CompareMode, FrequencyGrid, PathGrid,
    SpectralWavefunction, SweepAxis, SweepGrid, TimeDelayDistribution, UniformSamples,
    WavefunctionMeta, SPEED_OF_LIGHT,
};

/// Edge mean of f above this fraction of max |f| means the window cuts f off.
pub const TRUNCATION_LIMIT: f64 = 0.01;
/// Fraction of the path window at each end used for the edge check.
pub const EDGE_FRACTION: f64 = 0.05;
/// Fraction of the path window at each end tapered for measured data.
pub const TAPER_FRACTION: f64 = 0.1;
/// Smallest sweep that can be sliced.
pub const MIN_SWEEP_COUNT: usize = 8;
/// |F(0, centre)| must exceed this fraction of max |F|.
pub const CENTER_LIMIT: f64 = 1e-3;
/// Slice amplitude tolerated at the ends of the sweep, relative to its peak.
pub const COVERAGE_LIMIT: f64 = 0.05;
/// Interpolation error estimate above which a warning is attached.
pub const INTERPOLATION_WARNING: f64 = 1e-2;
/// Relative change of t² used for the splitter sensitivity report.
pub const SPLITTER_PERTURBATION: f64 = 0.05;

/// f = (t⁴ + r⁴ − R)/(2r²t²), one row per sweep sample.
pub fn invert_rate(map: &CoincidenceMap) -> Result<Array2<f64>> {
    if !map.normalized {
        return Err(Error::InvalidParameter(
            "map is not normalized; normalize measured counts first".into(),
        ));
    }
    invert_with(&map.values, map.splitter)
}

fn invert_with(rates: &Array2<f64>, splitter: BeamSplitter) -> Result<Array2<f64>> {
    let coupling = splitter.coupling();
    if coupling == 0.0 {
        return Err(Error::NoInterference {
            t: splitter.t(),
            r: splitter.r(),
        });
    }
    let baseline = splitter.baseline();
    Ok(rates.mapv(|r| (baseline - r) / coupling))
}

/// F(Ω, s) on a frequency grid, one row per sweep sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrisedWavefunction {
    pub freq_grid: FrequencyGrid,
    pub sweep_grid: SweepGrid,
    pub values: Array2<Complex64>,
    /// max |F(Ω) − F*(−Ω)| / max |F| before symmetrization.
    pub hermiticity_residual: f64,
    /// Largest edge mean of f relative to max |f|.
    pub baseline_residual: f64,
}

impl SymmetrisedWavefunction {
    pub fn max_magnitude(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Tukey window: raised-cosine ramps over `fraction` of the samples at each
/// end, flat in between.
pub fn taper_weights(count: usize, fraction: f64) -> Vec<f64> {
    let ramp = (fraction * count as f64).round() as usize;
    (0..count)
        .map(|i| {
            let d = i.min(count - 1 - i);
            if d >= ramp {
                1.0
            } else {
                0.5 * (1.0 - (PI * (d as f64 + 0.5) / ramp as f64).cos())
            }
        })
        .collect()
}

/// Checks that f has decayed inside the window. Returns the largest edge
/// mean relative to max |f|.
pub fn truncation_check(f: &Array2<f64>, path_grid: &PathGrid) -> Result<f64> {
    let n = path_grid.count();
    let max = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return Err(Error::DataQuality(
            "interference term vanishes on the whole map".into(),
        ));
    }
    let edge = ((EDGE_FRACTION * n as f64).round() as usize).max(1);
    let mut residual = 0.0f64;
    let mut widest = 0.0f64;
    for row in f.rows() {
        let left = row.iter().take(edge).sum::<f64>() / edge as f64;
        let right = row.iter().skip(n - edge).sum::<f64>() / edge as f64;
        residual = residual.max(left.abs()).max(right.abs());
        let peak = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.5 * max {
            let above = row.iter().filter(|v| v.abs() >= 0.5 * peak).count();
            widest = widest.max(above as f64 * path_grid.spacing());
        }
    }
    let residual = residual / max;
    if residual > TRUNCATION_LIMIT {
        return Err(Error::TruncatedWindow(format!(
            "mean |f| over the outer {:.0}% of the window is {:.3}% of max (limit {:.0}%)",
            100.0 * EDGE_FRACTION,
            100.0 * residual,
            100.0 * TRUNCATION_LIMIT
        )));
    }
    if path_grid.span() < 4.0 * widest {
        return Err(Error::TruncatedWindow(format!(
            "window span {:.3e} m is less than four times the f half-maximum width {:.3e} m",
            path_grid.span(),
            widest
        )));
    }
    Ok(residual)
}

/// F(Ω, s) = (1/cπ)·Σ_ΔS f·e^{−i2ΩΔS/c}·spacing per sweep row, then
/// Hermitian-symmetrized.
pub fn to_symmetrised(
    f: &Array2<f64>,
    path_grid: &PathGrid,
    sweep_grid: &SweepGrid,
    freq_grid: &FrequencyGrid,
    taper: bool,
) -> Result<SymmetrisedWavefunction> {
    if f.dim() != (sweep_grid.count(), path_grid.count()) {
        return Err(Error::GridMismatch(format!(
            "f has shape {:?}, grids give ({}, {})",
            f.dim(),
            sweep_grid.count(),
            path_grid.count()
        )));
    }
    let baseline_residual = truncation_check(f, path_grid)?;
    let positions = path_grid.values();
    let weights = taper.then(|| taper_weights(path_grid.count(), TAPER_FRACTION));
    let omegas = freq_grid.omegas();
    let scale = path_grid.spacing() / (SPEED_OF_LIGHT * PI);
    let rows: Vec<Vec<Complex64>> = f
        .rows()
        .into_iter()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|row| {
            let samples: Vec<f64> = match &weights {
                Some(w) => row.iter().zip(w).map(|(v, w)| v * w).collect(),
                None => row.to_vec(),
            };
            omegas
                .iter()
                .map(|&w| real_direct_sum(&samples, &positions, 2.0 * w / SPEED_OF_LIGHT) * scale)
                .collect()
        })
        .collect();

    let n = freq_grid.count();
    let mut values = Array2::zeros((sweep_grid.count(), n));
    for (j, row) in rows.into_iter().enumerate() {
        for (k, z) in row.into_iter().enumerate() {
            values[[j, k]] = z;
        }
    }
    let max = values
        .iter()
        .map(|z: &Complex64| z.norm())
        .fold(0.0, f64::max);
    let mut residual = 0.0f64;
    for mut row in values.rows_mut() {
        for k in 0..n {
            if let Some(m) = freq_grid.mirror(k) {
                if m < k {
                    continue;
                }
                let (a, b) = (row[k], row[m]);
                residual = residual.max((a - b.conj()).norm());
                let sym = 0.5 * (a + b.conj());
                row[k] = sym;
                row[m] = sym.conj();
            }
        }
    }
    Ok(SymmetrisedWavefunction {
        freq_grid: *freq_grid,
        sweep_grid: *sweep_grid,
        values,
        hermiticity_residual: if max > 0.0 { residual / max } else { 0.0 },
        baseline_residual,
    })
}

/// Shift constant belonging to a sweep axis.
pub fn axis_constant(constants: &ShiftConstants, axis: SweepAxis) -> f64 {
    match axis {
        SweepAxis::Temperature => constants.c_t,
        SweepAxis::PumpFrequency => constants.c_omega_p,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SliceOptions {
    /// Average |F(0)| over the three sweep samples around the centre.
    pub center_average: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    pub phi: SpectralWavefunction,
    /// Largest interpolation error estimate relative to the slice peak.
    pub interpolation_error: f64,
    /// |F(0, centre)| / max |F|.
    pub f0_ratio: f64,
    pub warnings: Vec<String>,
}

/// RMS of |F| over the outer tenth of the frequency grid, where a source
/// inside the window contributes nothing.
fn noise_floor(sym: &SymmetrisedWavefunction) -> f64 {
    let limit = 0.9 * sym.freq_grid.max();
    let cols: Vec<usize> = sym
        .freq_grid
        .omegas()
        .iter()
        .enumerate()
        .filter(|(_, w)| w.abs() > limit)
        .map(|(k, _)| k)
        .collect();
    if cols.is_empty() {
        return 0.0;
    }
    let mut sum = 0.0;
    for row in sym.values.rows() {
        sum += cols.iter().map(|&k| row[k].norm_sqr()).sum::<f64>();
    }
    (sum / (cols.len() * sym.values.nrows()) as f64).sqrt()
}

/// Φ(2cδ) = F*(−cδ, δ)/√|F(0, centre)| for every sweep offset δ, placed on
/// a zero-centred grid of spacing 2|c|·Δδ, max-normalized, zero phase at
/// the peak.
pub fn slice_to_phi(sym: &SymmetrisedWavefunction, c: f64, options: SliceOptions) -> Result<Slice> {
    let sweep = &sym.sweep_grid;
    let n = sweep.count();
    if n == 1 {
        return Err(Error::SingleSlice);
    }
    if n < MIN_SWEEP_COUNT {
        return Err(Error::InsufficientSweep(format!(
            "{n} sweep samples, at least {MIN_SWEEP_COUNT} needed"
        )));
    }
    if !(c.is_finite() && c != 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shift constant must be finite and nonzero, got {c}"
        )));
    }
    let grid = &sym.freq_grid;
    let deltas = sweep.values();
    let reach = deltas.iter().map(|d| (c * d).abs()).fold(0.0, f64::max);
    if reach > grid.max().min(-grid.min()) {
        return Err(Error::InsufficientSweep(format!(
            "sweep reaches |Ω| = {reach:.3e} rad/s, beyond the frequency grid edge {:.3e} rad/s",
            grid.max()
        )));
    }

    let max_f = sym.max_magnitude();
    let centre = (0..n)
        .min_by(|&a, &b| deltas[a].abs().total_cmp(&deltas[b].abs()))
        .unwrap_or(0);
    let z = grid.zero_index();
    let f0 = if options.center_average {
        let lo = centre.saturating_sub(1);
        let hi = (centre + 1).min(n - 1);
        (lo..=hi).map(|j| sym.values[[j, z]].norm()).sum::<f64>() / (hi - lo + 1) as f64
    } else {
        sym.values[[centre, z]].norm()
    };
    let f0_ratio = if max_f > 0.0 { f0 / max_f } else { 0.0 };
    if !(f0_ratio > CENTER_LIMIT) {
        return Err(Error::WeakCenter {
            ratio: f0_ratio,
            limit: CENTER_LIMIT,
        });
    }
    let norm = f0.sqrt();

    // Diagonal samples at Ω' = 2cδ_j, in sweep order.
    let mut diag = Vec::with_capacity(n);
    let mut interp_abs = 0.0f64;
    for (j, &d) in deltas.iter().enumerate() {
        let row: Vec<Complex64> = sym.values.row(j).to_vec();
        let samples = UniformSamples::on_grid(grid, &row);
        let w = -c * d;
        diag.push(samples.at(w)?.conj() / norm);
        interp_abs = interp_abs.max(samples.error_estimate(w)? / norm);
    }
    let peak = diag.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::DataQuality("diagonal slice of F vanishes".into()));
    }
    // Counting noise lifts every sample by an incoherent floor; remove it
    // in quadrature so noisy but well-covered sweeps are not refused.
    let floor = noise_floor(sym) / norm / peak;
    let side = |a: Complex64, b: Complex64| ((a.norm_sqr() + b.norm_sqr()) / 2.0).sqrt() / peak;
    let edge = side(diag[0], diag[1]).max(side(diag[n - 2], diag[n - 1]));
    let edge = (edge * edge - floor * floor).max(0.0).sqrt();
    if edge > COVERAGE_LIMIT {
        return Err(Error::InsufficientSweep(format!(
            "wavefunction still at {:.1}% of its peak at the ends of the sweep (limit {:.0}%); widen the sweep",
            100.0 * edge,
            100.0 * COVERAGE_LIMIT
        )));
    }

    // Uniform samples in Ω' = 2cδ, ascending.
    let step = 2.0 * c * sweep.spacing();
    let (origin, spacing, ordered): (f64, f64, Vec<Complex64>) = if step > 0.0 {
        (2.0 * c * deltas[0], step, diag)
    } else {
        (
            2.0 * c * deltas[n - 1],
            -step,
            diag.into_iter().rev().collect(),
        )
    };
    let lo = origin;
    let hi = origin + spacing * (ordered.len() - 1) as f64;
    let tol = 1e-9;
    let half = (-lo / spacing + tol)
        .floor()
        .min((hi / spacing + tol).floor() + 1.0);
    if half < 1.0 {
        return Err(Error::InsufficientSweep(
            "sweep does not straddle zero offset".into(),
        ));
    }
    let out_grid = FrequencyGrid::new(spacing, 2 * half as usize)?;
    let samples = UniformSamples::new(origin, spacing, &ordered);
    let mut values = Vec::with_capacity(out_grid.count());
    let mut warnings = Vec::new();
    for w in out_grid.omegas() {
        interp_abs = interp_abs.max(samples.error_estimate(w)?);
        values.push(samples.at(w)?);
    }
    let interpolation_error = interp_abs / peak;
    if interpolation_error > INTERPOLATION_WARNING {
        warnings.push(format!(
            "slice interpolation error estimate {interpolation_error:.3e} exceeds {INTERPOLATION_WARNING:e}"
        ));
    }
    let meta = WavefunctionMeta {
        global_phase_fixed: true,
        ..WavefunctionMeta::default()
    };
    let phi = SpectralWavefunction::new(out_grid, values, meta)?
        .max_normalized()
        .with_peak_phase_zero();
    Ok(Slice {
        phi,
        interpolation_error,
        f0_ratio,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Diagnostics {
    pub hermiticity_residual: f64,
    pub baseline_residual: f64,
    pub slice_interpolation_error: f64,
    pub f0_magnitude_ratio: f64,
    /// Largest AmplitudeL2 change under a ±5% change of t².
    pub splitter_sensitivity: Option<f64>,
    pub warnings: Vec<String>,
}

impl Diagnostics {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "hermiticity_residual = {:e}\n",
            self.hermiticity_residual
        ));
        s.push_str(&format!(
            "baseline_residual = {:e}\n",
            self.baseline_residual
        ));
        s.push_str(&format!(
            "slice_interpolation_error = {:e}\n",
            self.slice_interpolation_error
        ));
        s.push_str(&format!(
            "F0_magnitude_ratio = {:e}\n",
            self.f0_magnitude_ratio
        ));
        if let Some(v) = self.splitter_sensitivity {
            s.push_str(&format!("splitter_sensitivity_amplitude_l2 = {v:e}\n"));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning = {w}\n"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub phi: SpectralWavefunction,
    pub time_delay: TimeDelayDistribution,
    pub spectral_density: Vec<f64>,
    pub diagnostics: Diagnostics,
}

/// Zero padding applied before the delay transform.
pub const DELAY_PADDING: usize = 4;

/// Delay density |∫Φ e^{−iΩτ}dΩ|², unit integral, on the grid conjugate to
/// the zero-padded frequency grid.
pub fn delay_distribution(phi: &SpectralWavefunction) -> Result<TimeDelayDistribution> {
    let padded = zero_pad(phi, DELAY_PADDING)?;
    let a = forward_transform(&padded)?;
    TimeDelayDistribution::normalized(a.grid, a.values.iter().map(|z| z.norm_sqr()).collect())
}

pub fn finalize(
    phi: SpectralWavefunction,
    diagnostics: Diagnostics,
) -> Result<ReconstructionResult> {
    let time_delay = delay_distribution(&phi)?;
    let spectral_density = phi.density();
    Ok(ReconstructionResult {
        phi,
        time_delay,
        spectral_density,
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    pub freq_grid: FrequencyGrid,
    /// `None` tapers measured maps only.
    pub taper: Option<bool>,
    pub slice: SliceOptions,
    pub splitter_sensitivity: bool,
}

impl ReconstructionOptions {
    pub fn new(freq_grid: FrequencyGrid) -> Self {
        Self {
            freq_grid,
            taper: None,
            slice: SliceOptions::default(),
            splitter_sensitivity: false,
        }
    }
}

fn run(
    map: &CoincidenceMap,
    rates_splitter: BeamSplitter,
    c: f64,
    options: &ReconstructionOptions,
) -> Result<(Slice, SymmetrisedWavefunction)> {
    if !map.normalized {
        return Err(Error::InvalidParameter(
            "map is not normalized; normalize measured counts first".into(),
        ));
    }
    if map.sweep_grid.count() == 1 {
        return Err(Error::SingleSlice);
    }
    let f = invert_with(&map.values, rates_splitter)?;
    let taper = options
        .taper
        .unwrap_or(map.meta.provenance == Provenance::Measured);
    let sym = to_symmetrised(
        &f,
        &map.path_grid,
        &map.sweep_grid,
        &options.freq_grid,
        taper,
    )?;
    let slice = slice_to_phi(&sym, c, options.slice)?;
    Ok((slice, sym))
}

/// Full inverse pipeline with shift constant `c` for the map's sweep axis.
pub fn reconstruct(
    map: &CoincidenceMap,
    c: f64,
    options: &ReconstructionOptions,
) -> Result<ReconstructionResult> {
    let (slice, sym) = run(map, map.splitter, c, options)?;
    let mut phi = slice.phi;
    phi.meta.t0_c = map.meta.t0_c;
    phi.meta.omega_p = map.meta.omega_p0;
    let mut diagnostics = Diagnostics {
        hermiticity_residual: sym.hermiticity_residual,
        baseline_residual: sym.baseline_residual,
        slice_interpolation_error: slice.interpolation_error,
        f0_magnitude_ratio: slice.f0_ratio,
        splitter_sensitivity: None,
        warnings: slice.warnings,
    };
    if options.splitter_sensitivity {
        let mut worst = 0.0f64;
        for sign in [-1.0, 1.0] {
            let t2 = map.splitter.t().powi(2) * (1.0 + sign * SPLITTER_PERTURBATION);
            let perturbed = match BeamSplitter::new(t2.min(1.0).sqrt(), (1.0 - t2).max(0.0).sqrt())
            {
                Ok(s) => s,
                Err(_) => continue,
            };
            match run(map, perturbed, c, options) {
                Ok((other, _)) if other.phi.grid().same_as(phi.grid()) => {
                    worst = worst.max(compare(&phi, &other.phi, CompareMode::AmplitudeL2)?);
                }
                Ok(_) => worst = f64::INFINITY,
                Err(e) => diagnostics.warnings.push(format!(
                    "splitter sensitivity run with t² scaled by {:+.0}% failed: {e}",
                    100.0 * sign * SPLITTER_PERTURBATION
                )),
            }
        }
        diagnostics.splitter_sensitivity = Some(worst);
    }
    finalize(phi, diagnostics)
}
