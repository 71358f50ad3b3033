//! Discrete transforms between relative frequency Ω and delay τ.
//!
//! Convention: `a(τ_j) = Σ_k Φ(Ω_k)·exp(−iΩ_kτ_j)·ΔΩ` on the conjugate grid
//! `τ_j = (j − N/2)·2π/(N·ΔΩ)`, and `Φ(Ω_k) = Σ_j a(τ_j)·exp(+iΩ_kτ_j)·Δτ/2π`.
//! With these factors `Σ|Φ|²ΔΩ = Σ|a|²Δτ/2π`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::grid::{FrequencyGrid, TimeGrid};
use super::sum::ComplexKahanSum;
use super::wavefunction::{SpectralWavefunction, WavefunctionMeta};
use crate::error::{Error, Result};

/// Complex amplitude on the delay grid conjugate to a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayAmplitude {
    pub grid: TimeGrid,
    pub values: Vec<Complex64>,
}

fn check_finite(values: &[Complex64], what: &'static str) -> Result<()> {
    match values
        .iter()
        .position(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        Some(index) => Err(Error::NonFinite { index, what }),
        None => Ok(()),
    }
}

#[inline]
fn alternating(k: usize) -> f64 {
    if k.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Centred forward transform of raw samples on `grid`.
pub fn forward_values(values: &[Complex64], grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    let n = grid.count();
    if values.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} samples for a grid of {n}",
            values.len()
        )));
    }
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "transform needs an even count, got {n}"
        )));
    }
    check_finite(values, "transform input")?;

    // exp(−i(k−N/2)(j−N/2)2π/N) = exp(−i2πkj/N)·(−1)^(k+j+N/2)
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(k, z)| z * alternating(k))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dw = grid.spacing();
    Ok(buf
        .into_iter()
        .enumerate()
        .map(|(j, z)| z * (alternating(j + n / 2) * dw))
        .collect())
}

/// Inverse of [`forward_values`].
pub fn inverse_values(values: &[Complex64], grid: &FrequencyGrid) -> Result<Vec<Complex64>> {
    let n = grid.count();
    if values.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} samples for a grid of {n}",
            values.len()
        )));
    }
    check_finite(values, "inverse transform input")?;
    let mut buf: Vec<Complex64> = values
        .iter()
        .enumerate()
        .map(|(j, z)| z * alternating(j))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = grid.conjugate().spacing() / (2.0 * std::f64::consts::PI);
    Ok(buf
        .into_iter()
        .enumerate()
        .map(|(k, z)| z * (alternating(k + n / 2) * scale))
        .collect())
}

pub fn forward_transform(spectrum: &SpectralWavefunction) -> Result<DelayAmplitude> {
    let grid = *spectrum.grid();
    Ok(DelayAmplitude {
        grid: grid.conjugate(),
        values: forward_values(spectrum.values(), &grid)?,
    })
}

pub fn inverse_transform(
    amplitude: &DelayAmplitude,
    grid: FrequencyGrid,
    meta: WavefunctionMeta,
) -> Result<SpectralWavefunction> {
    if grid.conjugate() != amplitude.grid && !close_grids(&grid.conjugate(), &amplitude.grid) {
        return Err(Error::GridMismatch(
            "delay grid is not conjugate to the requested frequency grid".into(),
        ));
    }
    SpectralWavefunction::new(grid, inverse_values(&amplitude.values, &grid)?, meta)
}

fn close_grids(a: &TimeGrid, b: &TimeGrid) -> bool {
    a.count() == b.count() && (a.spacing() - b.spacing()).abs() <= 1e-12 * a.spacing()
}

/// Same transform evaluated by direct summation at arbitrary delays.
pub fn transform_at(
    values: &[Complex64],
    grid: &FrequencyGrid,
    taus: &[f64],
) -> Result<Vec<Complex64>> {
    if values.len() != grid.count() {
        return Err(Error::GridMismatch(format!(
            "{} samples for a grid of {}",
            values.len(),
            grid.count()
        )));
    }
    check_finite(values, "transform input")?;
    let omegas = grid.omegas();
    let dw = grid.spacing();
    Ok(taus
        .iter()
        .map(|&tau| {
            let mut acc = ComplexKahanSum::new();
            for (z, &w) in values.iter().zip(&omegas) {
                if z.re == 0.0 && z.im == 0.0 {
                    continue;
                }
                let (s, c) = (w * tau).sin_cos();
                acc.add(z * Complex64::new(c, -s));
            }
            acc.value() * dw
        })
        .collect())
}

/// `Σ_j x_j·exp(−iκ·p_j)` for real samples at positions `p_j`, compensated.
pub fn real_direct_sum(samples: &[f64], positions: &[f64], kappa: f64) -> Complex64 {
    let mut acc = ComplexKahanSum::new();
    for (&x, &p) in samples.iter().zip(positions) {
        let (s, c) = (kappa * p).sin_cos();
        acc.add(Complex64::new(x * c, -x * s));
    }
    acc.value()
}

/// Embed the spectrum in a grid `factor` times longer (same spacing),
/// zero outside the original support.
pub fn zero_pad(spectrum: &SpectralWavefunction, factor: usize) -> Result<SpectralWavefunction> {
    let grid = *spectrum.grid();
    let padded = grid.padded(factor)?;
    let offset = padded.zero_index() - grid.zero_index();
    let mut values = vec![Complex64::new(0.0, 0.0); padded.count()];
    values[offset..offset + grid.count()].copy_from_slice(spectrum.values());
    SpectralWavefunction::new(padded, values, spectrum.meta)
}
