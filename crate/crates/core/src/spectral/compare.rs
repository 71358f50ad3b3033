//! Agreement metrics between two wavefunctions on the same grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::sum::{complex_sum, sum};
use super::wavefunction::SpectralWavefunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CompareMode {
    /// ‖|a|−|b|‖₂ relative to the amplitude norms, both max-normalised.
    AmplitudeL2,
    /// Weighted RMS phase difference after removing one global phase (rad).
    PhaseRmsAfterGlobalAlignment,
    /// As above, after also removing the best even polynomial (degree ≤ 4).
    EvenPhaseResidual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Phase modes only compare samples where both amplitudes exceed this
    /// fraction of their own maximum.
    pub floor: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { floor: 0.01 }
    }
}

/// All metrics at once, plus the peak of the fitted even phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub amplitude_l2: f64,
    pub phase_rms: f64,
    pub even_phase_residual: f64,
    /// max |c₂Ω² + c₄Ω⁴| of the fitted even phase over the compared support.
    pub even_phase_peak: f64,
}

pub fn compare(
    a: &SpectralWavefunction,
    b: &SpectralWavefunction,
    mode: CompareMode,
) -> Result<f64> {
    compare_with(a, b, mode, CompareOptions::default())
}

pub fn compare_with(
    a: &SpectralWavefunction,
    b: &SpectralWavefunction,
    mode: CompareMode,
    opts: CompareOptions,
) -> Result<f64> {
    check_grids(a, b)?;
    match mode {
        CompareMode::AmplitudeL2 => amplitude_l2(a, b),
        CompareMode::PhaseRmsAfterGlobalAlignment => Ok(aligned_phase(a, b, opts)?.rms()),
        CompareMode::EvenPhaseResidual => Ok(even_fit(&aligned_phase(a, b, opts)?).residual_rms),
    }
}

pub fn compare_all(
    a: &SpectralWavefunction,
    b: &SpectralWavefunction,
    opts: CompareOptions,
) -> Result<CompareReport> {
    check_grids(a, b)?;
    let aligned = aligned_phase(a, b, opts)?;
    let fit = even_fit(&aligned);
    Ok(CompareReport {
        amplitude_l2: amplitude_l2(a, b)?,
        phase_rms: aligned.rms(),
        even_phase_residual: fit.residual_rms,
        even_phase_peak: fit.peak,
    })
}

fn check_grids(a: &SpectralWavefunction, b: &SpectralWavefunction) -> Result<()> {
    if !a.grid().same_as(b.grid()) {
        return Err(Error::GridMismatch(format!(
            "cannot compare wavefunctions on different grids ({} × {:e} vs {} × {:e})",
            a.grid().count(),
            a.grid().spacing(),
            b.grid().count(),
            b.grid().spacing()
        )));
    }
    Ok(())
}

fn amplitude_l2(a: &SpectralWavefunction, b: &SpectralWavefunction) -> Result<f64> {
    let (ma, mb) = (a.max_amplitude(), b.max_amplitude());
    if ma == 0.0 || mb == 0.0 {
        return Err(Error::BelowFloor);
    }
    let na: Vec<f64> = a.values().iter().map(|z| z.norm() / ma).collect();
    let nb: Vec<f64> = b.values().iter().map(|z| z.norm() / mb).collect();
    let diff = sum(na.iter().zip(&nb).map(|(x, y)| (x - y) * (x - y))).sqrt();
    let norm_a = sum(na.iter().map(|x| x * x)).sqrt();
    let norm_b = sum(nb.iter().map(|x| x * x)).sqrt();
    // geometric mean keeps the metric symmetric in (a, b)
    Ok(diff / (norm_a * norm_b).sqrt())
}

/// Phase difference b/a on the common support, global phase removed,
/// unwrapped along increasing Ω.
struct AlignedPhase {
    omega: Vec<f64>,
    weight: Vec<f64>,
    phase: Vec<f64>,
}

impl AlignedPhase {
    fn rms(&self) -> f64 {
        weighted_rms(&self.phase, &self.weight)
    }
}

fn weighted_rms(values: &[f64], weights: &[f64]) -> f64 {
    let wsum = sum(weights.iter().copied());
    (sum(values.iter().zip(weights).map(|(r, w)| w * r * r)) / wsum).sqrt()
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn aligned_phase(
    a: &SpectralWavefunction,
    b: &SpectralWavefunction,
    opts: CompareOptions,
) -> Result<AlignedPhase> {
    let (ma, mb) = (a.max_amplitude(), b.max_amplitude());
    if ma == 0.0 || mb == 0.0 {
        return Err(Error::BelowFloor);
    }
    let support: Vec<usize> = (0..a.values().len())
        .filter(|&k| {
            a.values()[k].norm() >= opts.floor * ma && b.values()[k].norm() >= opts.floor * mb
        })
        .collect();
    if support.is_empty() {
        return Err(Error::BelowFloor);
    }
    let products: Vec<_> = support
        .iter()
        .map(|&k| b.values()[k] * a.values()[k].conj())
        .collect();
    let global = complex_sum(products.iter().copied()).arg();
    let weight: Vec<f64> = products.iter().map(|p| p.norm()).collect();
    let mut phase: Vec<f64> = products.iter().map(|p| wrap(p.arg() - global)).collect();
    for i in 1..phase.len() {
        let step = wrap(phase[i] - phase[i - 1]);
        phase[i] = phase[i - 1] + step;
    }
    // unwrapping may move the whole curve by 2π; re-centre on the weighted mean
    let mean = sum(phase.iter().zip(&weight).map(|(p, w)| p * w)) / sum(weight.iter().copied());
    let shift = 2.0 * PI * (mean / (2.0 * PI)).round();
    for p in &mut phase {
        *p -= shift;
    }
    let omega = support.iter().map(|&k| a.grid().omega(k)).collect();
    Ok(AlignedPhase {
        omega,
        weight,
        phase,
    })
}

struct EvenFit {
    residual_rms: f64,
    peak: f64,
}

fn even_fit(p: &AlignedPhase) -> EvenFit {
    let scale = p.omega.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let basis = |w: f64| {
        let x2 = (w / scale) * (w / scale);
        [1.0, x2, x2 * x2]
    };
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for ((&w, &wt), &y) in p.omega.iter().zip(&p.weight).zip(&p.phase) {
        let b = basis(w);
        for i in 0..3 {
            atb[i] += wt * b[i] * y;
            for j in 0..3 {
                ata[i][j] += wt * b[i] * b[j];
            }
        }
    }
    let coef = solve_normal(ata, atb);
    let residual: Vec<f64> = p
        .omega
        .iter()
        .zip(&p.phase)
        .map(|(&w, &y)| {
            let b = basis(w);
            y - (coef[0] * b[0] + coef[1] * b[1] + coef[2] * b[2])
        })
        .collect();
    let peak = p.omega.iter().fold(0.0f64, |m, &w| {
        let b = basis(w);
        m.max((coef[1] * b[1] + coef[2] * b[2]).abs())
    });
    EvenFit {
        residual_rms: weighted_rms(&residual, &p.weight),
        peak,
    }
}

/// Solves the 3×3 normal equations, dropping trailing basis functions
/// when the support cannot determine them.
fn solve_normal(ata: [[f64; 3]; 3], atb: [f64; 3]) -> [f64; 3] {
    for dim in (1..=3).rev() {
        if let Some(x) = gauss_solve(&ata, &atb, dim) {
            let mut out = [0.0; 3];
            out[..dim].copy_from_slice(&x[..dim]);
            return out;
        }
    }
    [0.0; 3]
}

fn gauss_solve(ata: &[[f64; 3]; 3], atb: &[f64; 3], dim: usize) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..dim {
        m[i][..dim].copy_from_slice(&ata[i][..dim]);
        m[i][3] = atb[i];
    }
    let scale = (0..dim).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    for col in 0..dim {
        let piv = (col..dim).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() <= 1e-12 * scale {
            return None;
        }
        m.swap(col, piv);
        for row in 0..dim {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut x = [0.0; 3];
    for i in 0..dim {
        x[i] = m[i][3] / m[i][i];
    }
    Some(x)
}
