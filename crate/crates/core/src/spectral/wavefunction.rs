use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{FrequencyGrid, TimeGrid};
use super::sum::sum;
use crate::error::{Error, Result};

/// Generation context of a wavefunction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionMeta {
    /// Crystal temperature at generation (°C).
    pub t0_c: f64,
    /// Pump angular frequency (rad/s).
    pub omega_p: f64,
    /// Whether the (unobservable) global phase has been fixed by convention.
    pub global_phase_fixed: bool,
}

impl Default for WavefunctionMeta {
    fn default() -> Self {
        Self {
            t0_c: f64::NAN,
            omega_p: f64::NAN,
            global_phase_fixed: false,
        }
    }
}

/// Complex spectral amplitude Φ(Ω) on a symmetric relative-frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWavefunction {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
    pub meta: WavefunctionMeta,
}

impl SpectralWavefunction {
    pub fn new(
        grid: FrequencyGrid,
        values: Vec<Complex64>,
        meta: WavefunctionMeta,
    ) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::GridMismatch(format!(
                "wavefunction has {} values for a grid of {} samples",
                values.len(),
                grid.count()
            )));
        }
        if let Some(index) = values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite {
                index,
                what: "spectral wavefunction",
            });
        }
        Ok(Self { grid, values, meta })
    }

    pub fn from_fn(
        grid: FrequencyGrid,
        meta: WavefunctionMeta,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        let values = grid.omegas().into_iter().map(f).collect();
        Self::new(grid, values, meta)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn max_amplitude(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn peak_index(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }

    /// Divide by the peak magnitude so that max |Φ| = 1. A zero
    /// wavefunction is left unchanged.
    pub fn max_normalized(mut self) -> Self {
        let m = self.max_amplitude();
        if m > 0.0 {
            for z in &mut self.values {
                *z /= m;
            }
        }
        self
    }

    /// Rotate so that the peak-amplitude sample has zero phase.
    pub fn with_peak_phase_zero(mut self) -> Self {
        let peak = self.values[self.peak_index()];
        if peak.norm() > 0.0 {
            let rot = peak.conj() / peak.norm();
            for z in &mut self.values {
                *z *= rot;
            }
        }
        self.meta.global_phase_fixed = true;
        self
    }

    /// |Φ|² sample by sample.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Riemann-sum norm ∫|Φ|² dΩ.
    pub fn norm_sqr(&self) -> f64 {
        sum(self.values.iter().map(|z| z.norm_sqr())) * self.grid.spacing()
    }
}

/// Signal–idler delay distribution on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeDelayDistribution {
    pub delays: TimeGrid,
    pub density: Vec<f64>,
}

impl TimeDelayDistribution {
    /// Builds a distribution normalised to unit Riemann integral.
    pub fn normalized(delays: TimeGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != delays.count() {
            return Err(Error::GridMismatch(format!(
                "delay density has {} values for {} delays",
                density.len(),
                delays.count()
            )));
        }
        if let Some(index) = density.iter().position(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::NonFinite {
                index,
                what: "delay density (must be finite and nonnegative)",
            });
        }
        let total = sum(density.iter().copied()) * delays.spacing();
        let density = if total > 0.0 {
            density.into_iter().map(|d| d / total).collect()
        } else {
            density
        };
        Ok(Self { delays, density })
    }

    pub fn mean(&self) -> f64 {
        sum((0..self.density.len()).map(|j| self.delays.tau(j) * self.density[j]))
            * self.delays.spacing()
    }

    pub fn std_dev(&self) -> f64 {
        let mu = self.mean();
        let var = sum((0..self.density.len()).map(|j| {
            let d = self.delays.tau(j) - mu;
            d * d * self.density[j]
        })) * self.delays.spacing();
        var.max(0.0).sqrt()
    }

    /// Density at an arbitrary delay by linear interpolation (0 outside).
    pub fn density_at(&self, tau: f64) -> f64 {
        let pos = tau / self.delays.spacing() + (self.delays.count() / 2) as f64;
        if pos < 0.0 || pos > (self.density.len() - 1) as f64 {
            return 0.0;
        }
        let i = (pos.floor() as usize).min(self.density.len() - 2);
        let frac = pos - i as f64;
        self.density[i] * (1.0 - frac) + self.density[i + 1] * frac
    }
}
