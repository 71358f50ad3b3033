//! Forward model: the biphoton spectral wavefunction Φ(Ω; T, ω_p) of a
//! quasi-phase-matched crystal, either collinear or projected onto paraxial
//! pump and detection modes.

mod kernel;
mod modes;
mod quadrature;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::{sinc, SpatialKernel};
pub use modes::{laguerre, mode_amplitude, ModeDescriptor};
pub use quadrature::gauss_legendre;

use crate::dispersion::{
    phase_mismatch, wavenumber, CrystalModel, PhaseMatchPoint, Role, ShiftConstants,
};
use crate::error::{Error, Result};
use crate::spectral::{FrequencyGrid, SpectralWavefunction, WavefunctionMeta};

/// Relative L2 change under order doubling above which quadrature is
/// considered unconverged.
pub const CONVERGENCE_LIMIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionConfig {
    /// Pump waist w_p (m).
    pub pump_waist: f64,
    pub pump_mode: ModeDescriptor,
    /// Waist of both detection modes (m).
    pub detection_waist: f64,
    pub signal_mode: ModeDescriptor,
    pub idler_mode: ModeDescriptor,
    /// Axial offset z₀ of the crystal center from the common waist (m).
    pub crystal_displacement: f64,
}

impl DetectionConfig {
    pub fn gaussian(pump_waist: f64, detection_waist: f64) -> Self {
        Self {
            pump_waist,
            pump_mode: ModeDescriptor::Gaussian,
            detection_waist,
            signal_mode: ModeDescriptor::Gaussian,
            idler_mode: ModeDescriptor::Gaussian,
            crystal_displacement: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (what, w) in [
            ("pump", self.pump_waist),
            ("detection", self.detection_waist),
        ] {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{what} waist must be positive, got {w}"
                )));
            }
        }
        if !self.crystal_displacement.is_finite() {
            return Err(Error::InvalidParameter(
                "crystal displacement must be finite".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub radial_order: usize,
    pub azimuthal_order: usize,
    /// Radial cutoff (1/m); `None` means 5/min(waists).
    pub q_max: Option<f64>,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            radial_order: 64,
            azimuthal_order: 32,
            q_max: None,
        }
    }
}

impl Quadrature {
    pub fn q_max_for(&self, detection: &DetectionConfig) -> f64 {
        self.q_max
            .unwrap_or(5.0 / detection.pump_waist.min(detection.detection_waist))
    }

    pub fn doubled(&self) -> Self {
        Self {
            radial_order: 2 * self.radial_order,
            azimuthal_order: 2 * self.azimuthal_order,
            q_max: self.q_max,
        }
    }

    pub fn validate(&self, detection: &DetectionConfig) -> Result<()> {
        if self.radial_order < 8 || self.azimuthal_order < 8 {
            return Err(Error::InvalidParameter(format!(
                "quadrature orders must be at least 8, got radial {} azimuthal {}",
                self.radial_order, self.azimuthal_order
            )));
        }
        let q_max = self.q_max_for(detection);
        if !(q_max > 3.0 / detection.detection_waist) {
            return Err(Error::InvalidParameter(format!(
                "q_max = {q_max:e} 1/m must exceed 3/detection_waist = {:e}",
                3.0 / detection.detection_waist
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceModel {
    AnalyticCollinear,
    SpatialProjected,
}

impl SourceModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "analytic" | "analytic_collinear" | "analyticcollinear" => {
                Ok(SourceModel::AnalyticCollinear)
            }
            "spatial" | "spatial_projected" | "spatialprojected" => {
                Ok(SourceModel::SpatialProjected)
            }
            _ => Err(Error::Config(format!(
                "unknown model '{s}' (expected 'analytic' or 'spatial')"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceModel::AnalyticCollinear => "analytic",
            SourceModel::SpatialProjected => "spatial",
        }
    }
}

/// How the collinear phase mismatch is evaluated away from the phase-match
/// point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispersionMode {
    /// Full Sellmeier evaluation at every (Ω, T, ω_p).
    Exact,
    /// First-order expansion about the point; transverse wavenumbers held
    /// at their phase-match values.
    Linearized(ShiftConstants),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub model: SourceModel,
    pub crystal: CrystalModel,
    pub point: PhaseMatchPoint,
    pub detection: DetectionConfig,
    pub quadrature: Quadrature,
    pub dispersion: DispersionMode,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.model == SourceModel::SpatialProjected {
            self.detection.validate()?;
            self.quadrature.validate(&self.detection)?;
        }
        Ok(())
    }
}

/// A validated source with its transverse kernel, reusable across a sweep.
#[derive(Debug, Clone)]
pub struct Generator {
    spec: SourceSpec,
    kernel: Option<SpatialKernel>,
}

impl Generator {
    pub fn new(spec: SourceSpec) -> Result<Self> {
        spec.validate()?;
        let kernel = match spec.model {
            SourceModel::AnalyticCollinear => None,
            SourceModel::SpatialProjected => {
                Some(SpatialKernel::build(&spec.detection, &spec.quadrature))
            }
        };
        Ok(Self { spec, kernel })
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn kernel(&self) -> Option<&SpatialKernel> {
        self.kernel.as_ref()
    }

    /// Collinear Δk and the wavenumbers used by the transverse terms.
    fn collinear(&self, omega_rel: f64, temp_c: f64, omega_p: f64) -> Result<(f64, [f64; 3])> {
        let crystal = &self.spec.crystal;
        let point = &self.spec.point;
        match &self.spec.dispersion {
            DispersionMode::Exact => {
                let dk = phase_mismatch(crystal, omega_rel, temp_c, omega_p, 0.0)?;
                if self.kernel.is_none() {
                    return Ok((dk, [0.0; 3]));
                }
                let kp = wavenumber(crystal, Role::Pump, omega_p, temp_c)?;
                let ks = wavenumber(crystal, Role::Signal, 0.5 * omega_p + omega_rel, temp_c)?;
                let ki = wavenumber(crystal, Role::Idler, 0.5 * omega_p - omega_rel, temp_c)?;
                Ok((dk, [kp, ks, ki]))
            }
            DispersionMode::Linearized(s) => {
                let dk =
                    s.linear_mismatch(omega_rel, temp_c - point.t0_c, omega_p - point.omega_p0);
                if self.kernel.is_none() {
                    return Ok((dk, [0.0; 3]));
                }
                let kp = wavenumber(crystal, Role::Pump, point.omega_p0, point.t0_c)?;
                let ks = wavenumber(crystal, Role::Signal, point.omega_s0, point.t0_c)?;
                let ki = wavenumber(crystal, Role::Idler, point.omega_i0, point.t0_c)?;
                Ok((dk, [kp, ks, ki]))
            }
        }
    }

    /// Unnormalized Φ at one relative frequency.
    pub fn raw_amplitude(&self, omega_rel: f64, temp_c: f64, omega_p: f64) -> Result<Complex64> {
        let length = self.spec.crystal.length;
        let (dk, k) = self.collinear(omega_rel, temp_c, omega_p)?;
        let propagation = Complex64::from_polar(1.0, 0.5 * dk * length);
        Ok(match &self.kernel {
            None => propagation * sinc(0.5 * dk * length),
            Some(kernel) => {
                propagation
                    * kernel.project(dk, k, length, self.spec.detection.crystal_displacement)
            }
        })
    }

    pub fn raw_values(&self, omegas: &[f64], temp_c: f64, omega_p: f64) -> Result<Vec<Complex64>> {
        omegas
            .par_iter()
            .map(|&w| self.raw_amplitude(w, temp_c, omega_p))
            .collect()
    }

    /// Φ on `grid` at (T, ω_p). The collinear model is left as is (its
    /// analytic maximum is 1, so exact Ω-shifts survive); the projected
    /// model is scaled to unit peak sample.
    pub fn wavefunction(
        &self,
        grid: &FrequencyGrid,
        temp_c: f64,
        omega_p: f64,
    ) -> Result<SpectralWavefunction> {
        let values = self.raw_values(&grid.omegas(), temp_c, omega_p)?;
        let meta = WavefunctionMeta {
            t0_c: temp_c,
            omega_p,
            global_phase_fixed: false,
        };
        let phi = SpectralWavefunction::new(*grid, values, meta)?;
        Ok(match self.spec.model {
            SourceModel::AnalyticCollinear => phi,
            SourceModel::SpatialProjected => phi.max_normalized(),
        })
    }
}

/// Builds a generator and evaluates Φ once.
pub fn wavefunction(
    spec: &SourceSpec,
    grid: &FrequencyGrid,
    temp_c: f64,
    omega_p: f64,
) -> Result<SpectralWavefunction> {
    Generator::new(spec.clone())?.wavefunction(grid, temp_c, omega_p)
}

/// Relative L2 change of the projected wavefunction when both quadrature
/// orders are doubled, on a decimated subset of `grid`. Errors above
/// [`CONVERGENCE_LIMIT`].
pub fn check_convergence(
    spec: &SourceSpec,
    grid: &FrequencyGrid,
    temp_c: f64,
    omega_p: f64,
) -> Result<f64> {
    if spec.model == SourceModel::AnalyticCollinear {
        return Ok(0.0);
    }
    let stride = (grid.count() / 128).max(1);
    let omegas: Vec<f64> = grid.omegas().into_iter().step_by(stride).collect();
    let base = Generator::new(spec.clone())?.raw_values(&omegas, temp_c, omega_p)?;
    let mut fine_spec = spec.clone();
    fine_spec.quadrature = spec.quadrature.doubled();
    let fine = Generator::new(fine_spec)?.raw_values(&omegas, temp_c, omega_p)?;
    let num: f64 = base
        .iter()
        .zip(&fine)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let den: f64 = fine.iter().map(|b| b.norm_sqr()).sum();
    let residual = if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    };
    if residual > CONVERGENCE_LIMIT {
        return Err(Error::QuadratureNotConverged {
            residual,
            limit: CONVERGENCE_LIMIT,
        });
    }
    Ok(residual)
}
