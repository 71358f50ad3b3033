use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::SPEED_OF_LIGHT;

/// Wavelength-dependent part of a refractive index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dispersion {
    /// n² = a + Σ b/(λ² − c) − ir·λ² with λ in µm.
    Sellmeier {
        a: f64,
        terms: Vec<[f64; 2]>,
        ir: f64,
    },
    /// n = Σ c_j·(ω − ω_ref)^j. Synthetic fixtures: constant, linear and
    /// quadratic indices.
    OmegaPolynomial {
        omega_ref: f64,
        coefficients: Vec<f64>,
    },
}

impl Dispersion {
    fn index(&self, omega: f64) -> f64 {
        match self {
            Dispersion::Sellmeier { a, terms, ir } => {
                let lam_um = 2.0 * PI * SPEED_OF_LIGHT / omega * 1e6;
                let l2 = lam_um * lam_um;
                let n2 = terms.iter().fold(*a, |acc, [b, c]| acc + b / (l2 - c)) - ir * l2;
                n2.sqrt()
            }
            Dispersion::OmegaPolynomial {
                omega_ref,
                coefficients,
            } => {
                let x = omega - omega_ref;
                coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
        }
    }
}

/// Temperature correction, polynomial in 1/λ (λ in µm) for each power of
/// (T − reference).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermoOptic {
    pub reference_c: f64,
    pub scale: f64,
    /// Coefficients of λ^0, λ^−1, … for the term linear in ΔT.
    pub linear: Vec<f64>,
    /// Coefficients for the term quadratic in ΔT.
    #[serde(default)]
    pub quadratic: Vec<f64>,
}

impl ThermoOptic {
    pub fn none() -> Self {
        Self {
            reference_c: 20.0,
            scale: 1.0,
            linear: Vec::new(),
            quadratic: Vec::new(),
        }
    }

    /// Wavelength-independent dn/dT.
    pub fn constant(dn_dt: f64, reference_c: f64) -> Self {
        Self {
            reference_c,
            scale: 1.0,
            linear: vec![dn_dt],
            quadratic: Vec::new(),
        }
    }

    fn delta_n(&self, lam_um: f64, temp_c: f64) -> f64 {
        let inv = 1.0 / lam_um;
        let poly = |c: &[f64]| c.iter().rev().fold(0.0, |acc, v| acc * inv + v);
        let dt = temp_c - self.reference_c;
        self.scale * (poly(&self.linear) * dt + poly(&self.quadratic) * dt * dt)
    }
}

/// Refractive index of one crystal axis over its validity window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisIndex {
    pub name: String,
    pub dispersion: Dispersion,
    pub thermo: ThermoOptic,
    /// Validity window in nm (inclusive).
    pub window_nm: [f64; 2],
    pub provenance: String,
}

impl AxisIndex {
    pub fn new(
        name: &str,
        dispersion: Dispersion,
        thermo: ThermoOptic,
        window_nm: [f64; 2],
    ) -> Self {
        Self {
            name: name.to_string(),
            dispersion,
            thermo,
            window_nm,
            provenance: "synthetic".into(),
        }
    }

    /// Constant index fixture.
    pub fn constant(name: &str, n: f64, window_nm: [f64; 2]) -> Self {
        Self::new(
            name,
            Dispersion::OmegaPolynomial {
                omega_ref: 0.0,
                coefficients: vec![n],
            },
            ThermoOptic::none(),
            window_nm,
        )
    }

    pub fn wavelength_nm(omega: f64) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / omega * 1e9
    }

    pub fn check_window(&self, omega: f64) -> Result<()> {
        let lam = Self::wavelength_nm(omega);
        let slack = 1e-12 * self.window_nm[1];
        if !(lam >= self.window_nm[0] - slack && lam <= self.window_nm[1] + slack) {
            return Err(Error::OutOfWindow {
                axis: self.name.clone(),
                wavelength_nm: lam,
                min_nm: self.window_nm[0],
                max_nm: self.window_nm[1],
            });
        }
        Ok(())
    }

    /// n(λ(ω), T).
    pub fn index(&self, omega: f64, temp_c: f64) -> Result<f64> {
        self.check_window(omega)?;
        let lam_um = Self::wavelength_nm(omega) * 1e-3;
        let n = self.dispersion.index(omega) + self.thermo.delta_n(lam_um, temp_c);
        if !n.is_finite() || n <= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "axis '{}' gives refractive index {n} at {:.3} nm",
                self.name,
                lam_um * 1e3
            )));
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega_at(nm: f64) -> f64 {
        2.0 * PI * SPEED_OF_LIGHT / (nm * 1e-9)
    }

    #[test]
    fn sellmeier_matches_hand_evaluation() {
        // KTP y axis at 808.5 nm, 20 °C, evaluated term by term
        let axis = AxisIndex::new(
            "y",
            Dispersion::Sellmeier {
                a: 3.45018,
                terms: vec![[0.04341, 0.04597], [16.98825, 39.43799]],
                ir: 0.0,
            },
            ThermoOptic::none(),
            [380.0, 1600.0],
        );
        let l2: f64 = 0.8085 * 0.8085;
        let expect = (3.45018 + 0.04341 / (l2 - 0.04597) + 16.98825 / (l2 - 39.43799)).sqrt();
        let n = axis.index(omega_at(808.5), 20.0).unwrap();
        assert!((n - expect).abs() < 1e-12, "{n} vs {expect}");
    }

    #[test]
    fn thermo_optic_polynomial_in_inverse_wavelength() {
        let t = ThermoOptic {
            reference_c: 20.0,
            scale: 1e-5,
            linear: vec![0.5425, 0.5154, -0.4063, 0.1997],
            quadratic: vec![],
        };
        let lam: f64 = 0.40425;
        let expect =
            1e-5 * (0.1997 / lam.powi(3) - 0.4063 / lam.powi(2) + 0.5154 / lam + 0.5425) * 38.0;
        assert!((t.delta_n(lam, 58.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn outside_window_is_an_error() {
        let axis = AxisIndex::constant("c", 2.0, [700.0, 900.0]);
        assert!(matches!(
            axis.index(omega_at(650.0), 20.0),
            Err(Error::OutOfWindow { .. })
        ));
        assert!(axis.index(omega_at(800.0), 20.0).is_ok());
    }
}
