use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::index::{AxisIndex, Dispersion, ThermoOptic};
use crate::error::{Error, Result};

const BUILTIN_PPKTP: &str = include_str!("../../data/ppktp.toml");

/// Name accepted by [`CrystalModel::load`] for the embedded ppKTP data.
pub const BUILTIN_PPKTP_NAME: &str = "builtin:ppktp";

/// Which field a quantity belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Pump,
    Signal,
    Idler,
}

impl Role {
    pub const ALL: [Role; 3] = [Role::Pump, Role::Signal, Role::Idler];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Pump => "pump",
            Role::Signal => "signal",
            Role::Idler => "idler",
        }
    }
}

/// Nonlinear crystal with a quasi-phase-matching grating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalModel {
    pub name: String,
    /// Length along the pump direction (m).
    pub length: f64,
    /// Poling period (m) at `poling_reference_c`.
    pub poling_period: f64,
    pub poling_reference_c: f64,
    /// dΛ/dT (m/°C).
    pub poling_slope: f64,
    pub pump: AxisIndex,
    pub signal: AxisIndex,
    pub idler: AxisIndex,
    pub provenance: String,
}

impl CrystalModel {
    pub fn axis(&self, role: Role) -> &AxisIndex {
        match role {
            Role::Pump => &self.pump,
            Role::Signal => &self.signal,
            Role::Idler => &self.idler,
        }
    }

    pub fn axis_mut(&mut self, role: Role) -> &mut AxisIndex {
        match role {
            Role::Pump => &mut self.pump,
            Role::Signal => &mut self.signal,
            Role::Idler => &mut self.idler,
        }
    }

    /// Λ(T), linear in temperature.
    pub fn poling_period_at(&self, temp_c: f64) -> f64 {
        self.poling_period + self.poling_slope * (temp_c - self.poling_reference_c)
    }

    pub fn builtin_ppktp() -> Self {
        Self::from_toml_str(BUILTIN_PPKTP, BUILTIN_PPKTP_NAME)
            .expect("embedded crystal data is valid")
    }

    /// Loads a crystal file, or the embedded data for `builtin:ppktp`.
    pub fn load(path: &str) -> Result<Self> {
        if path == BUILTIN_PPKTP_NAME {
            return Ok(Self::builtin_ppktp());
        }
        let text = std::fs::read_to_string(Path::new(path)).map_err(|e| Error::CrystalFile {
            path: path.to_string(),
            msg: e.to_string(),
        })?;
        Self::from_toml_str(&text, path)
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let bad = |msg: String| Error::CrystalFile {
            path: origin.to_string(),
            msg,
        };
        let file: CrystalFile = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        let c = &file.crystal;
        for (what, v) in [
            ("length_mm", c.length_mm),
            ("poling_period_um", c.poling_period_um),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(bad(format!("{what} must be positive, got {v}")));
            }
        }
        if !c.poling_reference_c.is_finite() || !c.thermal_expansion_per_c.is_finite() {
            return Err(bad(
                "poling reference and thermal expansion must be finite".into()
            ));
        }
        let axis = |role: Role, key: &str| -> Result<AxisIndex> {
            let entry = file.axis.get(key).ok_or_else(|| {
                bad(format!(
                    "{} assigned to undefined axis '{key}'",
                    role.as_str()
                ))
            })?;
            entry.build(key).map_err(bad)
        };
        let pump = axis(Role::Pump, &file.assignment.pump)?;
        let signal = axis(Role::Signal, &file.assignment.signal)?;
        let idler = axis(Role::Idler, &file.assignment.idler)?;
        for a in [&pump, &signal, &idler] {
            check_index_above_unity(a).map_err(bad)?;
        }
        let period = c.poling_period_um * 1e-6;
        Ok(Self {
            name: c.name.clone(),
            length: c.length_mm * 1e-3,
            poling_period: period,
            poling_reference_c: c.poling_reference_c,
            poling_slope: period * c.thermal_expansion_per_c,
            pump,
            signal,
            idler,
            provenance: c.provenance.clone(),
        })
    }
}

fn check_index_above_unity(axis: &AxisIndex) -> std::result::Result<(), String> {
    let [lo, hi] = axis.window_nm;
    let reference = axis.thermo.reference_c;
    for j in 0..=64 {
        let nm = lo + (hi - lo) * j as f64 / 64.0;
        let omega = 2.0 * std::f64::consts::PI * crate::spectral::SPEED_OF_LIGHT / (nm * 1e-9);
        axis.index(omega, reference).map_err(|e| e.to_string())?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CrystalFile {
    crystal: CrystalSection,
    assignment: Assignment,
    axis: BTreeMap<String, AxisSection>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CrystalSection {
    name: String,
    provenance: String,
    length_mm: f64,
    poling_period_um: f64,
    poling_reference_c: f64,
    thermal_expansion_per_c: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Assignment {
    pump: String,
    signal: String,
    idler: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisSection {
    provenance: String,
    window_nm: [f64; 2],
    sellmeier: Option<SellmeierSection>,
    polynomial: Option<PolynomialSection>,
    thermo_optic: ThermoOptic,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SellmeierSection {
    a: f64,
    terms: Vec<[f64; 2]>,
    #[serde(default)]
    ir: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialSection {
    omega_ref_rad_s: f64,
    coefficients: Vec<f64>,
}

impl AxisSection {
    fn build(&self, name: &str) -> std::result::Result<AxisIndex, String> {
        let dispersion = match (&self.sellmeier, &self.polynomial) {
            (Some(s), None) => Dispersion::Sellmeier {
                a: s.a,
                terms: s.terms.clone(),
                ir: s.ir,
            },
            (None, Some(p)) => {
                if p.coefficients.is_empty() {
                    return Err(format!("axis '{name}': empty polynomial"));
                }
                Dispersion::OmegaPolynomial {
                    omega_ref: p.omega_ref_rad_s,
                    coefficients: p.coefficients.clone(),
                }
            }
            _ => {
                return Err(format!(
                    "axis '{name}' needs exactly one of [sellmeier] or [polynomial]"
                ))
            }
        };
        let [lo, hi] = self.window_nm;
        if !(lo > 0.0 && hi > lo) {
            return Err(format!("axis '{name}': bad window [{lo}, {hi}] nm"));
        }
        Ok(AxisIndex {
            name: name.to_string(),
            dispersion,
            thermo: self.thermo_optic.clone(),
            window_nm: self.window_nm,
            provenance: self.provenance.clone(),
        })
    }
}
