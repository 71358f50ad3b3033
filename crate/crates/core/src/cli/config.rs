//! Scenario files: dotted TOML sections in human units (nm, µm, mm, °C),
//! converted to SI once when the source is built.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dispersion::{
    find_phase_match, omega_from_nm, shift_constants, CrystalModel, PHASE_MATCH_BRACKET_C,
};
use crate::error::{Error, Result};
use crate::interference::{BeamSplitter, NoiseSpec};
use crate::spdc::{
    DetectionConfig, DispersionMode, ModeDescriptor, Quadrature, SourceModel, SourceSpec,
};
use crate::spectral::{FrequencyGrid, PathGrid, SweepAxis, SweepGrid, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// "analytic" or "spatial".
    pub model: String,
    /// Crystal file, or `builtin:ppktp`. Relative paths resolve against the
    /// config file.
    pub crystal: String,
    /// "exact" or "linearized".
    pub dispersion: String,
    pub pump: PumpSection,
    pub detection: DetectionSection,
    pub quadrature: QuadratureSection,
    pub grids: GridSection,
    pub splitter: SplitterSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    pub reconstruction: ReconstructionSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub wavelength_nm: f64,
    pub waist_um: f64,
    pub mode: String,
    /// Where to look for the phase-matching temperature.
    pub t_hint_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionSection {
    pub waist_um: f64,
    pub signal_mode: String,
    pub idler_mode: String,
    pub displacement_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSection {
    pub radial_order: usize,
    pub azimuthal_order: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max_per_um: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub n_omega: usize,
    pub omega_span_rad_s: f64,
    pub n_delta_s: usize,
    pub delta_s_span_m: f64,
    /// Window centre; defaults to the expected dip position c·D·L/2.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_s_center_m: Option<f64>,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// "temperature" or "pump_frequency".
    pub axis: String,
    pub n: usize,
    /// °C for temperature, GHz of pump frequency for pump_frequency.
    pub span: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitterSection {
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub baseline_counts: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructionSection {
    /// Unset tapers measured maps only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub taper: Option<bool>,
    pub center_average: bool,
    /// Half-width around the dip excluded from the baseline of raw counts.
    pub baseline_window_mm: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            model: "spatial".into(),
            crystal: crate::dispersion::BUILTIN_PPKTP_NAME.into(),
            dispersion: "exact".into(),
            pump: PumpSection::default(),
            detection: DetectionSection::default(),
            quadrature: QuadratureSection::default(),
            grids: GridSection::default(),
            splitter: SplitterSection::default(),
            noise: None,
            reconstruction: ReconstructionSection::default(),
        }
    }
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            wavelength_nm: 404.25,
            waist_um: 4.3,
            mode: "gaussian".into(),
            t_hint_c: 58.0,
        }
    }
}

impl Default for DetectionSection {
    fn default() -> Self {
        Self {
            waist_um: 9.6,
            signal_mode: "gaussian".into(),
            idler_mode: "gaussian".into(),
            displacement_mm: 0.0,
        }
    }
}

impl Default for QuadratureSection {
    fn default() -> Self {
        let q = Quadrature::default();
        Self {
            radial_order: q.radial_order,
            azimuthal_order: q.azimuthal_order,
            q_max_per_um: None,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n_omega: 1024,
            omega_span_rad_s: 8e13,
            n_delta_s: 512,
            delta_s_span_m: 6e-3,
            delta_s_center_m: None,
            sweep: SweepSection::default(),
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: "temperature".into(),
            n: 64,
            span: 36.0,
        }
    }
}

impl Default for SplitterSection {
    fn default() -> Self {
        let b = BeamSplitter::balanced();
        Self { t: b.t(), r: b.r() }
    }
}

impl Default for ReconstructionSection {
    fn default() -> Self {
        Self {
            taper: None,
            center_average: false,
            baseline_window_mm: 1.5,
        }
    }
}

/// Everything a subcommand needs, in SI units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub crystal_path: Option<PathBuf>,
    pub source: SourceSpec,
    pub freq_grid: FrequencyGrid,
    pub path_grid: PathGrid,
    pub sweep_grid: SweepGrid,
    pub splitter: BeamSplitter,
    pub noise: Option<NoiseSpec>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Canonical text used for the manifest digest.
    pub fn canonical(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pump.wavelength_nm", self.pump.wavelength_nm),
            ("pump.waist_um", self.pump.waist_um),
            ("detection.waist_um", self.detection.waist_um),
            ("grids.omega_span_rad_s", self.grids.omega_span_rad_s),
            ("grids.delta_s_span_m", self.grids.delta_s_span_m),
            ("grids.sweep.span", self.grids.sweep.span),
            (
                "reconstruction.baseline_window_mm",
                self.reconstruction.baseline_window_mm,
            ),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        if !self.detection.displacement_mm.is_finite() || !self.pump.t_hint_c.is_finite() {
            return Err(Error::Config(
                "displacement and temperature hint must be finite".into(),
            ));
        }
        if !self.grids.n_omega.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grids.n_omega must be even, got {}",
                self.grids.n_omega
            )));
        }
        if self.grids.sweep.n == 0 || self.grids.n_delta_s < 2 {
            return Err(Error::Config(
                "grids need at least one sweep sample and two path samples".into(),
            ));
        }
        if let Some(n) = &self.noise {
            if !(n.baseline_counts.is_finite() && n.baseline_counts > 0.0) {
                return Err(Error::Config(format!(
                    "noise.baseline_counts must be positive, got {}",
                    n.baseline_counts
                )));
            }
        }
        Ok(())
    }

    fn crystal_path(&self, base: Option<&Path>) -> Option<PathBuf> {
        if self.crystal == crate::dispersion::BUILTIN_PPKTP_NAME {
            return None;
        }
        let p = PathBuf::from(&self.crystal);
        Some(match base {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        })
    }

    /// Builds the SI scenario. `base` is the directory of the config file.
    pub fn build(&self, base: Option<&Path>) -> Result<Scenario> {
        self.validate()?;
        let crystal_path = self.crystal_path(base);
        let crystal = match &crystal_path {
            None => CrystalModel::builtin_ppktp(),
            Some(p) => CrystalModel::load(&p.to_string_lossy())?,
        };
        let model = SourceModel::parse(&self.model)?;
        let mode = |s: &str, what: &str| -> Result<ModeDescriptor> {
            s.parse().map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{what}: {m}")),
                other => other,
            })
        };
        let detection = DetectionConfig {
            pump_waist: self.pump.waist_um * 1e-6,
            pump_mode: mode(&self.pump.mode, "pump.mode")?,
            detection_waist: self.detection.waist_um * 1e-6,
            signal_mode: mode(&self.detection.signal_mode, "detection.signal_mode")?,
            idler_mode: mode(&self.detection.idler_mode, "detection.idler_mode")?,
            crystal_displacement: self.detection.displacement_mm * 1e-3,
        };
        let quadrature = Quadrature {
            radial_order: self.quadrature.radial_order,
            azimuthal_order: self.quadrature.azimuthal_order,
            q_max: self.quadrature.q_max_per_um.map(|q| q * 1e6),
        };
        let point = find_phase_match(
            &crystal,
            omega_from_nm(self.pump.wavelength_nm),
            self.pump.t_hint_c,
            PHASE_MATCH_BRACKET_C,
        )?;
        let dispersion = match self.dispersion.as_str() {
            "exact" => DispersionMode::Exact,
            "linearized" | "linear" => {
                DispersionMode::Linearized(shift_constants(&crystal, point)?)
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown dispersion '{other}' (expected 'exact' or 'linearized')"
                )))
            }
        };
        let centre = match self.grids.delta_s_center_m {
            Some(c) => c,
            None => match shift_constants(&crystal, point) {
                Ok(s) => 0.5 * SPEED_OF_LIGHT * s.group_mismatch * crystal.length,
                Err(_) => 0.0,
            },
        };
        let axis = SweepAxis::parse(&self.grids.sweep.axis).ok_or_else(|| {
            Error::Config(format!("unknown sweep axis '{}'", self.grids.sweep.axis))
        })?;
        let span = match axis {
            SweepAxis::Temperature => self.grids.sweep.span,
            SweepAxis::PumpFrequency => 2.0 * std::f64::consts::PI * self.grids.sweep.span * 1e9,
        };
        let splitter = BeamSplitter::new(self.splitter.t, self.splitter.r)
            .map_err(|e| Error::Config(e.to_string()))?;
        let source = SourceSpec {
            model,
            crystal,
            point,
            detection,
            quadrature,
            dispersion,
        };
        source.validate().map_err(|e| match e {
            Error::InvalidParameter(m) => Error::Config(m),
            other => other,
        })?;
        Ok(Scenario {
            config: self.clone(),
            crystal_path,
            source,
            freq_grid: FrequencyGrid::with_span(self.grids.omega_span_rad_s, self.grids.n_omega)?,
            path_grid: PathGrid::centered(centre, self.grids.delta_s_span_m, self.grids.n_delta_s)?,
            sweep_grid: SweepGrid::centered(axis, span, self.grids.sweep.n)?,
            splitter,
            noise: self.noise.as_ref().map(|n| NoiseSpec {
                baseline_counts: n.baseline_counts,
                seed: n.seed,
            }),
        })
    }
}
