//! Uniform sampling grids.
//!
//! All grids are SI: relative angular frequency in rad/s, path-length
//! difference in metres, sweep values in °C or rad/s.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_GRID_COUNT: usize = 8;

/// Relative-frequency grid symmetric about Ω = 0: `Ω_k = (k − count/2)·spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    spacing: f64,
    count: usize,
}

impl FrequencyGrid {
    pub fn new(spacing: f64, count: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "frequency spacing must be positive and finite, got {spacing}"
            )));
        }
        if count < MIN_GRID_COUNT {
            return Err(Error::InvalidGrid(format!(
                "frequency grid needs at least {MIN_GRID_COUNT} samples, got {count}"
            )));
        }
        if !count.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "frequency grid count must be even to be symmetric about zero, got {count}"
            )));
        }
        Ok(Self { spacing, count })
    }

    /// Grid with `count` samples covering `span` (`spacing = span / count`).
    pub fn with_span(span: f64, count: usize) -> Result<Self> {
        Self::new(span / count as f64, count)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Ω of sample `k`.
    #[inline]
    pub fn omega(&self, k: usize) -> f64 {
        (k as f64 - (self.count / 2) as f64) * self.spacing
    }

    pub fn omegas(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.omega(k)).collect()
    }

    pub fn min(&self) -> f64 {
        self.omega(0)
    }

    pub fn max(&self) -> f64 {
        self.omega(self.count - 1)
    }

    /// Index of the sample holding −Ω_k, if it lies on the grid.
    #[inline]
    pub fn mirror(&self, k: usize) -> Option<usize> {
        if k == 0 {
            None
        } else {
            Some(self.count - k)
        }
    }

    /// Index of Ω = 0.
    pub fn zero_index(&self) -> usize {
        self.count / 2
    }

    /// The conjugate delay grid `τ_j = (j − count/2)·2π/(count·spacing)`.
    pub fn conjugate(&self) -> TimeGrid {
        TimeGrid {
            spacing: 2.0 * PI / (self.count as f64 * self.spacing),
            count: self.count,
        }
    }

    /// Same spacing, `factor` times as many samples.
    pub fn padded(&self, factor: usize) -> Result<Self> {
        Self::new(self.spacing, self.count * factor.max(1))
    }

    pub fn same_as(&self, other: &Self) -> bool {
        self.count == other.count
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing.abs()
    }
}

/// Uniform delay grid centred on τ = 0, conjugate to a [`FrequencyGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    spacing: f64,
    count: usize,
}

impl TimeGrid {
    pub fn new(spacing: f64, count: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) || count < 2 {
            return Err(Error::InvalidGrid(format!(
                "delay grid needs positive spacing and at least two samples, got {spacing}, {count}"
            )));
        }
        Ok(Self { spacing, count })
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn tau(&self, j: usize) -> f64 {
        (j as f64 - (self.count / 2) as f64) * self.spacing
    }

    pub fn taus(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.tau(j)).collect()
    }
}

/// Path-length difference grid ΔS (metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGrid {
    origin: f64,
    spacing: f64,
    count: usize,
}

impl PathGrid {
    pub fn new(origin: f64, spacing: f64, count: usize) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) || !origin.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "path grid needs finite origin and positive spacing, got origin {origin}, spacing {spacing}"
            )));
        }
        if count < MIN_GRID_COUNT {
            return Err(Error::InvalidGrid(format!(
                "path grid needs at least {MIN_GRID_COUNT} samples, got {count}"
            )));
        }
        Ok(Self {
            origin,
            spacing,
            count,
        })
    }

    /// `count` samples of spacing `span/count` centred on `center`.
    pub fn centered(center: f64, span: f64, count: usize) -> Result<Self> {
        let spacing = span / count as f64;
        Self::new(center - spacing * (count / 2) as f64, spacing, count)
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.spacing
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn span(&self) -> f64 {
        self.spacing * self.count as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Temperature,
    PumpFrequency,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Temperature => "temperature",
            SweepAxis::PumpFrequency => "pump_frequency",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "temperature" | "t" => Some(SweepAxis::Temperature),
            "pump_frequency" | "pump-frequency" | "omega_p" => Some(SweepAxis::PumpFrequency),
            _ => None,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sweep of ΔT (°C) or Δω_p (rad/s) relative to the phase-matching point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    axis: SweepAxis,
    origin: f64,
    spacing: f64,
    count: usize,
}

impl SweepGrid {
    pub fn new(axis: SweepAxis, origin: f64, spacing: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidGrid(
                "sweep grid needs at least one sample".into(),
            ));
        }
        if !origin.is_finite() || !spacing.is_finite() || spacing == 0.0 {
            return Err(Error::InvalidGrid(format!(
                "sweep grid needs finite origin and nonzero spacing, got origin {origin}, spacing {spacing}"
            )));
        }
        Ok(Self {
            axis,
            origin,
            spacing,
            count,
        })
    }

    /// `count` samples `(j − count/2)·span/count`, so the sample
    /// `count/2` sits exactly on zero.
    pub fn centered(axis: SweepAxis, span: f64, count: usize) -> Result<Self> {
        if count == 1 {
            return Self::new(axis, 0.0, if span != 0.0 { span } else { 1.0 }, 1);
        }
        let spacing = span / count as f64;
        Self::new(axis, -spacing * (count / 2) as f64, spacing, count)
    }

    pub fn axis(&self) -> SweepAxis {
        self.axis
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn value(&self, j: usize) -> f64 {
        self.origin + j as f64 * self.spacing
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.value(j)).collect()
    }

    /// Index of the sample closest to zero offset.
    pub fn center_index(&self) -> usize {
        (0..self.count)
            .min_by(|&a, &b| self.value(a).abs().total_cmp(&self.value(b).abs()))
            .unwrap_or(0)
    }
}
