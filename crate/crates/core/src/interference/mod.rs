//! Two-photon interference at a beam splitter: the interference term f(ΔS)
//! of a wavefunction and coincidence maps R(ΔS, sweep) built from it.

mod csv;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use csv::{load_map, parse_map, save_map, write_map};

use crate::dispersion::shift_constants;
use crate::error::{Error, Result};
use crate::spdc::Generator;
use crate::spectral::{
    transform_at, FrequencyGrid, PathGrid, SpectralWavefunction, SweepAxis, SweepGrid,
    SPEED_OF_LIGHT,
};

/// Largest tolerated |Im f| relative to max |f|.
pub const IMAGINARY_RESIDUE_LIMIT: f64 = 1e-10;
/// Largest tolerated coefficient of variation of a baseline row.
pub const BASELINE_CV_LIMIT: f64 = 0.2;
/// Baseline samples needed on each side of the dip.
pub const MIN_BASELINE_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitter {
    t: f64,
    r: f64,
}

impl BeamSplitter {
    pub fn new(t: f64, r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) || !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidParameter(format!(
                "splitter amplitudes must lie in [0, 1], got t = {t}, r = {r}"
            )));
        }
        if (t * t + r * r - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "splitter must satisfy t² + r² = 1, got {}",
                t * t + r * r
            )));
        }
        Ok(Self { t, r })
    }

    pub fn balanced() -> Self {
        Self {
            t: std::f64::consts::FRAC_1_SQRT_2,
            r: std::f64::consts::FRAC_1_SQRT_2,
        }
    }

    /// Splitter with t = cos θ, r = sin θ.
    pub fn from_angle(theta: f64) -> Self {
        Self {
            t: theta.cos(),
            r: theta.sin(),
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn swapped(&self) -> Self {
        Self {
            t: self.r,
            r: self.t,
        }
    }

    /// t⁴ + r⁴, the rate without interference.
    pub fn baseline(&self) -> f64 {
        self.t.powi(4) + self.r.powi(4)
    }

    /// 2r²t², the weight of the interference term.
    pub fn coupling(&self) -> f64 {
        2.0 * self.r * self.r * self.t * self.t
    }

    /// R = t⁴ + r⁴ − 2r²t²·f.
    pub fn rate(&self, f: f64) -> f64 {
        self.baseline() - self.coupling() * f
    }
}

impl Default for BeamSplitter {
    fn default() -> Self {
        Self::balanced()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Simulated,
    Measured,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Simulated => "simulated",
            Provenance::Measured => "measured",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simulated" => Some(Provenance::Simulated),
            "measured" => Some(Provenance::Measured),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub t0_c: f64,
    pub omega_p0: f64,
    pub c_t: Option<f64>,
    pub c_omega_p: Option<f64>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
    /// Dip or peak position estimated during normalization (m).
    pub dip_center_m: Option<f64>,
    /// Expected counts at baseline when counts were simulated, or the mean
    /// baseline count found during normalization.
    pub baseline_counts: Option<f64>,
}

impl MapMeta {
    pub fn simulated(t0_c: f64, omega_p0: f64) -> Self {
        Self {
            t0_c,
            omega_p0,
            c_t: None,
            c_omega_p: None,
            provenance: Provenance::Simulated,
            seed: None,
            dip_center_m: None,
            baseline_counts: None,
        }
    }
}

/// Coincidence rate on a (sweep × ΔS) grid; row j is sweep sample j.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMap {
    pub path_grid: PathGrid,
    pub sweep_grid: SweepGrid,
    pub values: Array2<f64>,
    pub splitter: BeamSplitter,
    pub normalized: bool,
    pub meta: MapMeta,
}

impl CoincidenceMap {
    pub fn new(
        path_grid: PathGrid,
        sweep_grid: SweepGrid,
        values: Array2<f64>,
        splitter: BeamSplitter,
        normalized: bool,
        meta: MapMeta,
    ) -> Result<Self> {
        if values.dim() != (sweep_grid.count(), path_grid.count()) {
            return Err(Error::GridMismatch(format!(
                "map values {:?} do not match sweep × path = ({}, {})",
                values.dim(),
                sweep_grid.count(),
                path_grid.count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                what: "coincidence map",
            });
        }
        Ok(Self {
            path_grid,
            sweep_grid,
            values,
            splitter,
            normalized,
            meta,
        })
    }

    /// Mean over sweep samples at each ΔS.
    pub fn path_marginal(&self) -> Vec<f64> {
        let n = self.sweep_grid.count() as f64;
        self.values
            .columns()
            .into_iter()
            .map(|c| c.sum() / n)
            .collect()
    }

    pub fn row(&self, j: usize) -> Vec<f64> {
        self.values.row(j).to_vec()
    }
}

/// f(ΔS) = ∫ Φ(Ω)Φ*(−Ω)·e^{i2ΩΔS/c} dΩ, real part after checking that
/// the imaginary residue is negligible. The unpaired edge sample Ω_0 has no
/// mirror on the grid and does not contribute.
pub fn interference_term(
    spectrum: &SpectralWavefunction,
    path_grid: &PathGrid,
) -> Result<Vec<f64>> {
    let product = symmetrised_product(spectrum);
    let taus: Vec<f64> = path_grid
        .values()
        .iter()
        .map(|s| -2.0 * s / SPEED_OF_LIGHT)
        .collect();
    let f = transform_at(&product, spectrum.grid(), &taus)?;
    let max = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let residue = f.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if max > 0.0 && residue > IMAGINARY_RESIDUE_LIMIT * max {
        return Err(Error::ImaginaryResidue {
            residue: residue / max,
            limit: IMAGINARY_RESIDUE_LIMIT,
        });
    }
    Ok(f.into_iter().map(|z| z.re).collect())
}

/// F(Ω) = Φ(Ω)Φ*(−Ω) on the same grid, zero at the unpaired edge sample.
pub fn symmetrised_product(spectrum: &SpectralWavefunction) -> Vec<Complex64> {
    let grid = spectrum.grid();
    let v = spectrum.values();
    (0..grid.count())
        .map(|k| match grid.mirror(k) {
            Some(m) => v[k] * v[m].conj(),
            None => Complex64::new(0.0, 0.0),
        })
        .collect()
}

/// f normalized by ∫|Φ|² dΩ, so that f(ΔS) ≤ 1 with equality for a real
/// even Φ at ΔS = 0.
pub fn normalized_interference_term(
    spectrum: &SpectralWavefunction,
    path_grid: &PathGrid,
) -> Result<Vec<f64>> {
    let f = interference_term(spectrum, path_grid)?;
    let norm = spectrum.norm_sqr();
    if norm == 0.0 {
        return Err(Error::InvalidParameter(
            "wavefunction is identically zero".into(),
        ));
    }
    Ok(f.into_iter().map(|v| v / norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Expected counts at the baseline rate.
    pub baseline_counts: f64,
    pub seed: u64,
}

/// (T, ω_p) at sweep value `v` about the generator's phase-match point.
pub fn sweep_setting(generator: &Generator, axis: SweepAxis, v: f64) -> (f64, f64) {
    let p = generator.spec().point;
    match axis {
        SweepAxis::Temperature => (p.t0_c + v, p.omega_p0),
        SweepAxis::PumpFrequency => (p.t0_c, p.omega_p0 + v),
    }
}

/// Builds R(ΔS, sweep) by recomputing the wavefunction at every sweep
/// sample. With `noise`, values are Poisson counts whose mean at baseline
/// is `baseline_counts`; the map is then marked unnormalized.
pub fn synthesize_map(
    generator: &Generator,
    freq_grid: &FrequencyGrid,
    path_grid: &PathGrid,
    sweep_grid: &SweepGrid,
    splitter: BeamSplitter,
    noise: Option<NoiseSpec>,
) -> Result<CoincidenceMap> {
    if let Some(n) = noise {
        if !(n.baseline_counts.is_finite() && n.baseline_counts > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise baseline counts must be positive, got {}",
                n.baseline_counts
            )));
        }
    }
    let rows: Vec<Vec<f64>> = sweep_grid
        .values()
        .par_iter()
        .map(|&v| -> Result<Vec<f64>> {
            let (t, wp) = sweep_setting(generator, sweep_grid.axis(), v);
            let phi = generator.wavefunction(freq_grid, t, wp)?;
            let f = normalized_interference_term(&phi, path_grid)?;
            Ok(f.into_iter().map(|x| splitter.rate(x)).collect())
        })
        .collect::<Result<_>>()?;
    let mut values = Array2::zeros((sweep_grid.count(), path_grid.count()));
    for (j, row) in rows.into_iter().enumerate() {
        for (i, v) in row.into_iter().enumerate() {
            values[[j, i]] = v;
        }
    }
    let spec = generator.spec();
    let constants = shift_constants(&spec.crystal, spec.point).ok();
    let mut meta = MapMeta::simulated(spec.point.t0_c, spec.point.omega_p0);
    meta.c_t = constants.map(|c| c.c_t);
    meta.c_omega_p = constants.map(|c| c.c_omega_p);
    let mut map = CoincidenceMap::new(*path_grid, *sweep_grid, values, splitter, true, meta)?;
    if let Some(n) = noise {
        map = apply_poisson_noise(&map, n)?;
    }
    Ok(map)
}

/// Replaces a normalized map by Poisson counts with mean
/// R·baseline_counts/(t⁴ + r⁴), drawn in row-major order from a ChaCha8
/// stream seeded by `seed`.
pub fn apply_poisson_noise(map: &CoincidenceMap, noise: NoiseSpec) -> Result<CoincidenceMap> {
    if !map.normalized {
        return Err(Error::InvalidParameter(
            "noise is applied to normalized rates only".into(),
        ));
    }
    let scale = noise.baseline_counts / map.splitter.baseline();
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let mut out = map.clone();
    for v in out.values.iter_mut() {
        let mean = (*v * scale).max(0.0);
        *v = if mean == 0.0 {
            0.0
        } else {
            Poisson::new(mean)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng)
        };
    }
    out.normalized = false;
    out.meta.seed = Some(noise.seed);
    out.meta.baseline_counts = Some(noise.baseline_counts);
    Ok(out)
}

/// Divides every row by its mean over the baseline window
/// (|ΔS − centre| > `baseline_window`) and rescales to t⁴ + r⁴. The centre
/// is the extremum of the ΔS-marginal relative to its median.
pub fn normalize_measured(raw: &CoincidenceMap, baseline_window: f64) -> Result<CoincidenceMap> {
    let marginal = raw.path_marginal();
    let mut sorted = marginal.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let centre_idx = marginal
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 - median).abs().total_cmp(&(b.1 - median).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let centre = raw.path_grid.value(centre_idx);
    let positions = raw.path_grid.values();
    let left: Vec<usize> = (0..positions.len())
        .filter(|&i| positions[i] < centre - baseline_window)
        .collect();
    let right: Vec<usize> = (0..positions.len())
        .filter(|&i| positions[i] > centre + baseline_window)
        .collect();
    if left.len() < MIN_BASELINE_SAMPLES || right.len() < MIN_BASELINE_SAMPLES {
        return Err(Error::DataQuality(format!(
            "baseline window leaves {} samples left and {} right of the centre at {:.4e} m; need {MIN_BASELINE_SAMPLES} on each side",
            left.len(),
            right.len(),
            centre
        )));
    }
    let window: Vec<usize> = left.into_iter().chain(right).collect();
    let target = raw.splitter.baseline();
    let mut out = raw.clone();
    let mut total = 0.0;
    for (j, mut row) in out.values.rows_mut().into_iter().enumerate() {
        let samples: Vec<f64> = window.iter().map(|&i| row[i]).collect();
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        if !(mean > 0.0) {
            return Err(Error::DataQuality(format!(
                "sweep row {j} has non-positive baseline {mean}"
            )));
        }
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let cv = var.sqrt() / mean;
        if cv > BASELINE_CV_LIMIT {
            return Err(Error::DataQuality(format!(
                "baseline coefficient of variation {cv:.3} in sweep row {j} exceeds {BASELINE_CV_LIMIT}"
            )));
        }
        total += mean;
        row.mapv_inplace(|v| v / mean * target);
    }
    out.normalized = true;
    out.meta.dip_center_m = Some(centre);
    out.meta.baseline_counts = Some(total / raw.sweep_grid.count() as f64);
    Ok(out)
}
