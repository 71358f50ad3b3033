use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value at index {index} of {what}")]
    NonFinite { index: usize, what: &'static str },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("extrapolation requested: {0}")]
    Extrapolation(String),

    #[error("amplitude below the comparison floor everywhere on the compared support")]
    BelowFloor,

    #[error("wavelength {wavelength_nm:.3} nm outside the validity window [{min_nm}, {max_nm}] nm of axis '{axis}'")]
    OutOfWindow {
        axis: String,
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("finite-difference derivative did not converge after {halvings} step halvings (last relative change {change:e})")]
    DerivativeNotConverged { halvings: u32, change: f64 },

    #[error("method inapplicable: signal and idler group velocities are equal (group index mismatch {0:e} s/m), temperature or pump tuning cannot shift the relative frequency")]
    MethodInapplicable(f64),

    #[error(
        "no phase-matching temperature in [{lo_c}, {hi_c}] °C (no sign change of the mismatch)"
    )]
    NoPhaseMatch { lo_c: f64, hi_c: f64 },

    #[error("spatial quadrature did not converge: order doubling changed the wavefunction by {residual:e} (relative L2, limit {limit:e})")]
    QuadratureNotConverged { residual: f64, limit: f64 },

    #[error("interference term has imaginary residue {residue:e} relative to its maximum (limit {limit:e}); frequency grid is not symmetric")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no interference present: splitter has t = {t}, r = {r}")]
    NoInterference { t: f64, r: f64 },

    #[error("data quality refusal: {0}")]
    DataQuality(String),

    #[error("interference term truncated by the path-length window: {0}")]
    TruncatedWindow(String),

    #[error("a single HOM dip is insufficient: the symmetrised wavefunction of one sweep slice cannot be inverted to the spectral wavefunction, record a temperature or pump-frequency sweep")]
    SingleSlice,

    #[error("sweep range insufficient for reconstruction: {0}")]
    InsufficientSweep(String),

    #[error("symmetrised wavefunction at zero frequency is too weak for normalisation: |F(0)| = {ratio:e} of max (limit {limit:e})")]
    WeakCenter { ratio: f64, limit: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("crystal file {path}: {msg}")]
    CrystalFile { path: String, msg: String },

    #[error("map file {path}: {msg}")]
    MapFormat { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line tool.
    ///
    /// 2: configuration or input-file errors, 3: numeric guard failures,
    /// 4: data-quality refusals.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::CrystalFile { .. }
            | Error::MapFormat { .. }
            | Error::InvalidParameter(_)
            | Error::Io(_) => 2,
            Error::InvalidGrid(_)
            | Error::NonFinite { .. }
            | Error::GridMismatch(_)
            | Error::Extrapolation(_)
            | Error::BelowFloor
            | Error::OutOfWindow { .. }
            | Error::DerivativeNotConverged { .. }
            | Error::NoPhaseMatch { .. }
            | Error::QuadratureNotConverged { .. }
            | Error::ImaginaryResidue { .. } => 3,
            Error::MethodInapplicable(_)
            | Error::NoInterference { .. }
            | Error::DataQuality(_)
            | Error::TruncatedWindow(_)
            | Error::SingleSlice
            | Error::InsufficientSweep(_)
            | Error::WeakCenter { .. } => 4,
        }
    }
}
