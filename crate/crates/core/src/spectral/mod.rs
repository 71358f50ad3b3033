//! Numeric foundation shared by every other module: uniform grids,
//! complex spectra, transforms, interpolation and comparison metrics.

mod compare;
mod grid;
mod interp;
pub mod sum;
mod transform;
mod wavefunction;

pub use compare::{compare, compare_all, compare_with, CompareMode, CompareOptions, CompareReport};
pub use grid::{FrequencyGrid, PathGrid, SweepAxis, SweepGrid, TimeGrid, MIN_GRID_COUNT};
pub use interp::{resample, UniformSamples};
pub use transform::{
    forward_transform, forward_values, inverse_transform, inverse_values, real_direct_sum,
    transform_at, zero_pad, DelayAmplitude,
};
pub use wavefunction::{SpectralWavefunction, TimeDelayDistribution, WavefunctionMeta};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
