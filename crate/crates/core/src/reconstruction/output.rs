use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::ReconstructionResult;
use crate::error::{Error, Result};
use crate::spectral::{
    FrequencyGrid, SpectralWavefunction, TimeDelayDistribution, TimeGrid, WavefunctionMeta,
};

pub fn write_phi<W: Write>(phi: &SpectralWavefunction, mut out: W) -> Result<()> {
    writeln!(out, "omega_rad_s,re,im")?;
    for (w, z) in phi.grid().omegas().iter().zip(phi.values()) {
        writeln!(out, "{w:e},{:e},{:e}", z.re, z.im)?;
    }
    Ok(())
}

pub fn write_spectrum<W: Write>(grid: &FrequencyGrid, density: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "omega_rad_s,density")?;
    for (w, d) in grid.omegas().iter().zip(density) {
        writeln!(out, "{w:e},{d:e}")?;
    }
    Ok(())
}

pub fn write_delay<W: Write>(delay: &TimeDelayDistribution, mut out: W) -> Result<()> {
    writeln!(out, "tau_s,density")?;
    for (t, d) in delay.delays.taus().iter().zip(&delay.density) {
        writeln!(out, "{t:e},{d:e}")?;
    }
    Ok(())
}

/// Writes phi.csv, spectrum.csv, delay.csv and diagnostics.txt into `dir`;
/// returns the written paths.
pub fn save_result(result: &ReconstructionResult, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        std::fs::write(&p, bytes)?;
        written.push(p);
        Ok(())
    };
    let mut buf = Vec::new();
    write_phi(&result.phi, &mut buf)?;
    emit("phi.csv", buf)?;
    let mut buf = Vec::new();
    write_spectrum(result.phi.grid(), &result.spectral_density, &mut buf)?;
    emit("spectrum.csv", buf)?;
    let mut buf = Vec::new();
    write_delay(&result.time_delay, &mut buf)?;
    emit("delay.csv", buf)?;
    emit("diagnostics.txt", result.diagnostics.to_text().into_bytes())?;
    Ok(written)
}

fn read_table(path: &Path, header: &str) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let bad = |msg: String| Error::MapFormat {
        path: path.display().to_string(),
        msg,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == header => {}
        _ => return Err(bad(format!("expected header '{header}'"))),
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .map(|(n, l)| {
            let row: std::result::Result<Vec<f64>, _> =
                l.split(',').map(|f| f.trim().parse::<f64>()).collect();
            match row {
                Ok(r) if r.len() == width => Ok(r),
                _ => Err(bad(format!(
                    "data line {}: expected {width} numbers",
                    n + 1
                ))),
            }
        })
        .collect()
}

/// Zero-centred grid whose sample k is `first[k]`; spacing is read from
/// the sample just above zero so the omegas reproduce bit for bit.
fn centred_spacing(first: &[f64], path: &Path) -> Result<f64> {
    let n = first.len();
    if n < 2 || !n.is_multiple_of(2) || first[n / 2] != 0.0 {
        return Err(Error::MapFormat {
            path: path.display().to_string(),
            msg: "axis is not a zero-centred grid with an even sample count".into(),
        });
    }
    Ok(first[n / 2 + 1])
}

pub fn load_phi(path: &Path) -> Result<SpectralWavefunction> {
    let rows = read_table(path, "omega_rad_s,re,im")?;
    let omegas: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let grid = FrequencyGrid::new(centred_spacing(&omegas, path)?, rows.len())?;
    let values = rows.iter().map(|r| Complex64::new(r[1], r[2])).collect();
    SpectralWavefunction::new(grid, values, WavefunctionMeta::default())
}

pub fn load_spectrum(path: &Path) -> Result<(FrequencyGrid, Vec<f64>)> {
    let rows = read_table(path, "omega_rad_s,density")?;
    let omegas: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let grid = FrequencyGrid::new(centred_spacing(&omegas, path)?, rows.len())?;
    Ok((grid, rows.iter().map(|r| r[1]).collect()))
}

pub fn load_delay(path: &Path) -> Result<TimeDelayDistribution> {
    let rows = read_table(path, "tau_s,density")?;
    let taus: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let grid = TimeGrid::new(centred_spacing(&taus, path)?, rows.len())?;
    Ok(TimeDelayDistribution {
        delays: grid,
        density: rows.iter().map(|r| r[1]).collect(),
    })
}
