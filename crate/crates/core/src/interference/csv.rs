use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use super::{BeamSplitter, CoincidenceMap, MapMeta, Provenance};
use crate::error::{Error, Result};
use crate::spectral::{PathGrid, SweepAxis, SweepGrid};

const COLUMNS: &str = "delta_s_m,sweep_value,rate";
const REQUIRED: [&str; 6] = ["t", "r", "T0_C", "omega_p0_rad_s", "axis", "provenance"];

/// Writes the map as `#`-prefixed `key=value` header lines followed by
/// `delta_s_m,sweep_value,rate` rows, sweep-major. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_map<W: Write>(map: &CoincidenceMap, mut out: W) -> Result<()> {
    let m = &map.meta;
    let mut header = vec![
        ("t", format!("{:e}", map.splitter.t())),
        ("r", format!("{:e}", map.splitter.r())),
        ("T0_C", format!("{:e}", m.t0_c)),
        ("omega_p0_rad_s", format!("{:e}", m.omega_p0)),
    ];
    if let Some(c) = m.c_t {
        header.push(("c_t", format!("{c:e}")));
    }
    if let Some(c) = m.c_omega_p {
        header.push(("c_omega_p", format!("{c:e}")));
    }
    header.push(("axis", map.sweep_grid.axis().as_str().to_string()));
    header.push(("provenance", m.provenance.as_str().to_string()));
    if let Some(s) = m.seed {
        header.push(("seed", s.to_string()));
    }
    header.push(("normalized", map.normalized.to_string()));
    header.push(("path_origin_m", format!("{:e}", map.path_grid.origin())));
    header.push(("path_spacing_m", format!("{:e}", map.path_grid.spacing())));
    header.push(("path_count", map.path_grid.count().to_string()));
    header.push(("sweep_origin", format!("{:e}", map.sweep_grid.origin())));
    header.push(("sweep_spacing", format!("{:e}", map.sweep_grid.spacing())));
    header.push(("sweep_count", map.sweep_grid.count().to_string()));
    if let Some(c) = m.dip_center_m {
        header.push(("dip_center_m", format!("{c:e}")));
    }
    if let Some(b) = m.baseline_counts {
        header.push(("baseline_counts", format!("{b:e}")));
    }
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "{COLUMNS}")?;
    let ds = map.path_grid.values();
    for (j, sweep) in map.sweep_grid.values().into_iter().enumerate() {
        for (i, s) in ds.iter().enumerate() {
            writeln!(out, "{s:e},{sweep:e},{:e}", map.values[[j, i]])?;
        }
    }
    Ok(())
}

pub fn save_map(map: &CoincidenceMap, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_map(map, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_map(path: &Path) -> Result<CoincidenceMap> {
    let text = std::fs::read_to_string(path)?;
    parse_map(&text, &path.display().to_string())
}

pub fn parse_map(text: &str, origin: &str) -> Result<CoincidenceMap> {
    let bad = |msg: String| Error::MapFormat {
        path: origin.to_string(),
        msg,
    };
    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    let mut rows: Vec<[f64; 3]> = Vec::new();
    let mut seen_columns = false;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.split_once('=') {
                keys.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        if !seen_columns {
            if line.replace(' ', "") != COLUMNS {
                return Err(bad(format!(
                    "line {}: expected column header '{COLUMNS}'",
                    n + 1
                )));
            }
            seen_columns = true;
            continue;
        }
        let mut fields = line.split(',').map(|f| f.trim().parse::<f64>());
        let mut row = [0.0; 3];
        for slot in row.iter_mut() {
            *slot = match fields.next() {
                Some(Ok(v)) => v,
                _ => {
                    return Err(bad(format!(
                        "line {}: expected three numeric fields",
                        n + 1
                    )))
                }
            };
        }
        if fields.next().is_some() {
            return Err(bad(format!(
                "line {}: expected three numeric fields",
                n + 1
            )));
        }
        rows.push(row);
    }
    let missing: Vec<&str> = REQUIRED
        .iter()
        .copied()
        .filter(|k| !keys.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        return Err(bad(format!(
            "header incomplete, missing: {}",
            missing.join(", ")
        )));
    }
    if rows.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let num = |k: &str| -> Result<Option<f64>> {
        keys.get(k)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| bad(format!("key '{k}' is not a number: '{v}'")))
            })
            .transpose()
    };
    let count = |k: &str| -> Result<Option<usize>> {
        keys.get(k)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| bad(format!("key '{k}' is not a count: '{v}'")))
            })
            .transpose()
    };
    let splitter = BeamSplitter::new(num("t")?.unwrap(), num("r")?.unwrap())
        .map_err(|e| bad(e.to_string()))?;
    let axis = SweepAxis::parse(&keys["axis"])
        .ok_or_else(|| bad(format!("unknown axis '{}'", keys["axis"])))?;
    let provenance = Provenance::parse(&keys["provenance"])
        .ok_or_else(|| bad(format!("unknown provenance '{}'", keys["provenance"])))?;
    let normalized = match keys.get("normalized").map(String::as_str) {
        None => false,
        Some("true") => true,
        Some("false") => false,
        Some(v) => {
            return Err(bad(format!(
                "key 'normalized' must be true or false, got '{v}'"
            )))
        }
    };
    let seed = keys
        .get("seed")
        .map(|v| {
            v.parse::<u64>()
                .map_err(|_| bad(format!("key 'seed' is not an integer: '{v}'")))
        })
        .transpose()?;

    let path_grid = match (
        num("path_origin_m")?,
        num("path_spacing_m")?,
        count("path_count")?,
    ) {
        (Some(o), Some(s), Some(c)) => PathGrid::new(o, s, c),
        _ => {
            let (o, s, c) = infer_axis(rows.iter().map(|r| r[0])).map_err(&bad)?;
            PathGrid::new(o, s, c)
        }
    }
    .map_err(|e| bad(e.to_string()))?;
    let sweep_grid = match (
        num("sweep_origin")?,
        num("sweep_spacing")?,
        count("sweep_count")?,
    ) {
        (Some(o), Some(s), Some(c)) => SweepGrid::new(axis, o, s, c),
        _ => {
            let (o, s, c) = infer_axis(rows.iter().map(|r| r[1])).map_err(&bad)?;
            SweepGrid::new(axis, o, if c == 1 { 1.0 } else { s }, c)
        }
    }
    .map_err(|e| bad(e.to_string()))?;

    let (ns, np) = (sweep_grid.count(), path_grid.count());
    if rows.len() != ns * np {
        return Err(bad(format!(
            "{} data rows for a {ns} × {np} grid",
            rows.len()
        )));
    }
    let mut values = Array2::from_elem((ns, np), f64::NAN);
    for row in &rows {
        let i = locate(row[0], path_grid.origin(), path_grid.spacing(), np)
            .ok_or_else(|| bad(format!("ΔS = {:e} is not on the path grid", row[0])))?;
        let j = locate(row[1], sweep_grid.origin(), sweep_grid.spacing(), ns)
            .ok_or_else(|| bad(format!("sweep value {:e} is not on the sweep grid", row[1])))?;
        values[[j, i]] = row[2];
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(bad("grid points missing or duplicated".into()));
    }
    let meta = MapMeta {
        t0_c: num("T0_C")?.unwrap(),
        omega_p0: num("omega_p0_rad_s")?.unwrap(),
        c_t: num("c_t")?,
        c_omega_p: num("c_omega_p")?,
        provenance,
        seed,
        dip_center_m: num("dip_center_m")?,
        baseline_counts: num("baseline_counts")?,
    };
    CoincidenceMap::new(path_grid, sweep_grid, values, splitter, normalized, meta)
        .map_err(|e| bad(e.to_string()))
}

fn locate(x: f64, origin: f64, spacing: f64, count: usize) -> Option<usize> {
    let pos = (x - origin) / spacing;
    let i = pos.round();
    if (pos - i).abs() > 1e-6 || i < 0.0 || i as usize >= count {
        return None;
    }
    Some(i as usize)
}

/// Origin, spacing and count of a uniform axis from its sample values.
fn infer_axis(values: impl Iterator<Item = f64>) -> std::result::Result<(f64, f64, usize), String> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    let n = v.len();
    if n == 1 {
        return Ok((v[0], 0.0, 1));
    }
    let spacing = (v[n - 1] - v[0]) / (n - 1) as f64;
    for (i, x) in v.iter().enumerate() {
        if (x - (v[0] + i as f64 * spacing)).abs() > 1e-6 * spacing.abs() {
            return Err(format!("axis values are not uniformly spaced near {x:e}"));
        }
    }
    Ok((v[0], spacing, n))
}
