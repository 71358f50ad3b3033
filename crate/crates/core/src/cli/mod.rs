//! Command-line surface: scenario files, subcommands, result files, plots
//! and run manifests.

mod config;
mod manifest;
mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

pub use config::{
    DetectionSection, GridSection, NoiseSection, PumpSection, QuadratureSection,
    ReconstructionSection, Scenario, ScenarioConfig, SplitterSection, SweepSection,
};
pub use manifest::{file_digest, sha256_hex, FileDigest, RunManifest};
pub use plot::{line_plot, Series};

use crate::dispersion::{
    find_phase_match, omega_from_nm, shift_constants, CrystalModel, ShiftConstants,
    PHASE_MATCH_BRACKET_C,
};
use crate::error::{Error, Result};
use crate::interference::{load_map, normalize_measured, save_map, synthesize_map, CoincidenceMap};
use crate::reconstruction::{
    axis_constant, delay_distribution, reconstruct, write_delay, write_phi, write_spectrum,
    ReconstructionOptions, ReconstructionResult,
};
use crate::spdc::{check_convergence, DispersionMode, Generator, SourceModel};
use crate::spectral::{
    compare_all, CompareOptions, CompareReport, SpectralWavefunction, SweepAxis,
    TimeDelayDistribution, SPEED_OF_LIGHT,
};

#[derive(Debug, Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Biphoton spectral wavefunctions from two-parameter HOM coincidence maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario file (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Noise seed, overriding the scenario file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads, 0 = all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Source model override: analytic or spatial.
    #[arg(long, global = true)]
    pub model: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wavefunction, spectrum and delay distribution at the phase-match point.
    Simulate,
    /// Coincidence map over the configured sweep.
    Synthesize,
    /// Wavefunction from a coincidence map.
    Reconstruct {
        #[arg(long)]
        map: PathBuf,
        /// Crystal file for the shift constants.
        #[arg(long)]
        crystal: Option<PathBuf>,
        /// Explicit temperature shift constant (rad/s per °C).
        #[arg(long, allow_hyphen_values = true)]
        c_t: Option<f64>,
        /// Explicit pump-frequency shift constant.
        #[arg(long, allow_hyphen_values = true)]
        c_omega_p: Option<f64>,
        /// Pump wavelength for constants from a crystal file; default from the map.
        #[arg(long)]
        pump_nm: Option<f64>,
        /// Phase-matching temperature hint; default from the map.
        #[arg(long, allow_hyphen_values = true)]
        t_hint: Option<f64>,
    },
    /// simulate → synthesize → reconstruct → compare, with a pass/fail verdict.
    Roundtrip {
        /// Multiplies the shift constant used for reconstruction.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        c_t_scale: f64,
    },
    /// Shift constants and their ingredients for a crystal and pump.
    ShiftConstants {
        #[arg(long)]
        crystal: Option<PathBuf>,
        #[arg(long, default_value_t = 404.25)]
        pump_nm: f64,
        #[arg(long, default_value_t = 58.0, allow_hyphen_values = true)]
        t_hint: f64,
    },
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one subcommand. `Ok(false)` is a completed round trip that failed
/// its thresholds.
pub fn run(cli: &Cli) -> Result<bool> {
    if cli.threads > 0 {
        // A second initialisation in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let started = Instant::now();
    let (mut config, base) = match &cli.config {
        Some(p) => (ScenarioConfig::load(p)?, p.parent().map(Path::to_path_buf)),
        None => (ScenarioConfig::default(), None),
    };
    if let Some(m) = &cli.model {
        SourceModel::parse(m)?;
        config.model = m.clone();
    }
    if let (Some(seed), Some(n)) = (cli.seed, config.noise.as_mut()) {
        n.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;
    let name = match &cli.command {
        Command::Simulate => "simulate",
        Command::Synthesize => "synthesize",
        Command::Reconstruct { .. } => "reconstruct",
        Command::Roundtrip { .. } => "roundtrip",
        Command::ShiftConstants { .. } => "shift-constants",
    };
    let mut manifest = RunManifest::new(name, &config.canonical());
    if let Some(p) = &cli.config {
        manifest.input(p)?;
    }
    if let Some(s) = cli.seed {
        manifest.param("seed", s);
    }
    let verdict = match &cli.command {
        Command::Simulate => cmd_simulate(&config, base.as_deref(), &cli.out, &mut manifest)?,
        Command::Synthesize => cmd_synthesize(&config, base.as_deref(), &cli.out, &mut manifest)?,
        Command::Reconstruct {
            map,
            crystal,
            c_t,
            c_omega_p,
            pump_nm,
            t_hint,
        } => {
            let source = ConstantSource {
                crystal: crystal.clone(),
                c_t: *c_t,
                c_omega_p: *c_omega_p,
                pump_nm: *pump_nm,
                t_hint: *t_hint,
            };
            cmd_reconstruct(&config, map, &source, &cli.out, &mut manifest)?
        }
        Command::Roundtrip { c_t_scale } => cmd_roundtrip(
            &config,
            base.as_deref(),
            *c_t_scale,
            &cli.out,
            &mut manifest,
        )?,
        Command::ShiftConstants {
            crystal,
            pump_nm,
            t_hint,
        } => cmd_shift_constants(
            crystal.as_deref(),
            *pump_nm,
            *t_hint,
            &cli.out,
            &mut manifest,
        )?,
    };
    manifest.elapsed_s = started.elapsed().as_secs_f64();
    manifest.save(&cli.out)?;
    Ok(verdict)
}

fn prepare(
    config: &ScenarioConfig,
    base: Option<&Path>,
    manifest: &mut RunManifest,
) -> Result<(Scenario, Generator)> {
    let scenario = config.build(base)?;
    if let Some(p) = &scenario.crystal_path {
        manifest.input(p)?;
    }
    let point = scenario.source.point;
    manifest.param("model", scenario.source.model.as_str());
    manifest.param("T0_C", format!("{:e}", point.t0_c));
    manifest.param("omega_p0_rad_s", format!("{:e}", point.omega_p0));
    let generator = Generator::new(scenario.source.clone())?;
    if scenario.source.model == SourceModel::SpatialProjected {
        let residual = check_convergence(
            &scenario.source,
            &scenario.freq_grid,
            point.t0_c,
            point.omega_p0,
        )?;
        manifest.diag("quadrature_convergence_residual", format!("{residual:e}"));
    }
    Ok((scenario, generator))
}

fn write_file(
    dir: &Path,
    name: &str,
    bytes: impl AsRef<[u8]>,
    written: &mut Vec<PathBuf>,
) -> Result<()> {
    let p = dir.join(name);
    std::fs::write(&p, bytes)?;
    written.push(p);
    Ok(())
}

/// phi/spectrum/delay CSVs and their quick-look plots.
fn write_wavefunction_files(
    dir: &Path,
    phi: &SpectralWavefunction,
    delay: &TimeDelayDistribution,
    title: &str,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut buf = Vec::new();
    write_phi(phi, &mut buf)?;
    write_file(dir, "phi.csv", buf, &mut written)?;
    let density = phi.density();
    let mut buf = Vec::new();
    write_spectrum(phi.grid(), &density, &mut buf)?;
    write_file(dir, "spectrum.csv", buf, &mut written)?;
    let mut buf = Vec::new();
    write_delay(delay, &mut buf)?;
    write_file(dir, "delay.csv", buf, &mut written)?;

    let omegas = phi.grid().omegas();
    let peak = phi.max_amplitude();
    let amp: Vec<f64> = phi.values().iter().map(|z| z.norm()).collect();
    let phase: Vec<f64> = phi
        .values()
        .iter()
        .map(|z| {
            if z.norm() > 0.01 * peak {
                z.arg() / std::f64::consts::PI
            } else {
                f64::NAN
            }
        })
        .collect();
    let svg = line_plot(
        &format!("{title}: wavefunction"),
        "Ω (rad/s)",
        &[
            Series {
                label: "|Φ|",
                x: &omegas,
                y: &amp,
            },
            Series {
                label: "arg Φ / π",
                x: &omegas,
                y: &phase,
            },
        ],
    );
    write_file(dir, "phi.svg", svg, &mut written)?;
    let svg = line_plot(
        &format!("{title}: spectral distribution"),
        "Ω (rad/s)",
        &[Series {
            label: "|Φ|²",
            x: &omegas,
            y: &density,
        }],
    );
    write_file(dir, "spectrum.svg", svg, &mut written)?;
    let taus = delay.delays.taus();
    let svg = line_plot(
        &format!("{title}: time-delay distribution"),
        "τ (s)",
        &[Series {
            label: "density",
            x: &taus,
            y: &delay.density,
        }],
    );
    write_file(dir, "delay.svg", svg, &mut written)?;
    Ok(written)
}

fn cmd_simulate(
    config: &ScenarioConfig,
    base: Option<&Path>,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let (scenario, generator) = prepare(config, base, manifest)?;
    let p = scenario.source.point;
    let phi = generator
        .wavefunction(&scenario.freq_grid, p.t0_c, p.omega_p0)?
        .max_normalized()
        .with_peak_phase_zero();
    let delay = delay_distribution(&phi)?;
    let written = write_wavefunction_files(out, &phi, &delay, "simulated")?;
    manifest.diag("delay_mean_s", format!("{:e}", delay.mean()));
    manifest.diag("delay_std_s", format!("{:e}", delay.std_dev()));
    manifest.outputs(&written)?;
    println!(
        "simulated {} samples at T0 = {:.4} °C; files in {}",
        phi.grid().count(),
        p.t0_c,
        out.display()
    );
    Ok(true)
}

fn synthesize_scenario(scenario: &Scenario, generator: &Generator) -> Result<CoincidenceMap> {
    synthesize_map(
        generator,
        &scenario.freq_grid,
        &scenario.path_grid,
        &scenario.sweep_grid,
        scenario.splitter,
        scenario.noise,
    )
}

fn dip_plot(map: &CoincidenceMap) -> String {
    let j = map.sweep_grid.center_index();
    let x = map.path_grid.values();
    let y = map.row(j);
    line_plot(
        "coincidence rate at the sweep centre",
        "ΔS (m)",
        &[Series {
            label: "R",
            x: &x,
            y: &y,
        }],
    )
}

fn cmd_synthesize(
    config: &ScenarioConfig,
    base: Option<&Path>,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let (scenario, generator) = prepare(config, base, manifest)?;
    let map = synthesize_scenario(&scenario, &generator)?;
    let mut written = Vec::new();
    let p = out.join("map.csv");
    save_map(&map, &p)?;
    written.push(p);
    write_file(out, "dip.svg", dip_plot(&map), &mut written)?;
    manifest.outputs(&written)?;
    if let Some(n) = scenario.noise {
        manifest.param("noise_baseline_counts", n.baseline_counts);
        manifest.param("noise_seed", n.seed);
    }
    println!(
        "synthesized {} × {} map ({}); written to {}",
        map.sweep_grid.count(),
        map.path_grid.count(),
        map.sweep_grid.axis().as_str(),
        out.join("map.csv").display()
    );
    Ok(true)
}

struct ConstantSource {
    crystal: Option<PathBuf>,
    c_t: Option<f64>,
    c_omega_p: Option<f64>,
    pump_nm: Option<f64>,
    t_hint: Option<f64>,
}

fn crystal_constants(path: &Path, pump_nm: f64, t_hint: f64) -> Result<ShiftConstants> {
    let crystal = CrystalModel::load(&path.to_string_lossy())?;
    let point = find_phase_match(
        &crystal,
        omega_from_nm(pump_nm),
        t_hint,
        PHASE_MATCH_BRACKET_C,
    )?;
    shift_constants(&crystal, point)
}

/// The map's shift constant: explicit flag, then crystal file, then the
/// map header.
fn resolve_constant(
    map: &CoincidenceMap,
    source: &ConstantSource,
    manifest: &mut RunManifest,
) -> Result<f64> {
    let axis = map.sweep_grid.axis();
    let explicit = match axis {
        SweepAxis::Temperature => source.c_t,
        SweepAxis::PumpFrequency => source.c_omega_p,
    };
    let (c, origin) = if let Some(c) = explicit {
        (c, "explicit".to_string())
    } else if let Some(path) = &source.crystal {
        let nm = source
            .pump_nm
            .unwrap_or(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / map.meta.omega_p0 * 1e9);
        let s = crystal_constants(path, nm, source.t_hint.unwrap_or(map.meta.t0_c))?;
        if path.is_file() {
            manifest.input(path)?;
        }
        (
            axis_constant(&s, axis),
            format!("crystal {}", path.display()),
        )
    } else {
        let header = match axis {
            SweepAxis::Temperature => map.meta.c_t,
            SweepAxis::PumpFrequency => map.meta.c_omega_p,
        };
        match header {
            Some(c) => (c, "map header".to_string()),
            None => {
                return Err(Error::Config(format!(
                    "no shift constant for the {} axis: pass --{} or --crystal",
                    axis.as_str(),
                    if axis == SweepAxis::Temperature {
                        "c-t"
                    } else {
                        "c-omega-p"
                    }
                )))
            }
        }
    };
    manifest.param("shift_constant", format!("{c:e}"));
    manifest.param("shift_constant_source", origin);
    Ok(c)
}

fn options_for(config: &ScenarioConfig) -> Result<ReconstructionOptions> {
    let grid = crate::spectral::FrequencyGrid::with_span(
        config.grids.omega_span_rad_s,
        config.grids.n_omega,
    )?;
    let mut o = ReconstructionOptions::new(grid);
    o.taper = config.reconstruction.taper;
    o.slice.center_average = config.reconstruction.center_average;
    Ok(o)
}

fn record_diagnostics(r: &ReconstructionResult, manifest: &mut RunManifest) {
    let d = &r.diagnostics;
    manifest.diag(
        "hermiticity_residual",
        format!("{:e}", d.hermiticity_residual),
    );
    manifest.diag("baseline_residual", format!("{:e}", d.baseline_residual));
    manifest.diag(
        "slice_interpolation_error",
        format!("{:e}", d.slice_interpolation_error),
    );
    manifest.diag("F0_magnitude_ratio", format!("{:e}", d.f0_magnitude_ratio));
    if let Some(s) = d.splitter_sensitivity {
        manifest.diag("splitter_sensitivity_amplitude_l2", format!("{s:e}"));
    }
    for w in &d.warnings {
        eprintln!("warning: {w}");
    }
    manifest.diag("warnings", d.warnings.len());
}

fn write_result(out: &Path, r: &ReconstructionResult) -> Result<Vec<PathBuf>> {
    let mut written = write_wavefunction_files(out, &r.phi, &r.time_delay, "reconstructed")?;
    write_file(
        out,
        "diagnostics.txt",
        r.diagnostics.to_text(),
        &mut written,
    )?;
    Ok(written)
}

fn cmd_reconstruct(
    config: &ScenarioConfig,
    map_path: &Path,
    source: &ConstantSource,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    config.validate()?;
    let raw = load_map(map_path)?;
    manifest.input(map_path)?;
    let map = if raw.normalized {
        raw
    } else {
        normalize_measured(&raw, config.reconstruction.baseline_window_mm * 1e-3)?
    };
    let c = resolve_constant(&map, source, manifest)?;
    let mut options = options_for(config)?;
    options.splitter_sensitivity = true;
    let result = reconstruct(&map, c, &options)?;
    record_diagnostics(&result, manifest);
    let written = write_result(out, &result)?;
    manifest.outputs(&written)?;
    println!(
        "reconstructed Φ on {} samples (spacing {:.4e} rad/s); files in {}",
        result.phi.grid().count(),
        result.phi.grid().spacing(),
        out.display()
    );
    Ok(true)
}

/// Thresholds applied by the round trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub amplitude_l2: f64,
    pub phase_rms: Option<f64>,
    pub even_phase_residual: Option<f64>,
}

impl Thresholds {
    pub fn for_source(linear: bool, noisy: bool) -> Self {
        match (noisy, linear) {
            (true, _) => Self {
                amplitude_l2: 0.1,
                phase_rms: None,
                even_phase_residual: None,
            },
            (false, true) => Self {
                amplitude_l2: 1e-3,
                phase_rms: Some(1e-3),
                even_phase_residual: None,
            },
            (false, false) => Self {
                amplitude_l2: 0.02,
                phase_rms: None,
                even_phase_residual: Some(0.02),
            },
        }
    }

    pub fn passes(&self, r: &CompareReport) -> bool {
        r.amplitude_l2 < self.amplitude_l2
            && self.phase_rms.is_none_or(|t| r.phase_rms < t)
            && self
                .even_phase_residual
                .is_none_or(|t| r.even_phase_residual < t)
    }
}

fn report_lines(r: &CompareReport, t: &Thresholds) -> Vec<String> {
    let line = |name: &str, v: f64, limit: Option<f64>| match limit {
        Some(l) => format!(
            "{name} = {v:.4e} (threshold < {l:e}) {}",
            if v < l { "ok" } else { "EXCEEDED" }
        ),
        None => format!("{name} = {v:.4e} (not checked)"),
    };
    vec![
        line("amplitude_l2", r.amplitude_l2, Some(t.amplitude_l2)),
        line("phase_rms_after_global_alignment", r.phase_rms, t.phase_rms),
        line(
            "even_phase_residual",
            r.even_phase_residual,
            t.even_phase_residual,
        ),
        format!(
            "even_phase_peak = {:.4e} rad (removed even phase, reported)",
            r.even_phase_peak
        ),
    ]
}

fn cmd_roundtrip(
    config: &ScenarioConfig,
    base: Option<&Path>,
    c_t_scale: f64,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let (scenario, generator) = prepare(config, base, manifest)?;
    let map = synthesize_scenario(&scenario, &generator)?;
    let mut written = Vec::new();
    let map_path = out.join("map.csv");
    save_map(&map, &map_path)?;
    written.push(map_path);
    let map = if map.normalized {
        map
    } else {
        normalize_measured(&map, config.reconstruction.baseline_window_mm * 1e-3)?
    };
    let constants = shift_constants(&scenario.source.crystal, scenario.source.point)?;
    let c = axis_constant(&constants, map.sweep_grid.axis()) * c_t_scale;
    manifest.param("shift_constant", format!("{c:e}"));
    manifest.param("shift_constant_scale", c_t_scale);
    let result = reconstruct(&map, c, &options_for(config)?)?;
    record_diagnostics(&result, manifest);
    written.extend(write_result(out, &result)?);

    let p = scenario.source.point;
    let truth = generator.wavefunction(result.phi.grid(), p.t0_c, p.omega_p0)?;
    let report = compare_all(&result.phi, &truth, CompareOptions::default())?;
    let linear = matches!(scenario.source.dispersion, DispersionMode::Linearized(_));
    let thresholds = Thresholds::for_source(linear, scenario.noise.is_some());
    let pass = thresholds.passes(&report);
    let mut lines = report_lines(&report, &thresholds);
    lines.push(format!("result: {}", if pass { "PASS" } else { "FAIL" }));
    let text = lines.join("\n") + "\n";
    print!("{text}");
    write_file(out, "report.txt", &text, &mut written)?;
    manifest.diag("amplitude_l2", format!("{:e}", report.amplitude_l2));
    manifest.diag("phase_rms", format!("{:e}", report.phase_rms));
    manifest.diag(
        "even_phase_residual",
        format!("{:e}", report.even_phase_residual),
    );
    manifest.diag("even_phase_peak", format!("{:e}", report.even_phase_peak));
    manifest.diag("verdict", if pass { "pass" } else { "fail" });
    manifest.outputs(&written)?;
    Ok(pass)
}

fn cmd_shift_constants(
    crystal: Option<&Path>,
    pump_nm: f64,
    t_hint: f64,
    out: &Path,
    manifest: &mut RunManifest,
) -> Result<bool> {
    let model = match crystal {
        Some(p) => {
            if p.is_file() {
                manifest.input(p)?;
            }
            CrystalModel::load(&p.to_string_lossy())?
        }
        None => CrystalModel::builtin_ppktp(),
    };
    manifest.param("crystal", &model.name);
    manifest.param("pump_nm", pump_nm);
    manifest.param("t_hint_c", t_hint);
    let point = find_phase_match(
        &model,
        omega_from_nm(pump_nm),
        t_hint,
        PHASE_MATCH_BRACKET_C,
    )?;
    let s = shift_constants(&model, point)?;
    let lines = [
        format!("crystal = {}", model.name),
        format!("T0_C = {:.9}", point.t0_c),
        format!("omega_p0_rad_s = {:e}", point.omega_p0),
        format!("c_t = {:e}", s.c_t),
        format!("c_omega_p = {:e}", s.c_omega_p),
        format!("X_T = {:e}", s.x_t),
        format!("X_omega = {:e}", s.x_omega),
        format!("group_index_mismatch = {:e}", s.group_mismatch),
    ];
    let text = lines.join("\n") + "\n";
    print!("{text}");
    let json = serde_json::to_string_pretty(&s).map_err(|e| Error::Config(e.to_string()))?;
    let mut written = Vec::new();
    write_file(out, "shift_constants.json", json + "\n", &mut written)?;
    manifest.outputs(&written)?;
    Ok(true)
}
