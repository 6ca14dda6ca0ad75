//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 check failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{analyze, dip_condition, predict_side_peaks, PeakReport};
use crate::check::{run_checks, CheckReport};
use crate::config::{RunConfig, SweepConfig};
use crate::doppler::doppler_average;
use crate::error::{Error, Result};
use crate::fit::{add_noise, fit_spectrum, FitProblem, FitResult};
use crate::io::{read_spectrum_csv, sidecar_path, write_json, write_spectrum_csv, CSV_HEADER};
use crate::model::{spectrum_stationary, PumpTermMode, Spectrum, SpectrumMeta};
use crate::repump::{repump_spectrum, RepumpParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ndfwm", version, about = "Four-wave-mixing lineshapes of a two-level atom")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a spectrum table and its metadata sidecar.
    Simulate(RunArgs),
    /// Write the peak and central-dip report of the configured spectrum.
    Peaks(RunArgs),
    /// Fit relaxation rates to a measured or synthetic spectrum.
    Fit(RunArgs),
    /// Run the oracle and quadrature self-checks; exit 4 on any breach.
    Check(RunArgs),
    /// One spectrum per repump detuning, written into the `--out` directory.
    RepumpSweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured pump-term mode (`paper` or `both-pumps`).
    #[arg(long)]
    pub mode: Option<PumpTermMode>,
    /// Overrides the Doppler quadrature order.
    #[arg(long)]
    pub quadrature: Option<usize>,
}

#[derive(Serialize)]
struct SpectrumSidecar<'a> {
    command: &'a str,
    version: &'a str,
    csv_header: &'a str,
    points: usize,
    spectrum: &'a SpectrumMeta,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct PeaksOutput<'a> {
    command: &'a str,
    version: &'a str,
    report: &'a PeakReport,
    predicted_side_peaks: (f64, f64),
    dip_condition: bool,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct FitOutput<'a> {
    command: &'a str,
    version: &'a str,
    data_points: usize,
    result: &'a FitResult,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    command: &'a str,
    version: &'a str,
    passed: bool,
    report: &'a CheckReport,
    config: &'a RunConfig,
}

#[derive(Serialize)]
struct SweepEntry {
    delta_r: f64,
    file: String,
    max_intensity: f64,
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    command: &'a str,
    version: &'a str,
    spectra: &'a [SweepEntry],
    config: &'a RunConfig,
}

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn load(args: &RunArgs) -> Result<RunConfig> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(mode) = args.mode {
        config.mode = mode;
    }
    if let Some(order) = args.quadrature {
        match config.doppler.as_mut() {
            Some(d) => d.order = order,
            None => return Err(Error::param("quadrature", "needs a [doppler] table in the config")),
        }
    }
    config.validate()?;
    Ok(config.resolve())
}

/// The configured spectrum: stationary, velocity-averaged, or with the repump on.
pub fn configured_spectrum(config: &RunConfig) -> Result<Spectrum> {
    let grid = config.grid.build()?;
    let pump = config.pump();
    match (&config.doppler, &config.repump) {
        (None, None) => spectrum_stationary(&grid, &config.fields, &config.relaxation, &pump, config.mode),
        (Some(d), None) => doppler_average(&grid, &config.fields, &config.relaxation, &pump, d, config.mode),
        (Some(d), Some(r)) => repump_spectrum(&grid, &config.fields, &config.relaxation, &pump, d, r, config.mode),
        (None, Some(_)) => Err(Error::param("repump", "needs a [doppler] table in the config")),
    }
}

fn write_spectrum(command: &str, spectrum: &Spectrum, config: &RunConfig, out: &Path) -> Result<()> {
    write_spectrum_csv(spectrum, out)?;
    write_json(
        &SpectrumSidecar {
            command,
            version: VERSION,
            csv_header: CSV_HEADER,
            points: spectrum.len(),
            spectrum: &spectrum.meta,
            config,
        },
        &sidecar_path(out),
    )
}

fn simulate(args: &RunArgs) -> Result<i32> {
    let config = load(args)?;
    let spectrum = configured_spectrum(&config)?;
    write_spectrum("simulate", &spectrum, &config, &args.out)?;
    Ok(EXIT_OK)
}

fn peaks(args: &RunArgs) -> Result<i32> {
    let config = load(args)?;
    let spectrum = configured_spectrum(&config)?;
    let report = analyze(&spectrum, config.analysis.prominence_fraction, config.dip_window())?;
    write_json(
        &PeaksOutput {
            command: "peaks",
            version: VERSION,
            report: &report,
            predicted_side_peaks: predict_side_peaks(config.fields.detuning),
            dip_condition: dip_condition(&config.relaxation),
            config: &config,
        },
        &args.out,
    )?;
    Ok(EXIT_OK)
}

/// Fit problem described by the config's `[fit]` table.
pub fn configured_fit_problem(config: &RunConfig) -> Result<FitProblem> {
    let fit = config
        .fit
        .as_ref()
        .ok_or_else(|| Error::param("fit", "the fit command needs a [fit] table"))?;
    let data = match (&fit.data, fit.synthetic) {
        (Some(path), _) => read_spectrum_csv(path)?,
        (None, Some(s)) => {
            let clean = configured_spectrum(config)?;
            let scaled: Vec<f64> = clean.intensities().iter().map(|i| fit.scale * i).collect();
            add_noise(&Spectrum::from_intensities(&clean.deltas(), &scaled)?, s.noise, s.seed)?
        }
        (None, None) => return Err(Error::param("fit", "give `data` or `synthetic`")),
    };
    if config.repump.is_some() {
        return Err(Error::param("repump", "fitting with the repump on is not supported"));
    }
    Ok(FitProblem {
        data,
        fields: config.fields,
        relax: config.relaxation,
        pump: config.pump(),
        mode: config.mode,
        doppler: config.doppler,
        scale: fit.scale,
        free: fit.free.clone(),
        options: fit.options,
    })
}

fn fit(args: &RunArgs) -> Result<i32> {
    let config = load(args)?;
    let problem = configured_fit_problem(&config)?;
    let result = fit_spectrum(&problem)?;
    write_json(
        &FitOutput {
            command: "fit",
            version: VERSION,
            data_points: problem.data.len(),
            result: &result,
            config: &config,
        },
        &args.out,
    )?;
    Ok(EXIT_OK)
}

fn check(args: &RunArgs) -> Result<i32> {
    let mut config = load(args)?;
    let settings = *config.check.get_or_insert_with(Default::default);
    let report = run_checks(&settings)?;
    for item in &report.items {
        eprintln!(
            "{} {}: worst {:.3e} (tolerance {:.1e}) {}",
            if item.passed { "PASS" } else { "FAIL" },
            item.name,
            item.worst,
            item.tolerance,
            item.detail
        );
    }
    let passed = report.passed();
    write_json(
        &CheckOutput {
            command: "check",
            version: VERSION,
            passed,
            report: &report,
            config: &config,
        },
        &args.out,
    )?;
    Ok(if passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn repump_sweep(args: &RunArgs) -> Result<i32> {
    let mut config = load(args)?;
    if config.doppler.is_none() {
        return Err(Error::param("doppler", "repump-sweep needs a [doppler] table"));
    }
    let base: RepumpParams = *config.repump.get_or_insert_with(Default::default);
    let sweep = config.sweep.get_or_insert_with(SweepConfig::default).clone();
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Error::param("out", format!("cannot create {}: {e}", args.out.display())))?;
    let mut entries = Vec::with_capacity(sweep.delta_r.len());
    for (i, &delta_r) in sweep.delta_r.iter().enumerate() {
        let mut single = config.clone();
        single.repump = Some(RepumpParams { delta_r, ..base });
        let spectrum = configured_spectrum(&single)?;
        let file = format!("spectrum_{i:02}_dr{delta_r}.csv");
        write_spectrum("repump-sweep", &spectrum, &single, &args.out.join(&file))?;
        entries.push(SweepEntry {
            delta_r,
            file,
            max_intensity: spectrum.max_intensity(),
        });
    }
    write_json(
        &SweepOutput {
            command: "repump-sweep",
            version: VERSION,
            spectra: &entries,
            config: &config,
        },
        &args.out.join("sweep.json"),
    )?;
    Ok(EXIT_OK)
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Runs one command and returns the process exit code. Errors go to stderr.
pub fn run(cli: &Cli) -> i32 {
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Peaks(a) => peaks(a),
        Command::Fit(a) => fit(a),
        Command::Check(a) => check(a),
        Command::RepumpSweep(a) => repump_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from([
            "ndfwm",
            "simulate",
            "--config",
            "a.toml",
            "--out",
            "a.csv",
            "--mode",
            "paper",
            "--quadrature",
            "128",
        ])
        .unwrap();
        let Command::Simulate(a) = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(a.mode, Some(PumpTermMode::PaperSingleTerm));
        assert_eq!(a.quadrature, Some(128));
        assert!(Cli::try_parse_from(["ndfwm", "simulate", "--config", "a", "--out", "b", "--mode", "x"]).is_err());
        assert!(Cli::try_parse_from(["ndfwm", "repump-sweep", "--config", "a", "--out", "b"]).is_ok());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(
            exit_code(&Error::DegenerateRates {
                separation: 0.0,
                tolerance: 1e-6
            }),
            EXIT_CONFIG
        );
        assert_eq!(exit_code(&Error::param("x", "bad")), EXIT_CONFIG);
        assert_eq!(
            exit_code(&Error::QuadratureNotConverged {
                change: 1.0,
                tolerance: 1e-4
            }),
            EXIT_NUMERICAL
        );
    }
}
