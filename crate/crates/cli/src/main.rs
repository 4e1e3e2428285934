//! Command-line front end for the timing-recovery simulator.
//!
//! Three subcommands: `run` executes the Monte Carlo grid and writes
//! bias/MSE reports, `scurve` sweeps the detector S-curve diagnostic, and
//! `crb` prints the timing Cramer-Rao bound. Exit codes: 0 on success, 1 for
//! invalid configuration or arguments, 2 for a runtime failure.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nbsync::{crb_reference, monte_carlo, s_curve_sweep};

use config::{assemble, CliError, Overrides, Settings, Stage};

#[derive(Parser)]
#[command(name = "sync-sim", version, about = "Symbol-timing recovery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo grid and write bias and MSE reports.
    Run(RunArgs),
    /// Sweep the timing-error detector S-curve over candidate offsets.
    Scurve(ScurveArgs),
    /// Print the timing Cramer-Rao bound for a list of SNRs.
    Crb(CrbArgs),
}

#[derive(Args)]
struct SharedArgs {
    /// Flat key/value config file; command-line flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// SNR grid in dB, comma separated.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Option<Vec<f64>>,

    /// True delays as a fraction of the symbol period, comma separated.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    tau: Option<Vec<f64>>,

    /// Synchronizer modes to run: da, nda, soft (comma separated).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    mode: Option<Vec<String>>,

    /// Monte Carlo trials per cell.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,

    /// Master seed for the reproducible trial streams.
    #[arg(long, value_name = "S")]
    seed: Option<u64>,

    /// Loop step size.
    #[arg(long, value_name = "X")]
    mu: Option<f64>,

    /// SRRC roll-off factor.
    #[arg(long, value_name = "A")]
    rolloff: Option<f64>,

    /// Samples per symbol.
    #[arg(long, value_name = "K")]
    sps: Option<usize>,

    /// Frame preset: standard, payload or preamble-payload.
    #[arg(long, value_name = "KIND")]
    frame: Option<String>,

    /// Payload modulation for the payload presets: dbpsk or dqpsk.
    #[arg(long, value_name = "MOD")]
    payload_modulation: Option<String>,

    /// Payload length in symbols for the payload presets.
    #[arg(long, value_name = "N")]
    payload_symbols: Option<usize>,

    /// Use the saturating low-complexity tanh in the soft demapper.
    #[arg(long)]
    lowcomplexity_tanh: bool,

    /// Output directory for report files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Report format: csv or json.
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
}

impl SharedArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            snr_db: self.snr_db.clone(),
            tau: self.tau.clone(),
            modes: self.mode.clone(),
            trials: self.trials,
            seed: self.seed,
            mu: self.mu,
            rolloff: self.rolloff,
            sps: self.sps,
            frame: self.frame.clone(),
            payload_modulation: self.payload_modulation.clone(),
            payload_symbols: self.payload_symbols,
            lowcomplexity_tanh: self.lowcomplexity_tanh,
            out: self.out.clone(),
            format: self.format.clone(),
            grid_points: None,
            frames: None,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    shared: SharedArgs,
}

#[derive(Args)]
struct ScurveArgs {
    #[command(flatten)]
    shared: SharedArgs,

    /// Number of candidate offsets across the +/-0.45 sweep window.
    #[arg(long, value_name = "N")]
    grid_points: Option<usize>,

    /// Frames averaged per offset.
    #[arg(long, value_name = "N")]
    frames: Option<usize>,
}

#[derive(Args)]
struct CrbArgs {
    /// SNR grid in dB, comma separated.
    #[arg(
        long,
        value_name = "LIST",
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0,5,10,15"
    )]
    snr_db: Vec<f64>,

    /// Observation length in symbols.
    #[arg(long, value_name = "L", default_value_t = 100)]
    block_len: usize,

    /// SRRC roll-off factor.
    #[arg(long, value_name = "A", default_value_t = 0.3)]
    rolloff: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(&args),
        Command::Scurve(args) => scurve(&args),
        Command::Crb(args) => crb(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err.stage {
                Stage::Config => 1,
                Stage::Runtime => 2,
            })
        }
    }
}

fn runtime(err: impl std::fmt::Display) -> CliError {
    CliError::runtime(err.to_string())
}

fn run(args: &RunArgs) -> Result<(), CliError> {
    let settings = settings_for(&args.shared.overrides(), args.shared.config.as_deref())?;
    let report = monte_carlo(&settings.scenario).map_err(runtime)?;
    let paths = report.write(&settings.out, settings.format).map_err(runtime)?;
    for path in paths {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn scurve(args: &ScurveArgs) -> Result<(), CliError> {
    let mut overrides = args.shared.overrides();
    overrides.grid_points = args.grid_points;
    overrides.frames = args.frames;
    let settings = settings_for(&overrides, args.shared.config.as_deref())?;
    let points = s_curve_sweep(&settings.scenario, settings.grid_points, settings.frames)
        .map_err(runtime)?;
    std::fs::create_dir_all(&settings.out)
        .map_err(|e| runtime(format!("cannot create {}: {e}", settings.out.display())))?;
    let path = settings.out.join("scurve.csv");
    let mut writer = csv::Writer::from_path(&path)
        .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record([
            "mode",
            "modulation",
            "snr_db",
            "tau_over_t",
            "u_over_t",
            "mean_error",
        ])
        .map_err(runtime)?;
    let modulation = settings.scenario.layout.payload_modulation().label();
    for point in &points {
        writer
            .write_record([
                point.mode.label().to_string(),
                modulation.to_string(),
                point.snr_db.to_string(),
                point.tau_over_t.to_string(),
                point.u_over_t.to_string(),
                point.mean_error.to_string(),
            ])
            .map_err(runtime)?;
    }
    writer.flush().map_err(runtime)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn crb(args: &CrbArgs) -> Result<(), CliError> {
    let mut lines = String::from("snr_db,block_len,rolloff,crb\n");
    for &snr_db in &args.snr_db {
        let crb = crb_reference(snr_db, args.block_len, args.rolloff)
            .map_err(|e| CliError::config(e.to_string()))?;
        lines.push_str(&format!(
            "{},{},{},{}\n",
            snr_db, args.block_len, args.rolloff, crb
        ));
    }
    print!("{lines}");
    Ok(())
}

fn settings_for(overrides: &Overrides, config: Option<&Path>) -> Result<Settings, CliError> {
    assemble(config, overrides)
}
