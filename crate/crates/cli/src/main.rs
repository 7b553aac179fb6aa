//! `isac`: sidelobe, optimality and ranging experiments from the command line.
//!
//! Every run is determined by its arguments; the thread count only changes
//! wall-clock time. Exit codes: 0 success, 1 usage, 2 invariant violation,
//! 3 I/O failure.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod grid;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use output::Format;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<isac_core::Error> for CliError {
    fn from(e: isac_core::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "isac", version, about = "Ranging sidelobes of random ISAC waveforms")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; `-` or absent writes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format (default: csv for tables, json for scalar reports).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Verb {
    /// Per-lag mean squared ACF: Monte Carlo next to the closed form.
    Acf(AcfArgs),
    /// Closed-form EISL and PSLR over schemes, constellations and sizes.
    Eisl(EislArgs),
    /// Single-carrier Doppler slice against the OFDM periodic ACF.
    Doppler(DopplerArgs),
    /// Constellation moments, kurtosis class and the fourth-moment matrix.
    Moments(MomentsArgs),
    /// Geodesic stationarity check of OFDM for the aperiodic objective.
    Optimality(OptimalityArgs),
    /// Two-target matched-filter ranging RMSE versus SNR.
    Ranging(RangingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Periodic,
    Aperiodic,
    Doppler,
}

impl From<ModeArg> for isac_core::AcfMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Periodic => isac_core::AcfMode::Periodic,
            ModeArg::Aperiodic => isac_core::AcfMode::Aperiodic,
            ModeArg::Doppler => isac_core::AcfMode::DopplerPeriodic,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AcfArgs {
    #[arg(long, default_value = "ofdm")]
    pub scheme: String,
    #[arg(long, default_value = "qam:16")]
    pub constellation: String,
    #[arg(long, value_enum, default_value = "periodic")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Emit lags −(n−1)..n−1 instead of 0..n−1.
    #[arg(long)]
    pub two_sided: bool,
    /// Sweep block sizes (e.g. `16:1024:x2`) and report EISL/PSLR per size.
    #[arg(long)]
    pub sweep_n: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct EislArgs {
    #[arg(long, default_value = "sc,ofdm,cdma")]
    pub schemes: String,
    #[arg(long, default_value = "psk:16,qam:16,qam:64,qam:256")]
    pub constellations: String,
    /// Block sizes: `128`, `64,128` or `16:1024:x2`.
    #[arg(long, default_value = "16:1024:x2")]
    pub n: String,
    /// Restrict to one correlation mode (default: periodic and aperiodic).
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Args, Serialize)]
pub struct DopplerArgs {
    #[arg(long, default_value = "qam:16")]
    pub constellation: String,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long, default_value = "qpsk,psk:8,qam:16,qam:64,qam:256,sg64apsk,gauss")]
    pub constellations: String,
    /// Include the fourth-moment matrix for this many symbols.
    #[arg(long)]
    pub matrix_n: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimalityArgs {
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long, default_value_t = 100)]
    pub directions: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Also run the first-derivative test at a random unitary.
    #[arg(long)]
    pub control: bool,
    /// Compare OFDM's EISL against this many random nearby unitaries.
    #[arg(long, default_value_t = 0)]
    pub scan_samples: usize,
    /// Perturbation scale for the neighborhood scan.
    #[arg(long, default_value_t = 0.05)]
    pub scan_eps: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct RangingArgs {
    #[arg(long, default_value = "ofdm")]
    pub scheme: String,
    #[arg(long, default_value = "qpsk")]
    pub constellation: String,
    #[arg(long, default_value_t = 128)]
    pub n: usize,
    #[arg(long, default_value_t = 800e6)]
    pub bandwidth_hz: f64,
    /// `range_m:power` pairs.
    #[arg(long, default_value = "11.25:1.0,18.75:0.1")]
    pub targets: String,
    /// SNR grid in dB, `start:stop:step`.
    #[arg(long, default_value = "-10:20:2", allow_hyphen_values = true)]
    pub snr_db: String,
    /// Cyclic prefix on (default).
    #[arg(long, overrides_with = "no_cp")]
    pub cp: bool,
    /// Cyclic prefix off: linear delays and correlation.
    #[arg(long, overrides_with = "cp")]
    pub no_cp: bool,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Half-width of the suppression zone around each picked peak.
    #[arg(long, default_value_t = isac_core::ranging::DEFAULT_MIN_SEPARATION)]
    pub min_separation: usize,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let start = Instant::now();
    let (name, seed, report) = match &cli.verb {
        Verb::Acf(a) => ("acf", Some(a.seed), commands::acf(a)?),
        Verb::Eisl(a) => ("eisl", None, commands::eisl(a)?),
        Verb::Doppler(a) => ("doppler", Some(a.seed), commands::doppler(a)?),
        Verb::Moments(a) => ("moments", None, commands::moments(a)?),
        Verb::Optimality(a) => ("optimality", Some(a.seed), commands::optimality(a)?),
        Verb::Ranging(a) => ("ranging", Some(a.seed), commands::ranging(a)?),
    };
    let format = cli.format.unwrap_or(match cli.verb {
        Verb::Moments(_) | Verb::Optimality(_) => Format::Json,
        _ => Format::Csv,
    });
    let config = serde_json::to_value(cli).expect("arguments serialize");
    let meta = output::metadata(
        name,
        config,
        seed,
        rayon::current_num_threads(),
        start.elapsed().as_secs_f64(),
    );
    output::write_report(&report, &meta, format, cli.out.as_deref())?;
    if let Some(v) = &report.violation {
        eprintln!("isac: invariant violated: {v}");
        return Ok(false);
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("isac: --threads must be ≥ 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("isac: cannot configure threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(CliError::Usage(m)) => {
            eprintln!("isac: {m}");
            ExitCode::from(1)
        }
        Err(e @ CliError::Io(_)) => {
            eprintln!("isac: {e}");
            ExitCode::from(3)
        }
    }
}
