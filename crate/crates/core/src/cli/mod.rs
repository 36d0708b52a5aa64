//! The `spinrelax` command line.
//!
//! Every setting can come from a flag or from a `--config` file of
//! `key = value` lines; the key is the flag name without the leading dashes
//! (`omega-khz` or `omega_khz`). Flags win over the file.
//!
//! Exit codes: 0 on success (a fit that did not converge still counts as a
//! completed analysis and is flagged in its report), 2 for usage or input
//! errors, 1 for internal failures. Errors are printed as a single line on
//! stderr:
//!
//! ```text
//! spinrelax: error[input] key=omega_khz: must be >= 0, got -1
//! ```

mod commands;
mod config;

use std::ffi::OsString;
use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;

use crate::io::IoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Input,
    Internal,
}

/// A failed command, rendered as one machine-parsable line.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub key: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            key: None,
            message: message.into(),
        }
    }

    pub fn input_key(key: &str, message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            key: Some(key.to_string()),
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Internal,
            key: None,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage | ErrorKind::Input => 2,
            ErrorKind::Internal => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ErrorKind::Usage => "usage",
            ErrorKind::Input => "input",
            ErrorKind::Internal => "internal",
        };
        write!(f, "error[{kind}]")?;
        if let Some(key) = &self.key {
            write!(f, " key={key}")?;
        }
        // keep it on one line
        let message = self.message.replace('\n', " ");
        write!(f, ": {message}")
    }
}

impl std::error::Error for CliError {}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        Self::input(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spinrelax",
    version,
    about = "Spin-1 relaxometry simulation and analysis"
)]
pub struct Cli {
    /// Flat `key = value` configuration file; flags override its entries.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic F1/F2 relaxation curves.
    Simulate(SimulateArgs),
    /// Fit decay curves, rate pairs, the surface-noise power law or the
    /// temperature law.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Convert a gamma table to an electric-field noise spectrum, or compare
    /// two spectra.
    Noise(NoiseArgs),
    /// Print ODMR lines and the |-1>/|+1> splitting for a given field.
    Odmr(OdmrArgs),
    /// Tabulate the DQ rate or noise model over a field grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolChoice {
    F1,
    F2,
    Pair,
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridChoice {
    Log,
    Linear,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolChoice>,
    #[arg(long)]
    pub omega_khz: Option<f64>,
    #[arg(long)]
    pub gamma_khz: Option<f64>,
    /// Readout contrast r.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub baseline: Option<f64>,
    #[arg(long)]
    pub pulse_fidelity: Option<f64>,
    /// Single-shot noise standard deviation.
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub shots: Option<u32>,
    /// Required: random streams are never seeded from entropy.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub grid: Option<GridChoice>,
    #[arg(long)]
    pub tau_min_us: Option<f64>,
    #[arg(long)]
    pub tau_max_us: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out_prefix: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum FitCommand {
    /// Single-exponential fit of one curve.
    Decay(FitDecayArgs),
    /// Omega and gamma from an F1/F2 pair.
    Pair(FitPairArgs),
    /// gamma(f) = A / (f - 2E)^a + gamma_inf.
    Powerlaw(FitPowerlawArgs),
    /// Log-log fit of 1/T1 against temperature.
    Templaw(FitTemplawArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecayModelChoice {
    Exp,
    ExpOffset,
}

#[derive(Debug, Args)]
pub struct FitDecayArgs {
    #[arg(long = "in", value_name = "CSV")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub model: Option<DecayModelChoice>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitPairArgs {
    #[arg(long, value_name = "CSV")]
    pub f1: Option<PathBuf>,
    #[arg(long, value_name = "CSV")]
    pub f2: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct FitPowerlawArgs {
    #[arg(long = "in", value_name = "CSV")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub e_mhz: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitTemplawArgs {
    #[arg(long = "in", value_name = "CSV")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct NoiseArgs {
    /// Gamma table `f_mhz,gamma_khz,gamma_err_khz`.
    #[arg(long = "in", value_name = "CSV")]
    pub input: Option<PathBuf>,
    /// Bulk plateau; fitted from the table with `--e-mhz` when omitted.
    #[arg(long)]
    pub gamma_inf_khz: Option<f64>,
    #[arg(long)]
    pub e_mhz: Option<f64>,
    /// d_perp / h in Hz·m/V.
    #[arg(long)]
    pub susceptibility: Option<f64>,
    /// Add the plateau uncertainty to every point in quadrature.
    #[arg(long)]
    pub include_plateau_error: bool,
    /// Compare two spectrum files instead of building one.
    #[arg(long, num_args = 2, value_names = ["RAW", "COATED"])]
    pub compare: Option<Vec<PathBuf>>,
    /// Output table (spectrum, or suppression with `--compare`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct OdmrArgs {
    #[arg(long)]
    pub d_mhz: Option<f64>,
    #[arg(long)]
    pub e_mhz: Option<f64>,
    #[arg(long)]
    pub g_factor: Option<f64>,
    #[arg(long)]
    pub b_gauss: Option<f64>,
    /// Field angle from the c-axis, degrees.
    #[arg(long)]
    pub polar_deg: Option<f64>,
    #[arg(long)]
    pub azimuth_deg: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepQuantity {
    Gamma,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplittingChoice {
    Odmr,
    Zeeman,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub quantity: Option<SweepQuantity>,
    #[arg(long)]
    pub b_min_gauss: Option<f64>,
    #[arg(long)]
    pub b_max_gauss: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub d_mhz: Option<f64>,
    #[arg(long)]
    pub e_mhz: Option<f64>,
    #[arg(long)]
    pub g_factor: Option<f64>,
    /// Which frequency is used as f in the power law.
    #[arg(long, value_enum)]
    pub splitting: Option<SplittingChoice>,
    /// Power-law amplitude A, kHz·MHz^a.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub exponent: Option<f64>,
    #[arg(long)]
    pub gamma_inf_khz: Option<f64>,
    #[arg(long)]
    pub susceptibility: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(
                e.kind(),
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                let _ = e.print();
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand {
                    2
                } else {
                    0
                };
            }
            let rendered = e.to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            let err = CliError {
                kind: ErrorKind::Usage,
                key: None,
                message: first.to_string(),
            };
            eprintln!("spinrelax: {err}");
            return err.exit_code();
        }
    };
    match commands::dispatch(&cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("spinrelax: {err}");
            err.exit_code()
        }
    }
}
