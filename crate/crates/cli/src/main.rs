//! `laad`: fit penalized claims-reserving models, bootstrap their
//! predictions, run the simulation study and dump penalty curves.
//!
//! Every command writes its tables to the output directory (`--out`, or
//! `LAAD_OUT_DIR`, or the working directory) as CSV or as a single JSON
//! document, and prints a short summary to stdout.

mod curves;
mod output;
mod regress;
mod reserving;
mod simulate;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use laad::reserve::{ReserveModel, Strength};
use output::Format;
use std::path::PathBuf;
use std::process::ExitCode;

/// A command's artifacts and its stdout summary.
pub type Outcome = (output::Report, String);

#[derive(Parser, Debug)]
#[command(name = "laad", version, about = "LAAD-penalized reserving and regression")]
struct Cli {
    /// Directory for output files.
    #[arg(long, global = true, env = "LAAD_OUT_DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a reserving model and report development factors.
    Fit(ModelArgs),
    /// Cross-validate a penalized reserving model over its strength grid.
    Cv(CvArgs),
    /// Predict the next calendar diagonal and score it against actuals.
    Predict(ModelArgs),
    /// Parametric bootstrap of next-year unpaid claims.
    Bootstrap(BootstrapArgs),
    /// Run the simulation study.
    Simulate(simulate::SimArgs),
    /// Sample thresholding curves and the LAAD zero region.
    Curves(curves::CurveArgs),
    /// Penalized regression on an arbitrary CSV file.
    Regress(regress::RegressArgs),
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Triangle CSV (`line,accident_year,dev_lag,cumulative_loss`);
    /// defaults to the bundled data.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Realised next diagonal in the same layout; defaults to the bundled
    /// data when `--input` is not given.
    #[arg(long)]
    actuals: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct StrengthArgs {
    /// Fixed penalty strength.
    #[arg(long, conflicts_with = "cv")]
    strength: Option<f64>,
    /// Choose the strength by k-fold cross-validation (the default for
    /// penalized models without `--strength`).
    #[arg(long)]
    cv: bool,
    #[arg(long, default_value_t = laad::select::DEFAULT_FOLDS)]
    k: usize,
    /// Seed for fold assignment; required whenever cross-validation runs.
    #[arg(long)]
    seed: Option<u64>,
}

impl StrengthArgs {
    /// Resolves the strength for `penalized` models; `None` for the rest.
    pub fn resolve(&self, penalized: bool, what: &str) -> Result<Option<Strength>> {
        if !penalized {
            if self.strength.is_some() || self.cv {
                bail!("{what} takes no penalty strength");
            }
            return Ok(None);
        }
        if let Some(v) = self.strength {
            return Ok(Some(Strength::Fixed(v)));
        }
        match self.seed {
            Some(seed) => Ok(Some(Strength::Cv { k: self.k, seed })),
            None => bail!("cross-validating {what} needs --seed (or give --strength)"),
        }
    }
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    model: ReserveModel,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    strength: StrengthArgs,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[arg(long)]
    model: ReserveModel,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = laad::select::DEFAULT_FOLDS)]
    k: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct BootstrapArgs {
    #[arg(long)]
    model: ReserveModel,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    strength: StrengthArgs,
    /// Number of bootstrap replicates.
    #[arg(long, short = 'S', default_value_t = 1000)]
    reps: usize,
}

fn run(cli: Cli) -> Result<()> {
    let report = match cli.command {
        Command::Fit(a) => reserving::fit(a.model, &a.input, &a.strength)?,
        Command::Cv(a) => reserving::cv(a.model, &a.input, a.k, a.seed)?,
        Command::Predict(a) => reserving::predict(a.model, &a.input, &a.strength)?,
        Command::Bootstrap(a) => reserving::bootstrap(a.model, &a.input, &a.strength, a.reps)?,
        Command::Simulate(a) => simulate::run(&a)?,
        Command::Curves(a) => curves::run(&a)?,
        Command::Regress(a) => regress::run(&a)?,
    };
    for path in report.0.write(&cli.out, cli.format)? {
        eprintln!("wrote {}", path.display());
    }
    print!("{}", report.1);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
