//! `quiverkit`: classify quiver settings, compute local quivers and derive
//! superpotential relations from the command line.

mod commands;
mod report;

use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::report::{Failure, Outcome, Report};

#[derive(Debug, Parser)]
#[command(name = "quiverkit", version, about = "Quotient singularities of quiver settings")]
struct Cli {
    #[command(flatten)]
    options: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Seed for every random sample.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Longest necklace used as an invariant.
    #[arg(long, global = true, default_value_t = 6)]
    pub max_len: usize,
    /// Number of random samples.
    #[arg(long, global = true, default_value_t = 8)]
    pub samples: usize,
    /// Numerical tolerance for residuals and the balancing flow.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Show reduction traces in text output.
    #[arg(long, global = true)]
    pub trace: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Smooth, isolated singularity or non-isolated, with the reduction trace.
    Classify { setting: PathBuf },
    /// Compare the isolated singularities of two settings up to étale equivalence.
    EtaleEq {
        first: PathBuf,
        second: PathBuf,
        /// Largest degree searched for a separating Hilbert coefficient.
        #[arg(long, default_value_t = 6)]
        degree: usize,
    },
    /// Relations dW/da of a superpotential.
    Vacua {
        setting: PathBuf,
        superpotential: PathBuf,
        /// Evaluate the relations on this many seeded random representations.
        #[arg(long)]
        verify: Option<usize>,
    },
    /// Representation-type strata with their local quivers.
    Strata { setting: PathBuf },
    /// Local quiver setting of one representation type.
    LocalQuiver {
        setting: PathBuf,
        /// A type such as `[(1,[1,0]);(1,[0,1])]`.
        #[arg(long = "type")]
        rep_type: String,
    },
    /// Whether the dimension vector is a simple root, and all simple roots below it.
    Simple { setting: PathBuf },
    /// All representation types of the dimension vector.
    Types { setting: PathBuf },
    /// Hilbert coefficients of an isolated singularity.
    Hilbert {
        setting: PathBuf,
        #[arg(long, default_value_t = 6)]
        degree: usize,
        /// Block sizes for the hereditary order model, comma separated.
        #[arg(long, value_delimiter = ',')]
        blocks: Vec<u32>,
    },
    /// Numerical checks on a concrete representation.
    Rep {
        #[command(subcommand)]
        command: RepCommand,
    },
    /// Classify every .json setting in a directory.
    Batch { dir: PathBuf },
}

#[derive(Debug, Subcommand)]
enum RepCommand {
    /// Residual of relations at a representation.
    Check {
        setting: PathBuf,
        representation: PathBuf,
        #[arg(long)]
        superpotential: Option<PathBuf>,
        #[arg(long)]
        relations: Option<PathBuf>,
    },
    /// Semistability and stability for integer weights.
    Stability {
        setting: PathBuf,
        representation: PathBuf,
        /// Weights per vertex, comma separated, pairing to zero with the dimension vector.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        theta: Vec<i64>,
    },
    /// Moment map blocks, optionally balanced along the complex orbit.
    MomentMap {
        setting: PathBuf,
        representation: PathBuf,
        #[arg(long)]
        balance: bool,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
    },
    /// Numerical dimension of the quotient from trace invariants.
    Dim { setting: PathBuf },
}

fn run(cli: &Cli) -> Outcome<(Report, u8)> {
    let o = &cli.options;
    let report = match &cli.command {
        Command::Classify { setting } => commands::classify(setting, o)?,
        Command::EtaleEq { first, second, degree } => commands::etale_eq(first, second, *degree)?,
        Command::Vacua {
            setting,
            superpotential,
            verify,
        } => commands::vacua(setting, superpotential, *verify, o)?,
        Command::Strata { setting } => commands::strata_cmd(setting)?,
        Command::LocalQuiver { setting, rep_type } => commands::local_quiver_cmd(setting, rep_type)?,
        Command::Simple { setting } => commands::simple(setting)?,
        Command::Types { setting } => commands::types(setting)?,
        Command::Hilbert { setting, degree, blocks } => commands::hilbert(setting, *degree, blocks)?,
        Command::Rep { command } => match command {
            RepCommand::Check {
                setting,
                representation,
                superpotential,
                relations,
            } => commands::rep_check(setting, representation, superpotential.as_deref(), relations.as_deref(), o)?,
            RepCommand::Stability {
                setting,
                representation,
                theta,
            } => commands::rep_stability(setting, representation, theta, o)?,
            RepCommand::MomentMap {
                setting,
                representation,
                balance,
                max_iter,
            } => commands::rep_moment_map(setting, representation, *balance, *max_iter, o)?,
            RepCommand::Dim { setting } => commands::rep_dim(setting, o)?,
        },
        Command::Batch { dir } => return commands::batch(dir, o),
    };
    Ok((report, 0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = panic::catch_unwind(|| run(&cli))
        .unwrap_or_else(|_| Err(Failure::internal("the computation panicked")));
    match outcome {
        Ok((report, code)) => {
            let out = match cli.options.format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            print!("{out}");
            ExitCode::from(code)
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
