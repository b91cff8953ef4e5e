//! `sma`: analyze quasi-orders, build and recover Jordan embeddings, and run
//! the sampled preserver harness over JSON files.
//!
//! Exit codes: 0 when every requested property passes, 1 on usage or input
//! errors, 2 when some property fails.

mod commands;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sma", version, about = "Structural matrix algebra preserver toolkit")]
pub struct Cli {
    /// Seed for every random sample.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Override the tolerance of the verb's checks.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of random samples.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Indent the JSON report.
    #[arg(long, global = true)]
    pub pretty: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Structural report on a quasi-order file.
    Analyze { order: PathBuf },
    /// Matrix-unit table of the embedding described by a spec file.
    Embed { spec: PathBuf },
    /// Sampled preserver checks of a named map on a quasi-order.
    Verify {
        /// Quasi-order file (ignored when --spec is given).
        order: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MapKind::Identity)]
        map: MapKind,
        /// Check the embedding of this spec file instead of a named map.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Properties that decide the exit code.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = Property::ALL)]
        properties: Vec<Property>,
    },
    /// Build and check the nonlinear preserver of a quasi-order violating
    /// condition (i).
    Counterexample { order: PathBuf },
    /// Recover (S, g, P) from the embedding of a spec file.
    Recover { spec: PathBuf },
    /// Run the built-in examples and compare with the golden results.
    Selftest {
        /// Compare against this file instead of the built-in golden results.
        #[arg(long)]
        golden: Option<PathBuf>,
        /// Write the computed results to this file instead of comparing.
        #[arg(long, conflicts_with = "golden")]
        write_golden: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MapKind {
    Identity,
    Transpose,
    Counterexample,
    Scaling,
    DetTwist,
    DiagShift,
    NoninjectiveJordan,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Property {
    Spectrum,
    Commutativity,
    Injectivity,
    Additivity,
    Homogeneity,
}

impl Property {
    pub const ALL: [Property; 5] =
        [Property::Spectrum, Property::Commutativity, Property::Injectivity, Property::Additivity, Property::Homogeneity];
}

impl std::fmt::Display for Property {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.to_possible_value().expect("no skipped variants").get_name())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(if out.passed { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
