//! `commrank` command-line front end: reads tensors and decompositions as
//! JSON, runs the library operations and prints a JSON [`report::Report`].
//!
//! Exit codes: 0 on success, 2 when an operation's precondition fails (shape
//! or flavor mismatch, singular data, ...), 3 when an input cannot be read or
//! parsed.

pub mod commands;
pub mod json;
pub mod report;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(name = "commrank", version, about = "Tensor rank via commuting matrices")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON file overriding tolerance defaults.
    #[arg(long, global = true)]
    pub tol_config: Option<PathBuf>,
    /// Add wall time to the report (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct InputArg {
    /// Tensor JSON file, `-` for stdin.
    #[arg(long, short)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Largest rank tried when a decomposition has to be found numerically.
    #[arg(long)]
    pub r_max: Option<usize>,
    /// ALS restarts per rank.
    #[arg(long, default_value_t = 5)]
    pub budget: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank lower bounds.
    Bound {
        #[arg(value_enum)]
        method: BoundKind,
        #[command(flatten)]
        input: InputArg,
    },
    /// Orthogonal decompositions.
    Odeco {
        #[arg(value_enum)]
        action: Action,
        /// sym-real, sym-complex, real or complex.
        #[arg(long)]
        flavor: String,
        #[command(flatten)]
        input: InputArg,
    },
    /// Independent decompositions of r x r x p tensors.
    Ind {
        #[arg(value_enum)]
        action: Action,
        #[command(flatten)]
        input: InputArg,
    },
    /// Commuting embeddings of the z-slices.
    Embed {
        #[arg(value_enum)]
        kind: EmbedKind,
        #[command(flatten)]
        input: InputArg,
        /// Decomposition JSON; found with the rank oracle when omitted.
        #[arg(long, short)]
        decomposition: Option<PathBuf>,
        /// Also read a decomposition back off the embedding.
        #[arg(long)]
        extract: bool,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Build or verify rank certificates.
    Certify {
        #[arg(value_enum)]
        kind: CertKind,
        #[arg(value_enum)]
        action: CertAction,
        /// Tensor JSON (build).
        #[arg(long, short)]
        input: Option<PathBuf>,
        /// Decomposition JSON (build); found with the rank oracle when omitted.
        #[arg(long, short)]
        decomposition: Option<PathBuf>,
        /// Flavor of an ortho certificate (build); defaults to the tensor's field.
        #[arg(long)]
        flavor: Option<String>,
        /// Symmetric ind certificate (build).
        #[arg(long)]
        symmetric: bool,
        /// Certificate JSON or a build report (verify).
        #[arg(long, short)]
        certificate: Option<PathBuf>,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Numerical rank bracket.
    Oracle {
        #[arg(value_enum)]
        action: OracleAction,
        #[command(flatten)]
        input: InputArg,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// Sweep of the Koszul determinant identity on seeded random tensors.
    Selftest {
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundKind {
    Strassen,
    Koszul,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Action {
    Check,
    Decompose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmbedKind {
    Trivial,
    Pair,
    Commuting,
    FirstIdentity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertKind {
    Ortho,
    Ind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertAction {
    Build,
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleAction {
    Bracket,
}

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or malformed input (exit 3).
    Input(String),
    /// A precondition of the requested operation failed (exit 2).
    Precondition(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => 3,
            Self::Precondition(_) => 2,
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (kind, msg) = match self {
            Self::Input(m) => ("malformed_input", m),
            Self::Precondition(m) => ("precondition", m),
        };
        serde_json::json!({ "error": kind, "message": msg })
    }
}

impl From<commrank::Error> for CliError {
    fn from(e: commrank::Error) -> Self {
        Self::Precondition(e.to_string())
    }
}

impl From<json::FormatError> for CliError {
    fn from(e: json::FormatError) -> Self {
        Self::Input(e.0)
    }
}

/// Parse `args` (including the program name), run the command and write the
/// report to `stdout` or a diagnostic to `stderr`. Returns the exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let out: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(out, "{}", e.render());
            return code;
        }
    };
    let start = Instant::now();
    match commands::execute(&cli) {
        Ok(mut report) => {
            if cli.timing {
                report.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            let text = serde_json::to_string_pretty(&report).expect("reports serialize");
            let _ = writeln!(stdout, "{text}");
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.exit_code()
        }
    }
}
