mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

use commands::*;

#[derive(Parser)]
#[command(name = "nlsnf", version, about = "Normal forms, divisor scans and KAM diagnostics for truncated NLS on the circle")]
struct Cli {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand the NLS Hamiltonian at cutoff K.
    BuildHamiltonian(BuildArgs),
    /// Birkhoff normal form to order 2r.
    NormalForm(NormalFormArgs),
    /// Exhaustive divisor scans over unpaired conservative tuples.
    VerifyDivisors(DivisorArgs),
    /// Wick identity residuals, over-pairing and the coefficient bound.
    WickCheck(WickArgs),
    /// Open sites in action-angle variables.
    Open(OpenArgs),
    /// Monte Carlo bad-set measure of small divisors.
    KamSample(KamArgs),
    /// Lipschitz matrix of the frequency corrections and the twist test.
    Twist(TwistArgs),
    /// Sparsity functional of an increasing integer sequence.
    SparsityCheck(SparsityArgs),
    /// Integrate the truncated NLS from a seeded random state.
    Simulate(SimulateArgs),
    /// Experiments on the normal-form machinery.
    Experiment {
        #[command(subcommand)]
        which: Experiment,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Torus persistence in raw and normal-form coordinates.
    Invariance(InvarianceArgs),
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Missing(String),
    Core(nlsnf::Error),
    /// The run finished but its check failed.
    Failed(String),
    Io(String),
}

impl From<nlsnf::Error> for CliError {
    fn from(e: nlsnf::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        use nlsnf::Error as E;
        match self {
            CliError::Config(_) | CliError::Missing(_) | CliError::Io(_) => 2,
            CliError::Core(E::Divergence { .. } | E::Structural(_) | E::MissingQuadraticData(_) | E::PolicyViolation(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

fn usage(path: &[&str]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    for name in path {
        match cmd.find_subcommand(name) {
            Some(c) => cmd = c.clone(),
            None => break,
        }
    }
    cmd.render_usage().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = match config::load(cli.config.as_deref()) {
        Ok(file) => Ctx { file, out: cli.out.clone() },
        Err(e) => return fail(e, &[]),
    };
    let (path, result): (Vec<&str>, _) = match &cli.command {
        Command::BuildHamiltonian(a) => (vec!["build-hamiltonian"], build_hamiltonian(&ctx, a)),
        Command::NormalForm(a) => (vec!["normal-form"], normal_form(&ctx, a)),
        Command::VerifyDivisors(a) => (vec!["verify-divisors"], verify_divisors(&ctx, a)),
        Command::WickCheck(a) => (vec!["wick-check"], wick_check(&ctx, a)),
        Command::Open(a) => (vec!["open"], open(&ctx, a)),
        Command::KamSample(a) => (vec!["kam-sample"], kam_sample(&ctx, a)),
        Command::Twist(a) => (vec!["twist"], twist(&ctx, a)),
        Command::SparsityCheck(a) => (vec!["sparsity-check"], sparsity_check(&ctx, a)),
        Command::Simulate(a) => (vec!["simulate"], simulate(&ctx, a)),
        Command::Experiment { which: Experiment::Invariance(a) } => (vec!["experiment", "invariance"], invariance(&ctx, a)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e, &path),
    }
}

fn fail(e: CliError, path: &[&str]) -> ExitCode {
    match &e {
        CliError::Missing(key) => {
            eprintln!("error: missing required value `--{key}` (flag or config key `{key}`)\n\n{}", usage(path));
        }
        CliError::Config(m) => eprintln!("config error: {m}"),
        CliError::Core(err) => eprintln!("error: {err}"),
        CliError::Failed(m) => eprintln!("check failed: {m}"),
        CliError::Io(m) => eprintln!("io error: {m}"),
    }
    ExitCode::from(e.code())
}
