//! `lshaped`: solve, bound, benchmark, generate and check two-stage
//! stochastic linear programs.

mod commands;
mod config;
mod error;
mod source;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{GeneratorName, InstanceSource, PolicyName, RunConfigDocument, Samples};
use error::{CliError, EXIT_OK, EXIT_USAGE};

#[derive(Debug, Parser)]
#[command(name = "lshaped", version, about = "Inexact regularized L-shaped solver for two-stage stochastic LPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the solver and write the trace and summary.
    Solve(RunArgs),
    /// Estimate a lower bound from independent sampled problems.
    Bounds(RunArgs),
    /// Sweep step-size policies over seeds.
    Bench(RunArgs),
    /// Write a generated instance as a native document.
    Gen(GenArgs),
    /// Validate an instance and report the closed-form complexity bounds.
    Check(RunArgs),
}

/// Flags shared by the commands that read a run configuration.
#[derive(Debug, Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Native instance document.
    #[arg(long, conflicts_with_all = ["smps", "generator"])]
    native: Option<PathBuf>,
    /// Directory holding an SMPS triplet.
    #[arg(long, conflicts_with = "generator")]
    smps: Option<PathBuf>,
    /// File stem of the SMPS triplet inside `--smps`.
    #[arg(long, requires = "smps")]
    stem: Option<String>,
    /// Built-in generator with default parameters.
    #[arg(long, value_enum)]
    generator: Option<GeneratorName>,
    /// Root seed of every random draw.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    policy: Option<PolicyName>,
    /// Constant step size; `bench` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    rho: Vec<f64>,
    /// Practical-policy constant; `bench` accepts a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    cp: Vec<f64>,
    /// Descent parameter in (0, 1).
    #[arg(long)]
    beta: Option<f64>,
    /// Scenarios per outer iteration, or `exact`.
    #[arg(long, value_parser = Samples::parse)]
    samples: Option<Samples>,
    /// Cuts kept per kind.
    #[arg(long)]
    memory: Option<usize>,
    /// Budget of inner steps over the whole run.
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    stop_tol: Option<f64>,
    /// Trace CSV path (`solve`).
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// JSON summary or report path; printed to stdout when absent.
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(value_enum)]
    name: GeneratorName,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Inventory items.
    #[arg(long)]
    items: Option<usize>,
    /// Levels of each inventory customer count.
    #[arg(long)]
    values: Option<usize>,
    /// Random instance: first-stage columns.
    #[arg(long)]
    n: Option<usize>,
    /// Random instance: first-stage rows.
    #[arg(long)]
    m: Option<usize>,
    /// Random instance: structural recourse columns.
    #[arg(long)]
    l: Option<usize>,
    /// Random instance: recourse rows.
    #[arg(long)]
    r: Option<usize>,
    /// Random instance: scenario count.
    #[arg(long)]
    scenarios: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

/// Single value of a flag that `solve` and `check` accept only once.
fn single(values: &[f64], flag: &str) -> Result<Option<f64>, CliError> {
    match values {
        [] => Ok(None),
        [v] => Ok(Some(*v)),
        _ => Err(CliError::Usage(format!("--{flag} takes one value outside `bench`"))),
    }
}

impl RunArgs {
    fn document(&self, bench: bool) -> Result<RunConfigDocument, CliError> {
        let mut doc = match &self.config {
            Some(path) => RunConfigDocument::load(path)?,
            None => RunConfigDocument::default(),
        };
        if let Some(path) = &self.native {
            doc.instance = Some(InstanceSource::Native { path: path.clone() });
        }
        if let Some(dir) = &self.smps {
            doc.instance = Some(InstanceSource::Smps {
                dir: Some(dir.clone()),
                stem: self.stem.clone(),
                core: None,
                time: None,
                stoch: None,
            });
        }
        if let Some(name) = self.generator {
            doc.instance = Some(InstanceSource::generator(name));
        }
        let s = &mut doc.solver;
        if bench {
            if !self.rho.is_empty() {
                doc.bench.rhos = Some(self.rho.clone());
            }
            if !self.cp.is_empty() {
                doc.bench.cps = Some(self.cp.clone());
            }
        } else {
            s.rho = single(&self.rho, "rho")?.or(s.rho);
            s.cp = single(&self.cp, "cp")?.or(s.cp);
        }
        s.policy = self.policy.or(s.policy);
        s.beta = self.beta.or(s.beta);
        s.samples = self.samples.or(s.samples);
        s.memory = self.memory.or(s.memory);
        s.max_inner = self.max_inner.or(s.max_inner);
        s.stop_tol = self.stop_tol.or(s.stop_tol);
        doc.seed = self.seed.or(doc.seed);
        doc.output.trace = self.trace_out.clone().or(doc.output.trace);
        doc.output.summary = self.summary_out.clone().or(doc.output.summary);
        Ok(doc)
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Solve(args) => commands::solve(&args.document(false)?),
        Command::Bounds(args) => commands::bounds(&args.document(false)?),
        Command::Bench(args) => commands::bench(&args.document(true)?),
        Command::Check(args) => commands::check(&args.document(false)?),
        Command::Gen(args) => {
            let source = InstanceSource::Generator {
                name: args.name,
                items: args.items,
                values: args.values,
                n: args.n,
                m: args.m,
                l: args.l,
                r: args.r,
                scenarios: args.scenarios,
                seed: args.seed,
            };
            commands::gen(&source, args.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lshaped: {e}");
            e.code()
        }
    };
    ExitCode::from(code as u8)
}
