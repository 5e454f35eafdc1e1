//! `monoport solve | check | validate | schema | version`.
//!
//! Exit codes: 0 success, 1 property violations, 2 invalid input or a
//! network that cannot be built, 3 no convergence, 4 a drive outside the
//! port relation's domain.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use monoport_core::solvers::solve_problem;

use crate::check::{run_check, CheckOptions};
use crate::error::{Error, Result};
use crate::netlist::{Netlist, SCHEMA_TEXT};
use crate::output::{solve_log, write_csv};
use crate::runspec::{AlgorithmName, OrientationName, RunSpec, Verbosity};

#[derive(Debug, Parser)]
#[command(name = "monoport", version, about = "Periodic steady state of monotone one-port networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the run file's problem and write `t,i,v` as CSV.
    Solve(SolveArgs),
    /// Sample monotonicity, resolvent and constant estimates in both orientations.
    Check(CheckArgs),
    /// Check netlists against the schema and build them.
    Validate {
        #[arg(required = true)]
        netlists: Vec<PathBuf>,
    },
    /// Print the netlist schema.
    Schema,
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Run file (JSON).
    pub run: PathBuf,
    /// Samples per period.
    #[arg(long)]
    pub n: Option<usize>,
    /// Period in seconds.
    #[arg(long)]
    pub period: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Forward step size.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Douglas-Rachford resolvent parameter.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, value_enum)]
    pub algorithm: Option<AlgorithmName>,
    /// Port orientation to iterate in, instead of the drive's natural one.
    #[arg(long, value_enum)]
    pub orientation: Option<OrientationName>,
    /// Recorded in the log; solving draws no random numbers.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Log every iteration.
    #[arg(long, short)]
    pub verbose: bool,
    /// Write the CSV even when the solver did not converge.
    #[arg(long)]
    pub allow_partial: bool,
    /// Add `i:<path>,v:<path>` columns for every branch of the tree.
    #[arg(long)]
    pub dump_branches: bool,
    /// CSV destination, overriding the run file.
    #[arg(long, short = 'o')]
    pub csv: Option<PathBuf>,
    /// Log destination, overriding the run file.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Netlist file (JSON).
    pub netlist: PathBuf,
    #[arg(long, default_value_t = CheckOptions::default().trials)]
    pub trials: usize,
    #[arg(long, default_value_t = CheckOptions::default().seed)]
    pub seed: u64,
    #[arg(long, default_value_t = CheckOptions::default().n_steps)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub period: f64,
    /// Samples are drawn from `center ± amplitude`.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub center: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = io::stdout();
    match run(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let io_err = |source| Error::Io {
        path: "<stdout>".into(),
        source,
    };
    match &cli.command {
        Command::Solve(a) => solve(a, out),
        Command::Check(a) => check(a, out),
        Command::Validate { netlists } => {
            for p in netlists {
                Netlist::load(p)?.to_oneport()?;
                writeln!(out, "{}: ok", p.display()).map_err(io_err)?;
            }
            Ok(())
        }
        Command::Schema => out.write_all(SCHEMA_TEXT.as_bytes()).map_err(io_err),
        Command::Version => writeln!(out, "monoport {}", env!("CARGO_PKG_VERSION")).map_err(io_err),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let io_err = |source| Error::Io {
        path: path.into(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err)
}

fn apply_overrides(spec: &mut RunSpec, a: &SolveArgs) {
    let d = &mut spec.discretization;
    d.n_steps = a.n.unwrap_or(d.n_steps);
    d.period_seconds = a.period.unwrap_or(d.period_seconds);
    let s = &mut spec.solver;
    s.tol = a.tol.or(s.tol);
    s.max_iter = a.max_iter.or(s.max_iter);
    s.alpha = a.alpha.or(s.alpha);
    s.lambda = a.lambda.or(s.lambda);
    s.algorithm = a.algorithm.or(s.algorithm);
    s.orientation = a.orientation.or(s.orientation);
    spec.seed = a.seed.or(spec.seed);
    if a.verbose {
        spec.output.verbosity = Verbosity::Verbose;
    }
    if a.csv.is_some() {
        spec.output.csv_path = a.csv.clone();
    }
    if a.log.is_some() {
        spec.output.log_path = a.log.clone();
    }
}

fn solve(a: &SolveArgs, out: &mut dyn Write) -> Result<()> {
    let mut spec = RunSpec::load(&a.run)?;
    apply_overrides(&mut spec, a);
    let netlist = Netlist::load(&spec.netlist)?;
    let problem = spec.problem(&netlist)?;
    let r = solve_problem(&problem, &spec.solver_config())?;

    let mut log = String::new();
    if spec.output.verbosity != Verbosity::Quiet {
        log.push_str(&format!(
            "netlist={} drive={} n={} period={} seed={}\n",
            spec.netlist.display(),
            problem.kind(),
            problem.n(),
            problem.period(),
            spec.seed.map_or("-".into(), |s| s.to_string())
        ));
    }
    log.push_str(&solve_log(&r, spec.output.verbosity));
    match &spec.output.log_path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(log.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|source| Error::Io { path: p.clone(), source })?;
        }
        None => eprint!("{log}"),
    }

    if r.report.converged || a.allow_partial {
        let branches = a.dump_branches.then_some(r.audit.branches.as_slice());
        let csv_err = |path: &Path, e: csv::Error| Error::Io {
            path: path.into(),
            source: e.into(),
        };
        match &spec.output.csv_path {
            Some(p) => write_csv(create(p)?, &r.current, &r.voltage, branches).map_err(|e| csv_err(p, e))?,
            None => write_csv(&mut *out, &r.current, &r.voltage, branches).map_err(|e| csv_err(Path::new("<stdout>"), e))?,
        }
    }
    if r.report.converged {
        Ok(())
    } else {
        Err(Error::NotConverged {
            iterations: r.report.iterations,
            residual: r.report.final_residual(),
        })
    }
}

fn check(a: &CheckArgs, out: &mut dyn Write) -> Result<()> {
    let netlist = Netlist::load(&a.netlist)?;
    let opts = CheckOptions {
        trials: a.trials,
        seed: a.seed,
        n_steps: a.n,
        period: a.period,
        center: a.center,
        amplitude: a.amplitude,
    };
    let report = run_check(&netlist, &opts)?;
    let io_err = |source| Error::Io {
        path: "<stdout>".into(),
        source,
    };
    match a.format {
        Format::Table => writeln!(out, "{report}").map_err(io_err)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| io_err(e.into()))?;
            writeln!(out).map_err(io_err)?;
        }
    }
    if report.violations > 0 {
        Err(Error::Violations(report.violations))
    } else {
        Ok(())
    }
}
