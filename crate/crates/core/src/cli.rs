//! Command-line front end: `solve`, `bench`, `gen` and `verify`.
//!
//! Exit codes: 0 success, 1 audit violations (`verify`), 2 I/O or
//! validation errors, 3 parse errors, 4 dimension mismatches, 5 solver
//! errors. `verify` reports an unreadable trace or problem file as 3.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::Error;
use crate::experiment::{self, Experiment, ExperimentConfig, Generated};
use crate::io::{self, IoError};
use crate::l1l2::{initial_point, L1L2PenaltyProblem};
use crate::oracle::{self, RateFit, Violation};
use crate::problem::{Certificate, FractionalProblem};
use crate::sgep::{sgep_default_init, symmetrize, SgepProblem};
use crate::trace::Method;

#[derive(Debug, Parser)]
#[command(
    name = "fracprox",
    version,
    about = "Proximity-gradient-subgradient solvers for fractional programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one solver on problem data read from CSV files.
    Solve(SolveArgs),
    /// Run a seeded multi-trial experiment and write result tables.
    Bench(ConfigArgs),
    /// Write the synthetic problem files of one trial.
    Gen(GenArgs),
    /// Audit a trace file against the decrease conditions and fit its rate.
    Verify(VerifyArgs),
}

/// Overrides for [`ExperimentConfig`] keys. Unset flags keep the value from
/// the config file, the environment or the defaults.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// JSON file with keys named after the config fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub experiment: Option<Experiment>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Record iterates and write per-trial trace files.
    #[arg(long)]
    pub trace: bool,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub coherence: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub init_iterations: Option<usize>,
    #[arg(long)]
    pub matrix_a: Option<PathBuf>,
    #[arg(long)]
    pub matrix_b: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Args, Default)]
pub struct SolverArgs {
    /// pgsa, pgsa_ml or pgsa_nl.
    #[arg(long)]
    pub solver: Option<Method>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub alpha_lower: Option<f64>,
    #[arg(long)]
    pub alpha_upper: Option<f64>,
    #[arg(long)]
    pub step_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub relative_tol: Option<bool>,
    #[arg(long)]
    pub max_backtracks: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Sgep,
    L1l2,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value = "sgep")]
    pub kind: ProblemKind,
    /// Observation vector `b` for `l1l2`.
    #[arg(long)]
    pub vector_b: Option<PathBuf>,
    /// Start point; defaults to the canonical start of the problem class.
    #[arg(long)]
    pub x0: Option<PathBuf>,
    /// Write the final point here.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    /// Write the iteration trace here.
    #[arg(long)]
    pub trace_file: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Trial index whose data to write.
    #[arg(long, default_value_t = 0)]
    pub trial: u64,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Trace CSV written by `solve --trace-file` or `bench --trace`.
    pub trace_path: PathBuf,
    #[arg(long, value_enum, default_value = "sgep")]
    pub kind: ProblemKind,
    #[arg(long)]
    pub vector_b: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// A failed command and its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_DIMENSION: i32 = 4;
pub const EXIT_SOLVER: i32 = 5;

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn io(err: IoError, missing_code: i32) -> Self {
        let code = match err {
            IoError::Io { .. } => missing_code,
            IoError::Parse { .. } => EXIT_PARSE,
        };
        Self::new(code, err.to_string())
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::InvalidConfig(_) | Error::InvalidProblem(_) => EXIT_VALIDATION,
            _ => EXIT_SOLVER,
        };
        Self::new(code, err.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl ConfigArgs {
    /// Layer these flags over the config file and environment.
    pub fn resolve(&self) -> CliResult<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(self.config.as_deref())?;
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { cfg.$target = v; })*
            };
        }
        set!(experiment => experiment, seed => master_seed, threads => threads, out_dir => out_dir,
            trials => trials, n => n, p => p, r => r, ridge => ridge, m => m, k => k,
            coherence => coherence, lambda => lambda, init_iterations => init_iterations);
        if self.matrix_a.is_some() {
            cfg.matrix_a = self.matrix_a.clone();
        }
        if self.matrix_b.is_some() {
            cfg.matrix_b = self.matrix_b.clone();
        }
        cfg.trace |= self.trace;
        let s = &self.solver;
        macro_rules! set_solver {
            ($($field:ident),*) => { $(if let Some(v) = s.$field { cfg.$field = v; })* };
        }
        set_solver!(solver, a, eta, window, max_backtracks);
        macro_rules! set_optional {
            ($($field:ident),*) => { $(if s.$field.is_some() { cfg.$field = s.$field; })* };
        }
        set_optional!(
            alpha,
            alpha_lower,
            alpha_upper,
            step_tol,
            max_iter,
            relative_tol
        );
        Ok(cfg)
    }
}

/// Problem data loaded from files.
pub enum LoadedProblem {
    Sgep(SgepProblem),
    L1l2(L1L2PenaltyProblem),
}

impl LoadedProblem {
    pub fn as_dyn(&self) -> &dyn FractionalProblem {
        match self {
            LoadedProblem::Sgep(p) => p,
            LoadedProblem::L1l2(p) => p,
        }
    }

    fn default_start(&self, cfg: &ExperimentConfig) -> CliResult<Array1<f64>> {
        match self {
            LoadedProblem::Sgep(p) => Ok(sgep_default_init(p.n(), p.r())),
            LoadedProblem::L1l2(p) => Ok(initial_point(p, cfg.init_iterations)?),
        }
    }
}

fn required<'a>(path: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::new(EXIT_VALIDATION, format!("missing --{flag}")))
}

/// Read and validate `A`, `B` (SGEP) or `A`, `b` (l1l2) named in `cfg`.
pub fn load_problem(
    kind: ProblemKind,
    cfg: &ExperimentConfig,
    vector_b: Option<&Path>,
    missing_code: i32,
) -> CliResult<LoadedProblem> {
    let read = |path: &Path| io::read_matrix(path).map_err(|e| CliError::io(e, missing_code));
    let a = read(required(&cfg.matrix_a, "matrix-a")?)?;
    match kind {
        ProblemKind::Sgep => {
            let b = read(required(&cfg.matrix_b, "matrix-b")?)?;
            check_square_pair(&a, &b)?;
            let n = a.nrows();
            if cfg.r == 0 || cfg.r > n {
                return Err(CliError::new(
                    EXIT_VALIDATION,
                    format!("sparsity r = {} must lie in [1, {n}]", cfg.r),
                ));
            }
            let (mut a, mut b) = (a, b);
            symmetrize(&mut a);
            symmetrize(&mut b);
            Ok(LoadedProblem::Sgep(SgepProblem::new(a, b, cfg.r)?))
        }
        ProblemKind::L1l2 => {
            let path =
                vector_b.ok_or_else(|| CliError::new(EXIT_VALIDATION, "missing --vector-b"))?;
            let b = io::read_vector(path).map_err(|e| CliError::io(e, missing_code))?;
            if b.len() != a.nrows() {
                return Err(CliError::new(
                    EXIT_DIMENSION,
                    format!("A has {} rows but b has {} entries", a.nrows(), b.len()),
                ));
            }
            Ok(LoadedProblem::L1l2(L1L2PenaltyProblem::with_unit_box(
                a, b, cfg.lambda,
            )?))
        }
    }
}

fn check_square_pair(a: &Array2<f64>, b: &Array2<f64>) -> CliResult<()> {
    if a.nrows() != a.ncols() || b.dim() != a.dim() {
        return Err(CliError::new(
            EXIT_DIMENSION,
            format!(
                "A is {}x{} and B is {}x{}; both must be n x n",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            ),
        ));
    }
    Ok(())
}

fn experiment_for(kind: ProblemKind) -> Experiment {
    match kind {
        ProblemKind::Sgep => Experiment::CustomSgep,
        ProblemKind::L1l2 => Experiment::L1l2,
    }
}

#[derive(Debug, Serialize)]
pub struct SolveReport {
    pub solver: Method,
    #[serde(flatten)]
    pub certificate: Certificate,
    /// Seconds spent in the solver.
    pub wall_time: f64,
}

pub fn cmd_solve(args: &SolveArgs) -> CliResult<SolveReport> {
    let mut cfg = args.config.resolve()?;
    cfg.experiment = experiment_for(args.kind);
    let loaded = load_problem(args.kind, &cfg, args.vector_b.as_deref(), EXIT_IO)?;
    let problem = loaded.as_dyn();
    let x0 = match &args.x0 {
        Some(path) => {
            let x0 = io::read_vector(path).map_err(|e| CliError::io(e, EXIT_IO))?;
            if x0.len() != problem.dim() {
                return Err(CliError::new(
                    EXIT_DIMENSION,
                    format!(
                        "x0 has {} entries, problem dimension is {}",
                        x0.len(),
                        problem.dim()
                    ),
                ));
            }
            x0
        }
        None => loaded.default_start(&cfg)?,
    };
    let keep = cfg.trace || args.trace_file.is_some();
    let start = Instant::now();
    let trace = cfg.solve(problem, x0.view(), keep)?;
    let wall_time = start.elapsed().as_secs_f64();
    if let Some(path) = &args.trace_file {
        io::write_trace_file(path, &trace).map_err(|e| CliError::io(e, EXIT_IO))?;
    }
    if let Some(path) = &args.solution {
        io::write_vector(path, &trace.final_point).map_err(|e| CliError::io(e, EXIT_IO))?;
    }
    Ok(SolveReport {
        solver: cfg.solver,
        certificate: trace.certificate,
        wall_time,
    })
}

pub fn cmd_bench(args: &ConfigArgs) -> CliResult<experiment::BenchOutput> {
    let cfg = args.resolve()?;
    let custom = match cfg.experiment {
        Experiment::CustomSgep => match load_problem(ProblemKind::Sgep, &cfg, None, EXIT_IO)? {
            LoadedProblem::Sgep(p) => Some(p),
            LoadedProblem::L1l2(_) => unreachable!(),
        },
        _ => None,
    };
    let (out, traces) = experiment::run_bench(&cfg, custom.as_ref())?;
    let dir = &cfg.out_dir;
    let io_fail = |e: std::io::Error| CliError::new(EXIT_IO, format!("{}: {e}", dir.display()));
    experiment::write_bench_output(dir, &out).map_err(io_fail)?;
    if cfg.trace {
        let trace_dir = dir.join("traces");
        std::fs::create_dir_all(&trace_dir).map_err(io_fail)?;
        for (trial, trace) in &traces {
            let path = trace_dir.join(format!("trial_{trial}.csv"));
            io::write_trace_file(&path, trace).map_err(|e| CliError::io(e, EXIT_IO))?;
        }
    }
    Ok(out)
}

/// Files written by `gen`.
pub fn cmd_gen(args: &GenArgs) -> CliResult<Vec<PathBuf>> {
    let cfg = args.config.resolve()?;
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", dir.display())))?;
    let wrote = |e: IoError| CliError::io(e, EXIT_IO);
    let mut paths = Vec::new();
    match experiment::generate(&cfg, args.trial)? {
        Generated::Sgep { a, b } => {
            for (name, m) in [("A.csv", &a), ("B.csv", &b)] {
                let path = dir.join(name);
                io::write_matrix(&path, m).map_err(wrote)?;
                paths.push(path);
            }
        }
        Generated::L1l2 { a, b, truth } => {
            let path = dir.join("A.csv");
            io::write_matrix(&path, &a).map_err(wrote)?;
            paths.push(path);
            for (name, v) in [("b.csv", &b), ("truth.csv", &truth)] {
                let path = dir.join(name);
                io::write_vector(&path, v).map_err(wrote)?;
                paths.push(path);
            }
        }
    }
    Ok(paths)
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub solver: Method,
    pub checked_iterations: usize,
    pub clean: bool,
    pub violations: Vec<Violation>,
    pub rate_fit: Option<RateFit>,
    /// Why no rate fit is reported.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate_fit_note: Option<String>,
}

pub fn cmd_verify(args: &VerifyArgs) -> CliResult<VerifyReport> {
    let mut cfg = args.config.resolve()?;
    cfg.experiment = experiment_for(args.kind);
    let rows = io::read_trace(&args.trace_path).map_err(|e| CliError::io(e, EXIT_PARSE))?;
    let loaded = load_problem(args.kind, &cfg, args.vector_b.as_deref(), EXIT_PARSE)?;
    let meta = cfg.trace_meta(loaded.as_dyn());
    let (initial, records) = io::rows_to_records(&rows);
    let audit = oracle::audit_records(&meta, initial, &records, cfg.solver);
    let errors: Option<Vec<f64>> = rows.iter().map(|r| r.err_to_final).collect();
    let (rate_fit, rate_fit_note) = match errors {
        None => (
            None,
            Some("trace has no err_to_final column values".to_string()),
        ),
        Some(e) => match oracle::fit_linear_rate_errors(&e) {
            Ok(fit) => (Some(fit), None),
            Err(err) => (None, Some(err.to_string())),
        },
    };
    Ok(VerifyReport {
        solver: cfg.solver,
        checked_iterations: audit.checked_iterations,
        clean: audit.is_clean(),
        violations: audit.violations,
        rate_fit,
        rate_fit_note,
    })
}

fn print_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("report serializes")
    );
}

fn dispatch(cli: &Cli) -> CliResult<i32> {
    match &cli.command {
        Command::Solve(args) => print_json(&cmd_solve(args)?),
        Command::Bench(args) => {
            let out = cmd_bench(args)?;
            match &out.row {
                Some(row) => print_json(row),
                None => println!("no trials run"),
            }
            if !out.failures.is_empty() {
                eprintln!("{} trial(s) failed; see failures.jsonl", out.failures.len());
            }
        }
        Command::Gen(args) => {
            for path in cmd_gen(args)? {
                println!("{}", path.display());
            }
        }
        Command::Verify(args) => {
            let report = cmd_verify(args)?;
            print_json(&report);
            if let Some(first) = report.violations.first() {
                eprintln!(
                    "violation at iteration {} ({:?}); {} in total",
                    first.iteration,
                    first.kind,
                    report.violations.len()
                );
                return Ok(EXIT_VIOLATIONS);
            }
        }
    }
    Ok(0)
}

/// Run the command line in `args` and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
