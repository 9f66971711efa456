//! Seeded multi-trial experiments: configuration, per-trial runs and the
//! aggregated result table.
//!
//! Configuration is layered: built-in defaults, then a JSON file whose keys
//! are the [`ExperimentConfig`] field names, then environment variables
//! `FRACPROX_<FIELD>` (values parsed as JSON, falling back to a plain
//! string), then command-line flags.
//!
//! Trial `i` draws its data from the ChaCha8 stream `i` under key
//! `master_seed`, so results do not depend on thread count or scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::l1l2::{initial_point, l1_over_l2, L1L2PenaltyProblem, RecoveryRecipe, RecoveryReport};
use crate::linesearch::{run_pgsa_ls, LineSearchConfig};
use crate::pgsa::{run_pgsa, PgsaConfig, StopRule};
use crate::problem::{FractionalProblem, StopReason};
use crate::rng::Stream;
use crate::sgep::{gen_sfda, project_sparse_sphere, sgep_default_init, SfdaRecipe, SgepProblem};
use crate::trace::{Method, SolverTrace, TraceMeta};

/// Prefix of the environment variables that override config keys.
pub const ENV_PREFIX: &str = "FRACPROX_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Simulated sparse Fisher discriminant analysis.
    Sfda,
    /// Sparse recovery with the `l1/l2` penalty model.
    L1l2,
    /// SGEP with user-supplied `A` and `B`; each trial is one start point.
    CustomSgep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub p: usize,
    pub r: usize,
    /// Multiple of the identity added to the SFDA within-class covariance.
    pub ridge: f64,
    pub m: usize,
    pub k: usize,
    /// Oversampling factor `F` of the DCT sensing matrix.
    pub coherence: f64,
    pub lambda: f64,
    pub init_iterations: usize,
    pub matrix_a: Option<PathBuf>,
    pub matrix_b: Option<PathBuf>,
    pub solver: Method,
    /// Line-search decrease coefficient.
    pub a: f64,
    pub eta: f64,
    /// Nonmonotone memory `N` for `pgsa_nl`.
    pub window: usize,
    /// Fixed PGSA step; `0.99/L` (`1.99/L` for convex `f`) when unset.
    pub alpha: Option<f64>,
    pub alpha_lower: Option<f64>,
    pub alpha_upper: Option<f64>,
    pub step_tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// Measure the step relative to `|x^k|`.
    pub relative_tol: Option<bool>,
    pub max_backtracks: usize,
    pub trials: usize,
    pub master_seed: u64,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub trace: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: Experiment::Sfda,
            n: 1000,
            p: 1000,
            r: 50,
            ridge: 0.5,
            m: 64,
            k: 12,
            coherence: 1.0,
            lambda: crate::l1l2::DEFAULT_LAMBDA,
            init_iterations: crate::l1l2::INIT_ITERATIONS,
            matrix_a: None,
            matrix_b: None,
            solver: Method::PgsaMl,
            a: 1e-3,
            eta: 0.5,
            window: 4,
            alpha: None,
            alpha_lower: None,
            alpha_upper: None,
            step_tol: None,
            max_iter: None,
            relative_tol: None,
            max_backtracks: 60,
            trials: 20,
            master_seed: 0,
            threads: 0,
            out_dir: PathBuf::from("results"),
            trace: false,
        }
    }
}

fn overlay(base: &mut Map<String, Value>, layer: Map<String, Value>, source: &str) -> Result<()> {
    for (key, value) in layer {
        if !base.contains_key(&key) {
            return Err(Error::InvalidConfig(format!(
                "unknown key `{key}` in {source}"
            )));
        }
        base.insert(key, value);
    }
    Ok(())
}

impl ExperimentConfig {
    /// Defaults, overlaid by the JSON object `file` (if any) and then by
    /// `env` pairs named `FRACPROX_<FIELD>`.
    pub fn layered<I>(file: Option<&str>, env: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let Value::Object(mut merged) =
            serde_json::to_value(Self::default()).expect("config serializes")
        else {
            unreachable!("config is a struct")
        };
        if let Some(text) = file {
            match serde_json::from_str::<Value>(text) {
                Ok(Value::Object(obj)) => overlay(&mut merged, obj, "config file")?,
                Ok(_) => {
                    return Err(Error::InvalidConfig(
                        "config file must hold a JSON object".into(),
                    ))
                }
                Err(e) => return Err(Error::InvalidConfig(format!("config file: {e}"))),
            }
        }
        let mut from_env = Map::new();
        for (name, raw) in env {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if !merged.contains_key(&key) {
                continue;
            }
            let value = serde_json::from_str(&raw).unwrap_or(Value::String(raw));
            from_env.insert(key, value);
        }
        overlay(&mut merged, from_env, "environment")?;
        serde_json::from_value(Value::Object(merged))
            .map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// [`Self::layered`] reading the file at `path` and the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let text = match path {
            Some(p) => Some(
                std::fs::read_to_string(p)
                    .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?,
            ),
            None => None,
        };
        Self::layered(text.as_deref(), std::env::vars())
    }

    /// Label used in the result table.
    pub fn experiment_id(&self) -> String {
        match self.experiment {
            Experiment::Sfda => format!("sfda-n{}-p{}-r{}", self.n, self.p, self.r),
            Experiment::L1l2 => format!(
                "l1l2-m{}-n{}-k{}-F{}",
                self.m, self.n, self.k, self.coherence
            ),
            Experiment::CustomSgep => format!("custom-sgep-r{}", self.r),
        }
    }

    pub fn sfda_recipe(&self, trial: u64) -> SfdaRecipe {
        SfdaRecipe {
            ridge: self.ridge,
            ..SfdaRecipe::new(self.n, self.p, self.r, self.master_seed, trial)
        }
    }

    pub fn recovery_recipe(&self, trial: u64) -> RecoveryRecipe {
        RecoveryRecipe {
            m: self.m,
            n: self.n,
            k: self.k,
            coherence: self.coherence,
            seed: self.master_seed,
            stream: trial,
        }
    }

    /// Fixed-step configuration for `problem` with this config's overrides.
    pub fn pgsa_config<P: FractionalProblem + ?Sized>(&self, problem: &P) -> PgsaConfig {
        let mut config = match self.experiment {
            Experiment::L1l2 => PgsaConfig::recovery(problem),
            _ => PgsaConfig::for_problem(problem),
        };
        if let Some(alpha) = self.alpha {
            config = config.with_alpha(alpha);
        }
        self.override_stopping(
            &mut config.max_iter,
            &mut config.step_tol,
            &mut config.stop_rule,
        );
        config
    }

    /// Line-search configuration for `problem` with this config's overrides.
    /// `pgsa_ml` always uses a window of zero.
    pub fn line_search_config<P: FractionalProblem + ?Sized>(
        &self,
        problem: &P,
    ) -> LineSearchConfig {
        let window = if self.solver == Method::PgsaNl {
            self.window
        } else {
            0
        };
        let mut config = match self.experiment {
            Experiment::L1l2 => LineSearchConfig::recovery(problem, window),
            _ => LineSearchConfig::for_problem(problem, window),
        };
        config.a = self.a;
        config.eta = self.eta;
        config.max_backtracks = self.max_backtracks;
        if let Some(lo) = self.alpha_lower {
            config.alpha_lower = lo;
            config.alpha_init = lo;
        }
        if let Some(hi) = self.alpha_upper {
            config.alpha_upper = hi;
        }
        self.override_stopping(
            &mut config.max_iter,
            &mut config.step_tol,
            &mut config.stop_rule,
        );
        config
    }

    fn override_stopping(&self, max_iter: &mut usize, step_tol: &mut f64, rule: &mut StopRule) {
        if let Some(v) = self.max_iter {
            *max_iter = v;
        }
        if let Some(v) = self.step_tol {
            *step_tol = v;
        }
        if let Some(v) = self.relative_tol {
            *rule = if v {
                StopRule::Relative
            } else {
                StopRule::Absolute
            };
        }
    }

    /// Run the configured solver on `problem` from `x0`.
    pub fn solve<P: FractionalProblem + ?Sized>(
        &self,
        problem: &P,
        x0: ndarray::ArrayView1<f64>,
        keep_iterates: bool,
    ) -> Result<SolverTrace> {
        match self.solver {
            Method::Pgsa => run_pgsa(
                problem,
                x0,
                &self.pgsa_config(problem).with_trace(keep_iterates),
            ),
            Method::PgsaMl | Method::PgsaNl => run_pgsa_ls(
                problem,
                x0,
                &self.line_search_config(problem).with_trace(keep_iterates),
            ),
        }
    }

    /// The trace metadata a run of the configured solver records on `problem`.
    pub fn trace_meta<P: FractionalProblem + ?Sized>(&self, problem: &P) -> TraceMeta {
        match self.solver {
            Method::Pgsa => self.pgsa_config(problem).trace_meta(problem),
            Method::PgsaMl | Method::PgsaNl => self.line_search_config(problem).trace_meta(problem),
        }
    }
}

/// Per-trial record written as one JSON line. Wall time is kept out so the
/// file is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub trial: u64,
    pub experiment: String,
    pub solver: Method,
    pub objective: f64,
    pub iterations: usize,
    pub converged_reason: StopReason,
    pub criticality_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub success: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l1_over_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub trial: u64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub trial: u64,
    pub error: String,
}

/// One completed trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: RunRecord,
    pub seconds: f64,
    pub trace: SolverTrace,
}

/// Problem instance for one trial plus its start point.
pub enum TrialProblem {
    Sgep(SgepProblem),
    L1l2 {
        problem: L1L2PenaltyProblem,
        truth: Array1<f64>,
    },
}

/// Build the trial's problem. `custom` carries the loaded matrices for
/// [`Experiment::CustomSgep`].
pub fn trial_problem(
    config: &ExperimentConfig,
    trial: u64,
    custom: Option<&SgepProblem>,
) -> Result<(TrialProblem, Array1<f64>)> {
    match config.experiment {
        Experiment::Sfda => {
            let inst = gen_sfda(&config.sfda_recipe(trial))?;
            let x0 = sgep_default_init(config.n, config.r);
            Ok((TrialProblem::Sgep(inst.problem), x0))
        }
        Experiment::L1l2 => {
            let inst = config.recovery_recipe(trial).generate()?;
            let problem = L1L2PenaltyProblem::with_unit_box(inst.a, inst.b, config.lambda)?;
            let x0 = initial_point(&problem, config.init_iterations)?;
            Ok((
                TrialProblem::L1l2 {
                    problem,
                    truth: inst.truth,
                },
                x0,
            ))
        }
        Experiment::CustomSgep => {
            let problem = custom
                .ok_or_else(|| {
                    Error::InvalidConfig("custom-sgep needs matrix_a and matrix_b".into())
                })?
                .clone();
            let x0 = custom_start(&problem, config.master_seed, trial)?;
            Ok((TrialProblem::Sgep(problem), x0))
        }
    }
}

/// Trial 0 starts at the canonical sparse point; later trials at the
/// projection of a Gaussian vector from stream `trial`.
pub fn custom_start(problem: &SgepProblem, seed: u64, trial: u64) -> Result<Array1<f64>> {
    if trial == 0 {
        return Ok(sgep_default_init(problem.n(), problem.r()));
    }
    let mut stream = Stream::new(seed, trial);
    let z = Array1::from_shape_simple_fn(problem.n(), || stream.normal());
    project_sparse_sphere(z.view(), problem.r())
}

pub fn run_trial(
    config: &ExperimentConfig,
    trial: u64,
    custom: Option<&SgepProblem>,
) -> Result<TrialOutcome> {
    let (problem, x0) = trial_problem(config, trial, custom)?;
    let keep = config.trace;
    let start = Instant::now();
    let trace = match &problem {
        TrialProblem::Sgep(p) => config.solve(p, x0.view(), keep)?,
        TrialProblem::L1l2 { problem, .. } => config.solve(problem, x0.view(), keep)?,
    };
    let seconds = start.elapsed().as_secs_f64();
    let cert = &trace.certificate;
    let mut record = RunRecord {
        trial,
        experiment: config.experiment_id(),
        solver: config.solver,
        objective: cert.objective,
        iterations: cert.iterations,
        converged_reason: cert.converged_reason,
        criticality_residual: cert
            .criticality_residual
            .is_finite()
            .then_some(cert.criticality_residual),
        relative_error: None,
        success: None,
        l1_over_l2: None,
    };
    if let TrialProblem::L1l2 { truth, .. } = &problem {
        let report = RecoveryReport::new(
            trace.final_point.view(),
            truth.view(),
            seconds,
            cert.iterations,
        );
        record.relative_error = Some(report.relative_error);
        record.success = Some(report.success);
        record.l1_over_l2 = Some(l1_over_l2(trace.final_point.view()));
    }
    Ok(TrialOutcome {
        record,
        seconds,
        trace,
    })
}

/// Aggregate over the completed trials of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub solver: Method,
    /// Completed trials the means are taken over.
    pub trials: usize,
    pub failed: usize,
    pub mean_objective: f64,
    /// Seconds, excluding problem construction and Lipschitz estimation.
    pub mean_time: f64,
    /// Fraction of successful recoveries (`l1l2` only).
    pub success_rate: Option<f64>,
    /// Mean `|x|_1 / |x|_2` over the successful recoveries (`l1l2` only).
    pub mean_l1_over_l2: Option<f64>,
    pub mean_iterations: f64,
}

pub const RESULT_HEADER: [&str; 9] = [
    "experiment",
    "solver",
    "trials",
    "failed",
    "mean_objective",
    "mean_time",
    "success_rate",
    "mean_l1_over_l2",
    "mean_iterations",
];

impl ResultRow {
    /// Aggregate `records` and their `timings` (matched by position).
    pub fn aggregate(
        config: &ExperimentConfig,
        records: &[RunRecord],
        timings: &[TimingRecord],
        failed: usize,
    ) -> Self {
        let count = records.len();
        let mean = |f: &dyn Fn(&RunRecord) -> f64| {
            if count == 0 {
                f64::NAN
            } else {
                records.iter().map(f).sum::<f64>() / count as f64
            }
        };
        let (success_rate, mean_l1_over_l2) = if config.experiment == Experiment::L1l2 && count > 0
        {
            let hits: Vec<&RunRecord> =
                records.iter().filter(|r| r.success == Some(true)).collect();
            let ratio = if hits.is_empty() {
                None
            } else {
                Some(hits.iter().filter_map(|r| r.l1_over_l2).sum::<f64>() / hits.len() as f64)
            };
            (Some(hits.len() as f64 / count as f64), ratio)
        } else {
            (None, None)
        };
        Self {
            experiment: config.experiment_id(),
            solver: config.solver,
            trials: count,
            failed,
            mean_objective: mean(&|r| r.objective),
            mean_time: if count == 0 {
                f64::NAN
            } else {
                timings.iter().map(|t| t.seconds).sum::<f64>() / count as f64
            },
            success_rate,
            mean_l1_over_l2,
            mean_iterations: mean(&|r| r.iterations as f64),
        }
    }
}

/// Everything a benchmark produced.
#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub row: Option<ResultRow>,
    pub records: Vec<RunRecord>,
    pub timings: Vec<TimingRecord>,
    pub failures: Vec<FailureRecord>,
}

/// Run all trials in parallel and aggregate in trial order.
pub fn run_bench(
    config: &ExperimentConfig,
    custom: Option<&SgepProblem>,
) -> Result<(BenchOutput, Vec<(u64, SolverTrace)>)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let outcomes: Vec<(u64, Result<TrialOutcome>)> = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|t| (t, run_trial(config, t, custom)))
            .collect()
    });

    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut failures = Vec::new();
    let mut traces = Vec::new();
    for (trial, outcome) in outcomes {
        match outcome {
            Ok(o) => {
                records.push(o.record);
                timings.push(TimingRecord {
                    trial,
                    seconds: o.seconds,
                });
                traces.push((trial, o.trace));
            }
            Err(e) => {
                log::warn!("trial {trial} failed: {e}");
                failures.push(FailureRecord {
                    trial,
                    error: e.to_string(),
                });
            }
        }
    }
    let row = (config.trials > 0)
        .then(|| ResultRow::aggregate(config, &records, &timings, failures.len()));
    Ok((
        BenchOutput {
            row,
            records,
            timings,
            failures,
        },
        traces,
    ))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write `results.csv`, `runs.jsonl`, `timings.jsonl` and `failures.jsonl`
/// into `dir`.
pub fn write_bench_output(dir: &Path, out: &BenchOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut table = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(dir.join("results.csv"))?;
    table.write_record(RESULT_HEADER)?;
    if let Some(row) = &out.row {
        table.write_record([
            row.experiment.clone(),
            row.solver.to_string(),
            row.trials.to_string(),
            row.failed.to_string(),
            row.mean_objective.to_string(),
            row.mean_time.to_string(),
            fmt_opt(row.success_rate),
            fmt_opt(row.mean_l1_over_l2),
            row.mean_iterations.to_string(),
        ])?;
    }
    table.flush()?;
    write_jsonl(&dir.join("runs.jsonl"), &out.records)?;
    write_jsonl(&dir.join("timings.jsonl"), &out.timings)?;
    write_jsonl(&dir.join("failures.jsonl"), &out.failures)?;
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut file, item)?;
        file.write_all(b"\n")?;
    }
    file.flush()
}

/// Problem files for one generated trial.
pub enum Generated {
    Sgep {
        a: Array2<f64>,
        b: Array2<f64>,
    },
    L1l2 {
        a: Array2<f64>,
        b: Array1<f64>,
        truth: Array1<f64>,
    },
}

pub fn generate(config: &ExperimentConfig, trial: u64) -> Result<Generated> {
    match config.experiment {
        Experiment::Sfda => {
            let inst = gen_sfda(&config.sfda_recipe(trial))?;
            Ok(Generated::Sgep {
                a: inst.problem.a().to_owned(),
                b: inst.problem.b().to_owned(),
            })
        }
        Experiment::L1l2 => {
            let inst = config.recovery_recipe(trial).generate()?;
            Ok(Generated::L1l2 {
                a: inst.a,
                b: inst.b,
                truth: inst.truth,
            })
        }
        Experiment::CustomSgep => Err(Error::InvalidConfig(
            "custom-sgep reads its matrices from files; nothing to generate".into(),
        )),
    }
}
