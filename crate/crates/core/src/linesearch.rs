//! PGSA with backtracking line search.
//!
//! A trial point `x~ = prox_{alpha f}(x - alpha grad h + alpha c y)` is
//! accepted once it lies in `dom F` and
//!
//! ```text
//! F(x~) <= max_{[k-N]+ <= j <= k} c_j - (a/2) |x~ - x^k|^2
//! ```
//!
//! Otherwise `alpha` shrinks by `eta`. `N = 0` gives the monotone variant
//! (PGSA_ML), `N > 0` the nonmonotone one (PGSA_NL). The first trial step of
//! every iteration after the first is a Barzilai–Borwein estimate of `1/L`.

use std::collections::VecDeque;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::pgsa::{step_from, StopRule};
use crate::problem::{eval_objective, Certificate, FirstOrder, FractionalProblem, StopReason};
use crate::trace::{IterationRecord, Method, SolverTrace, TraceBuilder, TraceMeta};

/// Relative rounding allowance in the acceptance test. Without it a step of
/// length ~1e-10 can be rejected on floating-point noise alone.
pub const ACCEPT_ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSearchConfig {
    /// Decrease coefficient `a`.
    pub a: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    /// First trial step of the first iteration.
    pub alpha_init: f64,
    /// Backtracking factor.
    pub eta: f64,
    /// Nonmonotone memory `N`.
    pub window: usize,
    pub max_iter: usize,
    pub step_tol: f64,
    pub stop_rule: StopRule,
    pub max_backtracks: usize,
    pub record_trace: bool,
}

impl LineSearchConfig {
    /// `a = 1e-3`, `eta = 0.5`, upper step `1e8`, lower and initial step
    /// `0.99/L` (`1.99/L` for convex `f`), `2n` iterations, absolute step
    /// tolerance `1e-6`.
    pub fn for_problem<P: FractionalProblem + ?Sized>(problem: &P, window: usize) -> Self {
        let factor = if problem.f_is_convex() { 1.99 } else { 0.99 };
        let alpha = factor / problem.lipschitz();
        Self {
            a: 1e-3,
            alpha_lower: alpha,
            alpha_upper: 1e8,
            alpha_init: alpha,
            eta: 0.5,
            window,
            max_iter: 2 * problem.dim(),
            step_tol: 1e-6,
            stop_rule: StopRule::Absolute,
            max_backtracks: 60,
            record_trace: false,
        }
    }

    /// Monotone line search (`N = 0`).
    pub fn monotone<P: FractionalProblem + ?Sized>(problem: &P) -> Self {
        Self::for_problem(problem, 0)
    }

    /// Nonmonotone line search with `N = 4`.
    pub fn nonmonotone<P: FractionalProblem + ?Sized>(problem: &P) -> Self {
        Self::for_problem(problem, 4)
    }

    /// Recovery setting: relative step change `1e-8` or `10n` iterations.
    pub fn recovery<P: FractionalProblem + ?Sized>(problem: &P, window: usize) -> Self {
        Self {
            max_iter: 10 * problem.dim(),
            step_tol: 1e-8,
            stop_rule: StopRule::Relative,
            ..Self::for_problem(problem, window)
        }
    }

    pub fn with_step_tol(mut self, tol: f64) -> Self {
        self.step_tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_trace(mut self, record: bool) -> Self {
        self.record_trace = record;
        self
    }

    pub fn method(&self) -> Method {
        if self.window == 0 {
            Method::PgsaMl
        } else {
            Method::PgsaNl
        }
    }

    /// The metadata a run with this configuration records.
    pub fn trace_meta<P: FractionalProblem + ?Sized>(&self, problem: &P) -> TraceMeta {
        TraceMeta {
            method: self.method(),
            lipschitz: problem.lipschitz(),
            f_is_convex: problem.f_is_convex(),
            level_set_bound: problem.level_set_bound(),
            alpha_lower: self.alpha_lower,
            alpha_upper: self.alpha_upper,
            decrease: Some(self.a),
            eta: Some(self.eta),
            window: self.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(Error::InvalidConfig("a must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta {} not in (0, 1)",
                self.eta
            )));
        }
        if !(self.alpha_lower > 0.0 && self.alpha_lower <= self.alpha_upper) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < alpha_lower <= alpha_upper, got [{}, {}]",
                self.alpha_lower, self.alpha_upper
            )));
        }
        if !(self.alpha_lower <= self.alpha_init && self.alpha_init <= self.alpha_upper) {
            return Err(Error::InvalidConfig(format!(
                "alpha_init {} outside [{}, {}]",
                self.alpha_init, self.alpha_lower, self.alpha_upper
            )));
        }
        if !(self.step_tol >= 0.0) {
            return Err(Error::InvalidConfig("step_tol must be nonnegative".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// The last `N + 1` accepted objective values.
#[derive(Debug, Clone)]
pub struct ObjectiveWindow {
    values: VecDeque<f64>,
    capacity: usize,
}

impl ObjectiveWindow {
    /// A window of memory `n` (holding `n + 1` values) seeded with `c0`.
    pub fn new(n: usize, c0: f64) -> Self {
        let mut values = VecDeque::with_capacity(n + 1);
        values.push_back(c0);
        Self {
            values,
            capacity: n + 1,
        }
    }

    pub fn push(&mut self, c: f64) {
        if self.values.len() == self.capacity {
            self.values.pop_front();
        }
        self.values.push_back(c);
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Barzilai–Borwein initial step `|dx|^2 / |<dx, dh>|`, clamped to
/// `[alpha_lower, alpha_upper]`; `alpha_upper` when `<dx, dh> = 0`.
pub fn bb_initial_step(
    dx: ArrayView1<f64>,
    dh: ArrayView1<f64>,
    alpha_lower: f64,
    alpha_upper: f64,
) -> f64 {
    let inner = dx.dot(&dh);
    if inner == 0.0 {
        return alpha_upper;
    }
    let raw = dx.dot(&dx) / inner.abs();
    raw.min(alpha_upper).max(alpha_lower)
}

/// An accepted line-search step.
#[derive(Debug, Clone)]
pub struct LineSearchOutcome {
    pub point: Array1<f64>,
    pub alpha: f64,
    pub backtracks: usize,
    pub first_order: FirstOrder,
}

/// Backtrack from `alpha0` until the trial point passes the acceptance test
/// against `window`.
pub fn line_search_step<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
    window: &ObjectiveWindow,
    alpha0: f64,
    config: &LineSearchConfig,
) -> Result<LineSearchOutcome> {
    let fo = problem.first_order(x)?;
    if !fo.objective.in_domain {
        return Err(Error::Domain(
            "line search from a point outside dom F".into(),
        ));
    }
    search_from(problem, x, &fo, window.max(), alpha0, config, 0)
}

fn search_from<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
    fo: &FirstOrder,
    reference: f64,
    alpha0: f64,
    config: &LineSearchConfig,
    iteration: usize,
) -> Result<LineSearchOutcome> {
    let slack = ACCEPT_ROUNDING * (1.0 + reference.abs());
    let mut alpha = alpha0;
    for m in 0..=config.max_backtracks {
        let trial = step_from(problem, x, fo, alpha)?;
        let trial_fo = problem.first_order(trial.view())?;
        if trial_fo.objective.in_domain {
            let d = norm2((&trial - &x).view());
            let bound = reference - 0.5 * config.a * d * d;
            if trial_fo.objective.value <= bound + slack {
                return Ok(LineSearchOutcome {
                    point: trial,
                    alpha,
                    backtracks: m,
                    first_order: trial_fo,
                });
            }
        }
        alpha *= config.eta;
    }
    Err(Error::LineSearchFailure {
        iteration,
        backtracks: config.max_backtracks,
    })
}

/// Run PGSA with line search from `x0`.
pub fn run_pgsa_ls<P: FractionalProblem + ?Sized>(
    problem: &P,
    x0: ArrayView1<f64>,
    config: &LineSearchConfig,
) -> Result<SolverTrace> {
    config.validate()?;
    let start = eval_objective(problem, x0)?;
    if !start.in_domain {
        return Err(Error::Domain("initial point is outside dom F".into()));
    }
    let meta = config.trace_meta(problem);

    let mut x = x0.to_owned();
    let mut builder = TraceBuilder::new(meta, &x, start.value, config.record_trace);
    let mut fo = problem.first_order(x.view())?;
    let mut window = ObjectiveWindow::new(config.window, fo.objective.value);
    let mut prev: Option<(Array1<f64>, Array1<f64>)> = None;
    let mut reason = StopReason::MaxIter;
    let mut iterations = 0;

    for k in 1..=config.max_iter {
        let alpha0 = match &prev {
            None => config.alpha_init,
            Some((x_prev, grad_prev)) => bb_initial_step(
                (&x - x_prev).view(),
                (&fo.grad_h - grad_prev).view(),
                config.alpha_lower,
                config.alpha_upper,
            ),
        };
        let outcome = search_from(problem, x.view(), &fo, window.max(), alpha0, config, k)?;
        let step_norm = norm2((&outcome.point - &x).view());
        let value = outcome.first_order.objective.value;
        builder.push(
            IterationRecord {
                k,
                objective: value,
                alpha: outcome.alpha,
                step_norm,
                denominator: outcome.first_order.objective.denominator,
                backtracks: outcome.backtracks,
            },
            &outcome.point,
        );
        window.push(value);
        iterations = k;
        let measured = config.stop_rule.measure(step_norm, outcome.point.view());
        let old_x = std::mem::replace(&mut x, outcome.point);
        let old_fo = std::mem::replace(&mut fo, outcome.first_order);
        prev = Some((old_x, old_fo.grad_h));
        if measured <= config.step_tol {
            reason = StopReason::StepTol;
            break;
        }
    }

    let certificate = Certificate::new(problem, x.view(), fo.objective.value, iterations, reason);
    Ok(builder.finish(x, certificate))
}
