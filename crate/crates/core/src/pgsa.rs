//! Fixed-step proximity-gradient-subgradient iteration (PGSA).
//!
//! Each iteration linearizes around the current ratio `c_k = F(x^k)`:
//!
//! ```text
//! y      in  dg(x^k)
//! x^{k+1} in prox_{alpha f}(x^k - alpha grad h(x^k) + alpha c_k y)
//! ```
//!
//! With `alpha < 1/L` (or `< 2/L` when `f` is convex) every iterate stays in
//! the domain of `F` and the objective decreases by at least
//! `(1/alpha - L) / (2 g(x^{k+1})) |x^{k+1} - x^k|^2` per step.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::problem::{eval_objective, Certificate, FirstOrder, FractionalProblem, StopReason};
use crate::trace::{IterationRecord, Method, SolverTrace, TraceBuilder, TraceMeta};

/// How the step-length stopping test is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `|x^k - x^{k-1}|_2 <= step_tol`
    Absolute,
    /// `|x^k - x^{k-1}|_2 / |x^k|_2 <= step_tol`
    Relative,
}

impl StopRule {
    pub(crate) fn measure(self, step_norm: f64, x: ArrayView1<f64>) -> f64 {
        match self {
            StopRule::Absolute => step_norm,
            StopRule::Relative => {
                let nx = norm2(x);
                if nx > 0.0 {
                    step_norm / nx
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

/// Slack used when checking the sufficient-decrease inequality.
pub const DECREASE_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgsaConfig {
    /// Constant step size.
    pub alpha: f64,
    pub alpha_lower: f64,
    pub alpha_upper: f64,
    pub max_iter: usize,
    pub step_tol: f64,
    pub stop_rule: StopRule,
    /// Keep every iterate in the trace.
    pub record_trace: bool,
}

impl PgsaConfig {
    /// Step `0.99/L` (`1.99/L` for convex `f`), `2n` iterations, absolute step
    /// tolerance `1e-6`.
    pub fn for_problem<P: FractionalProblem + ?Sized>(problem: &P) -> Self {
        let factor = if problem.f_is_convex() { 1.99 } else { 0.99 };
        let alpha = factor / problem.lipschitz();
        Self {
            alpha,
            alpha_lower: alpha,
            alpha_upper: alpha,
            max_iter: 2 * problem.dim(),
            step_tol: 1e-6,
            stop_rule: StopRule::Absolute,
            record_trace: false,
        }
    }

    /// The setting used for recovery runs: relative step change `1e-8` or
    /// `10n` iterations.
    pub fn recovery<P: FractionalProblem + ?Sized>(problem: &P) -> Self {
        Self {
            max_iter: 10 * problem.dim(),
            step_tol: 1e-8,
            stop_rule: StopRule::Relative,
            ..Self::for_problem(problem)
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self.alpha_lower = alpha;
        self.alpha_upper = alpha;
        self
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

    /// The metadata a run with this configuration records.
    pub fn trace_meta<P: FractionalProblem + ?Sized>(&self, problem: &P) -> TraceMeta {
        TraceMeta {
            method: Method::Pgsa,
            lipschitz: problem.lipschitz(),
            f_is_convex: problem.f_is_convex(),
            level_set_bound: problem.level_set_bound(),
            alpha_lower: self.alpha_lower,
            alpha_upper: self.alpha_upper,
            decrease: None,
            eta: None,
            window: 0,
        }
    }

    pub fn validate(&self, lipschitz: f64, f_is_convex: bool) -> Result<()> {
        let cap_factor = if f_is_convex { 2.0 } else { 1.0 };
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            )));
        }
        let cap = cap_factor / lipschitz;
        if !(self.alpha_lower > 0.0) {
            return Err(Error::InvalidConfig("alpha_lower must be positive".into()));
        }
        if !(self.alpha_lower <= self.alpha && self.alpha <= self.alpha_upper) {
            return Err(Error::InvalidConfig(format!(
                "alpha {} outside [{}, {}]",
                self.alpha, self.alpha_lower, self.alpha_upper
            )));
        }
        if !(self.alpha_upper < cap) {
            return Err(Error::InvalidConfig(format!(
                "alpha_upper {} must be below {}/L = {}",
                self.alpha_upper, cap_factor, cap
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

/// Coefficient `kappa` in `F(x+) + kappa |x+ - x|^2 <= F(x)`.
pub fn decrease_coefficient(
    alpha: f64,
    lipschitz: f64,
    denominator: f64,
    f_is_convex: bool,
) -> f64 {
    if f_is_convex {
        (1.0 / alpha - lipschitz / 2.0) / denominator
    } else {
        (1.0 / alpha - lipschitz) / (2.0 * denominator)
    }
}

/// One PGSA step from `x`.
pub fn pgsa_step<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
    alpha: f64,
) -> Result<Array1<f64>> {
    let fo = problem.first_order(x)?;
    if !fo.objective.in_domain {
        return Err(Error::Domain(format!(
            "PGSA step requested at a point with F(x) = {}",
            fo.objective.value
        )));
    }
    step_from(problem, x, &fo, alpha)
}

/// The prox step given precomputed first-order information at `x`.
pub(crate) fn step_from<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
    fo: &FirstOrder,
    alpha: f64,
) -> Result<Array1<f64>> {
    let c = fo.objective.value;
    let mut anchor = x.to_owned();
    anchor.scaled_add(-alpha, &fo.grad_h);
    anchor.scaled_add(alpha * c, &fo.subgrad_g);
    problem.prox_f(alpha, anchor.view())
}

/// Run PGSA from `x0` with a constant step size.
pub fn run_pgsa<P: FractionalProblem + ?Sized>(
    problem: &P,
    x0: ArrayView1<f64>,
    config: &PgsaConfig,
) -> Result<SolverTrace> {
    let lipschitz = problem.lipschitz();
    let convex = problem.f_is_convex();
    config.validate(lipschitz, convex)?;
    let start = eval_objective(problem, x0)?;
    if !start.in_domain {
        return Err(Error::Domain("initial point is outside dom F".into()));
    }

    let meta = config.trace_meta(problem);
    let mut x = x0.to_owned();
    let mut builder = TraceBuilder::new(meta, &x, start.value, config.record_trace);
    let mut fo = problem.first_order(x.view())?;
    let alpha = config.alpha;
    let mut reason = StopReason::MaxIter;
    let mut iterations = 0;

    for k in 1..=config.max_iter {
        let next = step_from(problem, x.view(), &fo, alpha)?;
        let next_fo = problem.first_order(next.view())?;
        if !next_fo.objective.in_domain {
            log::warn!("PGSA iterate {k} left the domain; stopping");
            reason = StopReason::DomainError;
            break;
        }
        let step_norm = norm2((&next - &x).view());
        let prev_value = fo.objective.value;
        let value = next_fo.objective.value;
        let kappa = decrease_coefficient(alpha, lipschitz, next_fo.objective.denominator, convex);
        let excess = value + kappa * step_norm * step_norm - prev_value;
        if excess > DECREASE_SLACK * (1.0 + prev_value.abs()) {
            log::warn!("sufficient decrease violated at iteration {k} by {excess:e}");
            debug_assert!(
                false,
                "sufficient decrease violated at iteration {k} by {excess:e}"
            );
        }
        builder.push(
            IterationRecord {
                k,
                objective: value,
                alpha,
                step_norm,
                denominator: next_fo.objective.denominator,
                backtracks: 0,
            },
            &next,
        );
        iterations = k;
        let measured = config.stop_rule.measure(step_norm, next.view());
        x = next;
        fo = next_fo;
        if measured <= config.step_tol {
            reason = StopReason::StepTol;
            break;
        }
    }

    let certificate = Certificate::new(problem, x.view(), fo.objective.value, iterations, reason);
    Ok(builder.finish(x, certificate))
}
