//! Independent checks on solver output: finite-difference gradient checks,
//! per-iteration audits of the decrease conditions, and empirical linear
//! rate fits on iterate sequences.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pgsa::{decrease_coefficient, DECREASE_SLACK};
use crate::trace::{IterationRecord, Method, SolverTrace, TraceMeta};

/// Absolute slack on the line-search step-size floor.
pub const STEP_FLOOR_SLACK: f64 = 1e-12;

/// `max_i |central difference_i - analytic_i| / (1 + |analytic_i|)` with
/// per-coordinate step `step * (1 + |x|_inf)`.
pub fn fd_gradient_check<H, G>(h_eval: H, h_grad: G, x: ArrayView1<f64>, step: f64) -> f64
where
    H: Fn(ArrayView1<f64>) -> f64,
    G: Fn(ArrayView1<f64>) -> Array1<f64>,
{
    let scale = 1.0 + x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let h = step * scale;
    let analytic = h_grad(x);
    let mut probe = x.to_owned();
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = h_eval(probe.view());
        probe[i] = orig - h;
        let down = h_eval(probe.view());
        probe[i] = orig;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - analytic[i]).abs() / (1.0 + analytic[i].abs()));
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Iterate with infinite or NaN objective.
    Domain,
    /// Fixed-step decrease inequality.
    SufficientDecrease,
    /// Line-search acceptance inequality against the window maximum.
    Acceptance,
    /// Windowed maximum increased.
    WindowedMax,
    /// Objective above the initial value.
    LevelSet,
    /// Step size outside its admissible range.
    StepSize,
    /// More backtracks than the theoretical cap.
    Backtracks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub iteration: usize,
    pub kind: ViolationKind,
    /// How far the inequality is off, in its own units.
    pub magnitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checked_iterations: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct iteration indices with at least one violation.
    pub fn flagged_iterations(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.violations.iter().map(|v| v.iteration).collect();
        ks.dedup();
        ks
    }
}

/// Line-search step-size floor `eta / (a M + L)`.
pub fn step_floor(meta: &TraceMeta) -> Option<f64> {
    let m = meta.level_set_bound?;
    let a = meta.decrease?;
    let eta = meta.eta?;
    Some(eta / (a * m + meta.lipschitz))
}

/// Cap on backtracks per iteration, `ceil(-log(alpha_upper (a M + L)) / log eta + 1)`.
pub fn backtrack_cap(meta: &TraceMeta) -> Option<usize> {
    let m = meta.level_set_bound?;
    let a = meta.decrease?;
    let eta = meta.eta?;
    let t = (-(meta.alpha_upper * (a * m + meta.lipschitz)).ln() / eta.ln() + 1.0).ceil();
    Some(t.max(0.0) as usize)
}

/// Re-verify a trace iteration by iteration under the rules of `mode`.
pub fn audit_trace(trace: &SolverTrace, mode: Method) -> AuditReport {
    audit_records(&trace.meta, trace.initial_objective, &trace.records, mode)
}

/// [`audit_trace`] on raw records, e.g. read back from a trace file.
pub fn audit_records(
    meta: &TraceMeta,
    initial_objective: f64,
    records: &[IterationRecord],
    mode: Method,
) -> AuditReport {
    let mut violations = Vec::new();
    let mut flag = |iteration, kind, magnitude| {
        violations.push(Violation {
            iteration,
            kind,
            magnitude,
        })
    };
    let slack = |v: f64| DECREASE_SLACK * (1.0 + v.abs());
    let floor = step_floor(meta);
    let cap = backtrack_cap(meta);
    let n_window = if mode == Method::PgsaMl {
        0
    } else {
        meta.window
    };

    let mut history = vec![initial_objective];
    let mut prev_window_max = initial_objective;
    for rec in records {
        let k = rec.k;
        let prev = *history.last().unwrap();
        if !rec.objective.is_finite() {
            flag(k, ViolationKind::Domain, f64::INFINITY);
            history.push(rec.objective);
            continue;
        }
        let s2 = rec.step_norm * rec.step_norm;
        match mode {
            Method::Pgsa => {
                let kappa = decrease_coefficient(
                    rec.alpha,
                    meta.lipschitz,
                    rec.denominator,
                    meta.f_is_convex,
                );
                let excess = rec.objective + kappa * s2 - prev;
                if excess > slack(prev) {
                    flag(k, ViolationKind::SufficientDecrease, excess);
                }
                let tol = 1e-15 * meta.alpha_upper;
                if rec.alpha < meta.alpha_lower - tol || rec.alpha > meta.alpha_upper + tol {
                    flag(k, ViolationKind::StepSize, rec.alpha);
                }
            }
            Method::PgsaMl | Method::PgsaNl => {
                let start = history.len().saturating_sub(n_window + 1);
                let reference = history[start..]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                let a = meta.decrease.unwrap_or(0.0);
                let excess = rec.objective + 0.5 * a * s2 - reference;
                if excess > slack(reference) {
                    flag(k, ViolationKind::Acceptance, excess);
                }
                if let Some(floor) = floor {
                    if rec.alpha < floor - STEP_FLOOR_SLACK {
                        flag(k, ViolationKind::StepSize, floor - rec.alpha);
                    }
                }
                if let Some(cap) = cap {
                    if rec.backtracks > cap {
                        flag(k, ViolationKind::Backtracks, (rec.backtracks - cap) as f64);
                    }
                }
                if rec.objective > initial_objective + slack(initial_objective) {
                    flag(
                        k,
                        ViolationKind::LevelSet,
                        rec.objective - initial_objective,
                    );
                }
            }
        }
        history.push(rec.objective);
        let start = history.len().saturating_sub(n_window + 1);
        let window_max = history[start..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if mode != Method::Pgsa && window_max > prev_window_max + slack(prev_window_max) {
            flag(k, ViolationKind::WindowedMax, window_max - prev_window_max);
        }
        prev_window_max = window_max;
    }
    AuditReport {
        checked_iterations: records.len(),
        violations,
    }
}

/// Least-squares fit of `ln |x^k - x*|` against `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Per-iteration change of the log error; negative for convergence.
    pub slope: f64,
    pub r_squared: f64,
    /// Iteration range `[start, end)` used by the fit.
    pub window: (usize, usize),
}

impl RateFit {
    /// Contraction factor per iteration, `exp(slope)`.
    pub fn factor(&self) -> f64 {
        self.slope.exp()
    }
}

/// Number of trailing iterations left out of a rate fit.
pub const RATE_FIT_TAIL: usize = 5;
/// Minimum sequence length for a rate fit.
pub const RATE_FIT_MIN_LEN: usize = 30;

/// Rate fit on a trace with recorded iterates, taking the final point as
/// the limit.
pub fn fit_linear_rate(trace: &SolverTrace) -> Result<RateFit> {
    let errors = trace
        .errors_to_final()
        .ok_or_else(|| Error::InsufficientData("trace was recorded without iterates".into()))?;
    fit_linear_rate_errors(&errors)
}

/// Rate fit on `e_k = |x^k - x*|`, using the last two thirds of the sequence
/// minus the final five entries. Zero errors are skipped.
pub fn fit_linear_rate_errors(errors: &[f64]) -> Result<RateFit> {
    let len = errors.len();
    if len < RATE_FIT_MIN_LEN {
        return Err(Error::InsufficientData(format!(
            "{len} iterates, need at least {RATE_FIT_MIN_LEN}"
        )));
    }
    let start = len / 3;
    let end = len - RATE_FIT_TAIL;
    let points: Vec<(f64, f64)> = (start..end)
        .filter(|&k| errors[k] > 0.0 && errors[k].is_finite())
        .map(|k| (k as f64, errors[k].ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientData(
            "fewer than three nonzero errors in the fit window".into(),
        ));
    }
    let count = points.len() as f64;
    let mean_k = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_e = points.iter().map(|p| p.1).sum::<f64>() / count;
    let mut skk = 0.0;
    let mut ske = 0.0;
    let mut see = 0.0;
    for &(k, e) in &points {
        skk += (k - mean_k) * (k - mean_k);
        ske += (k - mean_k) * (e - mean_e);
        see += (e - mean_e) * (e - mean_e);
    }
    let spread = points.iter().any(|p| p.1 != points[0].1);
    if !spread || see <= 0.0 || skk <= 0.0 {
        return Err(Error::InsufficientData(
            "log errors are constant; R^2 undefined".into(),
        ));
    }
    let slope = ske / skk;
    let r_squared = ((ske * ske) / (skk * see)).clamp(0.0, 1.0);
    Ok(RateFit {
        slope,
        r_squared,
        window: (start, end),
    })
}
