//! The abstract single-ratio fractional problem `min (f + h) / g`.
//!
//! `f` is proper, lower semicontinuous and accessed only through its
//! proximity operator; `h` is smooth with an `L`-Lipschitz gradient; `g` is
//! convex and finite everywhere. A point is in the domain of the objective
//! when `f(x)` is finite and `g(x)` is (numerically) positive.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale-aware threshold below which a denominator counts as zero.
pub fn domain_eps(numerator: f64) -> f64 {
    1e-14 * (1.0 + numerator.abs())
}

/// First-order oracle access to a fractional problem.
///
/// Implementations must be immutable after construction; every method is a
/// pure function of `(self, x)`.
pub trait FractionalProblem: Sync {
    fn dim(&self) -> usize;

    /// `f(x)`, or `+inf` outside `dom f`.
    fn eval_f(&self, x: ArrayView1<f64>) -> f64;

    fn eval_h(&self, x: ArrayView1<f64>) -> f64;

    fn grad_h(&self, x: ArrayView1<f64>) -> Array1<f64>;

    /// Lipschitz constant of `grad_h`.
    fn lipschitz(&self) -> f64;

    fn eval_g(&self, x: ArrayView1<f64>) -> f64;

    /// One deterministic element of the subdifferential of `g` at `x`.
    fn subgrad_g(&self, x: ArrayView1<f64>) -> Array1<f64>;

    /// A minimizer of `f(y) + |y - z|^2 / (2 alpha)`. Set-valued cases resolve
    /// to one deterministic element.
    fn prox_f(&self, alpha: f64, z: ArrayView1<f64>) -> Result<Array1<f64>>;

    /// Enables the `2/L` step-size regime.
    fn f_is_convex(&self) -> bool {
        false
    }

    /// An upper bound on `g` over the initial level set, when one is known in
    /// closed form. Used by the line-search step-size floor.
    fn level_set_bound(&self) -> Option<f64> {
        None
    }

    /// Objective value together with `grad_h` and a subgradient of `g`.
    ///
    /// Override when the pieces share work (e.g. matrix-vector products).
    fn first_order(&self, x: ArrayView1<f64>) -> Result<FirstOrder> {
        let objective = eval_objective(self, x)?;
        Ok(FirstOrder {
            objective,
            grad_h: self.grad_h(x),
            subgrad_g: self.subgrad_g(x),
        })
    }

    /// Distance from criticality at `x`.
    ///
    /// The default is the norm of the proximal-gradient mapping at step
    /// `0.99/L`, which vanishes exactly at fixed points of the PGSA step.
    /// Problems with an explicit subdifferential override this.
    fn criticality_residual(&self, x: ArrayView1<f64>) -> Result<f64> {
        let alpha = 0.99 / self.lipschitz();
        let next = crate::pgsa::pgsa_step(self, x, alpha)?;
        Ok((&next - &x).mapv(|v| v * v).sum().sqrt() / alpha)
    }
}

/// The value of `F = (f + h) / g` together with its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedObjective {
    pub value: f64,
    pub in_domain: bool,
    pub numerator: f64,
    pub denominator: f64,
}

impl ExtendedObjective {
    /// Assemble from `f(x)`, `h(x)` and `g(x)`. NaN in any part is an error.
    pub fn from_parts(f: f64, h: f64, g: f64) -> Result<Self> {
        if f.is_nan() {
            return Err(Error::NonFinite("f"));
        }
        if !h.is_finite() {
            return Err(Error::NonFinite("h"));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("g"));
        }
        let numerator = f + h;
        let in_domain = f.is_finite() && g > domain_eps(numerator);
        let value = if in_domain {
            numerator / g
        } else {
            f64::INFINITY
        };
        Ok(Self {
            value,
            in_domain,
            numerator,
            denominator: g,
        })
    }
}

/// Objective information at a point: `F(x)`, `grad h(x)` and `y in dg(x)`.
#[derive(Debug, Clone)]
pub struct FirstOrder {
    pub objective: ExtendedObjective,
    pub grad_h: Array1<f64>,
    pub subgrad_g: Array1<f64>,
}

/// Evaluate the extended-valued objective. Out-of-domain points give `+inf`.
pub fn eval_objective<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
) -> Result<ExtendedObjective> {
    check_point(problem, x)?;
    let f = problem.eval_f(x);
    let h = problem.eval_h(x);
    let g = problem.eval_g(x);
    ExtendedObjective::from_parts(f, h, g)
}

fn check_point<P: FractionalProblem + ?Sized>(problem: &P, x: ArrayView1<f64>) -> Result<()> {
    if x.len() != problem.dim() {
        return Err(Error::Domain(format!(
            "point has dimension {}, problem has {}",
            x.len(),
            problem.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("input point"));
    }
    Ok(())
}

/// `|g (v + grad h) - (f + h) grad g| / g^2`: the norm of the Fréchet
/// subgradient of `F` at `x` built from `v in ∂f(x)` by the quotient rule.
///
/// `g` must be differentiable at `x`; `subgrad_g` is taken as its gradient.
pub fn quotient_frechet_residual<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
    candidate_subgrad_f: ArrayView1<f64>,
) -> Result<f64> {
    let obj = domain_checked(problem, x)?;
    let g = obj.denominator;
    let grad_h = problem.grad_h(x);
    let grad_g = problem.subgrad_g(x);
    let mut acc = 0.0;
    for i in 0..x.len() {
        let t = g * (candidate_subgrad_f[i] + grad_h[i]) - obj.numerator * grad_g[i];
        acc += t * t;
    }
    Ok(acc.sqrt() / (g * g))
}

/// The same quantity as [`quotient_frechet_residual`], computed as
/// `|v + grad h - F grad g| / g`.
pub fn stationarity_residual<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
    candidate_subgrad_f: ArrayView1<f64>,
) -> Result<f64> {
    let obj = domain_checked(problem, x)?;
    let grad_h = problem.grad_h(x);
    let grad_g = problem.subgrad_g(x);
    let r = &candidate_subgrad_f + &grad_h - &(grad_g * obj.value);
    Ok(r.dot(&r).sqrt() / obj.denominator)
}

fn domain_checked<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
) -> Result<ExtendedObjective> {
    let obj = eval_objective(problem, x)?;
    if !obj.in_domain {
        return Err(Error::Domain(format!(
            "f(x) = {}, g(x) = {:e}",
            obj.numerator - problem.eval_h(x),
            obj.denominator
        )));
    }
    Ok(obj)
}

/// True iff the problem's criticality residual at `x` is at most `tol`.
pub fn critical_point_check<P: FractionalProblem + ?Sized>(
    problem: &P,
    x: ArrayView1<f64>,
    tol: f64,
) -> Result<bool> {
    domain_checked(problem, x)?;
    Ok(problem.criticality_residual(x)? <= tol)
}

/// Why a solver run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    StepTol,
    MaxIter,
    DomainError,
}

/// Summary of a solver run at its final point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub objective: f64,
    pub criticality_residual: f64,
    /// Norm in which the residual is measured.
    pub residual_norm: String,
    pub iterations: usize,
    pub converged_reason: StopReason,
}

impl Certificate {
    pub fn new<P: FractionalProblem + ?Sized>(
        problem: &P,
        x: ArrayView1<f64>,
        objective: f64,
        iterations: usize,
        reason: StopReason,
    ) -> Self {
        let criticality_residual = problem.criticality_residual(x).unwrap_or(f64::INFINITY);
        Self {
            objective,
            criticality_residual,
            residual_norm: "l2".to_string(),
            iterations,
            converged_reason: reason,
        }
    }
}
